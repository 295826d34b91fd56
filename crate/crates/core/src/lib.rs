pub mod bch;
pub mod cli;
pub mod cyclotomic;
pub mod error;
pub mod frame;
pub mod homs;
pub mod isom;
pub mod lazard;
pub mod liering;
pub mod suites;

pub use cyclotomic::{enumerate_units, CycElt, PrimeContext, Valuation};
pub use error::{Error, Result};
pub use homs::{gamma_eval, in_hhat, CycFrac, GammaCoeffs};
pub use liering::{LcsProfile, LieElt, LieRingSpec};
pub use lazard::LazardGroup;
pub use isom::IsoMove;
pub use frame::{enumerate_frame, Classification, FrameGroup, FrameTree, GroupElt};

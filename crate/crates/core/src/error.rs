use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid prime {0}: need an odd prime p >= 5")]
    InvalidPrime(u64),

    #[error("working precision {work_prec} is unsupported for p = {p}")]
    UnsupportedPrecision { p: u64, work_prec: u32 },

    #[error("elements belong to different prime contexts")]
    ContextMismatch,

    #[error("precision exhausted: need {needed}, have {available}")]
    PrecisionExhausted { needed: u32, available: u32 },

    #[error("insufficient valuation: need {needed}, found {found}")]
    InsufficientValuation { needed: u32, found: u32 },

    #[error("element is not a unit")]
    NotAUnit,

    #[error("Galois index {0} is divisible by p")]
    InvalidGaloisIndex(i64),

    #[error("index {index} outside {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("scalar denominator {0} is divisible by p")]
    DenominatorNotCoprime(i64),

    #[error("value is not integral (valuation {0})")]
    NotIntegral(i64),

    #[error("coefficient vector is not in Hhat_{0}")]
    NotInHhat(u32),

    #[error("image {index} has valuation below 2i+1")]
    ImageOutsideIdeal { index: usize },

    #[error("denominator exponent {found} exceeds cap {cap}")]
    DenominatorCap { found: u32, cap: u32 },

    #[error("linear system is singular at working precision")]
    Singular,

    #[error("expected {expected} coefficients, got {found}")]
    WrongLength { expected: usize, found: usize },

    #[error("m = {m} is outside i = {i} ..= lambda bound {bound}")]
    TruncationOutOfRange { i: u32, m: u32, bound: u32 },

    #[error("p^{m} is not an ideal of the Lie ring p^{i}")]
    NotAnIdeal { i: u32, m: u32 },

    #[error("Lie ring is not nilpotent: lower central series stalls at exponent {0}")]
    NotNilpotent(u32),

    #[error("elements belong to different Lie rings or groups")]
    SpecMismatch,

    #[error("class {class} exceeds the BCH table degree {max_class}")]
    ClassExceedsTable { class: u32, max_class: u32 },

    #[error("BCH degree {degree} would need denominator divisible by p = {p}")]
    BchDegreeTooLarge { degree: u32, p: u64 },

    #[error("enumeration needs {needed} items, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid data: {0}")]
    InvalidData(String),
}

impl Error {
    /// True for failures caused by finite precision or enumeration budgets.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::PrecisionExhausted { .. }
                | Error::UnsupportedPrecision { .. }
                | Error::BudgetExceeded { .. }
        )
    }
}

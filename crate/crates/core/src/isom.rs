//! Unit and Galois moves on coefficient vectors and their explicit witness
//! isomorphisms `x ↦ u·σ_k(x)`.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cyclotomic::{enumerate_units, CycElt, CycEltJson, PrimeContext, Valuation};
use crate::error::{Error, Result};
use crate::homs::{gamma_eval, in_hhat, CycFrac, GammaCoeffs};

/// `ρ_a(u) = u^{−1} σ_a(u) σ_{1−a}(u)`.
pub fn rho(a: usize, u: &CycElt) -> Result<CycElt> {
    let ctx = u.ctx();
    let hi = ctx.l() + 1;
    if a < 2 || a > hi {
        return Err(Error::IndexOutOfRange { index: a, lo: 2, hi });
    }
    let a = a as i64;
    u.unit_inverse()?.mul(&u.galois(a)?)?.mul(&u.galois(1 - a)?)
}

/// A pair `(u, σ_k)`: unit and Galois index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IsoMove {
    u: CycElt,
    k: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoMoveJson {
    pub u: CycEltJson,
    pub k: i64,
}

impl IsoMove {
    pub fn new(u: CycElt, k: i64) -> Result<Self> {
        let p = u.ctx().p() as i64;
        let k = k.rem_euclid(p);
        if k == 0 {
            return Err(Error::InvalidGaloisIndex(k));
        }
        if u.valuation() != Valuation::Exact(0) {
            return Err(Error::NotAUnit);
        }
        Ok(IsoMove { u, k })
    }

    pub fn identity(ctx: &Arc<PrimeContext>) -> Self {
        IsoMove { u: CycElt::one(ctx), k: 1 }
    }

    pub fn u(&self) -> &CycElt {
        &self.u
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    fn k_inv(&self) -> i64 {
        let p = self.u.ctx().p();
        crate::cyclotomic::inv_mod(self.k as u64, p).expect("k prime to p") as i64
    }

    /// The move acting as `self` followed by `other`:
    /// `(u_1, k_1)·(u_2, k_2) = (u_1 σ_{k_1}(u_2), k_1 k_2)`.
    pub fn compose(&self, other: &IsoMove) -> Result<IsoMove> {
        let p = self.u.ctx().p() as i64;
        IsoMove::new(self.u.mul(&other.u.galois(self.k)?)?, (self.k * other.k).rem_euclid(p))
    }

    /// `(σ_k^{−1}(u^{−1}), k^{−1})`.
    pub fn inverse(&self) -> Result<IsoMove> {
        let ki = self.k_inv();
        IsoMove::new(self.u.unit_inverse()?.galois(ki)?, ki)
    }

    /// The witness `x ↦ u·σ_k(x)`.
    pub fn apply_to(&self, x: &CycElt) -> Result<CycElt> {
        self.u.mul(&x.galois(self.k)?)
    }

    pub fn to_json(&self) -> IsoMoveJson {
        IsoMoveJson { u: self.u.to_json(), k: self.k }
    }

    pub fn from_json(ctx: &Arc<PrimeContext>, json: &IsoMoveJson) -> Result<Self> {
        IsoMove::new(CycElt::from_json(ctx, &json.u)?, json.k)
    }
}

/// `c'_a = σ_k^{−1}(ρ_a(u)·c_a)`, coefficients reduced modulo `𝔭^m`.
pub fn apply_move(c: &GammaCoeffs, mv: &IsoMove, m: u32) -> Result<GammaCoeffs> {
    let i = c.i();
    if !in_hhat(c, i)? {
        return Err(Error::NotInHhat(i));
    }
    apply_move_raw(c, mv, Some(m))
}

fn apply_move_raw(c: &GammaCoeffs, mv: &IsoMove, m: Option<u32>) -> Result<GammaCoeffs> {
    let ki = mv.k_inv();
    let coeffs = c
        .coeffs()
        .iter()
        .enumerate()
        .map(|(idx, ca)| {
            let twisted = ca.mul_elt(&rho(idx + 2, &mv.u)?)?.galois(ki)?;
            Ok(match m {
                Some(m) => twisted.truncate_abs(m),
                None => twisted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GammaCoeffs::new(c.ctx(), c.i(), coeffs)
}

/// Checks that `x ↦ u·σ_k(x)` is an isomorphism `L_{i,m}(γ') → L_{i,m}(γ)`
/// intertwining `θ` with `θ^k`, on all basis pairs of `𝔭^i`.
pub fn verify_witness(c: &GammaCoeffs, c_prime: &GammaCoeffs, mv: &IsoMove, m: u32) -> Result<bool> {
    let ctx = c.ctx();
    let i = c.i();
    if c_prime.i() != i || !ctx.same(c_prime.ctx()) || !ctx.same(mv.u.ctx()) {
        return Err(Error::ContextMismatch);
    }
    let d = ctx.d();
    let basis: Vec<CycElt> = (0..d).map(|r| CycElt::kappa_pow(ctx, i + r)).collect();
    let images: Vec<CycElt> = basis.iter().map(|x| mv.apply_to(x)).collect::<Result<_>>()?;
    let theta = CycElt::theta_pow(ctx, 1);
    let theta_k = CycElt::theta_pow(ctx, mv.k);
    for (x, fx) in basis.iter().zip(&images) {
        if !in_ideal(fx, i, m) {
            return Ok(false);
        }
        let lhs = mv.apply_to(&theta.mul(x)?)?;
        if !close(&lhs, &theta_k.mul(fx)?, m)? {
            return Ok(false);
        }
    }
    for r in 0..d as usize {
        for s in r + 1..d as usize {
            let lhs = gamma_eval(c, &images[r], &images[s])?;
            let rhs = mv.apply_to(&gamma_eval(c_prime, &basis[r], &basis[s])?)?;
            if !close(&lhs, &rhs, m)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn in_ideal(x: &CycElt, i: u32, m: u32) -> bool {
    match x.valuation() {
        Valuation::Exact(v) => v >= i || v >= m,
        Valuation::AtLeast(_) => true,
    }
}

fn close(a: &CycElt, b: &CycElt, m: u32) -> Result<bool> {
    let prec = a.prec().min(b.prec());
    if prec < m {
        return Err(Error::PrecisionExhausted { needed: m, available: prec });
    }
    Ok(a.eq_mod(b, m))
}

/// A certified isomorphism `S_{i,m}(γ) ≅ S_{i,m}(γ')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "move")]
    pub mv: IsoMoveJson,
    pub verified: bool,
    pub m: u32,
}

pub fn certify(c: &GammaCoeffs, c_prime: &GammaCoeffs, mv: &IsoMove, m: u32) -> Result<Certificate> {
    Ok(Certificate { mv: mv.to_json(), verified: verify_witness(c, c_prime, mv, m)?, m })
}

/// Sort key of an integral coefficient vector modulo `𝔭^mc`.
pub fn coeff_key(c: &GammaCoeffs, mc: u32) -> Result<Vec<u64>> {
    let mut key = Vec::new();
    for ca in c.coeffs() {
        if ca.den_exp() != 0 {
            return Err(Error::Precondition("orbit keys need integral coefficients".into()));
        }
        key.extend_from_slice(ca.num().truncate(mc).digits());
    }
    Ok(key)
}

/// Coefficient vector reduced modulo `𝔭^mc`.
pub fn reduce_coeffs(c: &GammaCoeffs, mc: u32) -> Result<GammaCoeffs> {
    let coeffs: Vec<CycFrac> = c.coeffs().iter().map(|x| x.truncate_abs(mc)).collect();
    GammaCoeffs::new(c.ctx(), c.i(), coeffs)
}

/// All moves with `u` a unit modulo `𝔭^mc` and every Galois index.
pub fn moves(ctx: &Arc<PrimeContext>, mc: u32, budget: u128) -> Result<Vec<IsoMove>> {
    let units: Vec<CycElt> = enumerate_units(ctx, mc, budget)?.collect();
    let needed = units.len() as u128 * (ctx.p() as u128 - 1);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut out = Vec::with_capacity(needed as usize);
    for k in 1..ctx.p() as i64 {
        for u in &units {
            out.push(IsoMove::new(u.clone(), k)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitReport {
    pub canonical: crate::homs::GammaCoeffsJson,
    pub orbit_size_lower_bound: usize,
}

/// Lexicographically least image of `c` modulo `𝔭^mc` under all moves with
/// units taken modulo `𝔭^mc`, and the number of distinct images seen.
pub fn orbit_canonical(c: &GammaCoeffs, mc: u32, budget: u128) -> Result<(GammaCoeffs, usize)> {
    if !in_hhat(c, c.i())? {
        return Err(Error::NotInHhat(c.i()));
    }
    let base = reduce_coeffs(c, mc)?;
    coeff_key(&base, mc)?;
    let mut seen = BTreeSet::new();
    let mut best: Option<(Vec<u64>, GammaCoeffs)> = None;
    for mv in moves(c.ctx(), mc, budget)? {
        let img = reduce_coeffs(&apply_move_raw(&base, &mv, None)?, mc)?;
        let key = coeff_key(&img, mc)?;
        seen.insert(key.clone());
        if best.as_ref().is_none_or(|(b, _)| key < *b) {
            best = Some((key, img));
        }
    }
    let (_, canon) = best.expect("identity move is always present");
    Ok((canon, seen.len()))
}

pub fn orbit_report(c: &GammaCoeffs, mc: u32, budget: u128) -> Result<OrbitReport> {
    let (canon, size) = orbit_canonical(c, mc, budget)?;
    Ok(OrbitReport { canonical: canon.to_json(), orbit_size_lower_bound: size })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homs::theta_a_eval;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx(p: u64, m: u32) -> Arc<PrimeContext> {
        PrimeContext::new(p, m).unwrap()
    }

    #[test]
    fn rho_examples() {
        let c = ctx(7, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for a in 2..=3 {
            assert_eq!(rho(a, &CycElt::one(&c)).unwrap(), CycElt::one(&c));
            for t in 0..7 {
                let r = rho(a, &CycElt::theta_pow(&c, t)).unwrap();
                assert!(r.eq_mod(&CycElt::one(&c), r.prec()));
            }
            let u = CycElt::random_unit(&c, 40, &mut rng);
            let v = CycElt::random_unit(&c, 40, &mut rng);
            let lhs = rho(a, &u.mul(&v).unwrap()).unwrap();
            let rhs = rho(a, &u).unwrap().mul(&rho(a, &v).unwrap()).unwrap();
            assert!(lhs.eq_mod(&rhs, lhs.prec().min(rhs.prec())));
            assert_eq!(rho(a, &u).unwrap().valuation(), Valuation::Exact(0));
        }
        assert_eq!(rho(2, &CycElt::kappa(&c)), Err(Error::NotAUnit));
    }

    #[test]
    fn scaling_identity_has_extra_factor_u() {
        // ϑ_a(ux ∧ uy) = u·ρ_a(u)·ϑ_a(x ∧ y)
        let c = ctx(7, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let u = CycElt::random_unit(&c, 40, &mut rng);
            let x = CycElt::random(&c, 40, &mut rng);
            let y = CycElt::random(&c, 40, &mut rng);
            for a in 2..=3 {
                let lhs = theta_a_eval(a, &u.mul(&x).unwrap(), &u.mul(&y).unwrap()).unwrap();
                let t = theta_a_eval(a, &x, &y).unwrap();
                let rhs = u.mul(&rho(a, &u).unwrap()).unwrap().mul(&t).unwrap();
                assert!(lhs.eq_mod(&rhs, lhs.prec().min(rhs.prec())));
            }
        }
    }

    #[test]
    fn galois_commutes_with_theta_a() {
        let c = ctx(7, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = CycElt::random(&c, 40, &mut rng);
        let y = CycElt::random(&c, 40, &mut rng);
        for k in 1..7 {
            for a in 2..=3 {
                let lhs = theta_a_eval(a, &x.galois(k).unwrap(), &y.galois(k).unwrap()).unwrap();
                let rhs = theta_a_eval(a, &x, &y).unwrap().galois(k).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn moves_form_a_group_action() {
        let c = ctx(7, 60);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = GammaCoeffs::from_ints(&c, 9, &[1, 3]).unwrap();
        let m = 30;
        for _ in 0..20 {
            let m1 = IsoMove::new(CycElt::random_unit(&c, 60, &mut rng), rng.gen_range(1..7)).unwrap();
            let m2 = IsoMove::new(CycElt::random_unit(&c, 60, &mut rng), rng.gen_range(1..7)).unwrap();
            let two = apply_move(&apply_move(&g, &m1, m).unwrap(), &m2, m).unwrap();
            let one = apply_move(&g, &m1.compose(&m2).unwrap(), m).unwrap();
            for (a, b) in two.coeffs().iter().zip(one.coeffs()) {
                assert!(a.num().eq_mod(b.num(), m));
            }
            let back = apply_move(&apply_move(&g, &m1, m).unwrap(), &m1.inverse().unwrap(), m).unwrap();
            for (a, b) in back.coeffs().iter().zip(g.coeffs()) {
                assert!(a.num().eq_mod(b.num(), m));
            }
            assert!(in_hhat(&apply_move(&g, &m1, m).unwrap(), 9).unwrap());
        }
        let id = apply_move(&g, &IsoMove::identity(&c), m).unwrap();
        assert_eq!(reduce_coeffs(&id, m).unwrap(), reduce_coeffs(&g, m).unwrap());
    }

    #[test]
    fn witness_verifies_and_detects_faults() {
        let c = ctx(7, 60);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = GammaCoeffs::from_ints(&c, 8, &[2, 1]).unwrap();
        let m = 29;
        assert!(verify_witness(&g, &g, &IsoMove::identity(&c), m).unwrap());
        for _ in 0..10 {
            let mv = IsoMove::new(CycElt::random_unit(&c, 60, &mut rng), rng.gen_range(1..7)).unwrap();
            let gp = apply_move(&g, &mv, m).unwrap();
            assert!(verify_witness(&g, &gp, &mv, m).unwrap());
            // a unit change of c'_2 changes brackets modulo 𝔭^m
            let mut coeffs = gp.coeffs().to_vec();
            coeffs[0] = coeffs[0].add(&CycFrac::integral(CycElt::one(&c))).unwrap();
            let bad = GammaCoeffs::new(&c, 8, coeffs).unwrap();
            assert!(!verify_witness(&g, &bad, &mv, m).unwrap());
        }
    }

    #[test]
    fn mainline_levels_merge_by_identity() {
        let c = ctx(7, 60);
        let a = GammaCoeffs::from_ints(&c, 8, &[1, 0]).unwrap();
        let b = GammaCoeffs::from_ints(&c, 8, &[0, 2]).unwrap();
        let id = IsoMove::identity(&c);
        assert!(verify_witness(&a, &b, &id, 17).unwrap());
        assert!(!verify_witness(&a, &b, &id, 18).unwrap());
    }

    #[test]
    fn orbit_canonical_properties() {
        let c = ctx(7, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let g = GammaCoeffs::from_integral(&c, 8, &[CycElt::random(&c, 40, &mut rng), CycElt::random_unit(&c, 40, &mut rng)]).unwrap();
            if !in_hhat(&g, 8).unwrap() {
                continue;
            }
            let (canon, size) = orbit_canonical(&g, 2, 1 << 20).unwrap();
            assert!(size >= 1);
            let (again, _) = orbit_canonical(&canon, 2, 1 << 20).unwrap();
            assert_eq!(again, canon);
            let mv = IsoMove::new(CycElt::random_unit(&c, 40, &mut rng), 3).unwrap();
            let moved = apply_move(&g, &mv, 40).unwrap();
            assert_eq!(orbit_canonical(&moved, 2, 1 << 20).unwrap().0, canon);
        }
    }

    #[test]
    fn orbit_count_p5_brute_force() {
        // on O/𝔭 = F_p every σ_k acts trivially and ρ_2(n) ≡ n, so the orbit
        // of a residue c_2 under the moves is {n·c_2}
        let c = ctx(5, 30);
        let mut oracle = BTreeSet::new();
        for c2 in 1..5u64 {
            let orbit: BTreeSet<u64> = (1..5u64).map(|n| n * c2 % 5).collect();
            oracle.insert(*orbit.iter().next().unwrap());
        }
        let mut canon = BTreeSet::new();
        for c2 in 1..5 {
            let g = GammaCoeffs::from_ints(&c, 7, &[c2]).unwrap();
            canon.insert(coeff_key(&orbit_canonical(&g, 1, 1000).unwrap().0, 1).unwrap());
        }
        assert_eq!(canon.len(), oracle.len());
    }

    #[test]
    fn budget_is_enforced() {
        let c = ctx(7, 40);
        let g = GammaCoeffs::from_ints(&c, 8, &[1, 0]).unwrap();
        assert!(matches!(orbit_canonical(&g, 4, 100), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn move_json_round_trip() {
        let c = ctx(5, 20);
        let mv = IsoMove::new(CycElt::from_int(&c, 3), 2).unwrap();
        let json = serde_json::to_string(&certify(&GammaCoeffs::from_ints(&c, 3, &[1]).unwrap(), &GammaCoeffs::from_ints(&c, 3, &[1]).unwrap(), &mv, 5).unwrap()).unwrap();
        let cert: Certificate = serde_json::from_str(&json).unwrap();
        assert_eq!(IsoMove::from_json(&c, &cert.mv).unwrap(), mv);
        assert!(IsoMove::new(CycElt::kappa(&c), 1).is_err());
        assert!(IsoMove::new(CycElt::one(&c), 5).is_err());
    }
}

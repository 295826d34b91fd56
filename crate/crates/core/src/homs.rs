//! P-equivariant alternating maps `γ = Σ_a c_a ϑ_a` and the Vandermonde
//! criterion for surjectivity onto `𝔭^{2i+1}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cyclotomic::{CycElt, CycEltJson, PrimeContext, Valuation};
use crate::error::{Error, Result};

/// An element `num / κ^den_exp` of the field `K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycFrac {
    num: CycElt,
    den_exp: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycFracJson {
    pub num: CycEltJson,
    pub den_exp: u32,
}

impl CycFrac {
    /// Builds `num / κ^den_exp` and cancels common powers of κ.
    pub fn new(num: CycElt, den_exp: u32) -> Self {
        let mut f = CycFrac { num, den_exp };
        f.normalize();
        f
    }

    pub fn integral(num: CycElt) -> Self {
        CycFrac { num, den_exp: 0 }
    }

    pub fn num(&self) -> &CycElt {
        &self.num
    }

    pub fn den_exp(&self) -> u32 {
        self.den_exp
    }

    /// The fraction is known modulo `𝔭^abs_prec`.
    pub fn abs_prec(&self) -> i64 {
        self.num.prec() as i64 - self.den_exp as i64
    }

    /// Exact κ-adic valuation (possibly negative), or `None` if the numerator
    /// vanishes to its precision.
    pub fn exact_valuation(&self) -> Option<i64> {
        self.num.valuation().exact().map(|v| v as i64 - self.den_exp as i64)
    }

    /// Lower bound for the valuation.
    pub fn valuation_bound(&self) -> i64 {
        self.num.valuation().bound() as i64 - self.den_exp as i64
    }

    fn normalize(&mut self) {
        if self.den_exp == 0 {
            return;
        }
        let k = match self.num.valuation() {
            Valuation::Exact(v) => v.min(self.den_exp),
            Valuation::AtLeast(b) if b > self.den_exp => self.den_exp,
            Valuation::AtLeast(_) => return,
        };
        if k > 0 {
            self.num = self.num.div_kappa(k).expect("valuation checked");
            self.den_exp -= k;
        }
    }

    fn lift(&self, den: u32) -> Result<CycElt> {
        debug_assert!(den >= self.den_exp);
        let ctx = self.num.ctx();
        self.num.mul(&CycElt::kappa_pow(ctx, den - self.den_exp))
    }

    pub fn add(&self, other: &CycFrac) -> Result<CycFrac> {
        let den = self.den_exp.max(other.den_exp);
        Ok(CycFrac::new(self.lift(den)?.add(&other.lift(den)?)?, den))
    }

    pub fn sub(&self, other: &CycFrac) -> Result<CycFrac> {
        let den = self.den_exp.max(other.den_exp);
        Ok(CycFrac::new(self.lift(den)?.sub(&other.lift(den)?)?, den))
    }

    pub fn neg(&self) -> CycFrac {
        CycFrac { num: self.num.neg(), den_exp: self.den_exp }
    }

    pub fn mul(&self, other: &CycFrac) -> Result<CycFrac> {
        Ok(CycFrac::new(self.num.mul(&other.num)?, self.den_exp + other.den_exp))
    }

    pub fn mul_elt(&self, x: &CycElt) -> Result<CycFrac> {
        Ok(CycFrac::new(self.num.mul(x)?, self.den_exp))
    }

    /// Multiplicative inverse of a fraction with exactly known valuation.
    pub fn inv(&self) -> Result<CycFrac> {
        let v = match self.num.valuation() {
            Valuation::Exact(v) => v,
            Valuation::AtLeast(b) => {
                return Err(Error::PrecisionExhausted { needed: b + 1, available: b })
            }
        };
        let unit = self.num.div_kappa(v)?;
        let w = unit.unit_inverse()?;
        let ctx = self.num.ctx();
        let num = w.mul(&CycElt::kappa_pow(ctx, self.den_exp))?;
        Ok(CycFrac::new(num, v))
    }

    pub fn galois(&self, k: i64) -> Result<CycFrac> {
        // σ(κ)/κ is a unit, so σ(num/κ^e) = σ(num)·(κ/σ(κ))^e / κ^e
        if self.den_exp == 0 {
            return Ok(CycFrac::integral(self.num.galois(k)?));
        }
        let ctx = self.num.ctx();
        let ratio = CycElt::kappa(ctx).galois(k)?.div_kappa(1)?.unit_inverse()?;
        let num = self.num.galois(k)?.mul(&ratio.pow(self.den_exp as u64))?;
        Ok(CycFrac::new(num, self.den_exp))
    }

    /// The value as an element of `O`, if it is integral.
    pub fn to_integral(&self) -> Result<CycElt> {
        if self.den_exp == 0 {
            return Ok(self.num.clone());
        }
        match self.num.valuation() {
            Valuation::Exact(v) => Err(Error::NotIntegral(v as i64 - self.den_exp as i64)),
            Valuation::AtLeast(b) => Err(Error::PrecisionExhausted { needed: self.den_exp + 1, available: b }),
        }
    }

    /// Reduce modulo `𝔭^abs_prec` (absolute precision, so the numerator keeps
    /// `abs_prec + den_exp` κ-digits).
    pub fn truncate_abs(&self, abs_prec: u32) -> CycFrac {
        CycFrac::new(self.num.truncate(abs_prec + self.den_exp), self.den_exp)
    }

    pub fn to_json(&self) -> CycFracJson {
        CycFracJson { num: self.num.to_json(), den_exp: self.den_exp }
    }

    pub fn from_json(ctx: &Arc<PrimeContext>, json: &CycFracJson) -> Result<Self> {
        Ok(CycFrac::new(CycElt::from_json(ctx, &json.num)?, json.den_exp))
    }
}

/// A map `γ = Σ_{a=2}^{l+1} c_a ϑ_a` with home ideal index `i`.
#[derive(Debug, Clone)]
pub struct GammaCoeffs {
    ctx: Arc<PrimeContext>,
    i: u32,
    coeffs: Vec<CycFrac>,
    den: u32,
    /// `c_a·κ^{den}` as integral numerators.
    scaled: Vec<CycElt>,
}

impl PartialEq for GammaCoeffs {
    fn eq(&self, other: &Self) -> bool {
        self.i == other.i && self.coeffs == other.coeffs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaCoeffsJson {
    pub p: u64,
    pub i: u32,
    pub coeffs: Vec<CycFracJson>,
}

impl GammaCoeffs {
    pub fn new(ctx: &Arc<PrimeContext>, i: u32, coeffs: Vec<CycFrac>) -> Result<Self> {
        if coeffs.len() != ctx.l() {
            return Err(Error::WrongLength { expected: ctx.l(), found: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.num.ctx().same(ctx)) {
            return Err(Error::ContextMismatch);
        }
        let den = coeffs.iter().map(|c| c.den_exp).max().unwrap_or(0);
        let scaled = coeffs.iter().map(|c| c.lift(den)).collect::<Result<Vec<_>>>()?;
        Ok(GammaCoeffs { ctx: ctx.clone(), i, coeffs, den, scaled })
    }

    pub fn from_integral(ctx: &Arc<PrimeContext>, i: u32, coeffs: &[CycElt]) -> Result<Self> {
        Self::new(ctx, i, coeffs.iter().cloned().map(CycFrac::integral).collect())
    }

    pub fn from_ints(ctx: &Arc<PrimeContext>, i: u32, coeffs: &[i64]) -> Result<Self> {
        let elts: Vec<CycElt> = coeffs.iter().map(|&c| CycElt::from_int(ctx, c)).collect();
        Self::from_integral(ctx, i, &elts)
    }

    /// The single map `ϑ_a`.
    pub fn theta(ctx: &Arc<PrimeContext>, i: u32, a: usize) -> Result<Self> {
        check_index(ctx, a)?;
        let mut c = vec![0i64; ctx.l()];
        c[a - 2] = 1;
        Self::from_ints(ctx, i, &c)
    }

    pub fn ctx(&self) -> &Arc<PrimeContext> {
        &self.ctx
    }

    pub fn i(&self) -> u32 {
        self.i
    }

    pub fn coeffs(&self) -> &[CycFrac] {
        &self.coeffs
    }

    /// Largest κ-denominator exponent among the coefficients.
    pub fn max_den(&self) -> u32 {
        self.den
    }

    /// The same map, regarded on `𝔭^i`.
    pub fn with_index(&self, i: u32) -> Self {
        GammaCoeffs { i, ..self.clone() }
    }

    pub fn to_json(&self) -> GammaCoeffsJson {
        GammaCoeffsJson {
            p: self.ctx.p(),
            i: self.i,
            coeffs: self.coeffs.iter().map(CycFrac::to_json).collect(),
        }
    }

    pub fn from_json(ctx: &Arc<PrimeContext>, json: &GammaCoeffsJson) -> Result<Self> {
        if json.p != ctx.p() {
            return Err(Error::ContextMismatch);
        }
        let coeffs = json.coeffs.iter().map(|c| CycFrac::from_json(ctx, c)).collect::<Result<Vec<_>>>()?;
        Self::new(ctx, json.i, coeffs)
    }

    /// Short human-readable form, e.g. `(1, 3+2κ/κ^1)`.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|c| {
                let digits: Vec<String> = c.num.digits().iter().map(|d| d.to_string()).collect();
                let mut s = digits.join(",");
                if c.den_exp > 0 {
                    s.push_str(&format!("/k^{}", c.den_exp));
                }
                s
            })
            .collect();
        format!("({})", parts.join("; "))
    }
}

/// `Σ_a c_a ϑ_a(x ∧ y)`, with the map's denominators cleared by a single κ-power.
pub fn gamma_eval_frac(g: &GammaCoeffs, x: &CycElt, y: &CycElt) -> Result<CycFrac> {
    let ctx = &g.ctx;
    let mut acc: Option<CycElt> = None;
    for (idx, s) in g.scaled.iter().enumerate() {
        if s.is_zero() && s.prec() >= ctx.work_prec() {
            continue;
        }
        let term = s.mul(&theta_a_eval(idx + 2, x, y)?)?;
        acc = Some(match acc {
            Some(a) => a.add(&term)?,
            None => term,
        });
    }
    let num = match acc {
        Some(a) => a,
        None => CycElt::zero(ctx).truncate(x.prec().min(y.prec()) + g.den),
    };
    Ok(CycFrac::new(num, g.den))
}

/// `γ(x ∧ y)` as an element of `O`.
pub fn gamma_eval(g: &GammaCoeffs, x: &CycElt, y: &CycElt) -> Result<CycElt> {
    gamma_eval_frac(g, x, y)?.to_integral()
}

fn check_index(ctx: &PrimeContext, a: usize) -> Result<()> {
    let hi = ctx.l() + 1;
    if a < 2 || a > hi {
        return Err(Error::IndexOutOfRange { index: a, lo: 2, hi });
    }
    Ok(())
}

/// `ϑ_a(x ∧ y) = σ_a(x)σ_{1−a}(y) − σ_{1−a}(x)σ_a(y)`.
pub fn theta_a_eval(a: usize, x: &CycElt, y: &CycElt) -> Result<CycElt> {
    let ctx = x.ctx();
    check_index(ctx, a)?;
    let a = a as i64;
    let b = 1 - a;
    let l = x.galois(a)?.mul(&y.galois(b)?)?;
    let r = x.galois(b)?.mul(&y.galois(a)?)?;
    l.sub(&r)
}

/// Multiplicative order of `a(1 − a)^{−1}` in `(Z/pZ)^*`.
pub fn o_a(ctx: &PrimeContext, a: usize) -> Result<u32> {
    check_index(ctx, a)?;
    let p = ctx.p() as i64;
    let a = a as i64;
    let inv = crate::cyclotomic::inv_mod((1 - a).rem_euclid(p) as u64, p as u64).expect("p prime");
    let g = (a as u64 * inv) % p as u64;
    let mut x = g;
    let mut ord = 1;
    while x != 1 {
        x = x * g % p as u64;
        ord += 1;
    }
    Ok(ord)
}

/// `ε(i, j) = 1` iff `o_a` divides `i − j`.
pub fn epsilon(ctx: &PrimeContext, a: usize, i: u32, j: u32) -> Result<u32> {
    let o = o_a(ctx, a)? as i64;
    Ok(u32::from((i as i64 - j as i64).rem_euclid(o) == 0))
}

/// The data `u_a`, the diagonal of `V_i` and the Vandermonde matrix `B`
/// (all indexed from `a = 2`).
#[derive(Debug, Clone)]
pub struct VandermondeData {
    pub v_diag: Vec<CycElt>,
    /// `b[a − 2][j − 1] = u_a^{j−1}`.
    pub b: Vec<Vec<CycElt>>,
    pub u: Vec<CycElt>,
}

pub fn vandermonde(ctx: &Arc<PrimeContext>, i: u32) -> Result<VandermondeData> {
    let l = ctx.l();
    let kappa = CycElt::kappa(ctx);
    let mut v_diag = Vec::with_capacity(l);
    let mut b = Vec::with_capacity(l);
    let mut u = Vec::with_capacity(l);
    for a in 2..=(l as i64 + 1) {
        let sa = kappa.galois(a)?;
        let sb = kappa.galois(1 - a)?;
        let ua = sa.mul(&sb)?;
        // (θ^a − θ^{1−a})/κ and u_a/κ² are units, so V_i's entry is
        // computed without the 2i+1 precision loss of a direct division.
        let lead = sa.sub(&sb)?.div_kappa(1)?;
        let unit_u = ua.div_kappa(2)?;
        v_diag.push(lead.mul(&unit_u.pow(i as u64))?);
        b.push((0..l).map(|j| ua.pow(j as u64)).collect());
        u.push(ua);
    }
    Ok(VandermondeData { v_diag, b, u })
}

/// Entries of `(c_2, …, c_{l+1})·V_i·B`.
pub fn hhat_row(g: &GammaCoeffs, i: u32) -> Result<Vec<CycFrac>> {
    let ctx = &g.ctx;
    let data = vandermonde(ctx, i)?;
    let l = ctx.l();
    (0..l)
        .map(|j| {
            let mut acc: Option<CycElt> = None;
            for (a, s) in g.scaled.iter().enumerate() {
                let term = s.mul(&data.v_diag[a])?.mul(&data.b[a][j])?;
                acc = Some(match acc {
                    Some(x) => x.add(&term)?,
                    None => term,
                });
            }
            Ok(CycFrac::new(acc.expect("l >= 1"), g.den))
        })
        .collect()
}

/// Membership of `γ` in `Ĥ_i`: the row `c·V_i·B` is integral and not in `𝔭^l`.
pub fn in_hhat(g: &GammaCoeffs, i: u32) -> Result<bool> {
    let row = hhat_row(g, i)?;
    let mut has_unit = false;
    for e in &row {
        match e.exact_valuation() {
            Some(v) if v < 0 => return Ok(false),
            Some(0) => has_unit = true,
            Some(_) => {}
            None => {
                if e.valuation_bound() <= 0 {
                    return Err(Error::PrecisionExhausted {
                        needed: e.den_exp() + 1,
                        available: e.num().prec(),
                    });
                }
            }
        }
    }
    Ok(has_unit)
}

/// The probe wedges `κ^{i+j} ∧ κ^{i+j−1}` for `j = 1..=l`.
pub fn probe_wedges(ctx: &Arc<PrimeContext>, i: u32) -> Vec<(CycElt, CycElt)> {
    (1..=ctx.l() as u32)
        .map(|j| (CycElt::kappa_pow(ctx, i + j), CycElt::kappa_pow(ctx, i + j - 1)))
        .collect()
}

/// Membership in `Ĥ_i` decided from the values of `γ` on the probe wedges
/// directly: their minimum valuation must be exactly `2i + 1`.
pub fn in_hhat_by_probes(g: &GammaCoeffs, i: u32) -> Result<bool> {
    let mut min_exact: Option<i64> = None;
    let mut min_bound = i64::MAX;
    for (x, y) in probe_wedges(&g.ctx, i) {
        let v = gamma_eval_frac(g, &x, &y)?;
        match v.exact_valuation() {
            Some(e) => min_exact = Some(min_exact.map_or(e, |m| m.min(e))),
            None => min_bound = min_bound.min(v.valuation_bound()),
        }
    }
    let target = 2 * i as i64 + 1;
    match min_exact {
        Some(e) if e < min_bound => Ok(e == target),
        _ if min_bound > target => Ok(false),
        _ => Err(Error::PrecisionExhausted { needed: target as u32 + 1, available: min_bound.max(0) as u32 }),
    }
}

/// Result of solving for coefficients from probe images.
#[derive(Debug, Clone)]
pub struct CoeffSolution {
    pub gamma: GammaCoeffs,
    /// Some image has valuation exactly `2i + 1`, so `γ ∈ Ĥ_i`.
    pub surjective: bool,
}

/// Cap on coefficient denominators: `l(l − 1) + 2`.
pub fn denominator_cap(ctx: &PrimeContext) -> u32 {
    let l = ctx.l() as u32;
    l * (l.saturating_sub(1)) + 2
}

/// Recover `c` from the images `γ(κ^{i+j} ∧ κ^{i+j−1})`, `j = 1..=l`, by
/// solving `c·V_i·B = images/κ^{2i+1}` over `K`.
pub fn images_to_coeffs(ctx: &Arc<PrimeContext>, i: u32, images: &[CycElt]) -> Result<CoeffSolution> {
    let l = ctx.l();
    if images.len() != l {
        return Err(Error::WrongLength { expected: l, found: images.len() });
    }
    let target = 2 * i + 1;
    let mut surjective = false;
    let mut rhs = Vec::with_capacity(l);
    for (index, img) in images.iter().enumerate() {
        match img.valuation() {
            Valuation::Exact(v) if v < target => return Err(Error::ImageOutsideIdeal { index }),
            Valuation::Exact(v) => surjective |= v == target,
            Valuation::AtLeast(b) if b < target => {
                return Err(Error::PrecisionExhausted { needed: target, available: b })
            }
            Valuation::AtLeast(_) => {}
        }
        rhs.push(CycFrac::integral(img.div_kappa(target)?));
    }
    let data = vandermonde(ctx, i)?;
    // row j of the system: Σ_a v_a u_a^{j−1} c_a = w_j
    let matrix: Vec<Vec<CycFrac>> = (0..l)
        .map(|j| {
            (0..l)
                .map(|a| data.v_diag[a].mul(&data.b[a][j]).map(CycFrac::integral))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let coeffs = solve(matrix, rhs)?;
    let cap = denominator_cap(ctx);
    if let Some(found) = coeffs.iter().map(CycFrac::den_exp).max().filter(|&d| d > cap) {
        return Err(Error::DenominatorCap { found, cap });
    }
    Ok(CoeffSolution { gamma: GammaCoeffs::new(ctx, i, coeffs)?, surjective })
}

/// Gaussian elimination over `K`, pivoting on the least κ-valuation.
fn solve(mut a: Vec<Vec<CycFrac>>, mut rhs: Vec<CycFrac>) -> Result<Vec<CycFrac>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n)
            .filter_map(|r| a[r][col].exact_valuation().map(|v| (v, r)))
            .min()
            .map(|(_, r)| r)
            .ok_or(Error::Singular)?;
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = a[col][col].inv()?;
        for r in col + 1..n {
            let factor = a[r][col].mul(&inv)?;
            for c in col..n {
                let t = factor.mul(&a[col][c])?;
                a[r][c] = a[r][c].sub(&t)?;
            }
            let t = factor.mul(&rhs[col])?;
            rhs[r] = rhs[r].sub(&t)?;
        }
    }
    let mut x: Vec<Option<CycFrac>> = vec![None; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row].clone();
        for c in row + 1..n {
            let t = a[row][c].mul(x[c].as_ref().expect("solved"))?;
            acc = acc.sub(&t)?;
        }
        x[row] = Some(acc.mul(&a[row][row].inv()?)?);
    }
    Ok(x.into_iter().map(|v| v.expect("solved")).collect())
}

/// Index shift: a member of `Ĥ_i` is also in `Ĥ_{i+(p−1)}`.
pub fn shift_check(g: &GammaCoeffs, i: u32) -> Result<bool> {
    if !in_hhat(g, i)? {
        return Err(Error::Precondition(format!("gamma is not in Hhat_{i}")));
    }
    in_hhat(g, i + g.ctx.d())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(p: u64, m: u32) -> Arc<PrimeContext> {
        PrimeContext::new(p, m).unwrap()
    }

    #[test]
    fn order_examples() {
        assert_eq!(o_a(&ctx(5, 10), 2).unwrap(), 4);
        assert_eq!(o_a(&ctx(7, 10), 3).unwrap(), 3);
        assert_eq!(o_a(&ctx(7, 10), 2).unwrap(), 6);
        assert!(matches!(o_a(&ctx(7, 10), 4), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(o_a(&ctx(7, 10), 1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn epsilon_examples() {
        let c5 = ctx(5, 10);
        let c7 = ctx(7, 10);
        assert_eq!(epsilon(&c5, 2, 3, 3).unwrap(), 1);
        assert_eq!(epsilon(&c5, 2, 4, 2).unwrap(), 0);
        assert_eq!(epsilon(&c7, 3, 8, 2).unwrap(), 1);
        assert_eq!(epsilon(&c7, 3, 2, 8).unwrap(), 1);
    }

    #[test]
    fn theta_eval_examples() {
        let c = ctx(7, 50);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = CycElt::random(&c, 50, &mut rng);
        for a in 2..=3 {
            assert!(theta_a_eval(a, &x, &x).unwrap().is_zero());
        }
        // ϑ_a(κ^{n+1} ∧ κ^n) = u_a^n (θ^a − θ^{1−a})
        let data = vandermonde(&c, 0).unwrap();
        for a in 2..=3usize {
            for n in 0..6u32 {
                let lhs = theta_a_eval(a, &CycElt::kappa_pow(&c, n + 1), &CycElt::kappa_pow(&c, n)).unwrap();
                let diff = CycElt::theta_pow(&c, a as i64).sub(&CycElt::theta_pow(&c, 1 - a as i64)).unwrap();
                let rhs = data.u[a - 2].pow(n as u64).mul(&diff).unwrap();
                assert!(lhs.eq_mod(&rhs, lhs.prec().min(rhs.prec())));
            }
        }
        assert!(theta_a_eval(4, &x, &x).is_err());
    }

    #[test]
    fn theta_eval_valuations_p5() {
        let c = ctx(5, 60);
        for i in 0..8u32 {
            for j in 0..8u32 {
                let v = theta_a_eval(2, &CycElt::kappa_pow(&c, i), &CycElt::kappa_pow(&c, j)).unwrap();
                if i == j {
                    assert!(v.is_zero());
                    continue;
                }
                let expect = i + j + u32::from((i as i64 - j as i64) % 4 == 0);
                assert_eq!(v.valuation(), Valuation::Exact(expect), "i={i} j={j}");
            }
        }
    }

    #[test]
    fn gamma_is_equivariant_and_alternating() {
        let c = ctx(7, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = GammaCoeffs::from_integral(&c, 0, &[CycElt::random(&c, 40, &mut rng), CycElt::random(&c, 40, &mut rng)]).unwrap();
        let theta = CycElt::theta_pow(&c, 1);
        for _ in 0..20 {
            let x = CycElt::random(&c, 40, &mut rng);
            let y = CycElt::random(&c, 40, &mut rng);
            assert!(gamma_eval(&g, &x, &x).unwrap().is_zero());
            let lhs = gamma_eval(&g, &theta.mul(&x).unwrap(), &theta.mul(&y).unwrap()).unwrap();
            let rhs = theta.mul(&gamma_eval(&g, &x, &y).unwrap()).unwrap();
            assert!(lhs.eq_mod(&rhs, lhs.prec().min(rhs.prec())));
            let swapped = gamma_eval(&g, &y, &x).unwrap();
            assert_eq!(swapped, gamma_eval(&g, &x, &y).unwrap().neg());
        }
    }

    #[test]
    fn vandermonde_invariants() {
        for p in [5u64, 7, 11, 13] {
            let c = ctx(p, 60);
            for i in [0u32, 1, 5, 13] {
                let data = vandermonde(&c, i).unwrap();
                for (a, v) in data.v_diag.iter().enumerate() {
                    assert_eq!(v.valuation(), Valuation::Exact(0));
                    assert_eq!(data.u[a].valuation(), Valuation::Exact(2));
                    assert_eq!(data.b[a][0], CycElt::one(&c));
                    for bb in 0..a {
                        assert_eq!(data.u[a].sub(&data.u[bb]).unwrap().valuation(), Valuation::Exact(2));
                    }
                }
            }
        }
    }

    #[test]
    fn v_diag_matches_direct_division() {
        // (θ^a − θ^{1−a})·u_a^i / κ^{2i+1} computed the long way
        let c = ctx(7, 80);
        for i in [0u32, 2, 7] {
            let data = vandermonde(&c, i).unwrap();
            for a in 2..=3i64 {
                let diff = CycElt::theta_pow(&c, a).sub(&CycElt::theta_pow(&c, 1 - a)).unwrap();
                let direct = diff.mul(&data.u[(a - 2) as usize].pow(i as u64)).unwrap().div_kappa(2 * i + 1).unwrap();
                let v = &data.v_diag[(a - 2) as usize];
                assert!(direct.eq_mod(v, direct.prec().min(v.prec())));
            }
        }
    }

    #[test]
    fn in_hhat_examples() {
        let c5 = ctx(5, 60);
        assert!(!in_hhat(&GammaCoeffs::from_ints(&c5, 0, &[0]).unwrap(), 0).unwrap());
        for i in 0..20 {
            assert!(in_hhat(&GammaCoeffs::from_ints(&c5, i, &[1]).unwrap(), i).unwrap());
        }
        let c7 = ctx(7, 60);
        assert!(in_hhat(&GammaCoeffs::from_ints(&c7, 3, &[0, 1]).unwrap(), 3).unwrap());
        assert!(!in_hhat(&GammaCoeffs::from_ints(&c7, 3, &[7, 0]).unwrap(), 3).unwrap());
        // a denominator makes the row non-integral
        let frac = CycFrac::new(CycElt::one(&c7), 1);
        let g = GammaCoeffs::new(&c7, 2, vec![frac, CycFrac::integral(CycElt::zero(&c7))]).unwrap();
        assert!(!in_hhat(&g, 2).unwrap());
        assert!(!in_hhat_by_probes(&g, 2).unwrap());
    }

    #[test]
    fn images_round_trip_p5() {
        let c = ctx(5, 60);
        for i in [0u32, 3, 7] {
            let img = CycElt::kappa_pow(&c, 2 * i + 1);
            let sol = images_to_coeffs(&c, i, std::slice::from_ref(&img)).unwrap();
            assert!(sol.surjective);
            let v = vandermonde(&c, i).unwrap();
            let expect = v.v_diag[0].unit_inverse().unwrap();
            let got = sol.gamma.coeffs()[0].to_integral().unwrap();
            assert!(got.eq_mod(&expect, got.prec().min(expect.prec())));
            let (x, y) = &probe_wedges(&c, i)[0];
            let back = gamma_eval(&sol.gamma, x, y).unwrap();
            assert!(back.eq_mod(&img, back.prec()));
        }
    }

    #[test]
    fn images_round_trip_p7_p11() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for p in [7u64, 11] {
            let c = ctx(p, 80);
            for i in [1u32, 4, 9] {
                for _ in 0..5 {
                    let images: Vec<CycElt> = (0..c.l())
                        .map(|_| CycElt::random(&c, 80, &mut rng).mul(&CycElt::kappa_pow(&c, 2 * i + 1)).unwrap())
                        .collect();
                    let sol = images_to_coeffs(&c, i, &images).unwrap();
                    assert!(sol.gamma.max_den() <= denominator_cap(&c));
                    for ((x, y), img) in probe_wedges(&c, i).iter().zip(&images) {
                        let back = gamma_eval(&sol.gamma, x, y).unwrap();
                        assert!(back.eq_mod(img, back.prec()), "p={p} i={i}");
                        assert!(back.prec() > 2 * i + 1);
                    }
                    assert_eq!(in_hhat(&sol.gamma, i).unwrap(), sol.surjective);
                }
            }
        }
    }

    #[test]
    fn images_outside_ideal_rejected() {
        let c = ctx(5, 40);
        let e = images_to_coeffs(&c, 3, &[CycElt::kappa_pow(&c, 6)]).unwrap_err();
        assert_eq!(e, Error::ImageOutsideIdeal { index: 0 });
        let sol = images_to_coeffs(&c, 3, &[CycElt::kappa_pow(&c, 8)]).unwrap();
        assert!(!sol.surjective);
    }

    #[test]
    fn shift_examples() {
        let c = ctx(5, 60);
        let g = GammaCoeffs::from_ints(&c, 3, &[1]).unwrap();
        assert!(shift_check(&g, 3).unwrap());
        assert!(in_hhat(&g, 7).unwrap());
        let z = GammaCoeffs::from_ints(&c, 3, &[0]).unwrap();
        assert!(matches!(shift_check(&z, 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn frac_arithmetic() {
        let c = ctx(7, 40);
        let k = CycElt::kappa(&c);
        let f = CycFrac::new(k.clone(), 3);
        assert_eq!(f.den_exp(), 2);
        assert_eq!(f.exact_valuation(), Some(-2));
        let inv = f.inv().unwrap();
        assert_eq!(inv.exact_valuation(), Some(2));
        let one = f.mul(&inv).unwrap();
        assert_eq!(one.to_integral().unwrap().truncate(30), CycElt::one(&c).truncate(30));
        let s = f.add(&f.neg()).unwrap();
        assert!(s.valuation_bound() > 20);
    }

    #[test]
    fn frac_galois_matches_direct() {
        let c = ctx(7, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = CycElt::random_unit(&c, 40, &mut rng);
        let f = CycFrac::new(u, 3);
        for k in 1..7 {
            let g = f.galois(k).unwrap();
            // σ(f)·σ(κ^3) = σ(u)
            let back = g.mul_elt(&CycElt::kappa_pow(&c, 3).galois(k).unwrap()).unwrap().to_integral().unwrap();
            let direct = f.num().galois(k).unwrap();
            assert!(back.eq_mod(&direct, back.prec().min(direct.prec())));
        }
    }

    #[test]
    fn json_round_trip() {
        let c = ctx(7, 40);
        let g = GammaCoeffs::new(&c, 4, vec![CycFrac::new(CycElt::from_int(&c, 3), 1), CycFrac::integral(CycElt::kappa(&c))]).unwrap();
        let s = serde_json::to_string(&g.to_json()).unwrap();
        let back: GammaCoeffsJson = serde_json::from_str(&s).unwrap();
        assert_eq!(GammaCoeffs::from_json(&c, &back).unwrap(), g);
    }
}

//! The Lie rings `L_{i,m}(γ) = 𝔭^i/𝔭^m` with bracket `γ`, the Jacobi ideal,
//! lower central series and class bounds.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::{mulmod, submod, CycElt, PrimeContext, Residues, Valuation};
use crate::error::{Error, Result};
use crate::homs::{gamma_eval, gamma_eval_frac, in_hhat, GammaCoeffs};

static NEXT_RING_ID: AtomicU64 = AtomicU64::new(1);

/// Working precision used when building `L_{i,m}` without an explicit override.
pub fn default_work_prec(p: u64, m: u32) -> u32 {
    m + 2 * (p as u32 - 1)
}

/// Working precision large enough to pin the Jacobi exponent of `γ ∈ Ĥ_i`
/// (covers `w_3 + 2p − 8` with guard digits).
pub fn jacobi_work_prec(p: u64, i: u32) -> u32 {
    3 * i + 3 * p as u32 + 10
}

/// `γ(γ(x∧y)∧z) + γ(γ(y∧z)∧x) + γ(γ(z∧x)∧y)`.
pub fn jacobiator(g: &GammaCoeffs, x: &CycElt, y: &CycElt, z: &CycElt) -> Result<CycElt> {
    let a = gamma_eval(g, &gamma_eval(g, x, y)?, z)?;
    let b = gamma_eval(g, &gamma_eval(g, y, z)?, x)?;
    let c = gamma_eval(g, &gamma_eval(g, z, x)?, y)?;
    a.add(&b)?.add(&c)
}

/// Exponent `λ` with `J_i(γ) = 𝔭^λ`, from the Jacobiators of basis triples
/// `κ^{i+r}, κ^{i+s}, κ^{i+t}` with `r < s < t`.
pub fn jacobi_exponent(g: &GammaCoeffs, i: u32) -> Result<Valuation> {
    if !in_hhat(g, i)? {
        return Err(Error::NotInHhat(i));
    }
    let ctx = g.ctx();
    let d = ctx.d();
    let basis: Vec<CycElt> = (0..d).map(|r| CycElt::kappa_pow(ctx, i + r)).collect();
    let mut best: Option<Valuation> = None;
    for r in 0..d as usize {
        for s in r + 1..d as usize {
            for t in s + 1..d as usize {
                let v = jacobiator(g, &basis[r], &basis[s], &basis[t])?.valuation();
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
    }
    Ok(best.unwrap_or(Valuation::AtLeast(ctx.work_prec())))
}

/// Smallest valuation of `γ(𝔭^w ∧ 𝔭^i)`, or `None` if every basis image
/// vanishes to at least `cap`.
fn image_exponent(g: &GammaCoeffs, w: u32, i: u32, cap: u32) -> Result<Option<u32>> {
    let ctx = g.ctx();
    let d = ctx.d();
    let mut best = u32::MAX;
    for r in 0..d {
        let x = CycElt::kappa_pow(ctx, w + r);
        for s in 0..d {
            let y = CycElt::kappa_pow(ctx, i + s);
            let v = gamma_eval_frac(g, &x, &y)?;
            match v.exact_valuation() {
                Some(e) if e < 0 => return Err(Error::NotIntegral(e)),
                Some(e) => best = best.min(e as u32),
                None => {
                    let b = v.valuation_bound().max(0) as u32;
                    if b < cap {
                        return Err(Error::PrecisionExhausted { needed: cap, available: b });
                    }
                }
            }
        }
    }
    Ok((best < cap).then_some(best))
}

/// Exponents `w_1, w_2, …` of the lower central series `𝔭^{w_k}/𝔭^m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcsProfile {
    /// `w_k`, clamped at `m`; the last entry is `m` once the series reaches zero.
    pub exponents: Vec<u32>,
    pub class: u32,
}

impl LcsProfile {
    fn from_exponents(exponents: Vec<u32>, m: u32) -> Self {
        let class = exponents.iter().filter(|&&w| w < m).count() as u32;
        LcsProfile { exponents, class }
    }

    /// Exponent of the `k`-th term (1-based), `m` beyond the end.
    pub fn term(&self, k: usize) -> u32 {
        let last = *self.exponents.last().expect("nonempty");
        self.exponents.get(k - 1).copied().unwrap_or(last)
    }
}

/// Lower central series of `𝔭^i/𝔭^m` under `γ`, without building the ring.
pub fn lcs_exponents(g: &GammaCoeffs, i: u32, m: u32) -> Result<LcsProfile> {
    let mut w = vec![i.min(m)];
    while *w.last().unwrap() < m {
        let cur = *w.last().unwrap();
        let next = image_exponent(g, cur, i, m)?.unwrap_or(m);
        if next <= cur {
            return Err(Error::NotNilpotent(cur));
        }
        w.push(next);
    }
    Ok(LcsProfile::from_exponents(w, m))
}

/// The Lie ring `L_{i,m}(γ)`.
pub struct LieRingSpec {
    ctx: Arc<PrimeContext>,
    i: u32,
    m: u32,
    gamma: GammaCoeffs,
    lambda: Valuation,
    id: u64,
    /// `table[h][k]` = digits of `γ(κ^{i+h} ∧ κ^{i+k}) / κ^i` at precision `m − i`.
    table: Vec<Vec<Residues>>,
}

impl fmt::Debug for LieRingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieRingSpec")
            .field("p", &self.ctx.p())
            .field("i", &self.i)
            .field("m", &self.m)
            .field("gamma", &self.gamma.label())
            .field("lambda", &self.lambda)
            .finish()
    }
}

impl LieRingSpec {
    /// Builds `L_{i,m}(γ)` with `i = gamma.i()`.
    pub fn new(gamma: &GammaCoeffs, m: u32) -> Result<Arc<Self>> {
        let lambda = jacobi_exponent(gamma, gamma.i())?;
        Self::with_lambda(gamma, m, lambda)
    }

    /// Builds `L_{i,λ}(γ)`; requires `λ` to be exact at the working precision.
    pub fn full(gamma: &GammaCoeffs) -> Result<Arc<Self>> {
        let lambda = jacobi_exponent(gamma, gamma.i())?;
        match lambda {
            Valuation::Exact(l) => Self::with_lambda(gamma, l, lambda),
            Valuation::AtLeast(b) => Err(Error::PrecisionExhausted { needed: b + 1, available: b }),
        }
    }

    /// As [`LieRingSpec::new`] with a previously computed Jacobi exponent.
    pub fn with_lambda(gamma: &GammaCoeffs, m: u32, lambda: Valuation) -> Result<Arc<Self>> {
        let ctx = gamma.ctx().clone();
        let i = gamma.i();
        if !in_hhat(gamma, i)? {
            return Err(Error::NotInHhat(i));
        }
        if m < i || m > lambda.bound() {
            return Err(Error::TruncationOutOfRange { i, m, bound: lambda.bound() });
        }
        if m + gamma.max_den() >= ctx.work_prec() {
            return Err(Error::PrecisionExhausted { needed: m + gamma.max_den() + 1, available: ctx.work_prec() });
        }
        if m > i && image_exponent(gamma, m, i, m)?.is_some() {
            return Err(Error::NotAnIdeal { i, m });
        }
        let d = ctx.d();
        let rel = m - i;
        let mut table = vec![vec![ctx.zero_raw(); d as usize]; d as usize];
        for h in 0..d {
            for k in h + 1..d {
                let v = gamma_eval(gamma, &CycElt::kappa_pow(&ctx, i + h), &CycElt::kappa_pow(&ctx, i + k))?;
                if v.prec() < m {
                    return Err(Error::PrecisionExhausted { needed: m, available: v.prec() });
                }
                let y = quotient_by_kappa(&v, i, m)?;
                table[k as usize][h as usize] = ctx.neg_raw(y.raw(), rel);
                table[h as usize][k as usize] = y.raw().clone();
            }
        }
        Ok(Arc::new(LieRingSpec {
            ctx,
            i,
            m,
            gamma: gamma.clone(),
            lambda,
            id: NEXT_RING_ID.fetch_add(1, Ordering::Relaxed),
            table,
        }))
    }

    /// The quotient `L_{i,m'}(γ)` for `i ≤ m' ≤ m`.
    pub fn truncate(&self, m: u32) -> Result<Arc<Self>> {
        if m > self.m {
            return Err(Error::TruncationOutOfRange { i: self.i, m, bound: self.m });
        }
        Self::with_lambda(&self.gamma, m, self.lambda)
    }

    pub fn ctx(&self) -> &Arc<PrimeContext> {
        &self.ctx
    }

    pub fn p(&self) -> u64 {
        self.ctx.p()
    }

    pub fn i(&self) -> u32 {
        self.i
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn gamma(&self) -> &GammaCoeffs {
        &self.gamma
    }

    pub fn lambda(&self) -> Valuation {
        self.lambda
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// `log_p |L| = m − i`.
    pub fn order_exp(&self) -> u32 {
        self.m - self.i
    }

    pub fn element_count(&self) -> u128 {
        (self.ctx.p() as u128).pow(self.order_exp())
    }

    fn rel(&self) -> u32 {
        self.m - self.i
    }

    pub fn lcs_profile(&self) -> Result<LcsProfile> {
        lcs_exponents(&self.gamma, self.i, self.m)
    }

    pub fn zero(self: &Arc<Self>) -> LieElt {
        LieElt { spec: self.clone(), y: CycElt::zero(&self.ctx).truncate(self.rel()) }
    }

    /// The coset of `x ∈ 𝔭^i`.
    pub fn elt(self: &Arc<Self>, x: &CycElt) -> Result<LieElt> {
        if !x.ctx().same(&self.ctx) {
            return Err(Error::ContextMismatch);
        }
        Ok(LieElt { spec: self.clone(), y: quotient_by_kappa(x, self.i, self.m)? })
    }

    /// The element `κ^i·y`.
    pub fn from_cofactor(self: &Arc<Self>, y: &CycElt) -> Result<LieElt> {
        if !y.ctx().same(&self.ctx) {
            return Err(Error::ContextMismatch);
        }
        if y.prec() < self.rel() {
            return Err(Error::PrecisionExhausted { needed: self.rel(), available: y.prec() });
        }
        Ok(LieElt { spec: self.clone(), y: y.truncate(self.rel()) })
    }

    /// `κ^{i+r}` for `r = 0..p−1`: additive generators of `𝔭^i/𝔭^m`.
    pub fn basis(self: &Arc<Self>) -> Vec<LieElt> {
        (0..self.ctx.d())
            .map(|r| self.from_cofactor(&CycElt::kappa_pow(&self.ctx, r)).expect("exact"))
            .collect()
    }

    pub fn random<R: Rng + ?Sized>(self: &Arc<Self>, rng: &mut R) -> LieElt {
        LieElt { spec: self.clone(), y: CycElt::random(&self.ctx, self.rel(), rng) }
    }

    /// Every element of `𝔭^i/𝔭^m`, in a fixed order.
    pub fn elements(self: &Arc<Self>) -> impl Iterator<Item = LieElt> + '_ {
        let rel = self.rel();
        let moduli: Vec<u64> = (0..self.ctx.n_digits()).map(|j| self.ctx.digit_modulus(rel, j)).collect();
        let mut cur: Option<Vec<u64>> = Some(vec![0; moduli.len()]);
        std::iter::from_fn(move || {
            let digits = cur.take()?;
            let mut next = digits.clone();
            for (j, q) in moduli.iter().enumerate() {
                next[j] += 1;
                if next[j] < *q {
                    cur = Some(next);
                    break;
                }
                next[j] = 0;
            }
            Some(LieElt { spec: self.clone(), y: CycElt::from_raw(&self.ctx, digits.into_iter().collect(), rel) })
        })
    }

    fn bracket_raw(&self, a: &[u64], b: &[u64]) -> Residues {
        let rel = self.rel();
        let q = self.ctx.digit_modulus(rel, 0);
        let mut acc = self.ctx.zero_raw();
        if q == 1 {
            return acc;
        }
        let n = a.len();
        for h in 0..n {
            for k in h + 1..n {
                let s = submod(mulmod(a[h] % q, b[k] % q, q), mulmod(a[k] % q, b[h] % q, q), q);
                self.ctx.axpy_raw(&mut acc, s, &self.table[h][k], q);
            }
        }
        self.ctx.canon(&mut acc, rel);
        acc
    }
}

/// `x/κ^i` reduced modulo `𝔭^{m−i}`, for `x ∈ 𝔭^i` known modulo `𝔭^m`.
fn quotient_by_kappa(x: &CycElt, i: u32, m: u32) -> Result<CycElt> {
    if x.prec() < m {
        return Err(Error::PrecisionExhausted { needed: m, available: x.prec() });
    }
    let x = x.truncate(m);
    match x.valuation() {
        Valuation::AtLeast(_) => Ok(CycElt::zero(x.ctx()).truncate(m - i)),
        Valuation::Exact(v) if v < i => Err(Error::InsufficientValuation { needed: i, found: v }),
        Valuation::Exact(_) => Ok(x.div_kappa(i)?.truncate(m - i)),
    }
}

/// An element `κ^i·y + 𝔭^m` of `L_{i,m}(γ)`; also an element of `𝔾(L)`.
#[derive(Clone)]
pub struct LieElt {
    spec: Arc<LieRingSpec>,
    y: CycElt,
}

impl fmt::Debug for LieElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LieElt(i={}, m={}, cofactor={:?})", self.spec.i, self.spec.m, self.y.digits())
    }
}

impl PartialEq for LieElt {
    fn eq(&self, other: &Self) -> bool {
        self.spec.id == other.spec.id && self.y.digits() == other.y.digits()
    }
}

impl Eq for LieElt {}

impl Hash for LieElt {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.spec.id.hash(state);
        self.y.digits().hash(state);
    }
}

impl LieElt {
    pub fn spec(&self) -> &Arc<LieRingSpec> {
        &self.spec
    }

    /// `y` with `x = κ^i·y`, known modulo `𝔭^{m−i}`.
    pub fn cofactor(&self) -> &CycElt {
        &self.y
    }

    /// The representative `x ∈ 𝔭^i` modulo `𝔭^m`.
    pub fn value(&self) -> CycElt {
        let ctx = &self.spec.ctx;
        let x = CycElt::kappa_pow(ctx, self.spec.i).mul(&self.y).expect("same context");
        x.truncate(self.spec.m)
    }

    /// Valuation of the representative, as an element of `O/𝔭^m`.
    pub fn valuation(&self) -> Valuation {
        match self.y.valuation() {
            Valuation::Exact(v) => Valuation::Exact(v + self.spec.i),
            Valuation::AtLeast(_) => Valuation::AtLeast(self.spec.m),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.y.is_zero()
    }

    fn check(&self, other: &LieElt) -> Result<()> {
        if self.spec.id != other.spec.id {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    fn with(&self, digits: Residues) -> LieElt {
        LieElt { spec: self.spec.clone(), y: CycElt::from_raw(&self.spec.ctx, digits, self.spec.rel()) }
    }

    pub fn add(&self, other: &LieElt) -> Result<LieElt> {
        self.check(other)?;
        Ok(self.with(self.spec.ctx.add_raw(self.y.digits(), other.y.digits(), self.spec.rel())))
    }

    pub fn sub(&self, other: &LieElt) -> Result<LieElt> {
        self.check(other)?;
        Ok(self.with(self.spec.ctx.sub_raw(self.y.digits(), other.y.digits(), self.spec.rel())))
    }

    pub fn neg(&self) -> LieElt {
        self.with(self.spec.ctx.neg_raw(self.y.digits(), self.spec.rel()))
    }

    pub fn scale(&self, n: i64) -> LieElt {
        LieElt { spec: self.spec.clone(), y: self.y.mul_int(n).truncate(self.spec.rel()) }
    }

    /// Multiplication by an integer residue modulo the top digit modulus.
    pub(crate) fn scale_residue(&self, s: u64) -> LieElt {
        self.with(self.spec.ctx.scale_raw(self.y.digits(), s, self.spec.rel()))
    }

    /// Multiplication by a rational `num/den` with `p ∤ den`.
    pub fn scale_ratio(&self, num: i64, den: i64) -> Result<LieElt> {
        let s = CycElt::from_ratio(&self.spec.ctx, num, den)?;
        Ok(LieElt { spec: self.spec.clone(), y: self.y.mul(&s)?.truncate(self.spec.rel()) })
    }

    /// `[x, y] = γ(x ∧ y) + 𝔭^m`.
    pub fn bracket(&self, other: &LieElt) -> Result<LieElt> {
        self.check(other)?;
        Ok(self.with(self.spec.bracket_raw(self.y.digits(), other.y.digits())))
    }

    /// Multiplication by `θ^t`.
    pub fn theta_pow(&self, t: i64) -> LieElt {
        let ctx = &self.spec.ctx;
        let t = t.rem_euclid(ctx.p() as i64) as usize;
        self.with(ctx.mul_raw(self.y.digits(), ctx.theta_raw(t), self.spec.rel()))
    }

    /// Stable ordering key (cofactor digits).
    pub fn key(&self) -> Vec<u64> {
        self.y.digits().to_vec()
    }
}

/// Outcome of the class bound checks for one Lie ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub p: u64,
    pub i: u32,
    pub m: u32,
    pub lambda: String,
    pub lcs: Vec<u32>,
    pub class: u32,
    pub bounds: ClassBounds,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBounds {
    /// `3 + (2p − 8)/(i − (p − 2))`, as a decimal.
    pub classbound: Option<f64>,
    /// `p − 1` when `i > p − 1`.
    pub class_at_most: Option<u32>,
    /// Class is exactly 3 (checked only for the full ring with `i > 3p − 10`).
    pub class_exactly_3: Option<bool>,
    /// `3i + 3 − p` when `i > p − 2`.
    pub lambda_lower: Option<u32>,
}

/// Checks the class of `L_{i,m}(γ)` against the general bounds. The
/// "class exactly 3" statement is checked only when `m = λ`.
pub fn check_class_bounds(spec: &LieRingSpec) -> Result<ClassReport> {
    let p = spec.p();
    let i = spec.i;
    let prof = spec.lcs_profile()?;
    let c = prof.class;
    let pi = p as i64;
    let mut violations = Vec::new();
    let mut bounds = ClassBounds { classbound: None, class_at_most: None, class_exactly_3: None, lambda_lower: None };
    if i as i64 > pi - 2 {
        let denom = i as i64 - (pi - 2);
        bounds.classbound = Some(3.0 + (2 * pi - 8) as f64 / denom as f64);
        if (c as i64 - 3) * denom > 2 * pi - 8 {
            violations.push(format!("class {c} exceeds 3 + (2p-8)/(i-(p-2))"));
        }
        let lower = 3 * i + 3 - p as u32;
        bounds.lambda_lower = Some(lower);
        if spec.lambda.bound() < lower && spec.lambda.is_exact() {
            violations.push(format!("lambda {} below 3i+3-p = {lower}", spec.lambda));
        }
    }
    if i as i64 > pi - 1 {
        bounds.class_at_most = Some(p as u32 - 1);
        if c > p as u32 - 1 {
            violations.push(format!("class {c} exceeds p-1"));
        }
    }
    let full = spec.lambda == Valuation::Exact(spec.m);
    if full && i as i64 > 3 * pi - 10 && spec.m > prof.term(3) {
        let ok = c == 3;
        bounds.class_exactly_3 = Some(ok);
        if !ok {
            violations.push(format!("class {c} is not 3 although i > 3p-10"));
        }
    }
    Ok(ClassReport {
        p,
        i,
        m: spec.m,
        lambda: spec.lambda.to_string(),
        lcs: prof.exponents,
        class: c,
        bounds,
        violations,
    })
}

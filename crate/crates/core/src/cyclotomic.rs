//! Arithmetic in the maximal order `O = Z_p[θ]` of the p-th cyclotomic field
//! over `Q_p`, truncated at a κ-adic precision, where `κ = θ − 1`.
//!
//! Elements are stored in the κ-basis `1, κ, …, κ^{p−2}`. Because `κ^j` has
//! valuation `j` and `p` has valuation `p − 1`, an element is known modulo
//! `𝔭^M` exactly when digit `j` is known modulo `p^{⌈(M − j)/(p − 1)⌉}`, and
//! the valuation of a nonzero element is `min_j (j + (p − 1)·v_p(d_j))`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub(crate) type Residues = SmallVec<[u64; 16]>;

const MAX_MODULUS: u64 = 1 << 62;

/// Position of an element in the ideal chain `O > 𝔭 > 𝔭² > …`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Valuation {
    Exact(u32),
    /// All known digits vanish; the element lies in `𝔭^b` where `b` is its precision.
    AtLeast(u32),
}

impl Valuation {
    /// The exact value, or the lower bound.
    pub fn bound(self) -> u32 {
        match self {
            Valuation::Exact(v) | Valuation::AtLeast(v) => v,
        }
    }

    pub fn exact(self) -> Option<u32> {
        match self {
            Valuation::Exact(v) => Some(v),
            Valuation::AtLeast(_) => None,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Valuation::Exact(_))
    }

    /// Valuation of the ideal generated by two elements.
    pub fn min(self, other: Valuation) -> Valuation {
        use Valuation::*;
        match (self, other) {
            (Exact(a), Exact(b)) => Exact(a.min(b)),
            (Exact(a), AtLeast(b)) | (AtLeast(b), Exact(a)) => {
                if a < b {
                    Exact(a)
                } else {
                    AtLeast(b)
                }
            }
            (AtLeast(a), AtLeast(b)) => AtLeast(a.min(b)),
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Exact(v) => write!(f, "{v}"),
            Valuation::AtLeast(v) => write!(f, ">={v}"),
        }
    }
}

/// Prime-dependent data shared by every element: the reduction rule for
/// `κ^{p−1}`, powers of `p`, and precomputed Galois and θ-power images.
#[derive(Debug)]
pub struct PrimeContext {
    p: u64,
    work_prec: u32,
    pow: Vec<u64>,
    max_exp: usize,
    /// `κ^{p−1} = Σ_j kappa_reduction[j]·κ^j`, residues modulo `p^{max_exp}`.
    kappa_reduction: Vec<u64>,
    /// Digits of `p/κ`, so that `p = κ·(p/κ)`.
    p_over_kappa: Vec<u64>,
    /// `galois[k][j]` = digits of `σ_k(κ^j)`.
    galois: Vec<Vec<Residues>>,
    /// `theta[t]` = digits of `θ^t`.
    theta: Vec<Residues>,
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

#[inline]
pub(crate) fn mulmod(a: u64, b: u64, q: u64) -> u64 {
    if q <= u32::MAX as u64 {
        (a * b) % q
    } else {
        ((a as u128 * b as u128) % q as u128) as u64
    }
}

#[inline]
pub(crate) fn addmod(a: u64, b: u64, q: u64) -> u64 {
    let s = a + b;
    if s >= q {
        s - q
    } else {
        s
    }
}

#[inline]
pub(crate) fn submod(a: u64, b: u64, q: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + q - b
    }
}

pub(crate) fn reduce_i128(n: i128, q: u64) -> u64 {
    n.rem_euclid(q as i128) as u64
}

/// Inverse of `a` modulo `q` for `gcd(a, q) = 1`.
pub(crate) fn inv_mod(a: u64, q: u64) -> Option<u64> {
    if q == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (q as i128, (a % q) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let quo = r0 / r1;
        (r0, r1) = (r1, r0 - quo * r1);
        (t0, t1) = (t1, t0 - quo * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(q as i128) as u64)
}

fn vp(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n.is_multiple_of(p) {
        n /= p;
        v += 1;
    }
    v
}

fn binomial(n: u64, k: u64) -> u128 {
    let mut r: u128 = 1;
    for t in 0..k {
        r = r * (n - t) as u128 / (t + 1) as u128;
    }
    r
}

impl PrimeContext {
    pub fn new(p: u64, work_prec: u32) -> Result<Arc<Self>> {
        if p < 5 || !is_prime(p) || p > 1 << 20 {
            return Err(Error::InvalidPrime(p));
        }
        if work_prec == 0 {
            return Err(Error::UnsupportedPrecision { p, work_prec });
        }
        let d = p - 1;
        let max_exp = (work_prec as u64).div_ceil(d) as usize;
        let mut pow = vec![1u64];
        for _ in 0..max_exp {
            let next = pow.last().unwrap().checked_mul(p).filter(|&v| v <= MAX_MODULUS);
            match next {
                Some(v) => pow.push(v),
                None => return Err(Error::UnsupportedPrecision { p, work_prec }),
            }
        }
        let q = pow[max_exp];
        let q128 = q as u128;
        let kappa_reduction: Vec<u64> = (1..p)
            .map(|j| {
                let b = (binomial(p, j) % q128) as u64;
                submod(0, b, q)
            })
            .collect();
        let p_over_kappa: Vec<u64> = (2..=p)
            .map(|j| {
                let b = (binomial(p, j) % q128) as u64;
                submod(0, b, q)
            })
            .collect();
        let mut ctx = PrimeContext {
            p,
            work_prec,
            pow,
            max_exp,
            kappa_reduction,
            p_over_kappa,
            galois: Vec::new(),
            theta: Vec::new(),
        };
        let n = d as usize;
        let mut theta_one: Residues = SmallVec::from_elem(0, n);
        theta_one[0] = 1;
        theta_one[1] = 1;
        let mut theta = Vec::with_capacity(p as usize);
        let mut cur: Residues = SmallVec::from_elem(0, n);
        cur[0] = 1;
        for _ in 0..p {
            theta.push(cur.clone());
            cur = ctx.mul_raw(&cur, &theta_one, work_prec);
        }
        let mut galois = vec![Vec::new()];
        for k in 1..p as usize {
            let mut sk = theta[k].clone();
            sk[0] = submod(sk[0], 1, q);
            ctx.canon(&mut sk, work_prec);
            let mut cols = Vec::with_capacity(n);
            let mut acc: Residues = SmallVec::from_elem(0, n);
            acc[0] = 1;
            for _ in 0..n {
                cols.push(acc.clone());
                acc = ctx.mul_raw(&acc, &sk, work_prec);
            }
            galois.push(cols);
        }
        ctx.theta = theta;
        ctx.galois = galois;
        Ok(Arc::new(ctx))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// `d = p − 1`, the valuation of `p`.
    pub fn d(&self) -> u32 {
        (self.p - 1) as u32
    }

    /// `l = (p − 3)/2`, the number of ϑ_a.
    pub fn l(&self) -> usize {
        ((self.p - 3) / 2) as usize
    }

    pub fn work_prec(&self) -> u32 {
        self.work_prec
    }

    /// The same prime with a different working precision.
    pub fn with_work_prec(&self, work_prec: u32) -> Result<Arc<Self>> {
        PrimeContext::new(self.p, work_prec)
    }

    /// Coefficients of `κ^{p−1}` in the κ-basis, reduced modulo `p^{max_exp}`.
    pub fn kappa_reduction(&self) -> &[u64] {
        &self.kappa_reduction
    }

    pub fn pow_p(&self, e: usize) -> u64 {
        self.pow[e]
    }

    pub(crate) fn n_digits(&self) -> usize {
        (self.p - 1) as usize
    }

    pub(crate) fn same(&self, other: &PrimeContext) -> bool {
        self.p == other.p && self.work_prec == other.work_prec
    }

    /// Exponent `e` such that digit `j` is a residue modulo `p^e` at precision `prec`.
    #[inline]
    pub(crate) fn digit_exp(&self, prec: u32, j: usize) -> usize {
        let prec = prec as u64;
        let j = j as u64;
        if prec <= j {
            0
        } else {
            (prec - j).div_ceil(self.p - 1) as usize
        }
    }

    #[inline]
    pub(crate) fn digit_modulus(&self, prec: u32, j: usize) -> u64 {
        self.pow[self.digit_exp(prec, j)]
    }

    pub(crate) fn canon(&self, digits: &mut [u64], prec: u32) {
        for (j, dj) in digits.iter_mut().enumerate() {
            *dj %= self.digit_modulus(prec, j);
        }
    }

    pub(crate) fn zero_raw(&self) -> Residues {
        SmallVec::from_elem(0, self.n_digits())
    }

    pub(crate) fn add_raw(&self, x: &[u64], y: &[u64], prec: u32) -> Residues {
        x.iter()
            .zip(y)
            .enumerate()
            .map(|(j, (&a, &b))| {
                let q = self.digit_modulus(prec, j);
                addmod(a % q, b % q, q)
            })
            .collect()
    }

    pub(crate) fn sub_raw(&self, x: &[u64], y: &[u64], prec: u32) -> Residues {
        x.iter()
            .zip(y)
            .enumerate()
            .map(|(j, (&a, &b))| {
                let q = self.digit_modulus(prec, j);
                submod(a % q, b % q, q)
            })
            .collect()
    }

    pub(crate) fn neg_raw(&self, x: &[u64], prec: u32) -> Residues {
        x.iter()
            .enumerate()
            .map(|(j, &a)| {
                let q = self.digit_modulus(prec, j);
                submod(0, a % q, q)
            })
            .collect()
    }

    /// Multiply by an integer residue `s` (taken modulo the top digit modulus).
    pub(crate) fn scale_raw(&self, x: &[u64], s: u64, prec: u32) -> Residues {
        let q = self.digit_modulus(prec, 0);
        let s = s % q;
        let mut out: Residues = x.iter().map(|&a| mulmod(a % q, s, q)).collect();
        self.canon(&mut out, prec);
        out
    }

    /// `acc += s·x` with `acc` held modulo `q` (not canonicalized).
    #[inline]
    pub(crate) fn axpy_raw(&self, acc: &mut [u64], s: u64, x: &[u64], q: u64) {
        if s == 0 {
            return;
        }
        for (a, &b) in acc.iter_mut().zip(x) {
            *a = addmod(*a, mulmod(s, b % q, q), q);
        }
    }

    /// Product of two digit vectors, reduced to precision `prec`.
    pub(crate) fn mul_raw(&self, x: &[u64], y: &[u64], prec: u32) -> Residues {
        let n = self.n_digits();
        let q = self.digit_modulus(prec, 0);
        if q == 1 {
            return self.zero_raw();
        }
        let mut buf = [0u64; 64];
        let mut big;
        let conv: &mut [u64] = if 2 * n - 1 <= buf.len() {
            &mut buf[..2 * n - 1]
        } else {
            big = vec![0u64; 2 * n - 1];
            &mut big[..]
        };
        for (r, &a) in x.iter().enumerate() {
            let a = a % q;
            if a == 0 {
                continue;
            }
            for (s, &b) in y.iter().enumerate() {
                let b = b % q;
                if b != 0 {
                    conv[r + s] = addmod(conv[r + s], mulmod(a, b, q), q);
                }
            }
        }
        for k in (n..2 * n - 1).rev() {
            let c = conv[k];
            if c == 0 {
                continue;
            }
            conv[k] = 0;
            let base = k - n;
            for (j, &r) in self.kappa_reduction.iter().enumerate() {
                let r = r % q;
                conv[base + j] = addmod(conv[base + j], mulmod(c, r, q), q);
            }
        }
        let mut out: Residues = conv[..n].iter().copied().collect();
        self.canon(&mut out, prec);
        out
    }

    /// Apply a Z_p-linear map given by the images of `κ^j`.
    pub(crate) fn apply_linear(&self, cols: &[Residues], x: &[u64], prec: u32) -> Residues {
        let q = self.digit_modulus(prec, 0);
        let mut acc = self.zero_raw();
        for (col, &xj) in cols.iter().zip(x) {
            self.axpy_raw(&mut acc, xj % q, col, q);
        }
        self.canon(&mut acc, prec);
        acc
    }

    pub(crate) fn galois_raw(&self, k: usize, x: &[u64], prec: u32) -> Residues {
        self.apply_linear(&self.galois[k], x, prec)
    }

    pub(crate) fn theta_raw(&self, t: usize) -> &Residues {
        &self.theta[t % self.p as usize]
    }

    pub(crate) fn valuation_raw(&self, x: &[u64], prec: u32) -> Valuation {
        let d = self.p - 1;
        let mut best: Option<u32> = None;
        for (j, &dj) in x.iter().enumerate() {
            if dj != 0 {
                let v = j as u32 + (d as u32) * vp(dj, self.p);
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        match best {
            Some(v) => Valuation::Exact(v),
            None => Valuation::AtLeast(prec),
        }
    }

    /// One division by κ of an element of `𝔭` known at precision `prec`.
    pub(crate) fn div_kappa_once_raw(&self, x: &[u64], prec: u32) -> Residues {
        let n = self.n_digits();
        let new_prec = prec - 1;
        let q = self.digit_modulus(new_prec, 0);
        let d0 = x[0] / self.p;
        let mut out = self.zero_raw();
        for j in 0..n {
            let shifted = if j + 1 < n { x[j + 1] % q } else { 0 };
            out[j] = addmod(shifted, mulmod(d0 % q, self.p_over_kappa[j] % q, q), q);
        }
        self.canon(&mut out, new_prec);
        out
    }
}

/// An element of `O` known modulo `𝔭^prec`, in canonical κ-digit form.
#[derive(Clone)]
pub struct CycElt {
    ctx: Arc<PrimeContext>,
    prec: u32,
    digits: Residues,
}

impl fmt::Debug for CycElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CycElt(p={}, prec={}, {:?})", self.ctx.p, self.prec, &self.digits[..])
    }
}

impl PartialEq for CycElt {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.same(&other.ctx) && self.prec == other.prec && self.digits == other.digits
    }
}

impl Eq for CycElt {}

impl std::hash::Hash for CycElt {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.ctx.p.hash(state);
        self.prec.hash(state);
        self.digits.hash(state);
    }
}

/// JSON form: `{p, prec, digits}` with decimal-string digits, little-endian in κ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycEltJson {
    pub p: u64,
    pub prec: u32,
    pub digits: Vec<String>,
}

impl CycElt {
    pub(crate) fn from_raw(ctx: &Arc<PrimeContext>, mut digits: Residues, prec: u32) -> Self {
        ctx.canon(&mut digits, prec);
        CycElt { ctx: ctx.clone(), prec, digits }
    }

    pub(crate) fn raw(&self) -> &Residues {
        &self.digits
    }

    pub fn zero(ctx: &Arc<PrimeContext>) -> Self {
        Self::from_raw(ctx, ctx.zero_raw(), ctx.work_prec)
    }

    pub fn one(ctx: &Arc<PrimeContext>) -> Self {
        Self::from_int(ctx, 1)
    }

    /// An integer embedded exactly at working precision.
    pub fn from_int(ctx: &Arc<PrimeContext>, n: i64) -> Self {
        let mut digits = ctx.zero_raw();
        digits[0] = reduce_i128(n as i128, ctx.pow[ctx.max_exp]);
        Self::from_raw(ctx, digits, ctx.work_prec)
    }

    /// A rational `num/den` with `p ∤ den`.
    pub fn from_ratio(ctx: &Arc<PrimeContext>, num: i64, den: i64) -> Result<Self> {
        let q = ctx.pow[ctx.max_exp];
        let den_r = reduce_i128(den as i128, q);
        let inv = inv_mod(den_r, q).ok_or(Error::DenominatorNotCoprime(den))?;
        let mut digits = ctx.zero_raw();
        digits[0] = mulmod(reduce_i128(num as i128, q), inv, q);
        Ok(Self::from_raw(ctx, digits, ctx.work_prec))
    }

    pub fn kappa(ctx: &Arc<PrimeContext>) -> Self {
        Self::kappa_pow(ctx, 1)
    }

    /// `κ^e` at working precision (zero when `e ≥ work_prec`).
    pub fn kappa_pow(ctx: &Arc<PrimeContext>, e: u32) -> Self {
        let prec = ctx.work_prec;
        if e >= prec {
            return Self::zero(ctx);
        }
        let mut kap = ctx.zero_raw();
        kap[1] = 1;
        let mut acc = ctx.zero_raw();
        acc[0] = 1;
        for _ in 0..e {
            acc = ctx.mul_raw(&acc, &kap, prec);
        }
        Self::from_raw(ctx, acc, prec)
    }

    /// `θ^t` for any integer `t`.
    pub fn theta_pow(ctx: &Arc<PrimeContext>, t: i64) -> Self {
        let t = t.rem_euclid(ctx.p as i64) as usize;
        Self::from_raw(ctx, ctx.theta[t].clone(), ctx.work_prec)
    }

    /// Build from integer digits (little-endian in κ); digits are reduced.
    pub fn from_digits(ctx: &Arc<PrimeContext>, digits: &[i128], prec: u32) -> Result<Self> {
        if digits.len() > ctx.n_digits() {
            return Err(Error::WrongLength { expected: ctx.n_digits(), found: digits.len() });
        }
        if prec > ctx.work_prec {
            return Err(Error::PrecisionExhausted { needed: prec, available: ctx.work_prec });
        }
        let q = ctx.pow[ctx.max_exp];
        let mut raw = ctx.zero_raw();
        for (r, &d) in raw.iter_mut().zip(digits) {
            *r = reduce_i128(d, q);
        }
        Ok(Self::from_raw(ctx, raw, prec))
    }

    /// Uniformly random element of `O/𝔭^prec`.
    pub fn random<R: Rng + ?Sized>(ctx: &Arc<PrimeContext>, prec: u32, rng: &mut R) -> Self {
        let prec = prec.min(ctx.work_prec);
        let digits = (0..ctx.n_digits())
            .map(|j| rng.gen_range(0..ctx.digit_modulus(prec, j)))
            .collect();
        Self::from_raw(ctx, digits, prec)
    }

    /// Uniformly random unit of `O/𝔭^prec`.
    pub fn random_unit<R: Rng + ?Sized>(ctx: &Arc<PrimeContext>, prec: u32, rng: &mut R) -> Self {
        loop {
            let x = Self::random(ctx, prec.max(1), rng);
            if !x.digits[0].is_multiple_of(ctx.p) {
                return x;
            }
        }
    }

    pub fn ctx(&self) -> &Arc<PrimeContext> {
        &self.ctx
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    fn check(&self, other: &CycElt) -> Result<()> {
        if self.ctx.same(&other.ctx) {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn add(&self, other: &CycElt) -> Result<CycElt> {
        self.check(other)?;
        let prec = self.prec.min(other.prec);
        Ok(Self::from_raw(&self.ctx, self.ctx.add_raw(&self.digits, &other.digits, prec), prec))
    }

    pub fn sub(&self, other: &CycElt) -> Result<CycElt> {
        self.check(other)?;
        let prec = self.prec.min(other.prec);
        Ok(Self::from_raw(&self.ctx, self.ctx.sub_raw(&self.digits, &other.digits, prec), prec))
    }

    pub fn neg(&self) -> CycElt {
        Self::from_raw(&self.ctx, self.ctx.neg_raw(&self.digits, self.prec), self.prec)
    }

    pub fn mul(&self, other: &CycElt) -> Result<CycElt> {
        self.check(other)?;
        let vx = self.valuation().bound();
        let vy = other.valuation().bound();
        let prec = (self.prec + vy).min(other.prec + vx).min(self.ctx.work_prec);
        Ok(Self::from_raw(&self.ctx, self.ctx.mul_raw(&self.digits, &other.digits, prec), prec))
    }

    /// Multiply by an exact integer.
    pub fn mul_int(&self, n: i64) -> CycElt {
        let m = Self::from_int(&self.ctx, n);
        self.mul(&m).expect("same context")
    }

    pub fn pow(&self, mut e: u64) -> CycElt {
        let mut base = self.clone();
        let mut acc = Self::one(&self.ctx);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("same context");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("same context");
            }
        }
        acc
    }

    pub fn valuation(&self) -> Valuation {
        self.ctx.valuation_raw(&self.digits, self.prec)
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    /// Residue class modulo `𝔭`, an element of `F_p`.
    pub fn residue(&self) -> u64 {
        if self.prec == 0 {
            0
        } else {
            self.digits[0] % self.ctx.p
        }
    }

    /// The image under `σ_k : θ ↦ θ^k`.
    pub fn galois(&self, k: i64) -> Result<CycElt> {
        let k = k.rem_euclid(self.ctx.p as i64);
        if k == 0 {
            return Err(Error::InvalidGaloisIndex(k));
        }
        let digits = self.ctx.galois_raw(k as usize, &self.digits, self.prec);
        Ok(Self::from_raw(&self.ctx, digits, self.prec))
    }

    /// The unique `y` with `κ^e·y = self`; precision drops by `e`.
    pub fn div_kappa(&self, e: u32) -> Result<CycElt> {
        if e == 0 {
            return Ok(self.clone());
        }
        if self.prec <= e {
            return Err(Error::PrecisionExhausted { needed: e + 1, available: self.prec });
        }
        if let Valuation::Exact(v) = self.valuation() {
            if v < e {
                return Err(Error::InsufficientValuation { needed: e, found: v });
            }
        }
        let mut digits = self.digits.clone();
        let mut prec = self.prec;
        for _ in 0..e {
            digits = self.ctx.div_kappa_once_raw(&digits, prec);
            prec -= 1;
        }
        Ok(Self::from_raw(&self.ctx, digits, prec))
    }

    /// Inverse of a unit, by Newton iteration `y ← y(2 − xy)`.
    pub fn unit_inverse(&self) -> Result<CycElt> {
        if self.valuation() != Valuation::Exact(0) {
            return Err(Error::NotAUnit);
        }
        let ctx = &self.ctx;
        let p = ctx.p;
        let prec = self.prec;
        let r = inv_mod(self.digits[0] % p, p).ok_or(Error::NotAUnit)?;
        let mut y = ctx.zero_raw();
        y[0] = r;
        ctx.canon(&mut y, prec);
        let mut one = ctx.zero_raw();
        one[0] = 1;
        ctx.canon(&mut one, prec);
        let mut good = 1u32;
        loop {
            let xy = ctx.mul_raw(&self.digits, &y, prec);
            if xy == one {
                break;
            }
            let two_minus = ctx.sub_raw(&ctx.scale_raw(&one, 2, prec), &xy, prec);
            y = ctx.mul_raw(&y, &two_minus, prec);
            good = good.saturating_mul(2);
            if good > 2 * prec + 2 {
                return Err(Error::NotAUnit);
            }
        }
        Ok(Self::from_raw(ctx, y, prec))
    }

    /// Reduce to a lower precision (no-op if `prec ≥ self.prec`).
    pub fn truncate(&self, prec: u32) -> CycElt {
        let prec = prec.min(self.prec);
        Self::from_raw(&self.ctx, self.digits.clone(), prec)
    }

    /// Equality modulo `𝔭^prec`, where `prec` must not exceed either precision.
    pub fn eq_mod(&self, other: &CycElt, prec: u32) -> bool {
        let prec = prec.min(self.prec).min(other.prec);
        self.truncate(prec).digits == other.truncate(prec).digits
    }

    pub fn to_json(&self) -> CycEltJson {
        CycEltJson {
            p: self.ctx.p,
            prec: self.prec,
            digits: self.digits.iter().map(|d| d.to_string()).collect(),
        }
    }

    pub fn from_json(ctx: &Arc<PrimeContext>, json: &CycEltJson) -> Result<Self> {
        if json.p != ctx.p {
            return Err(Error::ContextMismatch);
        }
        let digits = json
            .digits
            .iter()
            .map(|s| s.trim().parse::<i128>().map_err(|e| Error::InvalidData(format!("digit {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_digits(ctx, &digits, json.prec)
    }
}

/// Every unit of `O/𝔭^M`, each once, in increasing mixed-radix digit order.
pub struct UnitIter {
    ctx: Arc<PrimeContext>,
    prec: u32,
    moduli: Vec<u64>,
    next: Option<Vec<u64>>,
}

impl Iterator for UnitIter {
    type Item = CycElt;

    fn next(&mut self) -> Option<CycElt> {
        let cur = self.next.take()?;
        let p = self.ctx.p;
        let mut succ = cur.clone();
        // digit 0 runs over residues prime to p, the others over everything
        let mut j = 0;
        while j < succ.len() {
            succ[j] += 1;
            if j == 0 && succ[0] % p == 0 {
                succ[0] += 1;
            }
            if succ[j] < self.moduli[j] {
                self.next = Some(succ);
                break;
            }
            succ[j] = if j == 0 { 1 } else { 0 };
            j += 1;
        }
        Some(CycElt::from_raw(&self.ctx, cur.into_iter().collect(), self.prec))
    }
}

/// Number of units of `O/𝔭^M`.
pub fn unit_count(ctx: &PrimeContext, prec: u32) -> u128 {
    if prec == 0 {
        return 1;
    }
    (ctx.p as u128 - 1) * (ctx.p as u128).pow(prec - 1)
}

/// Stream one representative of every unit of `O/𝔭^M`.
pub fn enumerate_units(ctx: &Arc<PrimeContext>, prec: u32, budget: u128) -> Result<UnitIter> {
    if prec == 0 || prec > ctx.work_prec {
        return Err(Error::PrecisionExhausted { needed: prec.max(1), available: ctx.work_prec });
    }
    let count = unit_count(ctx, prec);
    if count > budget {
        return Err(Error::BudgetExceeded { needed: count, budget });
    }
    let moduli: Vec<u64> = (0..ctx.n_digits()).map(|j| ctx.digit_modulus(prec, j)).collect();
    let mut first = vec![0u64; ctx.n_digits()];
    first[0] = 1;
    Ok(UnitIter { ctx: ctx.clone(), prec, moduli, next: Some(first) })
}

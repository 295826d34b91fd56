//! Baker–Campbell–Hausdorff series in the Lyndon basis of the free Lie
//! algebra on two letters, generated over the rationals.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degree of the table shipped in `data/bch_table.json`.
pub const EMBEDDED_DEGREE: u32 = 12;

const EMBEDDED_JSON: &str = include_str!("../data/bch_table.json");

/// Noncommutative polynomial over `Q`, truncated at a fixed degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreePoly {
    pub max_deg: usize,
    pub terms: BTreeMap<Vec<u8>, BigRational>,
}

impl FreePoly {
    pub fn zero(max_deg: usize) -> Self {
        FreePoly { max_deg, terms: BTreeMap::new() }
    }

    pub fn one(max_deg: usize) -> Self {
        let mut f = Self::zero(max_deg);
        f.terms.insert(Vec::new(), BigRational::one());
        f
    }

    pub fn letter(max_deg: usize, x: u8) -> Self {
        let mut f = Self::zero(max_deg);
        if max_deg >= 1 {
            f.terms.insert(vec![x], BigRational::one());
        }
        f
    }

    fn add_term(&mut self, w: Vec<u8>, c: BigRational) {
        if c.is_zero() || w.len() > self.max_deg {
            return;
        }
        match self.terms.entry(w) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add(&self, other: &FreePoly) -> FreePoly {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> FreePoly {
        let mut out = Self::zero(self.max_deg);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c * s);
        }
        out
    }

    pub fn sub(&self, other: &FreePoly) -> FreePoly {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn mul(&self, other: &FreePoly) -> FreePoly {
        let mut out = Self::zero(self.max_deg.min(other.max_deg));
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                if u.len() + v.len() > out.max_deg {
                    continue;
                }
                let mut w = u.clone();
                w.extend_from_slice(v);
                out.add_term(w, a * b);
            }
        }
        out
    }

    /// `xy − yx`.
    pub fn commutator(&self, other: &FreePoly) -> FreePoly {
        self.mul(other).sub(&other.mul(self))
    }

    /// Homogeneous component of degree `n`.
    pub fn component(&self, n: usize) -> FreePoly {
        let mut out = Self::zero(self.max_deg);
        for (w, c) in &self.terms {
            if w.len() == n {
                out.terms.insert(w.clone(), c.clone());
            }
        }
        out
    }

    /// `exp(x)` for `x` without constant term.
    pub fn exp(&self) -> FreePoly {
        let mut out = Self::one(self.max_deg);
        let mut power = Self::one(self.max_deg);
        for n in 1..=self.max_deg {
            power = power.mul(self);
            out = out.add(&power.scale(&BigRational::new(BigInt::one(), factorial(n))));
        }
        out
    }

    /// `log(1 + w)` for `w` without constant term.
    pub fn log1p(&self) -> FreePoly {
        let mut out = Self::zero(self.max_deg);
        let mut power = Self::one(self.max_deg);
        for k in 1..=self.max_deg {
            power = power.mul(self);
            let sign = if k % 2 == 1 { BigInt::one() } else { -BigInt::one() };
            out = out.add(&power.scale(&BigRational::new(sign, BigInt::from(k))));
        }
        out
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `log(exp(x)·exp(y))` in the free associative algebra.
pub fn bch_series(x: &FreePoly, y: &FreePoly) -> FreePoly {
    let e = x.exp().mul(&y.exp());
    e.sub(&FreePoly::one(e.max_deg)).log1p()
}

pub fn is_lyndon(w: &[u8]) -> bool {
    !w.is_empty() && (1..w.len()).all(|k| w[k..] > *w)
}

/// All Lyndon words over `{0, …, letters−1}` of length `1..=max_len`, by
/// Duval's algorithm.
pub fn lyndon_words(letters: u8, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    if max_len == 0 || letters == 0 {
        return out;
    }
    let mut w: Vec<u8> = vec![0];
    loop {
        out.push(w.clone());
        let n = w.len();
        while w.len() < max_len {
            let c = w[w.len() - n];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last == letters - 1 {
                w.pop();
            } else {
                break;
            }
        }
        match w.last_mut() {
            Some(last) => *last += 1,
            None => break,
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Standard factorization `w = uv` with `v` the longest proper Lyndon suffix.
pub fn standard_factorization(w: &[u8]) -> Option<(&[u8], &[u8])> {
    if w.len() < 2 {
        return None;
    }
    (1..w.len()).find(|&k| is_lyndon(&w[k..])).map(|k| (&w[..k], &w[k..]))
}

/// A bracket monomial in the generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Bracket {
    Gen(u8),
    Pair(Box<Bracket>, Box<Bracket>),
}

impl Bracket {
    /// Standard bracketing of a Lyndon word.
    pub fn standard(w: &[u8]) -> Bracket {
        match standard_factorization(w) {
            None => Bracket::Gen(w[0]),
            Some((u, v)) => Bracket::Pair(Box::new(Self::standard(u)), Box::new(Self::standard(v))),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Bracket::Gen(_) => 1,
            Bracket::Pair(a, b) => a.degree() + b.degree(),
        }
    }

    /// Expansion into the free associative algebra, letters substituted by `gens`.
    pub fn expand(&self, gens: &[FreePoly]) -> FreePoly {
        match self {
            Bracket::Gen(x) => gens[*x as usize].clone(),
            Bracket::Pair(a, b) => a.expand(gens).commutator(&b.expand(gens)),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Bracket::Gen(x) => serde_json::Value::String(letter_name(*x).to_string()),
            Bracket::Pair(a, b) => serde_json::Value::Array(vec![a.to_json(), b.to_json()]),
        }
    }

    fn from_json(v: &serde_json::Value) -> Result<Bracket> {
        match v {
            serde_json::Value::String(s) => match s.as_str() {
                "a" => Ok(Bracket::Gen(0)),
                "b" => Ok(Bracket::Gen(1)),
                _ => Err(Error::InvalidData(format!("unknown letter {s}"))),
            },
            serde_json::Value::Array(items) if items.len() == 2 => Ok(Bracket::Pair(
                Box::new(Self::from_json(&items[0])?),
                Box::new(Self::from_json(&items[1])?),
            )),
            _ => Err(Error::InvalidData("malformed bracket".into())),
        }
    }

    /// The word obtained by reading the leaves left to right.
    pub fn leaves(&self) -> Vec<u8> {
        match self {
            Bracket::Gen(x) => vec![*x],
            Bracket::Pair(a, b) => {
                let mut w = a.leaves();
                w.extend(b.leaves());
                w
            }
        }
    }
}

fn letter_name(x: u8) -> char {
    (b'a' + x) as char
}

pub fn word_name(w: &[u8]) -> String {
    w.iter().map(|&x| letter_name(x)).collect()
}

/// Writes a homogeneous Lie polynomial in the standard-bracketed Lyndon basis.
pub fn lyndon_coordinates(f: &FreePoly) -> Result<Vec<(Vec<u8>, BigRational)>> {
    let gens: Vec<FreePoly> = (0..2).map(|x| FreePoly::letter(f.max_deg, x)).collect();
    let mut rest = f.clone();
    let mut out = Vec::new();
    while let Some((w, c)) = rest.terms.iter().next().map(|(w, c)| (w.clone(), c.clone())) {
        if !is_lyndon(&w) {
            return Err(Error::InvalidData(format!("not a Lie element (leading word {})", word_name(&w))));
        }
        rest = rest.sub(&Bracket::standard(&w).expand(&gens).scale(&c));
        out.push((w, c));
    }
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BchTerm {
    /// Lyndon word; the bracket monomial is its standard bracketing.
    pub word: Vec<u8>,
    pub coeff: BigRational,
}

/// BCH coefficients `log(e^a e^b) = Σ coeff·P(word)` up to `max_degree`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BchTable {
    pub max_degree: u32,
    pub terms: Vec<BchTerm>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BchTableJson {
    version: u32,
    max_degree: u32,
    terms: Vec<BchTermJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BchTermJson {
    degree: u32,
    word: String,
    bracket: serde_json::Value,
    num: String,
    den: String,
}

impl BchTable {
    /// Computes the table from scratch.
    pub fn generate(max_degree: u32) -> Result<BchTable> {
        let n = max_degree as usize;
        let z = bch_series(&FreePoly::letter(n, 0), &FreePoly::letter(n, 1));
        let mut terms = Vec::new();
        for deg in 1..=n {
            for (word, coeff) in lyndon_coordinates(&z.component(deg))? {
                terms.push(BchTerm { word, coeff });
            }
        }
        Ok(BchTable { max_degree, terms })
    }

    /// The table shipped with the crate.
    pub fn embedded() -> &'static BchTable {
        static TABLE: OnceLock<BchTable> = OnceLock::new();
        TABLE.get_or_init(|| BchTable::from_json_str(EMBEDDED_JSON).expect("embedded BCH table is valid"))
    }

    pub fn to_json_string(&self) -> String {
        let json = BchTableJson {
            version: 1,
            max_degree: self.max_degree,
            terms: self
                .terms
                .iter()
                .map(|t| BchTermJson {
                    degree: t.word.len() as u32,
                    word: word_name(&t.word),
                    bracket: Bracket::standard(&t.word).to_json(),
                    num: t.coeff.numer().to_string(),
                    den: t.coeff.denom().to_string(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&json).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<BchTable> {
        let json: BchTableJson = serde_json::from_str(s).map_err(|e| Error::InvalidData(e.to_string()))?;
        if json.version != 1 {
            return Err(Error::InvalidData(format!("unsupported BCH table version {}", json.version)));
        }
        let mut terms = Vec::with_capacity(json.terms.len());
        for t in json.terms {
            let word: Vec<u8> = t
                .word
                .bytes()
                .map(|c| match c {
                    b'a' => Ok(0),
                    b'b' => Ok(1),
                    _ => Err(Error::InvalidData(format!("bad word {}", t.word))),
                })
                .collect::<Result<_>>()?;
            if !is_lyndon(&word) || word.len() as u32 != t.degree || word.len() as u32 > json.max_degree {
                return Err(Error::InvalidData(format!("bad Lyndon word {}", t.word)));
            }
            if Bracket::from_json(&t.bracket)? != Bracket::standard(&word) {
                return Err(Error::InvalidData(format!("bracket of {} is not standard", t.word)));
            }
            let parse = |s: &str| s.parse::<BigInt>().map_err(|e| Error::InvalidData(e.to_string()));
            let den = parse(&t.den)?;
            if den.is_zero() {
                return Err(Error::InvalidData("zero denominator".into()));
            }
            terms.push(BchTerm { word, coeff: BigRational::new(parse(&t.num)?, den) });
        }
        let table = BchTable { max_degree: json.max_degree, terms };
        table.validate_low_degree()?;
        Ok(table)
    }

    /// The degree ≤ 3 slice must be `a + b + ½[a,b] + 1/12([a,[a,b]] + [b,[b,a]])`.
    pub fn validate_low_degree(&self) -> Result<()> {
        let deg = (self.max_degree as usize).min(3);
        let a = FreePoly::letter(deg, 0);
        let b = FreePoly::letter(deg, 1);
        let ab = a.commutator(&b);
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let expect = a
            .add(&b)
            .add(&ab.scale(&r(1, 2)))
            .add(&a.commutator(&ab).add(&b.commutator(&b.commutator(&a))).scale(&r(1, 12)));
        if self.truncated(deg as u32).expand(deg) != expect {
            return Err(Error::InvalidData("BCH table disagrees with the degree 3 formula".into()));
        }
        Ok(())
    }

    /// Terms of degree at most `max_degree`.
    pub fn truncated(&self, max_degree: u32) -> BchTable {
        BchTable {
            max_degree: max_degree.min(self.max_degree),
            terms: self.terms.iter().filter(|t| t.word.len() as u32 <= max_degree).cloned().collect(),
        }
    }

    /// The series as an element of the free associative algebra on `a, b`.
    pub fn expand(&self, max_deg: usize) -> FreePoly {
        let gens: Vec<FreePoly> = (0..2).map(|x| FreePoly::letter(max_deg, x)).collect();
        self.apply(&gens)
    }

    /// The series with `a, b` replaced by `gens[0], gens[1]`.
    pub fn apply(&self, gens: &[FreePoly]) -> FreePoly {
        let max_deg = gens.iter().map(|g| g.max_deg).min().unwrap_or(0);
        let mut out = FreePoly::zero(max_deg);
        for t in &self.terms {
            out = out.add(&Bracket::standard(&t.word).expand(gens).scale(&t.coeff));
        }
        out
    }

    /// Table for a ring of class `max_class` over `p`: requires `max_class < p`
    /// and every used denominator prime to `p`.
    pub fn for_class(&self, max_class: u32, p: u64) -> Result<BchTable> {
        if max_class as u64 >= p {
            return Err(Error::BchDegreeTooLarge { degree: max_class, p });
        }
        if max_class > self.max_degree {
            return Err(Error::ClassExceedsTable { class: max_class, max_class: self.max_degree });
        }
        let t = self.truncated(max_class);
        let pb = BigInt::from(p);
        for term in &t.terms {
            if term.coeff.denom().mod_floor(&pb).is_zero() {
                return Err(Error::BchDegreeTooLarge { degree: term.word.len() as u32, p });
            }
        }
        Ok(t)
    }

    /// Copy with `delta` added to the coefficient of term `index` (fault injection).
    pub fn perturbed(&self, index: usize, delta: &BigRational) -> BchTable {
        let mut t = self.clone();
        if let Some(term) = t.terms.get_mut(index) {
            term.coeff += delta;
        }
        t
    }

    pub fn coefficient(&self, word: &[u8]) -> BigRational {
        self.terms.iter().find(|t| t.word == word).map_or_else(BigRational::zero, |t| t.coeff.clone())
    }
}

/// `num·den^{−1}` modulo `q` (a power of `p`), for a rational prime to `p`.
pub(crate) fn rational_mod(c: &BigRational, q: u64) -> Option<u64> {
    let qb = BigInt::from(q);
    let num = c.numer().mod_floor(&qb).to_u64()?;
    let den = c.denom().mod_floor(&qb).to_u64()?;
    let inv = crate::cyclotomic::inv_mod(den, q)?;
    Some((num as u128 * inv as u128 % q as u128) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn lyndon_counts() {
        // necklace counts for two letters
        let expect = [2, 1, 2, 3, 6, 9, 18, 30];
        let words = lyndon_words(2, 8);
        for (n, &e) in expect.iter().enumerate() {
            assert_eq!(words.iter().filter(|w| w.len() == n + 1).count(), e);
        }
        assert!(words.iter().all(|w| is_lyndon(w)));
    }

    #[test]
    fn standard_bracketing_leading_word() {
        for w in lyndon_words(2, 7) {
            let gens: Vec<FreePoly> = (0..2).map(|x| FreePoly::letter(7, x)).collect();
            let p = Bracket::standard(&w).expand(&gens);
            let (first, c) = p.terms.iter().next().unwrap();
            assert_eq!(first, &w);
            assert_eq!(c, &BigRational::one());
            assert_eq!(Bracket::standard(&w).leaves(), w);
        }
    }

    #[test]
    fn low_degree_coefficients() {
        let t = BchTable::generate(4).unwrap();
        assert_eq!(t.coefficient(&[0]), r(1, 1));
        assert_eq!(t.coefficient(&[1]), r(1, 1));
        assert_eq!(t.coefficient(&[0, 1]), r(1, 2));
        assert_eq!(t.coefficient(&[0, 0, 1]), r(1, 12));
        assert_eq!(t.coefficient(&[0, 1, 1]), r(1, 12));
        // degree 4: only [b,[a,[a,b]]] survives, with coefficient −1/24
        assert_eq!(t.coefficient(&[0, 0, 0, 1]), r(0, 1));
        assert_eq!(t.coefficient(&[0, 0, 1, 1]), r(1, 24));
        assert_eq!(t.coefficient(&[0, 1, 1, 1]), r(0, 1));
        t.validate_low_degree().unwrap();
    }

    #[test]
    fn generated_series_is_bch() {
        let n = 6;
        let t = BchTable::generate(n as u32).unwrap();
        let a = FreePoly::letter(n, 0);
        let b = FreePoly::letter(n, 1);
        assert_eq!(t.expand(n), bch_series(&a, &b));
    }

    #[test]
    fn associativity_in_free_algebra() {
        // BCH(BCH(x,y),z) = BCH(x,BCH(y,z)) in the free algebra on three letters
        let n = 5;
        let t = BchTable::generate(n as u32).unwrap();
        let x = FreePoly::letter(n, 0);
        let y = FreePoly::letter(n, 1);
        let z = FreePoly::letter(n, 2);
        let left = t.apply(&[t.apply(&[x.clone(), y.clone()]), z.clone()]);
        let right = t.apply(&[x, t.apply(&[y, z])]);
        assert_eq!(left, right);
    }

    #[test]
    fn commutator_closed_form() {
        // log(e^{−a} e^{−b} e^{a} e^{b}) = [a,b] − ½[a,[a,b]] − ½[b,[a,b]] + O(4)
        let n = 3;
        let a = FreePoly::letter(n, 0);
        let b = FreePoly::letter(n, 1);
        let neg = |f: &FreePoly| f.scale(&r(-1, 1));
        let prod = neg(&a).exp().mul(&neg(&b).exp()).mul(&a.exp()).mul(&b.exp());
        let log = prod.sub(&FreePoly::one(n)).log1p();
        let ab = a.commutator(&b);
        let expect = ab.sub(&a.commutator(&ab).scale(&r(1, 2))).sub(&b.commutator(&ab).scale(&r(1, 2)));
        assert_eq!(log, expect);
        // the variant [a,b] + ½([a,[a,b]] + [b,[b,a]]) is a different element
        let variant = ab.add(&a.commutator(&ab).add(&b.commutator(&b.commutator(&a))).scale(&r(1, 2)));
        assert_ne!(log, variant);
    }

    #[test]
    fn embedded_table_matches_regeneration() {
        let emb = BchTable::embedded();
        assert_eq!(emb.max_degree, EMBEDDED_DEGREE);
        let fresh = BchTable::generate(EMBEDDED_DEGREE).unwrap();
        assert_eq!(emb, &fresh);
        assert_eq!(fresh.to_json_string(), EMBEDDED_JSON);
        assert_eq!(BchTable::from_json_str(&fresh.to_json_string()).unwrap(), fresh);
    }

    #[test]
    fn denominators_and_class_limits() {
        let emb = BchTable::embedded();
        assert!(matches!(emb.for_class(5, 5), Err(Error::BchDegreeTooLarge { .. })));
        let t = emb.for_class(4, 5).unwrap();
        assert!(t.terms.iter().all(|x| x.word.len() <= 4));
        for term in &emb.terms {
            let d = term.coeff.denom().to_u64().unwrap();
            let deg = term.word.len() as u64;
            // prime factors of degree-n denominators are at most n
            let mut rest = d;
            for q in 2..=deg.max(2) {
                while rest % q == 0 {
                    rest /= q;
                }
            }
            assert_eq!(rest, 1, "word {}", word_name(&term.word));
        }
    }

    #[test]
    fn rejects_bad_slice() {
        let t = BchTable::generate(3).unwrap().perturbed(2, &r(1, 1));
        assert!(t.validate_low_degree().is_err());
        assert!(BchTable::from_json_str(&t.to_json_string()).is_err());
    }

    #[test]
    fn rational_residues() {
        assert_eq!(rational_mod(&r(1, 2), 125), Some(63));
        assert_eq!(rational_mod(&r(-1, 12), 25), Some(2));
        assert_eq!(rational_mod(&r(1, 5), 25), None);
    }
}

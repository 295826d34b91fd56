//! The Lazard group `𝔾(L)` of `L = L_{i,m}(γ)`: same elements, product by
//! the truncated BCH series.

use std::sync::Arc;

use crate::bch::{lyndon_words, rational_mod, standard_factorization, BchTable};
use crate::cyclotomic::CycElt;
use crate::error::{Error, Result};
use crate::liering::{LcsProfile, LieElt, LieRingSpec};

#[derive(Debug, Clone, Copy)]
enum Step {
    Gen(u8),
    Pair(usize, usize),
}

/// `𝔾(L_{i,m}(γ))` together with an evaluation plan for the BCH series.
#[derive(Debug, Clone)]
pub struct LazardGroup {
    spec: Arc<LieRingSpec>,
    lcs: LcsProfile,
    plan: Vec<Step>,
    /// BCH coefficient of each plan word, modulo the top digit modulus.
    coeffs: Vec<u64>,
}

impl LazardGroup {
    /// Uses the shipped BCH table.
    pub fn new(spec: &Arc<LieRingSpec>) -> Result<Self> {
        Self::with_table(spec, BchTable::embedded())
    }

    pub fn with_table(spec: &Arc<LieRingSpec>, table: &BchTable) -> Result<Self> {
        let lcs = spec.lcs_profile()?;
        let class = lcs.class.max(1);
        let p = spec.p();
        let table = table.for_class(class, p)?;
        let words = lyndon_words(2, class as usize);
        let q = spec.ctx().pow_p(spec.ctx().digit_exp(spec.ctx().work_prec(), 0));
        let mut plan = Vec::with_capacity(words.len());
        let mut coeffs = Vec::with_capacity(words.len());
        for w in &words {
            let step = match standard_factorization(w) {
                None => Step::Gen(w[0]),
                Some((u, v)) => {
                    let iu = words.iter().position(|x| x == u).expect("factors are shorter Lyndon words");
                    let iv = words.iter().position(|x| x == v).expect("factors are shorter Lyndon words");
                    Step::Pair(iu, iv)
                }
            };
            plan.push(step);
            let c = rational_mod(&table.coefficient(w), q).ok_or(Error::BchDegreeTooLarge { degree: w.len() as u32, p })?;
            coeffs.push(c);
        }
        Ok(LazardGroup { spec: spec.clone(), lcs, plan, coeffs })
    }

    pub fn spec(&self) -> &Arc<LieRingSpec> {
        &self.spec
    }

    /// Nilpotency class of `L` (and of `𝔾(L)`).
    pub fn class(&self) -> u32 {
        self.lcs.class
    }

    /// `log_p |𝔾(L)| = m − i`.
    pub fn order_exp(&self) -> u32 {
        self.spec.order_exp()
    }

    pub fn identity(&self) -> LieElt {
        self.spec.zero()
    }

    pub fn elt(&self, x: &CycElt) -> Result<LieElt> {
        self.spec.elt(x)
    }

    fn check(&self, x: &LieElt) -> Result<()> {
        if x.spec().id() != self.spec.id() {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    /// `x ∘ y = x + y + ½[x,y] + 1/12([x,[x,y]] + [y,[y,x]]) + …`
    pub fn bch_multiply(&self, x: &LieElt, y: &LieElt) -> Result<LieElt> {
        self.check(x)?;
        self.check(y)?;
        if x.is_zero() {
            return Ok(y.clone());
        }
        if y.is_zero() {
            return Ok(x.clone());
        }
        let mut vals: Vec<LieElt> = Vec::with_capacity(self.plan.len());
        let mut acc = self.spec.zero();
        for (step, &c) in self.plan.iter().zip(&self.coeffs) {
            let v = match *step {
                Step::Gen(0) => x.clone(),
                Step::Gen(_) => y.clone(),
                Step::Pair(a, b) => vals[a].bracket(&vals[b])?,
            };
            if c != 0 && !v.is_zero() {
                acc = acc.add(&v.scale_residue(c))?;
            }
            vals.push(v);
        }
        Ok(acc)
    }

    pub fn inverse(&self, x: &LieElt) -> LieElt {
        x.neg()
    }

    /// `x^n = n·x`.
    pub fn group_power(&self, x: &LieElt, n: i64) -> LieElt {
        x.scale(n)
    }

    /// `x^{−1} y^{−1} x y`, composed from products.
    pub fn group_commutator(&self, x: &LieElt, y: &LieElt) -> Result<LieElt> {
        let a = self.bch_multiply(&x.neg(), &y.neg())?;
        let b = self.bch_multiply(&a, x)?;
        self.bch_multiply(&b, y)
    }

    /// `[x,y] − ½[x,[x,y]] − ½[y,[x,y]]`, valid for class at most 3.
    pub fn group_commutator_closed(&self, x: &LieElt, y: &LieElt) -> Result<LieElt> {
        if self.class() > 3 {
            return Err(Error::ClassExceedsTable { class: self.class(), max_class: 3 });
        }
        let xy = x.bracket(y)?;
        let t = x.bracket(&xy)?.add(&y.bracket(&xy)?)?;
        xy.sub(&t.scale_ratio(1, 2)?)
    }

    /// Multiplication by `θ`, an automorphism of `𝔾(L)` of order `p`.
    pub fn theta_map(&self, x: &LieElt) -> LieElt {
        x.theta_pow(1)
    }

    /// Lower central series of `𝔾(L)` from group commutators of the module
    /// generators `κ^{w+r}` and `κ^{i+s}`.
    pub fn group_lcs(&self) -> Result<LcsProfile> {
        let spec = &self.spec;
        let (i, m) = (spec.i(), spec.m());
        let ctx = spec.ctx();
        let d = ctx.d();
        let gens: Vec<LieElt> = spec.basis();
        let mut w = vec![i];
        while *w.last().unwrap() < m {
            let cur = *w.last().unwrap();
            let mut next = m;
            for r in 0..d {
                let a = spec.elt(&CycElt::kappa_pow(ctx, cur + r))?;
                for g in &gens {
                    if let Some(v) = self.group_commutator(&a, g)?.valuation().exact() {
                        next = next.min(v);
                    }
                }
            }
            if next <= cur {
                return Err(Error::NotNilpotent(cur));
            }
            w.push(next);
        }
        let class = w.iter().filter(|&&e| e < m).count() as u32;
        Ok(LcsProfile { exponents: w, class })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::PrimeContext;
    use crate::homs::GammaCoeffs;
    use crate::liering::jacobi_work_prec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn group(p: u64, i: u32, m: u32, c: &[i64]) -> LazardGroup {
        let ctx = PrimeContext::new(p, jacobi_work_prec(p, i)).unwrap();
        let g = GammaCoeffs::from_ints(&ctx, i, c).unwrap();
        LazardGroup::new(&LieRingSpec::new(&g, m).unwrap()).unwrap()
    }

    #[test]
    fn identity_inverse_power() {
        let g = group(5, 7, 18, &[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x = g.spec().random(&mut rng);
            assert_eq!(g.bch_multiply(&x, &g.identity()).unwrap(), x);
            assert_eq!(g.bch_multiply(&g.identity(), &x).unwrap(), x);
            assert!(g.bch_multiply(&x, &g.inverse(&x)).unwrap().is_zero());
            let x3 = g.bch_multiply(&g.bch_multiply(&x, &x).unwrap(), &x).unwrap();
            assert_eq!(x3, g.group_power(&x, 3));
            assert_eq!(g.group_power(&x, 1), x);
        }
        // additive exponent of 𝔭^7/𝔭^18 is p^{ceil(11/4)}
        let x = g.spec().basis()[0].clone();
        assert!(g.group_power(&x, 125).is_zero());
        assert!(!g.group_power(&x, 25).is_zero());
    }

    #[test]
    fn abelian_case_is_addition() {
        let g = group(7, 8, 17, &[1, 1]);
        assert_eq!(g.class(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let x = g.spec().random(&mut rng);
            let y = g.spec().random(&mut rng);
            assert_eq!(g.bch_multiply(&x, &y).unwrap(), x.add(&y).unwrap());
        }
    }

    #[test]
    fn associativity_sampled() {
        for (p, i, c) in [(5u64, 7u32, vec![1i64]), (7, 9, vec![0, 1]), (7, 6, vec![1, 2])] {
            let ctx = PrimeContext::new(p, jacobi_work_prec(p, i)).unwrap();
            let gam = GammaCoeffs::from_ints(&ctx, i, &c).unwrap();
            let spec = LieRingSpec::full(&gam).unwrap();
            let g = LazardGroup::new(&spec).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..200 {
                let x = spec.random(&mut rng);
                let y = spec.random(&mut rng);
                let z = spec.random(&mut rng);
                let l = g.bch_multiply(&g.bch_multiply(&x, &y).unwrap(), &z).unwrap();
                let r = g.bch_multiply(&x, &g.bch_multiply(&y, &z).unwrap()).unwrap();
                assert_eq!(l, r, "p={p} i={i} class={}", g.class());
            }
        }
    }

    #[test]
    fn commutator_paths_agree() {
        let g = group(5, 7, 22, &[1]);
        assert!(g.class() <= 3);
        let basis = g.spec().basis();
        for x in &basis {
            for y in &basis {
                assert_eq!(g.group_commutator(x, y).unwrap(), g.group_commutator_closed(x, y).unwrap());
            }
            assert!(g.group_commutator(x, x).unwrap().is_zero());
        }
    }

    #[test]
    fn theta_is_automorphism_of_order_p() {
        let g = group(7, 9, 30, &[1, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = g.spec().random(&mut rng);
            let y = g.spec().random(&mut rng);
            let lhs = g.theta_map(&g.bch_multiply(&x, &y).unwrap());
            let rhs = g.bch_multiply(&g.theta_map(&x), &g.theta_map(&y)).unwrap();
            assert_eq!(lhs, rhs);
            let mut z = x.clone();
            for _ in 0..7 {
                z = g.theta_map(&z);
            }
            assert_eq!(z, x);
        }
        assert!(g.theta_map(&g.identity()).is_zero());
    }

    #[test]
    fn lcs_matches_lie_ring() {
        for (p, i, c) in [(5u64, 7u32, vec![1i64]), (5, 8, vec![2]), (7, 9, vec![1, 1]), (7, 7, vec![0, 1])] {
            let ctx = PrimeContext::new(p, jacobi_work_prec(p, i)).unwrap();
            let gam = GammaCoeffs::from_ints(&ctx, i, &c).unwrap();
            let spec = LieRingSpec::full(&gam).unwrap();
            let g = LazardGroup::new(&spec).unwrap();
            assert_eq!(g.group_lcs().unwrap(), spec.lcs_profile().unwrap());
        }
    }

    /// Subgroup generated by `gens`, by closing under products.
    fn closure(g: &LazardGroup, gens: &[LieElt]) -> HashSet<LieElt> {
        let mut set: HashSet<LieElt> = HashSet::from([g.identity()]);
        let mut frontier = vec![g.identity()];
        while let Some(x) = frontier.pop() {
            for s in gens {
                let y = g.bch_multiply(&x, s).unwrap();
                if set.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        set
    }

    #[test]
    fn lcs_matches_brute_force_closure() {
        let g = group(5, 1, 4, &[1]);
        assert_eq!(g.class(), 2);
        let all: Vec<LieElt> = g.spec().elements().collect();
        let mut term: HashSet<LieElt> = all.iter().cloned().collect();
        let mut sizes = vec![term.len()];
        while term.len() > 1 {
            let comms: Vec<LieElt> = term
                .iter()
                .flat_map(|a| all.iter().map(move |b| (a, b)))
                .map(|(a, b)| g.group_commutator(a, b).unwrap())
                .collect::<HashSet<_>>()
                .into_iter()
                .collect();
            term = closure(&g, &comms);
            sizes.push(term.len());
        }
        let prof = g.group_lcs().unwrap();
        let expect: Vec<usize> = prof.exponents.iter().map(|&w| 5usize.pow(4 - w)).collect();
        assert_eq!(sizes, expect);
    }

    #[test]
    fn class_above_table_rejected() {
        let ctx = PrimeContext::new(5, jacobi_work_prec(5, 7)).unwrap();
        let gam = GammaCoeffs::from_ints(&ctx, 7, &[1]).unwrap();
        let spec = LieRingSpec::full(&gam).unwrap();
        let short = BchTable::embedded().truncated(1);
        let g = LazardGroup::with_table(&spec, &short);
        assert!(matches!(g, Err(Error::ClassExceedsTable { .. })));
    }
}

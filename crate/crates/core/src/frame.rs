//! The groups `S_{i,m}(γ) = 𝔾(L_{i,m}(γ)) ⋊ ⟨θ⟩`, maximal-class checks,
//! quotient edges and frame-tree enumeration.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::{CycElt, PrimeContext, Valuation};
use crate::error::{Error, Result};
use crate::homs::{in_hhat, GammaCoeffs, GammaCoeffsJson};
use crate::isom::{coeff_key, moves, reduce_coeffs, verify_witness, Certificate, IsoMove};
use crate::lazard::LazardGroup;
use crate::liering::{jacobi_exponent, LieElt, LieRingSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Mainline,
    Branch(u32),
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::Mainline => write!(f, "Mainline"),
            Classification::Branch(k) => write!(f, "Branch({k})"),
        }
    }
}

/// Mainline iff `m ≤ 2i + 1`, otherwise in the branch `B_{i+2}`.
pub fn classify(i: u32, m: u32) -> Classification {
    if m <= 2 * i + 1 {
        Classification::Mainline
    } else {
        Classification::Branch(i + 2)
    }
}

/// An element `(g, θ^t)` of `S_{i,m}(γ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElt {
    pub g: LieElt,
    pub t: u64,
}

/// Lower central series of `S`: `γ_k(S) = 𝔭^{e_k}/𝔭^m` for `k ≥ 2`.
impl PartialOrd for GroupElt {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElt {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.g.key(), self.t).cmp(&(other.g.key(), other.t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SLcs {
    /// `e_2, e_3, …` ending with `m`.
    pub exponents: Vec<u32>,
    pub class: u32,
    /// `e_2 = i + 1` and each step increases by exactly 1 until `m`.
    pub maximal_class: bool,
}

#[derive(Debug, Clone)]
pub struct FrameGroup {
    lazard: LazardGroup,
}

impl FrameGroup {
    pub fn new(spec: &Arc<LieRingSpec>) -> Result<Self> {
        Ok(FrameGroup { lazard: LazardGroup::new(spec)? })
    }

    pub fn from_lazard(lazard: LazardGroup) -> Self {
        FrameGroup { lazard }
    }

    pub fn lazard(&self) -> &LazardGroup {
        &self.lazard
    }

    pub fn spec(&self) -> &Arc<LieRingSpec> {
        self.lazard.spec()
    }

    pub fn p(&self) -> u64 {
        self.spec().p()
    }

    pub fn i(&self) -> u32 {
        self.spec().i()
    }

    pub fn m(&self) -> u32 {
        self.spec().m()
    }

    /// `log_p |S| = m − i + 1`.
    pub fn order_exp(&self) -> u32 {
        self.m() - self.i() + 1
    }

    pub fn classification(&self) -> Classification {
        classify(self.i(), self.m())
    }

    pub fn identity(&self) -> GroupElt {
        GroupElt { g: self.spec().zero(), t: 0 }
    }

    pub fn elt(&self, g: LieElt, t: i64) -> Result<GroupElt> {
        if g.spec().id() != self.spec().id() {
            return Err(Error::SpecMismatch);
        }
        Ok(GroupElt { g, t: t.rem_euclid(self.p() as i64) as u64 })
    }

    /// The generator `(0, θ)` of `P`.
    pub fn theta_gen(&self) -> GroupElt {
        GroupElt { g: self.spec().zero(), t: 1 }
    }

    /// `(g, t)(h, s) = (g ∘ θ^t h, t + s)`.
    pub fn s_multiply(&self, x: &GroupElt, y: &GroupElt) -> Result<GroupElt> {
        let h = y.g.theta_pow(x.t as i64);
        Ok(GroupElt { g: self.lazard.bch_multiply(&x.g, &h)?, t: (x.t + y.t) % self.p() })
    }

    /// `(θ^{−t}(−g), −t)`.
    pub fn s_inverse(&self, x: &GroupElt) -> GroupElt {
        let p = self.p();
        GroupElt { g: x.g.neg().theta_pow(-(x.t as i64)), t: (p - x.t) % p }
    }

    /// `x^{−1} y^{−1} x y`.
    pub fn s_commutator(&self, x: &GroupElt, y: &GroupElt) -> Result<GroupElt> {
        let a = self.s_multiply(&self.s_inverse(x), &self.s_inverse(y))?;
        self.s_multiply(&self.s_multiply(&a, x)?, y)
    }

    pub fn s_power(&self, x: &GroupElt, n: u64) -> Result<GroupElt> {
        let mut acc = self.identity();
        let mut base = x.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.s_multiply(&acc, &base)?;
            }
            base = self.s_multiply(&base, &base)?;
            n >>= 1;
        }
        Ok(acc)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElt {
        GroupElt { g: self.spec().random(rng), t: rng.gen_range(0..self.p()) }
    }

    /// Every element of `S`.
    pub fn elements(&self) -> impl Iterator<Item = GroupElt> + '_ {
        let p = self.p();
        self.spec().elements().flat_map(move |g| (0..p).map(move |t| GroupElt { g: g.clone(), t }))
    }

    /// Generators `(κ^{i+r}, 0)` and `(0, θ)`.
    pub fn generators(&self) -> Vec<GroupElt> {
        let mut gens: Vec<GroupElt> = self.spec().basis().into_iter().map(|g| GroupElt { g, t: 0 }).collect();
        gens.push(self.theta_gen());
        gens
    }

    /// Lower central series from commutators of generators, with the
    /// maximal-class chain check.
    pub fn s_group_lcs(&self) -> Result<SLcs> {
        let spec = self.spec();
        let (i, m) = (spec.i(), spec.m());
        let ctx = spec.ctx();
        let gens = self.generators();
        let min_val = |pairs: &mut dyn Iterator<Item = (GroupElt, GroupElt)>| -> Result<u32> {
            let mut best = m;
            for (a, b) in pairs {
                let c = self.s_commutator(&a, &b)?;
                debug_assert_eq!(c.t, 0);
                if let Valuation::Exact(v) = c.g.valuation() {
                    best = best.min(v);
                }
            }
            Ok(best)
        };
        let mut pairs = gens.iter().flat_map(|a| gens.iter().map(move |b| (a.clone(), b.clone())));
        let mut e = vec![min_val(&mut pairs)?];
        while *e.last().unwrap() < m {
            let cur = *e.last().unwrap();
            let level: Vec<GroupElt> = (0..ctx.d())
                .map(|r| Ok(GroupElt { g: spec.elt(&CycElt::kappa_pow(ctx, cur + r))?, t: 0 }))
                .collect::<Result<_>>()?;
            let mut pairs = level.iter().flat_map(|a| gens.iter().map(move |b| (a.clone(), b.clone())));
            let next = min_val(&mut pairs)?;
            if next <= cur {
                return Err(Error::NotNilpotent(cur));
            }
            e.push(next);
        }
        let class = 1 + e.iter().filter(|&&x| x < m).count() as u32;
        let maximal_class = m == i || e.iter().enumerate().all(|(k, &x)| x == i + 1 + k as u32);
        Ok(SLcs { exponents: e, class, maximal_class })
    }

    /// `S_{i,m−1}(γ)`.
    pub fn quotient(&self) -> Result<FrameGroup> {
        if self.m() == self.i() {
            return Err(Error::TruncationOutOfRange { i: self.i(), m: self.m(), bound: self.m() });
        }
        let spec = self.spec().truncate(self.m() - 1)?;
        Ok(FrameGroup { lazard: LazardGroup::new(&spec)? })
    }

    /// Image of `x` under `S_{i,m}(γ) → S_{i,m'}(γ)` for the quotient `target`.
    pub fn quotient_map(&self, x: &GroupElt, target: &FrameGroup) -> Result<GroupElt> {
        if target.m() > self.m() || target.i() != self.i() {
            return Err(Error::SpecMismatch);
        }
        Ok(GroupElt { g: target.spec().elt(&x.g.value())?, t: x.t })
    }
}

/// One vertex of an enumerated frame tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameNode {
    pub id: usize,
    pub i: u32,
    pub m: u32,
    pub order_exp: u32,
    pub class: u32,
    pub classification: Classification,
    pub lcs: Vec<u32>,
    pub maximal_class: bool,
    /// Representative coefficient vector (least grid index in the class).
    pub gamma: GammaCoeffsJson,
    /// Labels of all grid vectors merged into this vertex.
    pub members: Vec<String>,
    pub hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameEdge {
    /// Vertex at level `m − 1`.
    pub parent: usize,
    /// Vertex at level `m`.
    pub child: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MergeRecord {
    pub from: String,
    pub to: String,
    /// Merged at every level up to this `m`.
    pub up_to_m: u32,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCount {
    pub m: u32,
    pub class: u32,
    /// Upper bound on distinct isomorphism types at this level and class.
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameTree {
    pub p: u64,
    pub i: u32,
    pub m_max: u32,
    pub coeff_mod: u32,
    pub grid_size: usize,
    pub hhat_count: usize,
    pub nodes: Vec<FrameNode>,
    pub edges: Vec<FrameEdge>,
    pub merged_by: Vec<MergeRecord>,
    pub counts: Vec<LevelCount>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    /// Keeps the smaller index as root.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
        true
    }
}

/// All integral coefficient vectors modulo `𝔭^mc`, in a fixed order.
pub fn coefficient_grid(ctx: &Arc<PrimeContext>, i: u32, mc: u32, budget: u128) -> Result<Vec<GammaCoeffs>> {
    let l = ctx.l();
    let moduli: Vec<u64> = (0..ctx.d() as usize).map(|j| ctx.pow_p(ctx.digit_exp(mc, j))).collect();
    let per_coeff: u128 = moduli.iter().map(|&q| q as u128).product();
    let needed = (0..l).try_fold(1u128, |acc, _| acc.checked_mul(per_coeff)).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let residues: Vec<CycElt> = {
        let mut out = Vec::with_capacity(per_coeff as usize);
        let mut digits = vec![0u64; moduli.len()];
        loop {
            let d: Vec<i128> = digits.iter().map(|&x| x as i128).collect();
            out.push(CycElt::from_digits(ctx, &d, ctx.work_prec())?);
            let mut j = 0;
            loop {
                if j == digits.len() {
                    break;
                }
                digits[j] += 1;
                if digits[j] < moduli[j] {
                    break;
                }
                digits[j] = 0;
                j += 1;
            }
            if j == digits.len() {
                break;
            }
        }
        out
    };
    let mut grid = Vec::with_capacity(needed as usize);
    let mut idx = vec![0usize; l];
    loop {
        let coeffs: Vec<CycElt> = idx.iter().map(|&k| residues[k].clone()).collect();
        grid.push(GammaCoeffs::from_integral(ctx, i, &coeffs)?);
        let mut a = l;
        for (pos, k) in idx.iter_mut().enumerate().rev() {
            *k += 1;
            if *k < residues.len() {
                a = pos;
                break;
            }
            *k = 0;
        }
        if a == l {
            break;
        }
    }
    Ok(grid)
}

/// Largest `m` in `lo..=hi` with a verified witness (verification is monotone in `m`).
fn max_verified_level(c: &GammaCoeffs, c2: &GammaCoeffs, mv: &IsoMove, lo: u32, hi: u32) -> Result<Option<u32>> {
    if !verify_witness(c, c2, mv, lo)? {
        return Ok(None);
    }
    let (mut good, mut bad) = (lo, hi + 1);
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if verify_witness(c, c2, mv, mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(Some(good))
}

fn fnv_hash(key: &[u64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &x in key {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{:08x}", h >> 32)
}

/// Frame tree for `i` over the grid of coefficient vectors modulo `𝔭^mc`,
/// levels `m = i ..= min(λ, m_max)`. Vertices are merged only along
/// verified witnesses, so per-level counts are upper bounds on types.
pub fn enumerate_frame(ctx: &Arc<PrimeContext>, i: u32, m_max: u32, mc: u32, budget: u128) -> Result<FrameTree> {
    let grid = coefficient_grid(ctx, i, mc, budget)?;
    let grid_size = grid.len();
    let mut members: Vec<GammaCoeffs> = Vec::new();
    for g in grid {
        if in_hhat(&g, i)? {
            members.push(g);
        }
    }
    let n = members.len();
    let mut tops = Vec::with_capacity(n);
    let mut lambdas = Vec::with_capacity(n);
    for g in &members {
        let lam = jacobi_exponent(g, i)?;
        if !lam.is_exact() && m_max >= lam.bound() {
            return Err(Error::PrecisionExhausted { needed: m_max + 1, available: lam.bound() });
        }
        tops.push(lam.bound().min(m_max).max(i));
        lambdas.push(lam);
    }
    let keys: Vec<Vec<u64>> = members.iter().map(|g| coeff_key(g, mc)).collect::<Result<_>>()?;
    let index: HashMap<Vec<u64>, usize> = keys.iter().cloned().enumerate().map(|(k, v)| (v, k)).collect();
    let top_all = tops.iter().copied().max().unwrap_or(i);
    let levels = (top_all - i + 1) as usize;
    let mut uf: Vec<UnionFind> = (0..levels).map(|_| UnionFind::new(n)).collect();
    let mut merged_by = Vec::new();
    let mut record = |uf: &mut Vec<UnionFind>, a: usize, b: usize, mv: &IsoMove, up: u32| {
        let mut changed = false;
        for m in i..=up {
            changed |= uf[(m - i) as usize].union(a, b);
        }
        if changed {
            merged_by.push(MergeRecord {
                from: members[a].label(),
                to: members[b].label(),
                up_to_m: up,
                certificate: Certificate { mv: mv.to_json(), verified: true, m: up },
            });
        }
    };
    // Units come back at precision `mc`; witnesses need exact lifts.
    let all_moves: Vec<IsoMove> = moves(ctx, mc, budget)?
        .into_iter()
        .map(|mv| {
            let d: Vec<i128> = mv.u().digits().iter().map(|&x| x as i128).collect();
            IsoMove::new(CycElt::from_digits(ctx, &d, ctx.work_prec())?, mv.k())
        })
        .collect::<Result<_>>()?;
    for a in 0..n {
        for mv in &all_moves {
            let img = reduce_coeffs(&crate::isom::apply_move(&members[a], mv, ctx.work_prec())?, mc)?;
            let Some(&b) = index.get(&coeff_key(&img, mc)?) else { continue };
            if a == b {
                continue;
            }
            let hi = tops[a].min(tops[b]);
            if uf[(hi - i) as usize].find(a) == uf[(hi - i) as usize].find(b) {
                continue;
            }
            if let Some(up) = max_verified_level(&members[a], &members[b], mv, i, hi)? {
                record(&mut uf, a, b, mv, up);
            }
        }
    }
    let identity = IsoMove::identity(ctx);
    for a in 0..n {
        for b in a + 1..n {
            let hi = tops[a].min(tops[b]);
            if uf[(hi - i) as usize].find(a) == uf[(hi - i) as usize].find(b) {
                continue;
            }
            if let Some(up) = max_verified_level(&members[a], &members[b], &identity, i, hi)? {
                record(&mut uf, a, b, &identity, up);
            }
        }
    }
    let mut nodes: Vec<FrameNode> = Vec::new();
    let mut node_of: HashMap<(u32, usize), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for m in i..=top_all {
        let level = (m - i) as usize;
        let mut roots: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for a in 0..n {
            if tops[a] >= m {
                roots.entry(uf[level].find(a)).or_default().push(a);
            }
        }
        for (root, group) in roots {
            let spec = LieRingSpec::with_lambda(&members[root], m, lambdas[root])?;
            let s = FrameGroup::new(&spec)?;
            let lcs = s.s_group_lcs()?;
            let id = nodes.len();
            nodes.push(FrameNode {
                id,
                i,
                m,
                order_exp: s.order_exp(),
                class: lcs.class,
                classification: s.classification(),
                lcs: lcs.exponents.clone(),
                maximal_class: lcs.maximal_class,
                gamma: members[root].to_json(),
                members: group.iter().map(|&a| members[a].label()).collect(),
                hash: fnv_hash(&keys[root]),
            });
            *counts.entry((m, lcs.class)).or_default() += 1;
            node_of.insert((m, root), id);
            if m > i {
                let parent_root = uf[level - 1].find(root);
                edges.push(FrameEdge { parent: node_of[&(m - 1, parent_root)], child: id });
            }
        }
    }
    Ok(FrameTree {
        p: ctx.p(),
        i,
        m_max,
        coeff_mod: mc,
        grid_size,
        hhat_count: n,
        nodes,
        edges,
        merged_by,
        counts: counts.into_iter().map(|((m, class), count)| LevelCount { m, class, count }).collect(),
    })
}

impl FrameTree {
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph frame_p{}_i{} {{", self.p, self.i);
        let _ = writeln!(s, "  node [shape=box];");
        for node in &self.nodes {
            let _ = writeln!(
                s,
                "  n{} [label=\"p^{}, class {}\\n{} {}\"];",
                node.id, node.order_exp, node.class, node.classification, node.hash
            );
        }
        for e in &self.edges {
            let _ = writeln!(s, "  n{} -> n{};", e.parent, e.child);
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liering::jacobi_work_prec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn frame(p: u64, i: u32, m: u32, c: &[i64]) -> FrameGroup {
        let ctx = PrimeContext::new(p, jacobi_work_prec(p, i)).unwrap();
        let g = GammaCoeffs::from_ints(&ctx, i, c).unwrap();
        FrameGroup::new(&LieRingSpec::new(&g, m).unwrap()).unwrap()
    }

    #[test]
    fn classification_threshold() {
        assert_eq!(classify(7, 15), Classification::Mainline);
        assert_eq!(classify(7, 16), Classification::Branch(9));
        assert_eq!(classify(7, 7), Classification::Mainline);
    }

    #[test]
    fn group_laws_sampled() {
        let s = frame(5, 7, 22, &[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x = s.random(&mut rng);
            let y = s.random(&mut rng);
            let z = s.random(&mut rng);
            let l = s.s_multiply(&s.s_multiply(&x, &y).unwrap(), &z).unwrap();
            let r = s.s_multiply(&x, &s.s_multiply(&y, &z).unwrap()).unwrap();
            assert_eq!(l, r);
            assert_eq!(s.s_multiply(&x, &s.s_inverse(&x)).unwrap(), s.identity());
        }
        assert_eq!(s.s_power(&s.theta_gen(), 5).unwrap(), s.identity());
    }

    #[test]
    fn commutator_with_theta_raises_valuation() {
        let s = frame(7, 8, 20, &[1, 1]);
        for g in s.spec().basis() {
            let v = g.valuation().exact().unwrap();
            let c = s.s_commutator(&GroupElt { g, t: 0 }, &s.theta_gen()).unwrap();
            assert_eq!(c.t, 0);
            assert_eq!(c.g.valuation(), Valuation::Exact(v + 1));
        }
    }

    #[test]
    fn lcs_is_maximal_class() {
        for (p, i, m, c) in [(5u64, 7u32, 24u32, vec![1i64]), (5, 7, 12, vec![2]), (7, 9, 32, vec![1, 0]), (7, 8, 8, vec![0, 1])] {
            let s = frame(p, i, m, &c);
            let lcs = s.s_group_lcs().unwrap();
            assert!(lcs.maximal_class, "{lcs:?}");
            if m > i {
                assert_eq!(lcs.class, m - i);
            }
        }
    }

    /// Subgroup closure of `gens` by products.
    fn closure(s: &FrameGroup, gens: &[GroupElt]) -> HashSet<GroupElt> {
        let mut set = HashSet::from([s.identity()]);
        let mut frontier = vec![s.identity()];
        while let Some(x) = frontier.pop() {
            for g in gens {
                let y = s.s_multiply(&x, g).unwrap();
                if set.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        set
    }

    #[test]
    fn lcs_matches_brute_force() {
        let s = frame(5, 1, 4, &[1]);
        let all: Vec<GroupElt> = s.elements().collect();
        assert_eq!(all.len(), 625);
        let mut term: Vec<GroupElt> = all.clone();
        let mut sizes = Vec::new();
        loop {
            let comms: HashSet<GroupElt> =
                term.iter().flat_map(|a| all.iter().map(move |b| (a, b))).map(|(a, b)| s.s_commutator(a, b).unwrap()).collect();
            let comms: Vec<GroupElt> = comms.into_iter().collect();
            let next = closure(&s, &comms);
            sizes.push(next.len());
            if next.len() == 1 {
                break;
            }
            term = next.into_iter().collect();
        }
        let lcs = s.s_group_lcs().unwrap();
        let expect: Vec<usize> = lcs.exponents.iter().map(|&e| 5usize.pow(4 - e)).collect();
        assert_eq!(sizes, expect);
        assert!(lcs.maximal_class);
    }

    #[test]
    fn quotient_is_homomorphism_with_central_kernel() {
        let s = frame(7, 9, 30, &[1, 0]);
        let q = s.quotient().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x = s.random(&mut rng);
            let y = s.random(&mut rng);
            let lhs = s.quotient_map(&s.s_multiply(&x, &y).unwrap(), &q).unwrap();
            let rhs = q.s_multiply(&s.quotient_map(&x, &q).unwrap(), &s.quotient_map(&y, &q).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
        let ctx = s.spec().ctx().clone();
        let z = GroupElt { g: s.spec().elt(&CycElt::kappa_pow(&ctx, 29)).unwrap(), t: 0 };
        assert!(s.quotient_map(&z, &q).unwrap().g.is_zero());
        for _ in 0..50 {
            let x = s.random(&mut rng);
            assert_eq!(s.s_commutator(&z, &x).unwrap(), s.identity());
        }
    }

    #[test]
    fn grid_sizes() {
        let ctx = PrimeContext::new(7, 40).unwrap();
        assert_eq!(coefficient_grid(&ctx, 8, 1, 1000).unwrap().len(), 49);
        assert!(matches!(coefficient_grid(&ctx, 8, 2, 1000), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn small_frame_tree() {
        let ctx = PrimeContext::new(5, jacobi_work_prec(5, 7)).unwrap();
        let tree = enumerate_frame(&ctx, 7, 30, 1, 1 << 20).unwrap();
        assert_eq!(tree.hhat_count, 4);
        // Integer units identify all four vectors: one chain m = 7..=24.
        assert_eq!(tree.nodes.len(), 18);
        assert_eq!(tree.nodes.last().unwrap().m, 24);
        assert!(tree.nodes.iter().all(|n| n.maximal_class));
        for node in &tree.nodes {
            assert_eq!(node.classification, classify(7, node.m));
            if node.m > 7 {
                assert_eq!(tree.edges.iter().filter(|e| e.child == node.id).count(), 1);
            }
        }
        let dot = tree.to_dot();
        assert!(dot.starts_with("digraph"));
        let json: serde_json::Value = serde_json::from_str(&tree.to_json_string()).unwrap();
        assert!(json["nodes"].is_array());
    }
}


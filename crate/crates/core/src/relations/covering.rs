//! Doubling and non-shrinking constants, the disjoint covering selection and
//! the maximal-inequality check.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_len, relation_average, FiniteRelation, FolnerFamily, TieBreak};
use crate::error::{Error, Result};
use crate::rational::Rational;

fn intersects(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// The least `C_d`: the maximum over `(b, n)` of
/// `|⋃{F_m(b′) : m ≤ n, F_m(b′) ∩ F_n(b) ≠ ∅}| / |F_n(b)|`.
pub fn doubling_constant(relation: &FiniteRelation, family: &FolnerFamily) -> Rational {
    let mut best = Rational::zero();
    let mut mark = vec![false; relation.len()];
    for n in 1..=family.n_max() {
        for b in 0..relation.len() {
            let base = family.set(n, b);
            let mut union: Vec<usize> = Vec::new();
            // intersecting sets stay inside the class of b
            for &c in relation.class_members(b) {
                for m in 1..=n {
                    let other = family.set(m, c);
                    if intersects(base, other) {
                        for &x in other {
                            if !std::mem::replace(&mut mark[x], true) {
                                union.push(x);
                            }
                        }
                    }
                }
            }
            let ratio = Rational::new(union.len().into(), base.len().into());
            if ratio > best {
                best = ratio;
            }
            for x in union {
                mark[x] = false;
            }
        }
    }
    best
}

fn check_selection(relation: &FiniteRelation, family: &FolnerFamily, y: &[usize], rho: &[usize]) -> Result<()> {
    if y.len() != rho.len() {
        return Err(Error::InvalidParameter(format!("{} radii for {} points", rho.len(), y.len())));
    }
    let mut seen = vec![false; relation.len()];
    for (&b, &r) in y.iter().zip(rho) {
        if b >= relation.len() || std::mem::replace(&mut seen[b], true) {
            return Err(Error::InvalidParameter(format!("Y has a bad or repeated point {b}")));
        }
        if r == 0 || r > family.n_max() {
            return Err(Error::InvalidParameter(format!("rho({b}) = {r} outside 1..={}", family.n_max())));
        }
    }
    Ok(())
}

/// Greedy disjoint selection. Each round keeps every `y` of the current pool
/// that beats all pool members whose sets meet its own (larger `ρ`, then
/// larger `T`); the next pool is what stays disjoint from everything kept so
/// far. Returns `Z` sorted.
///
/// `Y` is given as distinct points with `rho[i] = ρ(y[i])`.
pub fn covering_select(
    relation: &FiniteRelation,
    family: &FolnerFamily,
    y: &[usize],
    rho: &[usize],
    tie: &TieBreak,
) -> Result<Vec<usize>> {
    check_selection(relation, family, y, rho)?;
    let key = |i: usize| (rho[i], tie.label(y[i]));
    let set = |i: usize| family.set(rho[i], y[i]);
    let mut pool: Vec<usize> = (0..y.len()).collect();
    let mut chosen: Vec<usize> = Vec::new();
    while !pool.is_empty() {
        let round: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|&i| pool.iter().all(|&j| j == i || !intersects(set(i), set(j)) || key(i) > key(j)))
            .collect();
        debug_assert!(!round.is_empty(), "the largest key is always maximal");
        chosen.extend(&round);
        pool.retain(|&i| round.iter().all(|&z| !intersects(set(i), set(z))));
    }
    let mut z: Vec<usize> = chosen.into_iter().map(|i| y[i]).collect();
    z.sort_unstable();
    Ok(z)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringCheck {
    pub z: Vec<usize>,
    pub disjoint_ok: bool,
    pub measure_ok: bool,
    pub doubling: Rational,
    /// `ν(Z̃)` and `ν(Ỹ)`.
    pub nu_z: Rational,
    pub nu_y: Rational,
}

impl CoveringCheck {
    /// `ν(Z̃) / ν(Ỹ)`, or 1 when `Y` is empty.
    pub fn ratio(&self) -> Rational {
        if self.nu_y.is_zero() {
            Rational::one()
        } else {
            &self.nu_z / &self.nu_y
        }
    }
}

/// Runs [`covering_select`] and verifies disjointness of the selected sets
/// and `C_d·ν(Z̃) ≥ ν(Ỹ)` with the exact doubling constant.
pub fn check_covering(
    relation: &FiniteRelation,
    family: &FolnerFamily,
    y: &[usize],
    rho: &[usize],
    tie: &TieBreak,
) -> Result<CoveringCheck> {
    let z = covering_select(relation, family, y, rho, tie)?;
    let rho_of = |b: usize| rho[y.iter().position(|&c| c == b).unwrap()];
    let mut hits = vec![0usize; relation.len()];
    for &b in &z {
        for &c in family.set(rho_of(b), b) {
            hits[c] += 1;
        }
    }
    let disjoint_ok = hits.iter().all(|&h| h <= 1);
    let nu_z = relation.measure_of_mask(&hits.iter().map(|&h| h > 0).collect::<Vec<_>>());
    let mut all = vec![false; relation.len()];
    for (&b, &r) in y.iter().zip(rho) {
        for &c in family.set(r, b) {
            all[c] = true;
        }
    }
    let nu_y = relation.measure_of_mask(&all);
    let doubling = doubling_constant(relation, family);
    let measure_ok = &doubling * &nu_z >= nu_y;
    Ok(CoveringCheck { z, disjoint_ok, measure_ok, doubling, nu_z, nu_y })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NonShrinking {
    /// Every set contains its center, so `C_s = 1`.
    Certified,
    /// Minimum of `ν(⋃F_ρ(y)(y)) / ν(Y)` over random `(Y, ρ)`; not a proof.
    Sampled { estimate: Rational, trials: usize },
}

impl NonShrinking {
    pub fn constant(&self) -> Rational {
        match self {
            NonShrinking::Certified => Rational::one(),
            NonShrinking::Sampled { estimate, .. } => estimate.clone(),
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, NonShrinking::Certified)
    }
}

pub fn non_shrinking(relation: &FiniteRelation, family: &FolnerFamily, trials: usize, seed: u64) -> NonShrinking {
    if family.contains_centers() {
        return NonShrinking::Certified;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut estimate: Option<Rational> = None;
    for _ in 0..trials {
        let y: Vec<usize> = (0..relation.len()).filter(|_| rng.gen_bool(0.3)).collect();
        if y.is_empty() {
            continue;
        }
        let mut covered = vec![false; relation.len()];
        for &b in &y {
            let r = rng.gen_range(1..=family.n_max());
            for &c in family.set(r, b) {
                covered[c] = true;
            }
        }
        let ratio = relation.measure_of_mask(&covered) / relation.measure(&y);
        if estimate.as_ref().is_none_or(|e| ratio < *e) {
            estimate = Some(ratio);
        }
    }
    NonShrinking::Sampled { estimate: estimate.unwrap_or_else(Rational::one), trials }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaximalCheck {
    /// `ν{b : max_{i ≤ n} A_i[|f|](b) > t}`.
    pub nu_d: Rational,
    /// `(C_d / C_s)·‖f‖_1 / t`.
    pub bound: Rational,
    pub pass: bool,
}

/// Weak-type check of the truncated maximal function with the exact `C_d`
/// and the given `C_s`.
pub fn maximal_check(
    relation: &FiniteRelation,
    family: &FolnerFamily,
    f: &[Rational],
    t: &Rational,
    n: usize,
    c_s: &Rational,
) -> Result<MaximalCheck> {
    check_len(relation, f.len())?;
    if !t.is_positive() || !c_s.is_positive() {
        return Err(Error::InvalidParameter("t and C_s must be positive".into()));
    }
    let abs: Vec<Rational> = f.iter().map(|v| v.abs()).collect();
    let mut max = vec![Rational::zero(); relation.len()];
    for i in 1..=n {
        for (m, a) in max.iter_mut().zip(relation_average(relation, family, &abs, i)?) {
            if a > *m {
                *m = a;
            }
        }
    }
    let level: Vec<bool> = max.iter().map(|m| m > t).collect();
    let nu_d = relation.measure_of_mask(&level);
    let bound = doubling_constant(relation, family) / c_s * relation.l1_norm(f) / t;
    let pass = nu_d <= bound;
    Ok(MaximalCheck { nu_d, bound, pass })
}

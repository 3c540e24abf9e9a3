//! Boundary-derived and random instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use super::{FiniteRelation, FolnerFamily, InnerAutomorphism, TieBreak};
use crate::boundary::{folner_set, BoundaryPrefix, FiniteOrderMap, FolnerKind};
use crate::error::{Error, Result};
use crate::free_group::{FreeGroup, ReducedWord};
use crate::rational::Rational;

/// Depth-`L` words under "agree beyond coordinate `n0`", with the ball and
/// sphere families `F_n(b) = folner_set(b, n, kind, L)` for `n = 1..=n0`.
#[derive(Clone, Debug)]
pub struct BoundaryInstance {
    pub group: FreeGroup,
    pub depth: usize,
    pub relation: FiniteRelation,
    pub ball: FolnerFamily,
    pub sphere: FolnerFamily,
}

impl BoundaryInstance {
    /// Point `b` is the word of index `b` in `S_L(e)`.
    pub fn word(&self, b: usize) -> ReducedWord {
        self.group.word_at(self.depth, b)
    }

    pub fn point(&self, w: &ReducedWord) -> usize {
        self.group.sphere_index(w)
    }

    /// The bijection induced on depth-`L` words by a finite-order map.
    /// Class preservation needs `order <= n0 + 1`.
    pub fn automorphism(&self, map: &FiniteOrderMap) -> Result<InnerAutomorphism> {
        let table = (0..self.relation.len())
            .map(|b| {
                let p = BoundaryPrefix::new(self.word(b))?;
                Ok(self.point(map.apply(&p)?.word()))
            })
            .collect::<Result<Vec<_>>>()?;
        InnerAutomorphism::new(&self.relation, table)
    }
}

pub fn boundary_instance(rank: usize, depth: usize, n0: usize) -> Result<BoundaryInstance> {
    let group = FreeGroup::new(rank)?;
    if n0 == 0 || depth < n0 + 1 {
        return Err(Error::InvalidParameter(format!("need 1 <= n0 < L, got n0 = {n0}, L = {depth}")));
    }
    let words: Vec<ReducedWord> = group.sphere(depth).collect();
    let mut tails: BTreeMap<ReducedWord, usize> = BTreeMap::new();
    let ids: Vec<usize> = words
        .iter()
        .map(|w| {
            let next = tails.len();
            *tails.entry(w.suffix_from(n0)).or_insert(next)
        })
        .collect();
    let relation = FiniteRelation::new(&ids, None)?;
    let family = |kind: FolnerKind| -> Result<FolnerFamily> {
        let sets = (1..=n0)
            .map(|n| {
                words
                    .iter()
                    .map(|w| {
                        let p = BoundaryPrefix::new(w.clone())?;
                        Ok(folner_set(&p, n, kind, depth)?.iter().map(|q| group.sphere_index(q.word())).collect())
                    })
                    .collect::<Result<Vec<Vec<usize>>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        FolnerFamily::new(&relation, sets)
    };
    let ball = family(FolnerKind::Ball)?;
    let sphere = family(FolnerKind::Sphere)?;
    Ok(BoundaryInstance { group, depth, relation, ball, sphere })
}

/// Parameters of the random generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomInstanceConfig {
    pub max_points: usize,
    pub max_classes: usize,
    pub n_max: usize,
    /// Put every `b` in each `F_n(b)`.
    pub centered: bool,
}

impl Default for RandomInstanceConfig {
    fn default() -> Self {
        RandomInstanceConfig { max_points: 200, max_classes: 12, n_max: 4, centered: false }
    }
}

/// A random relation with class-constant weights, a family of growing
/// random subsets, and a random `(Y, ρ, T)` for covering.
#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub relation: FiniteRelation,
    pub family: FolnerFamily,
    pub y: Vec<usize>,
    pub rho: Vec<usize>,
    pub tie: TieBreak,
}

pub fn random_instance(config: &RandomInstanceConfig, seed: u64) -> Result<RandomInstance> {
    if config.max_points < 2 || config.max_classes == 0 || config.n_max == 0 {
        return Err(Error::InvalidParameter("random instance parameters must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(2..=config.max_points);
    let k = rng.gen_range(1..=config.max_classes.min(m));
    // every class gets at least one point
    let mut ids: Vec<usize> = (0..m).map(|b| if b < k { b } else { rng.gen_range(0..k) }).collect();
    ids.shuffle(&mut rng);
    let class_weight: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=6)).collect();
    let total: u64 = ids.iter().map(|&c| class_weight[c]).sum();
    let weights = ids.iter().map(|&c| Rational::new(class_weight[c].into(), total.into())).collect();
    let relation = FiniteRelation::new(&ids, Some(weights))?;

    let mut sets: Vec<Vec<Vec<usize>>> = Vec::with_capacity(config.n_max);
    let mut prev: Vec<Vec<usize>> = vec![Vec::new(); m];
    for _ in 0..config.n_max {
        let level: Vec<Vec<usize>> = (0..m)
            .map(|b| {
                let class = relation.class_members(b);
                let mut s = prev[b].clone();
                let extra = rng.gen_range(1..=class.len().min(3));
                s.extend(class.choose_multiple(&mut rng, extra));
                if config.centered {
                    s.push(b);
                }
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        prev = level.clone();
        sets.push(level);
    }
    let family = FolnerFamily::new(&relation, sets)?;

    let y: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
    let rho = y.iter().map(|_| rng.gen_range(1..=config.n_max)).collect();
    let mut labels: Vec<i64> = (0..m as i64).collect();
    labels.shuffle(&mut rng);
    let tie = TieBreak::new(labels)?;
    Ok(RandomInstance { relation, family, y, rho, tie })
}

#[cfg(test)]
mod tests {
    use super::super::{check_covering, doubling_constant, folner_defect, non_shrinking};
    use super::*;
    use crate::boundary::build_inner_automorphism;
    use crate::rational::{int, ratio};
    use num_traits::Zero;

    #[test]
    fn class_sizes() {
        let inst = boundary_instance(2, 4, 2).unwrap();
        assert_eq!(inst.relation.len(), 108);
        assert!(inst.relation.classes().iter().all(|c| c.len() == 9));
        assert_eq!(inst.ball.set(2, 0).len(), 9);
        assert!(inst.ball.contains_centers());
        assert!(!inst.sphere.contains_centers());
        assert!(boundary_instance(2, 2, 2).is_err());
    }

    #[test]
    fn boundary_constants() {
        let inst = boundary_instance(2, 4, 2).unwrap();
        assert_eq!(doubling_constant(&inst.relation, &inst.ball), int(1));
        assert!(doubling_constant(&inst.relation, &inst.sphere) <= ratio(3, 2));
        let cs = non_shrinking(&inst.relation, &inst.sphere, 50, 3).constant();
        assert!(cs >= ratio(2, 3));
    }

    #[test]
    fn finite_order_maps_have_zero_defect() {
        let inst = boundary_instance(2, 4, 2).unwrap();
        let g = inst.group;
        let p = BoundaryPrefix::new(g.parse_word("a1a2a1a2").unwrap()).unwrap();
        let q = BoundaryPrefix::new(g.parse_word("a2a2a1a2").unwrap()).unwrap();
        let phi = inst.automorphism(&build_inner_automorphism(&p, &q, 2).unwrap()).unwrap();
        assert_eq!(phi.apply(inst.point(p.word())), inst.point(q.word()));
        assert!(folner_defect(&inst.ball, &phi, 2).iter().all(Zero::is_zero));
        // an order-3 swap that moves letter 2 is seen by F_1 but not by F_2
        let q3 = BoundaryPrefix::new(g.parse_word("a1a1a1a2").unwrap()).unwrap();
        let phi3 = inst.automorphism(&build_inner_automorphism(&p, &q3, 3).unwrap()).unwrap();
        assert!(folner_defect(&inst.ball, &phi3, 1).iter().any(|d| !d.is_zero()));
        assert!(folner_defect(&inst.ball, &phi3, 2).iter().all(Zero::is_zero));
    }

    #[test]
    fn random_instances_cover() {
        for seed in 0..20 {
            let inst = random_instance(&RandomInstanceConfig::default(), seed).unwrap();
            let c = check_covering(&inst.relation, &inst.family, &inst.y, &inst.rho, &inst.tie).unwrap();
            assert!(c.disjoint_ok && c.measure_ok, "seed {seed}");
        }
    }
}

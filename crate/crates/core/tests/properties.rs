use horocycle::actions::{FiniteAction, Observable};
use horocycle::averaging::{sphere_bruteforce, spherical_dp, DEFAULT_SPHERE_CAP};
use horocycle::boundary::{boundary_action, boundary_metric, omega, omega_inverse, BoundaryPrefix};
use horocycle::densities::{eta_from_density, eta_mu_residual, BoundaryDensity};
use horocycle::relations::{covering_select, invariant_cond_exp, random_instance, RandomInstanceConfig};
use horocycle::{FreeGroup, Letter, ReducedWord};
use num_traits::Zero;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn word(rng: &mut ChaCha8Rng, g: FreeGroup, len: usize) -> ReducedWord {
    let mut letters: Vec<Letter> = Vec::new();
    while letters.len() < len {
        let l = Letter::from_code(rng.gen_range(0..g.num_letters()));
        if letters.last() != Some(&l.inverse()) {
            letters.push(l);
        }
    }
    g.reduced(letters).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_cancels(seed: u64, r in 2usize..=4, len in 0usize..12) {
        let g = FreeGroup::new(r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = word(&mut rng, g, len);
        prop_assert!(w.times(&w.invert()).unwrap().is_identity());
        prop_assert_eq!(g.word_at(len, g.sphere_index(&w)), w);
    }

    #[test]
    fn word_metric_is_a_metric(seed: u64, a in 0usize..8, b in 0usize..8, c in 0usize..8) {
        let g = FreeGroup::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, v, w) = (word(&mut rng, g, a), word(&mut rng, g, b), word(&mut rng, g, c));
        let d = |x: &ReducedWord, y: &ReducedWord| x.distance(y).unwrap();
        prop_assert_eq!(d(&u, &v), d(&v, &u));
        prop_assert!(d(&u, &w) <= d(&u, &v) + d(&v, &w));
    }

    #[test]
    fn boundary_action_round_trip(seed: u64, glen in 0usize..6, depth in 7usize..12) {
        let g = FreeGroup::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = word(&mut rng, g, glen);
        let p = BoundaryPrefix::new(word(&mut rng, g, depth)).unwrap();
        let (q, _) = boundary_action(&h, &p).unwrap();
        let (back, _) = boundary_action(&h.invert(), &q).unwrap();
        let m = back.depth().min(p.depth());
        prop_assert_eq!(back.word().prefix(m), p.word().prefix(m));
    }

    #[test]
    fn omega_round_trip(seed: u64, n in 6usize..10) {
        let g = FreeGroup::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = BoundaryPrefix::new(word(&mut rng, g, n + 3)).unwrap();
        let w = omega(&p, n).unwrap();
        prop_assert_eq!(omega_inverse(&w, n).unwrap(), p.clone());
        prop_assert_eq!(boundary_metric(&p, &w).unwrap(), boundary_metric(&w, &p).unwrap());
    }

    #[test]
    fn density_identities(seed: u64, r in 2usize..=3, depth in 1usize..=3, n in 1usize..=4) {
        let g = FreeGroup::new(r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = BoundaryDensity::random(g, depth, &mut rng).unwrap();
        prop_assert!(psi.is_probability());
        prop_assert_eq!(psi.refine(depth + 2).unwrap().integral(), psi.integral());
        let coarse = psi.project(1).unwrap();
        prop_assert_eq!(psi.project(2).unwrap().project(1).unwrap(), coarse);
        let eta = eta_from_density(&psi, n).unwrap();
        prop_assert!(eta_mu_residual(&eta, &psi, n).unwrap().is_zero());
    }

    #[test]
    fn dp_equals_enumeration(seed: u64, points in 2usize..25) {
        let g = FreeGroup::new(2).unwrap();
        let action = FiniteAction::random(g, points, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Observable::random(points, 7, &mut rng);
        let table = spherical_dp(&action, &f, 4).unwrap();
        for n in 0..=4 {
            let brute = sphere_bruteforce(&action, &f, n, DEFAULT_SPHERE_CAP).unwrap();
            prop_assert_eq!(table.row(n).unwrap().exact(), Some(&brute));
        }
    }

    #[test]
    fn covering_ignores_input_order(seed: u64) {
        let inst = random_instance(&RandomInstanceConfig { max_points: 80, ..Default::default() }, seed).unwrap();
        let z = covering_select(&inst.relation, &inst.family, &inst.y, &inst.rho, &inst.tie).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mut order: Vec<usize> = (0..inst.y.len()).collect();
        order.shuffle(&mut rng);
        let y: Vec<usize> = order.iter().map(|&i| inst.y[i]).collect();
        let rho: Vec<usize> = order.iter().map(|&i| inst.rho[i]).collect();
        prop_assert_eq!(covering_select(&inst.relation, &inst.family, &y, &rho, &inst.tie).unwrap(), z);
    }

    #[test]
    fn class_mean_is_a_projection(seed: u64) {
        let inst = random_instance(&RandomInstanceConfig { max_points: 60, ..Default::default() }, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Observable::random(inst.relation.len(), 9, &mut rng);
        let e = invariant_cond_exp(&inst.relation, &f).unwrap();
        prop_assert_eq!(invariant_cond_exp(&inst.relation, &e).unwrap(), e);
    }
}

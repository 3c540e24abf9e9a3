//! Worked examples with hand-checkable answers.

use horocycle::actions::{FiniteAction, Observable};
use horocycle::averaging::{
    recurrence_lift, sector_average, sphere_bruteforce, spherical_dp, weak_pairing, weighted_average, Lift,
};
use horocycle::boundary::{boundary_metric, shift, BoundaryPrefix};
use horocycle::densities::{mu_from_density, sector_density, BoundaryDensity, SphereMeasure};
use horocycle::rational::{int, ratio, Rational};
use horocycle::relations::{
    boundary_instance, covering_select, doubling_constant, non_shrinking, FiniteRelation, FolnerFamily, TieBreak,
};
use horocycle::{FreeGroup, Letter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn f2() -> FreeGroup {
    FreeGroup::new(2).unwrap()
}

#[test]
fn radius_one_by_definition() {
    let a = FiniteAction::random(f2(), 9, 5).unwrap();
    let f = Observable::random(9, 8, &mut ChaCha8Rng::seed_from_u64(1));
    let avg = sphere_bruteforce(&a, &f, 1, 100).unwrap();
    for x in 0..9 {
        let s: Rational = f2().letters().map(|l| f[a.step(l, x)].clone()).sum();
        assert_eq!(avg[x], s / int(4));
    }
    assert_eq!(sphere_bruteforce(&a, &f, 0, 1).unwrap(), f);
}

#[test]
fn point_mass_reads_one_translate() {
    let a = FiniteAction::random(f2(), 11, 2).unwrap();
    let f = Observable::random(11, 8, &mut ChaCha8Rng::seed_from_u64(2));
    let g = f2().parse_word("a1A2A2a1").unwrap();
    let avg = weighted_average(&a, &f, &SphereMeasure::point_mass(&g).unwrap()).unwrap();
    for x in 0..11 {
        assert_eq!(avg[x], f[a.apply_word(&g.invert(), x)]);
    }
}

#[test]
fn sector_density_gives_the_sector_average() {
    let a = FiniteAction::random(f2(), 13, 3).unwrap();
    let f = Observable::random(13, 8, &mut ChaCha8Rng::seed_from_u64(3));
    let w = f2().parse_word("a1").unwrap();
    let rho = sector_density(&w).unwrap();
    for n in 1..=3 {
        let via_density = weighted_average(&a, &f, &mu_from_density(&rho, 2 * n).unwrap()).unwrap();
        let words: Vec<_> = f2().sphere(2 * n).filter(|g| g.first() == Some(Letter::generator(1))).collect();
        for x in 0..13 {
            let s: Rational = words.iter().map(|g| f[a.apply_word(&g.invert(), x)].clone()).sum();
            assert_eq!(via_density[x], s / int(words.len() as i64));
        }
        assert_eq!(sector_average(&a, &f, &w, 2 * n).unwrap(), via_density);
    }
}

#[test]
fn weak_pairing_two_hundred_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..200u64 {
        let g = FreeGroup::new(rng.gen_range(2..=3)).unwrap();
        let a = FiniteAction::random(g, rng.gen_range(2..=15), case).unwrap();
        let f = Observable::random(a.len(), 6, &mut rng);
        let psi = BoundaryDensity::random(g, rng.gen_range(1..=3), &mut rng).unwrap();
        let n = rng.gen_range(0..=3);
        let x = rng.gen_range(0..a.len());
        let mu = weighted_average(&a, &f, &mu_from_density(&psi, 2 * n).unwrap()).unwrap();
        assert_eq!(weak_pairing(&a, &f, x, &psi, n).unwrap(), mu[x], "case {case}");
    }
    let a = FiniteAction::sanov_mod(7).unwrap();
    let f = Observable::random(49, 6, &mut rng);
    let table = spherical_dp(&a, &f, 6).unwrap();
    let uniform = BoundaryDensity::uniform(f2());
    for n in 1..=3 {
        assert_eq!(&weak_pairing(&a, &f, 5, &uniform, n).unwrap(), &table.row(2 * n).unwrap().exact().unwrap()[5]);
    }
}

#[test]
fn lifted_maps() {
    let g = f2();
    let a = FiniteAction::sanov_mod(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 6..=9 {
        let letters = (0..n + 4).map(|i| Letter::generator(1 + i % 2)).collect();
        let p = BoundaryPrefix::new(g.reduced(letters).unwrap()).unwrap();
        let x = rng.gen_range(0..25);
        let (y, q) = recurrence_lift(&a, x, &p, n, Lift::Omega).unwrap();
        assert_eq!(y, x);
        assert_eq!(boundary_metric(&p, &q).unwrap(), ratio(1, n as i64));
        let (_, phi) = recurrence_lift(&a, x, &p, n, Lift::Phi).unwrap();
        let (_, psi) = recurrence_lift(&a, x, &q, n, Lift::Psi).unwrap();
        // first difference sits at coordinate n - 1
        let d = boundary_metric(&psi, &shift(&shift(&phi).unwrap()).unwrap()).unwrap();
        assert_eq!(d, ratio(1, n as i64 - 1));
    }
}

#[test]
fn boundary_relation_constants() {
    let inst = boundary_instance(2, 4, 2).unwrap();
    assert!(inst.relation.classes().iter().all(|c| c.len() == 9));
    assert_eq!(doubling_constant(&inst.relation, &inst.ball), int(1));
    assert!(doubling_constant(&inst.relation, &inst.sphere) <= ratio(3, 2));
    assert!(non_shrinking(&inst.relation, &inst.ball, 0, 0).is_certified());
    let cs = non_shrinking(&inst.relation, &inst.sphere, 200, 6);
    assert!(!cs.is_certified());
    assert!(cs.constant() >= ratio(2, 3));
}

#[test]
fn singletons_select_everything() {
    let r = FiniteRelation::new(&[0, 1, 0, 1, 2], None).unwrap();
    let fam = FolnerFamily::singletons(&r, 2);
    let y = vec![3, 0, 4];
    assert_eq!(covering_select(&r, &fam, &y, &[2, 1, 2], &TieBreak::identity(5)).unwrap(), vec![0, 3, 4]);
}

//! The exact-identity suite: one report line per registered identity.

use std::collections::BTreeMap;

use horocycle::actions::{FiniteAction, Observable};
use horocycle::averaging::{boundary_integrated_average, sphere_bruteforce, spherical_dp, weak_pairing, weighted_average};
use horocycle::boundary::{
    boundary_metric, cylinder_measure, horoball_elements, horosphere_elements, omega, psi_omega, shift, BoundaryPrefix,
};
use horocycle::densities::{eta_from_density, eta_mu_residual, mu_from_density, BoundaryDensity};
use horocycle::rational::{fmt_fraction, from_biguint, Rational};
use horocycle::relations::{boundary_instance, check_covering, random_instance, RandomInstanceConfig, TieBreak};
use horocycle::{FreeGroup, Letter, ReducedWord};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Fault, RunConfig};

/// Outcome of one identity; a failure carries a one-line reproducer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Check {
    Pass(String),
    Fail(String),
}

pub struct Identity {
    pub name: &'static str,
    pub check: fn(&RunConfig) -> horocycle::Result<Check>,
}

pub const REGISTRY: &[Identity] = &[
    Identity { name: "sphere-sizes", check: sphere_sizes },
    Identity { name: "cylinder-additivity", check: cylinder_additivity },
    Identity { name: "horosphere-counts", check: horosphere_counts },
    Identity { name: "eta-mu-identity", check: eta_mu_identity },
    Identity { name: "bridge-identity", check: bridge_identity },
    Identity { name: "dp-oracle", check: dp_oracle },
    Identity { name: "weak-pairing", check: weak_pairing_identity },
    Identity { name: "recurrence-maps", check: recurrence_maps },
    Identity { name: "covering-guarantees", check: covering_guarantees },
];

/// Runs every identity. Returns the report lines and whether all passed.
pub fn run_identities(config: &RunConfig) -> (Vec<String>, bool) {
    let mut ok = true;
    let lines = REGISTRY
        .iter()
        .map(|id| match (id.check)(config) {
            Ok(Check::Pass(detail)) => format!("PASS {}: {detail}", id.name),
            Ok(Check::Fail(repro)) => {
                ok = false;
                format!("FAIL {}: {repro}", id.name)
            }
            Err(e) => {
                ok = false;
                format!("FAIL {}: error: {e}", id.name)
            }
        })
        .collect();
    (lines, ok)
}

fn rng(config: &RunConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(0x9e37_79b9).wrapping_add(salt))
}

fn random_word<R: Rng>(rng: &mut R, g: FreeGroup, len: usize) -> ReducedWord {
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = Letter::from_code(rng.gen_range(0..g.num_letters()));
        if letters.last() != Some(&l.inverse()) {
            letters.push(l);
        }
    }
    g.reduced(letters).expect("built reduced")
}

fn random_prefix<R: Rng>(rng: &mut R, g: FreeGroup, depth: usize) -> BoundaryPrefix {
    BoundaryPrefix::new(random_word(rng, g, depth)).expect("depth >= 1")
}

fn sphere_sizes(_: &RunConfig) -> horocycle::Result<Check> {
    for r in [2, 3] {
        let g = FreeGroup::new(r)?;
        for n in 0..=8 {
            let counted = g.sphere(n).count() as u128;
            if Some(counted) != g.sphere_len(n) {
                return Ok(Check::Fail(format!("r={r} n={n} enumerated {counted}, formula {}", g.sphere_size(n))));
            }
        }
    }
    Ok(Check::Pass("r in {2,3}, n <= 8".into()))
}

fn cylinder_additivity(_: &RunConfig) -> horocycle::Result<Check> {
    for r in [2, 3] {
        let g = FreeGroup::new(r)?;
        for d in 1..=6 {
            let total: Rational = g.sphere(d).map(|w| cylinder_measure(&w)).sum();
            if !total.is_one() {
                return Ok(Check::Fail(format!("r={r} depth={d} total={}", fmt_fraction(&total))));
            }
        }
        for w in g.sphere(3) {
            let children: Rational = w.children().map(|c| cylinder_measure(&c)).sum();
            if children != cylinder_measure(&w) {
                return Ok(Check::Fail(format!("r={r} w={w} children sum {}", fmt_fraction(&children))));
            }
        }
    }
    Ok(Check::Pass("depths 1..6 sum to 1, children add up".into()))
}

fn horosphere_counts(config: &RunConfig) -> horocycle::Result<Check> {
    let mut rng = rng(config, 3);
    for r in [2, 3] {
        let g = FreeGroup::new(r)?;
        let b = 2 * r as u64 - 1;
        for n in 1..=6 {
            let p = random_prefix(&mut rng, g, n + 1);
            let sphere = horosphere_elements(&p, n)?.len() as u64;
            let ball = horoball_elements(&p, n)?.len() as u64;
            let ratio = Rational::new(sphere.into(), ball.into());
            if sphere != (b - 1) * b.pow(n as u32 - 1) || ratio != Rational::new((b - 1).into(), b.into()) {
                return Ok(Check::Fail(format!("r={r} n={n} xi={p} sphere={sphere} ball={ball}")));
            }
        }
    }
    Ok(Check::Pass("|H ∩ S_2n| = (2r-2)(2r-1)^(n-1), ball ratio (2r-2)/(2r-1)".into()))
}

fn eta_mu_identity(config: &RunConfig) -> horocycle::Result<Check> {
    let mut rng = rng(config, 4);
    let mut cases = 0;
    for r in [2, 3] {
        let g = FreeGroup::new(r)?;
        let n_top = if r == 2 { 6 } else { 4 };
        for _ in 0..4 {
            let depth = rng.gen_range(1..=3);
            let psi = BoundaryDensity::random(g, depth, &mut rng)?;
            for n in 1..=n_top {
                let mut eta = eta_from_density(&psi, n)?;
                if config.fault == Some(Fault::EtaWeight) && cases == 0 {
                    let (w, v) = eta.prefixes().next().map(|(w, v)| (w, v.clone())).expect("nonempty");
                    eta.set_weight(&w, v + Rational::one())?;
                }
                let residual = eta_mu_residual(&eta, &psi, n)?;
                cases += 1;
                if !residual.is_zero() {
                    return Ok(Check::Fail(format!(
                        "r={r} n={n} psi depth {depth} seed={} residual={}",
                        config.seed,
                        fmt_fraction(&residual)
                    )));
                }
            }
        }
    }
    Ok(Check::Pass(format!("{cases} cases, zero residual")))
}

fn random_case<R: Rng>(rng: &mut R, g: FreeGroup) -> horocycle::Result<(FiniteAction, Observable, BoundaryDensity)> {
    let points = rng.gen_range(2..=30);
    let action = FiniteAction::random(g, points, rng.gen())?;
    let f = Observable::random(points, 6, rng);
    let depth = rng.gen_range(1..=3);
    let psi = BoundaryDensity::random(g, depth, rng)?;
    Ok((action, f, psi))
}

fn bridge_identity(config: &RunConfig) -> horocycle::Result<Check> {
    let mut rng = rng(config, 5);
    let g = FreeGroup::new(config.rank)?;
    for case in 0..5 {
        let (action, f, psi) = random_case(&mut rng, g)?;
        for n in 1..=3 {
            let b = boundary_integrated_average(&action, &f, &psi, n)?;
            if b.via_eta != b.via_horospheres {
                return Ok(Check::Fail(format!("case {case} N={} n={n} seed={}", action.len(), config.seed)));
            }
        }
    }
    Ok(Check::Pass("5 actions, n <= 3".into()))
}

fn dp_oracle(config: &RunConfig) -> horocycle::Result<Check> {
    let g = FreeGroup::new(config.rank)?;
    let mut rng = rng(config, 6);
    for case in 0..3 {
        let points = rng.gen_range(2..=20);
        let action = FiniteAction::random(g, points, rng.gen())?;
        let f = Observable::random(points, 9, &mut rng);
        let table = spherical_dp(&action, &f, 5)?;
        for n in 0..=5 {
            let brute = sphere_bruteforce(&action, &f, n, config.cap_sphere)?;
            if table.row(n).and_then(|a| a.exact()) != Some(&brute) {
                return Ok(Check::Fail(format!("case {case} N={points} n={n} seed={}", config.seed)));
            }
        }
    }
    Ok(Check::Pass("3 actions, n <= 5".into()))
}

fn weak_pairing_identity(config: &RunConfig) -> horocycle::Result<Check> {
    let g = FreeGroup::new(config.rank)?;
    let mut rng = rng(config, 7);
    for case in 0..3 {
        let (action, f, psi) = random_case(&mut rng, g)?;
        for n in 1..=3 {
            let avg = weighted_average(&action, &f, &mu_from_density(&psi, 2 * n)?)?;
            for (x, expected) in avg.iter().enumerate() {
                if weak_pairing(&action, &f, x, &psi, n)? != *expected {
                    return Ok(Check::Fail(format!("case {case} n={n} x={x} seed={}", config.seed)));
                }
            }
        }
    }
    Ok(Check::Pass("pairing equals the mu-weighted average".into()))
}

fn recurrence_maps(config: &RunConfig) -> horocycle::Result<Check> {
    let g = FreeGroup::new(2)?;
    let mut rng = rng(config, 8);
    for n in 6..=8 {
        for _ in 0..20 {
            let p = random_prefix(&mut rng, g, n + 4);
            let w = omega(&p, n)?;
            let d1 = boundary_metric(&p, &w)?;
            if d1 != Rational::new(1.into(), n.into()) {
                return Ok(Check::Fail(format!("n={n} xi={p} d(xi, omega xi)={}", fmt_fraction(&d1))));
            }
            let d2 = boundary_metric(&psi_omega(&p, n)?, &shift(&shift(&w)?)?)?;
            if d2 != Rational::new(1.into(), (n - 1).into()) {
                return Ok(Check::Fail(format!("n={n} xi={p} d(psi omega xi, P^2 omega xi)={}", fmt_fraction(&d2))));
            }
        }
        let words: Vec<ReducedWord> = g.sphere(n + 1).collect();
        let mut images = words
            .iter()
            .map(|w| Ok(omega(&BoundaryPrefix::new(w.clone())?, n)?.into_word()))
            .collect::<horocycle::Result<Vec<_>>>()?;
        images.sort();
        if images != words {
            return Ok(Check::Fail(format!("n={n}: omega does not permute depth-{} prefixes", n + 1)));
        }
    }
    let n = 6;
    let mut fibres: BTreeMap<BoundaryPrefix, usize> = BTreeMap::new();
    for w in g.sphere(n + 3) {
        *fibres.entry(psi_omega(&BoundaryPrefix::new(w)?, n)?).or_default() += 1;
    }
    let largest = fibres.values().copied().max().unwrap_or(0);
    if largest > 9 {
        return Ok(Check::Fail(format!("n=6 largest psi-omega fibre {largest} > 9")));
    }
    let count = from_biguint(&g.sphere_size(n + 1));
    Ok(Check::Pass(format!(
        "n in 6..8: d(xi, omega xi) = 1/n, d(psi omega xi, P^2 omega xi) = 1/(n-1), omega permutes {count} prefixes at n=6, largest fibre {largest}"
    )))
}

fn covering_guarantees(config: &RunConfig) -> horocycle::Result<Check> {
    let settings = RandomInstanceConfig { max_points: config.max_points, ..Default::default() };
    for i in 0..10u64 {
        let seed = config.seed.wrapping_add(i);
        let inst = random_instance(&RandomInstanceConfig { centered: i % 2 == 0, ..settings.clone() }, seed)?;
        let c = check_covering(&inst.relation, &inst.family, &inst.y, &inst.rho, &inst.tie)?;
        if !(c.disjoint_ok && c.measure_ok) {
            return Ok(Check::Fail(format!("random instance seed={seed} disjoint={} measure={}", c.disjoint_ok, c.measure_ok)));
        }
    }
    let inst = boundary_instance(2, 5, 2)?;
    let mut rng = rng(config, 9);
    let y: Vec<usize> = (0..inst.relation.len()).filter(|_| rng.gen_bool(0.4)).collect();
    let rho: Vec<usize> = y.iter().map(|_| rng.gen_range(1..=2)).collect();
    let tie = TieBreak::identity(inst.relation.len());
    for (label, family) in [("ball", &inst.ball), ("sphere", &inst.sphere)] {
        let c = check_covering(&inst.relation, family, &y, &rho, &tie)?;
        if !(c.disjoint_ok && c.measure_ok) || (label == "ball" && !c.doubling.is_one()) {
            return Ok(Check::Fail(format!("boundary {label} r=2 L=5 n0=2 seed={} Cd={}", config.seed, c.doubling)));
        }
    }
    Ok(Check::Pass("10 random and 2 boundary instances, ball Cd = 1".into()))
}

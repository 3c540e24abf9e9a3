//! `converge`, `covering` and `dump`.

use std::fmt::Write as _;

use horocycle::averaging::{convergence_report, ConvergenceReport, FamilySpec};
use horocycle::densities::{eta_from_density, mu_from_density};
use horocycle::rational::fmt_compact;
use horocycle::relations::{
    boundary_instance, check_covering, dump_instance, non_shrinking, random_instance, CoveringCheck, NonShrinking,
    RandomInstanceConfig, TieBreak,
};
use horocycle::FreeGroup;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::specs::{parse_action, parse_density, parse_family, parse_observable, summarize};
use crate::CliError;

/// Rejects runs whose measure tables would exceed `cap_sphere` entries.
fn check_tables(config: &RunConfig, family: &FamilySpec) -> Result<(), CliError> {
    let group = FreeGroup::new(config.rank)?;
    let depth = match family {
        FamilySpec::EtaPsi(psi) => (config.n_max + 1).max(psi.depth()),
        FamilySpec::MuPsi(psi) => psi.depth(),
        FamilySpec::Sector(w) => w.len(),
        _ => return Ok(()),
    };
    let size = group.sphere_len(depth).unwrap_or(u128::MAX);
    if size > config.cap_sphere {
        return Err(horocycle::Error::ResourceCap { what: "sphere measure table", size, cap: config.cap_sphere }.into());
    }
    Ok(())
}

/// The convergence table for `n = 1..=n_max` plus a summary of the limit.
pub fn converge(config: &RunConfig) -> Result<(ConvergenceReport, String), CliError> {
    let (action, file_obs) = parse_action(config)?;
    let family = parse_family(config)?;
    check_tables(config, &family)?;
    let f = match file_obs {
        Some(f) => f,
        None => parse_observable(config, &action)?,
    };
    let ns: Vec<usize> = (1..=config.n_max).collect();
    let report = convergence_report(&action, &f, &family, &ns, config.p, config.mode)?;
    let summary = format!(
        "# family {} on {} points, even-subgroup orbits {}\n# E[f|F2] = {}\n",
        report.family,
        action.len(),
        report.orbit_count,
        summarize(report.limit.values())
    );
    Ok((report, summary))
}

/// One covering row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringRow {
    pub instance: String,
    pub check: CoveringCheck,
    pub c_s: NonShrinking,
}

impl CoveringRow {
    pub fn passed(&self) -> bool {
        self.check.disjoint_ok && self.check.measure_ok
    }
}

const CS_TRIALS: usize = 20;

/// `config.instances` seeded random instances, then the ball and sphere
/// families of the boundary instance `r = rank, L = 5, n0 = 2`.
pub fn covering(config: &RunConfig) -> Result<Vec<CoveringRow>, CliError> {
    let mut rows = Vec::new();
    let base = RandomInstanceConfig { max_points: config.max_points, ..Default::default() };
    for i in 0..config.instances as u64 {
        let seed = config.seed.wrapping_add(i);
        let inst = random_instance(&RandomInstanceConfig { centered: i % 2 == 0, ..base.clone() }, seed)?;
        rows.push(CoveringRow {
            instance: format!("random-{i}"),
            check: check_covering(&inst.relation, &inst.family, &inst.y, &inst.rho, &inst.tie)?,
            c_s: non_shrinking(&inst.relation, &inst.family, CS_TRIALS, seed),
        });
    }
    let inst = boundary_instance(config.rank, 5, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let y: Vec<usize> = (0..inst.relation.len()).filter(|_| rng.gen_bool(0.4)).collect();
    let rho: Vec<usize> = y.iter().map(|_| rng.gen_range(1..=2)).collect();
    let mut labels: Vec<i64> = (0..inst.relation.len() as i64).collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
    let tie = TieBreak::new(labels)?;
    for (label, family) in [("boundary-ball", &inst.ball), ("boundary-sphere", &inst.sphere)] {
        rows.push(CoveringRow {
            instance: label.into(),
            check: check_covering(&inst.relation, family, &y, &rho, &tie)?,
            c_s: non_shrinking(&inst.relation, family, CS_TRIALS, config.seed),
        });
    }
    Ok(rows)
}

/// CSV `instance,disjoint_ok,measure_ok,Cd,Cs,ratio`. A sampled `C_s` is
/// written with a leading `~`.
pub fn covering_csv(rows: &[CoveringRow]) -> String {
    let mut out = String::from("instance,disjoint_ok,measure_ok,Cd,Cs,ratio\n");
    for r in rows {
        let cs = match &r.c_s {
            NonShrinking::Certified => "1".to_string(),
            NonShrinking::Sampled { estimate, .. } => format!("~{}", fmt_compact(estimate)),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.instance,
            r.check.disjoint_ok,
            r.check.measure_ok,
            fmt_compact(&r.check.doubling),
            cs,
            fmt_compact(&r.check.ratio())
        )
        .unwrap();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DumpKind {
    Action,
    Density,
    Mu,
    Eta,
    Instance,
}

/// Text form of an action, a density, `μ_n^ψ`, `η_{2n}^ψ` (`n` = `config.n_max`
/// unless given) or the boundary instance `L = 5, n0 = 2` with its ball family.
pub fn dump(config: &RunConfig, kind: DumpKind, n: Option<usize>) -> Result<String, CliError> {
    let n = n.unwrap_or(config.n_max);
    Ok(match kind {
        DumpKind::Action => parse_action(config)?.0.dump(),
        DumpKind::Density => parse_density(config)?.dump(),
        DumpKind::Mu => {
            let psi = parse_density(config)?;
            check_tables(config, &FamilySpec::MuPsi(psi.clone()))?;
            mu_from_density(&psi, n)?.dump()
        }
        DumpKind::Eta => {
            let psi = parse_density(config)?;
            check_tables(config, &FamilySpec::EtaPsi(psi.clone()))?;
            eta_from_density(&psi, n)?.dump()
        }
        DumpKind::Instance => {
            let inst = boundary_instance(config.rank, 5, 2)?;
            dump_instance(&inst.relation, &inst.ball)
        }
    })
}

//! Short textual specs for actions, densities, families and observables.
//!
//! Anything that is not a recognised spec and names an existing file is read
//! from disk.

use std::path::Path;

use horocycle::actions::{FiniteAction, Observable};
use horocycle::averaging::FamilySpec;
use horocycle::boundary::BoundaryPrefix;
use horocycle::densities::{sector_density, BoundaryDensity};
use horocycle::rational::Rational;
use horocycle::{FreeGroup, ReducedWord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::CliError;

fn spec_error(spec: &str, column: usize, message: impl Into<String>) -> CliError {
    CliError::Spec { spec: spec.into(), column, message: message.into() }
}

/// Splits `name:arg:arg` and returns the pieces with their 1-based columns.
fn pieces(spec: &str) -> Vec<(usize, &str)> {
    let mut col = 1;
    spec.split(':')
        .map(|p| {
            let here = col;
            col += p.chars().count() + 1;
            (here, p)
        })
        .collect()
}

fn arg<T: std::str::FromStr>(spec: &str, parts: &[(usize, &str)], i: usize, what: &str) -> Result<T, CliError> {
    let (col, text) = parts.get(i).copied().ok_or_else(|| {
        spec_error(spec, spec.chars().count() + 1, format!("missing {what}"))
    })?;
    text.parse().map_err(|_| spec_error(spec, col, format!("expected {what}, got {text:?}")))
}

fn word(spec: &str, group: FreeGroup, col: usize, text: &str) -> Result<ReducedWord, CliError> {
    group.parse_word(text).map_err(|e| spec_error(spec, col, e.to_string()))
}

fn read_file(spec: &str) -> Result<Option<String>, CliError> {
    let path = Path::new(spec);
    if !path.is_file() {
        return Ok(None);
    }
    std::fs::read_to_string(path).map(Some).map_err(CliError::Io)
}

/// The action and, when the file carries one, its observable.
pub fn parse_action(config: &RunConfig) -> Result<(FiniteAction, Option<Observable>), CliError> {
    let spec = config.action.as_str();
    let parts = pieces(spec);
    let group = FreeGroup::new(config.rank)?;
    let action = match parts[0].1 {
        "sanov" => {
            if config.rank != 2 {
                return Err(spec_error(spec, 1, "the Sanov action needs rank 2"));
            }
            FiniteAction::sanov_mod(arg(spec, &parts, 1, "an odd modulus")?)?
        }
        "random" => FiniteAction::random(group, arg(spec, &parts, 1, "a point count")?, config.seed)?,
        "weighted" => FiniteAction::random_weighted(
            group,
            arg(spec, &parts, 1, "a point count")?,
            arg(spec, &parts, 2, "a block count")?,
            config.seed,
        )?,
        _ => match read_file(spec)? {
            Some(text) => return Ok(FiniteAction::parse(&text)?),
            None => return Err(spec_error(spec, 1, "expected sanov:N, random:N, weighted:N:B or a file")),
        },
    };
    if parts.len() > action_arity(parts[0].1) + 1 {
        let (col, _) = parts[action_arity(parts[0].1) + 1];
        return Err(spec_error(spec, col, "unexpected extra field"));
    }
    Ok((action, None))
}

fn action_arity(name: &str) -> usize {
    if name == "weighted" {
        2
    } else {
        1
    }
}

pub fn parse_density(config: &RunConfig) -> Result<BoundaryDensity, CliError> {
    let spec = config.density.as_str();
    let parts = pieces(spec);
    let group = FreeGroup::new(config.rank)?;
    match parts[0].1 {
        "uniform" if parts.len() == 1 => Ok(BoundaryDensity::uniform(group)),
        "sector" => {
            let (col, text) = parts.get(1).copied().ok_or_else(|| spec_error(spec, spec.len() + 1, "missing word"))?;
            Ok(sector_density(&word(spec, group, col, text)?)?)
        }
        "random" => {
            let depth: usize = arg(spec, &parts, 1, "a depth")?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            Ok(BoundaryDensity::random(group, depth, &mut rng)?)
        }
        _ => match read_file(spec)? {
            Some(text) => {
                let psi = BoundaryDensity::parse(&text)?;
                if psi.group() != group {
                    return Err(horocycle::Error::RankMismatch { expected: config.rank, found: psi.group().rank() }.into());
                }
                Ok(psi)
            }
            None => Err(spec_error(spec, 1, "expected uniform, sector:w, random:d or a file")),
        },
    }
}

/// `a1a2a1a2…` of the given depth.
pub fn periodic_prefix(group: FreeGroup, depth: usize) -> BoundaryPrefix {
    let letters = (0..depth).map(|i| horocycle::Letter::generator(1 + i % 2)).collect();
    BoundaryPrefix::new(group.reduced(letters).expect("a1a2 repeated is reduced")).expect("nonempty")
}

pub fn parse_family(config: &RunConfig) -> Result<FamilySpec, CliError> {
    let spec = config.family.as_str();
    let parts = pieces(spec);
    let group = FreeGroup::new(config.rank)?;
    let xi = || -> Result<BoundaryPrefix, CliError> {
        match &config.xi {
            Some(text) => {
                let w = group.parse_word(text).map_err(|e| spec_error(text, 1, e.to_string()))?;
                Ok(BoundaryPrefix::new(w)?)
            }
            None => Ok(periodic_prefix(group, config.n_max + 2)),
        }
    };
    let family = match parts[0].1 {
        "spherical" => FamilySpec::Spherical,
        "sector" => {
            let (col, text) = parts.get(1).copied().ok_or_else(|| spec_error(spec, spec.len() + 1, "missing word"))?;
            FamilySpec::Sector(word(spec, group, col, text)?)
        }
        "mu" => FamilySpec::MuPsi(parse_density(config)?),
        "eta" => FamilySpec::EtaPsi(parse_density(config)?),
        "horospherical" => FamilySpec::Horospherical(xi()?),
        "ball" => FamilySpec::Ball(xi()?),
        _ => return Err(spec_error(spec, 1, "expected spherical, sector:w, mu, eta, horospherical or ball")),
    };
    let arity = usize::from(parts[0].1 == "sector");
    if parts.len() > arity + 1 {
        return Err(spec_error(spec, parts[arity + 1].0, "unexpected extra field"));
    }
    Ok(family)
}

pub fn parse_observable(config: &RunConfig, action: &FiniteAction) -> Result<Observable, CliError> {
    let spec = config.observable.as_str();
    let parts = pieces(spec);
    let n = action.len();
    let point = |parts: &[(usize, &str)]| -> Result<usize, CliError> {
        let x: usize = arg(spec, parts, 1, "a point")?;
        if x >= n {
            return Err(spec_error(spec, parts[1].0, format!("point {x} out of range 0..{n}")));
        }
        Ok(x)
    };
    match parts[0].1 {
        "indicator" => Ok(Observable::indicator(n, &[point(&parts)?])),
        "centered" => {
            let f = Observable::indicator(n, &[point(&parts)?]);
            let mean = action.cond_exp_even(&f);
            Ok(f.sub(&mean))
        }
        "invariant" => Ok(action.cond_exp_even(&Observable::indicator(n, &[point(&parts)?]))),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6f62);
            Ok(Observable::random(n, 5, &mut rng))
        }
        _ => Err(spec_error(spec, 1, "expected centered:x, indicator:x, invariant:x or random")),
    }
}

/// Short text summary of a vector of rationals.
pub fn summarize(values: &[Rational]) -> String {
    const SHOWN: usize = 8;
    let mut parts: Vec<String> = values.iter().take(SHOWN).map(horocycle::rational::fmt_compact).collect();
    if values.len() > SHOWN {
        parts.push(format!("… ({} values)", values.len()));
    }
    parts.join(" ")
}

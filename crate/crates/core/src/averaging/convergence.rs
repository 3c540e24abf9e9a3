//! Error tables of an averaging family against its limit `E[f | F²]`.

use std::fmt::Write as _;
use std::time::Instant;

use num_traits::Signed;

use super::{family_table, Averages, FamilySpec, Mode};
use crate::actions::{FiniteAction, Observable};
use crate::error::Result;
use crate::rational::{fmt_compact, to_f64, weighted_lq, Exponent, Norm, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error_sup: Norm,
    pub error_lp: Norm,
    /// Wall-clock time of the row; never part of the default CSV.
    pub runtime_ms: u128,
}

/// Monotonicity summary of the sup-error column.
#[derive(Clone, Debug, PartialEq)]
pub struct TrendStats {
    pub first: f64,
    pub last: f64,
    pub min: f64,
    pub final_is_min: bool,
    /// Steps `n → n+1` where the error went strictly down.
    pub decreasing_steps: usize,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub family: String,
    pub mode: Mode,
    pub exponent: Exponent,
    pub orbit_count: usize,
    pub limit: Observable,
    pub rows: Vec<ConvergenceRow>,
}

fn render(x: &Norm) -> String {
    match x {
        Norm::Exact(q) => fmt_compact(q),
        Norm::Approx(v) => format!("{v}"),
    }
}

impl ConvergenceReport {
    /// CSV with header `n,error_sup,error_lp,runtime_ms`. The runtime column is
    /// left empty unless `timing` is set, so that reruns are byte-identical.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::from("n,error_sup,error_lp,runtime_ms\n");
        for r in &self.rows {
            let t = if timing { r.runtime_ms.to_string() } else { String::new() };
            writeln!(out, "{},{},{},{}", r.n, render(&r.error_sup), render(&r.error_lp), t).unwrap();
        }
        out
    }

    pub fn sup_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error_sup.to_f64()).collect()
    }

    pub fn trend(&self) -> TrendStats {
        let e = self.sup_errors();
        let min = e.iter().cloned().fold(f64::INFINITY, f64::min);
        let last = e.last().copied().unwrap_or(f64::NAN);
        TrendStats {
            first: e.first().copied().unwrap_or(f64::NAN),
            last,
            min,
            final_is_min: last == min,
            decreasing_steps: e.windows(2).filter(|w| w[1] < w[0]).count(),
            steps: e.len().saturating_sub(1),
        }
    }
}

/// Errors `sup_x |A_n f(x) − E[f|F²](x)|` and the `L^p(λ)` error for each
/// family index `n` in `ns`.
pub fn convergence_report(
    action: &FiniteAction,
    f: &Observable,
    family: &FamilySpec,
    ns: &[usize],
    p: Exponent,
    mode: Mode,
) -> Result<ConvergenceReport> {
    let p = p.validate()?;
    let orbits = action.even_orbits();
    let limit = action.cond_exp_on(&orbits, f);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let start = Instant::now();
        let table = family_table(action, f, family, &[n], mode)?;
        let values = &table.rows[0].values;
        let (error_sup, error_lp) = match values {
            Averages::Exact(a) => {
                let diff: Vec<Rational> = a.iter().zip(limit.iter()).map(|(x, y)| x - y).collect();
                let sup = diff.iter().map(|d| d.abs()).max().unwrap();
                let lp = weighted_lq(action.weights().iter().zip(diff), p);
                (Norm::Exact(sup), lp)
            }
            Averages::Approx(a) => {
                let diff: Vec<f64> = a.iter().zip(limit.iter()).map(|(x, y)| x - to_f64(y)).collect();
                let sup = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                let lp = match p {
                    Exponent::Infinity => sup,
                    Exponent::Finite(q) => diff
                        .iter()
                        .zip(action.weights())
                        .map(|(d, w)| to_f64(w) * d.abs().powf(q))
                        .sum::<f64>()
                        .powf(1.0 / q),
                };
                (Norm::Approx(sup), Norm::Approx(lp))
            }
        };
        rows.push(ConvergenceRow { n, error_sup, error_lp, runtime_ms: start.elapsed().as_millis() });
    }
    Ok(ConvergenceReport { family: family.label(), mode, exponent: p, orbit_count: orbits.count(), limit, rows })
}

//! Run configuration: a `key=value` file with flag overrides.

use std::path::PathBuf;

use horocycle::averaging::{Mode, DEFAULT_SPHERE_CAP};
use horocycle::rational::Exponent;

use crate::CliError;

/// Test hooks that corrupt one input on purpose.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Perturbs one weight of `η_{2n}^ψ` before the η/μ check.
    EtaWeight,
}

/// Every knob of a run. Keys in the config file match the long flag names
/// (`cap-sphere` or `cap_sphere` both work).
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub rank: usize,
    pub n_max: usize,
    pub p: Exponent,
    /// `sanov:N`, `random:N`, `weighted:N:B` or a file path.
    pub action: String,
    /// `uniform`, `sector:w`, `random:d` or a file path.
    pub density: String,
    /// `spherical`, `sector:w`, `mu`, `eta`, `horospherical`, `ball`.
    pub family: String,
    /// `centered:x`, `indicator:x`, `invariant:x` or `random`; ignored when
    /// the action file carries `obs` lines.
    pub observable: String,
    /// Boundary point for the horospherical families; `None` means the
    /// periodic word `a1a2a1a2…`.
    pub xi: Option<String>,
    pub out: Option<PathBuf>,
    pub mode: Mode,
    pub cap_sphere: u128,
    /// Fill the `runtime_ms` column.
    pub timing: bool,
    pub instances: usize,
    pub max_points: usize,
    pub fault: Option<Fault>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            rank: 2,
            n_max: 8,
            p: Exponent::Finite(2.0),
            action: "sanov:5".into(),
            density: "uniform".into(),
            family: "spherical".into(),
            observable: "centered:1".into(),
            xi: None,
            out: None,
            mode: Mode::Exact,
            cap_sphere: DEFAULT_SPHERE_CAP,
            timing: false,
            instances: 100,
            max_points: 200,
            fault: None,
        }
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Usage(format!("{key}: expected a number, got {value:?}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key.trim().replace('_', "-").as_str() {
            "seed" => self.seed = number(key, value)?,
            "rank" => {
                self.rank = number(key, value)?;
                if self.rank < 2 {
                    return Err(CliError::Usage("rank must be at least 2".into()));
                }
            }
            "nmax" | "n-max" => {
                self.n_max = number(key, value)?;
                if self.n_max == 0 {
                    return Err(CliError::Usage("nmax must be at least 1".into()));
                }
            }
            "p" => {
                self.p = value
                    .parse::<Exponent>()
                    .map_err(|e| CliError::Usage(format!("p: {e}")))?
                    .validate()
                    .map_err(|e| CliError::Usage(format!("p: {e}")))?
            }
            "action" => self.action = value.into(),
            "density" => self.density = value.into(),
            "family" => self.family = value.into(),
            "observable" => self.observable = value.into(),
            "xi" => self.xi = Some(value.into()),
            "out" => self.out = Some(PathBuf::from(value)),
            "mode" => {
                self.mode = match value {
                    "exact" => Mode::Exact,
                    "float" => Mode::Float,
                    _ => return Err(CliError::Usage(format!("mode must be exact or float, got {value:?}"))),
                }
            }
            "cap-sphere" => self.cap_sphere = number(key, value)?,
            "timing" => {
                self.timing = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(CliError::Usage(format!("timing: expected a boolean, got {value:?}"))),
                }
            }
            "instances" => self.instances = number(key, value)?,
            "max-points" => {
                self.max_points = number(key, value)?;
                if self.max_points < 2 {
                    return Err(CliError::Usage("max-points must be at least 2".into()));
                }
            }
            "fault" => {
                self.fault = match value {
                    "none" => None,
                    "eta-weight" => Some(Fault::EtaWeight),
                    _ => return Err(CliError::Usage(format!("unknown fault {value:?}"))),
                }
            }
            other => return Err(CliError::Usage(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Reads `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
            self.set(k, v).map_err(|e| CliError::Usage(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_and_overrides() {
        let mut c = RunConfig::from_text("# run\nseed = 9\nmode=float\ncap_sphere=100\n").unwrap();
        assert_eq!((c.seed, c.mode, c.cap_sphere), (9, Mode::Float, 100));
        c.set("p", "inf").unwrap();
        assert_eq!(c.p, Exponent::Infinity);
        assert!(c.set("p", "0.5").is_err());
        assert!(c.set("colour", "red").is_err());
        assert!(RunConfig::from_text("seed 3").is_err());
    }
}

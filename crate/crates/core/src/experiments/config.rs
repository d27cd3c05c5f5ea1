//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Experiment;
use crate::error::{Error, Result};
use crate::sde::{ClockControl, Scheme, StepControl};

/// Every knob an experiment may read. Unused fields are ignored by the
/// experiment but still echoed in its report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub delta: f64,
    /// Initial values, or the ladder of `x` for the small-`x` limits.
    pub xs: Vec<f64>,
    pub horizon: f64,
    /// Total steps of a uniform grid.
    pub n_steps: usize,
    /// Steps per block of a geometric schedule.
    pub block_steps: usize,
    pub n_paths: usize,
    /// Paths for secondary checks (other initial values).
    pub aux_paths: usize,
    /// Derivative order `n`.
    pub order: usize,
    /// Moment exponent.
    pub gamma: f64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Scale factors `c`, or initial-value gaps `(y − x)/x`.
    pub scales: Vec<f64>,
    /// Time fractions (reversal) or readout times.
    pub fractions: Vec<f64>,
    /// Start of the window for sup over time.
    pub epsilon: f64,
    /// Readout time `t`.
    pub time: f64,
    /// Adaptive step: `Δ = κ ρ²` for the lowest live path.
    pub kappa: f64,
    pub dt_min: f64,
    pub max_steps: usize,
    /// Step in the clock `∫ρ⁻²` for the Lamperti representation.
    pub clock_step: f64,
}

const KEYS: &[&str] = &[
    "experiment",
    "delta",
    "xs",
    "horizon",
    "n_steps",
    "block_steps",
    "n_paths",
    "aux_paths",
    "order",
    "gamma",
    "seed",
    "scheme",
    "scales",
    "fractions",
    "epsilon",
    "time",
    "kappa",
    "dt_min",
    "max_steps",
    "clock_step",
];

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        msg: msg.into(),
    }
}

fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| bad(line, format!("`{key}`: cannot parse `{v}`")))
}

fn list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| num(line, key, s.trim())).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

/// Splits `key = value` lines, skipping blanks and `#` comments. Keys must
/// be in `allowed` and appear at most once. Returns `(line, key, value)`.
pub fn parse_pairs(text: &str, allowed: &[&str]) -> Result<Vec<(usize, String, String)>> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| bad(line, format!("expected `key = value`, got `{content}`")))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if !allowed.contains(&k.as_str()) {
            return Err(bad(line, format!("unknown key `{k}` (allowed: {})", allowed.join(", "))));
        }
        if entries.iter().any(|(_, seen, _)| *seen == k) {
            return Err(bad(line, format!("duplicate key `{k}`")));
        }
        entries.push((line, k, v));
    }
    Ok(entries)
}

/// Parses one value, naming the key and line on failure.
pub fn parse_value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    num(line, key, v)
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    list(line, key, v)
}

impl ExperimentConfig {
    /// Parses a config file. Keys override the defaults of the named
    /// experiment; `experiment` must come first unless `fallback` names it.
    /// A seed is required unless `seed_override` supplies one.
    pub fn parse(text: &str, fallback: Option<Experiment>, seed_override: Option<u64>) -> Result<Self> {
        let entries = parse_pairs(text, KEYS)?;
        let named = entries.iter().find(|(_, k, _)| k == "experiment");
        let experiment = match (named, fallback) {
            (Some((line, _, v)), Some(f)) => {
                let e: Experiment = v.parse().map_err(|e: Error| bad(*line, e.to_string()))?;
                if e != f {
                    return Err(bad(*line, format!("config is for `{e}`, not `{f}`")));
                }
                e
            }
            (Some((line, _, v)), None) => v.parse().map_err(|e: Error| bad(*line, e.to_string()))?,
            (None, Some(f)) => f,
            (None, None) => return Err(bad(0, "missing key `experiment`")),
        };
        let mut cfg = Self::default_for(experiment, 0);
        let mut seed = None;
        let mut validate_line = 0;
        for (line, k, v) in &entries {
            let (line, v) = (*line, v.as_str());
            validate_line = validate_line.max(line);
            match k.as_str() {
                "experiment" => {}
                "delta" => cfg.delta = num(line, k, v)?,
                "xs" => cfg.xs = list(line, k, v)?,
                "horizon" => cfg.horizon = num(line, k, v)?,
                "n_steps" => cfg.n_steps = num(line, k, v)?,
                "block_steps" => cfg.block_steps = num(line, k, v)?,
                "n_paths" => cfg.n_paths = num(line, k, v)?,
                "aux_paths" => cfg.aux_paths = num(line, k, v)?,
                "order" => cfg.order = num(line, k, v)?,
                "gamma" => cfg.gamma = num(line, k, v)?,
                "seed" => seed = Some(num(line, k, v)?),
                "scheme" => cfg.scheme = v.parse().map_err(|e: Error| bad(line, e.to_string()))?,
                "scales" => cfg.scales = list(line, k, v)?,
                "fractions" => cfg.fractions = list(line, k, v)?,
                "epsilon" => cfg.epsilon = num(line, k, v)?,
                "time" => cfg.time = num(line, k, v)?,
                "kappa" => cfg.kappa = num(line, k, v)?,
                "dt_min" => cfg.dt_min = num(line, k, v)?,
                "max_steps" => cfg.max_steps = num(line, k, v)?,
                "clock_step" => cfg.clock_step = num(line, k, v)?,
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.seed = seed_override
            .or(seed)
            .ok_or_else(|| bad(0, "missing key `seed` (or pass --seed)"))?;
        cfg.validate()
            .map_err(|e| bad(validate_line, e.to_string()))?;
        Ok(cfg)
    }

    /// Renders the config in the file format; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment = {}", self.experiment);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "delta = {:?}", self.delta);
        let _ = writeln!(s, "xs = {}", join(&self.xs));
        let _ = writeln!(s, "horizon = {:?}", self.horizon);
        let _ = writeln!(s, "n_steps = {}", self.n_steps);
        let _ = writeln!(s, "block_steps = {}", self.block_steps);
        let _ = writeln!(s, "n_paths = {}", self.n_paths);
        let _ = writeln!(s, "aux_paths = {}", self.aux_paths);
        let _ = writeln!(s, "order = {}", self.order);
        let _ = writeln!(s, "gamma = {:?}", self.gamma);
        let _ = writeln!(s, "scheme = {}", self.scheme);
        let _ = writeln!(s, "scales = {}", join(&self.scales));
        let _ = writeln!(s, "fractions = {}", join(&self.fractions));
        let _ = writeln!(s, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(s, "time = {:?}", self.time);
        let _ = writeln!(s, "kappa = {:?}", self.kappa);
        let _ = writeln!(s, "dt_min = {:?}", self.dt_min);
        let _ = writeln!(s, "max_steps = {}", self.max_steps);
        let _ = writeln!(s, "clock_step = {:?}", self.clock_step);
        s
    }

    pub fn step_control(&self) -> StepControl {
        StepControl {
            kappa: self.kappa,
            dt_min: self.dt_min,
            dt_max: self.horizon,
            horizon: self.horizon,
            max_steps: self.max_steps,
        }
    }

    pub fn clock_control(&self) -> ClockControl {
        ClockControl {
            step: self.clock_step,
            max_steps: self.max_steps,
        }
    }

    /// Shipped defaults for an experiment.
    pub fn default_for(experiment: Experiment, seed: u64) -> Self {
        use Experiment::*;
        let base = Self {
            experiment,
            delta: 2.5,
            xs: vec![1.0],
            horizon: 1.0,
            n_steps: 1024,
            block_steps: 256,
            n_paths: 10_000,
            aux_paths: 0,
            order: 1,
            gamma: 0.5,
            seed,
            scheme: Scheme::EulerFloor,
            scales: Vec::new(),
            fractions: Vec::new(),
            epsilon: 0.1,
            time: 1.0,
            kappa: 0.02,
            dt_min: 1e-16,
            max_steps: 2_000_000,
            clock_step: 0.02,
        };
        match experiment {
            BellSymbolic => Self {
                order: 6,
                n_paths: 0,
                ..base
            },
            DualRoute => Self {
                xs: vec![1.0, 1.001],
                n_steps: 1 << 14,
                n_paths: 100,
                order: 3,
                ..base
            },
            Marginal => Self {
                delta: 1.5,
                n_steps: 1024,
                scheme: Scheme::ImplicitDrift,
                ..base
            },
            Dufresne => Self {
                horizon: 40.0,
                n_steps: 4096,
                n_paths: 20_000,
                ..base
            },
            Scaling => Self {
                time: 0.5,
                n_steps: 1024,
                scales: vec![2.0, 10.0],
                ..base
            },
            SpitzerDelta2 => Self {
                delta: 2.0,
                xs: vec![1e-2, 1e-3, 1e-4],
                n_paths: 20_000,
                block_steps: 256,
                scheme: Scheme::Lamperti,
                clock_step: 0.05,
                // About 30 (ln x)² of clock at the smallest x.
                max_steps: 50_000,
                ..base
            },
            Exponent => Self {
                delta: 3.0,
                xs: (3..=9).map(|k| 0.5f64.powi(k)).collect(),
                n_paths: 2000,
                block_steps: 256,
                scheme: Scheme::Lamperti,
                ..base
            },
            RatioChain => Self {
                order: 2,
                xs: vec![0.5f64.powi(9)],
                block_steps: 256,
                scheme: Scheme::Lamperti,
                ..base
            },
            Moment => Self {
                order: 2,
                xs: vec![0.5f64.powi(9)],
                block_steps: 256,
                scheme: Scheme::Lamperti,
                ..base
            },
            Tau0Law => Self {
                delta: 1.5,
                xs: vec![0.5, 1.0, 2.0],
                horizon: 16384.0,
                block_steps: 128,
                n_paths: 1_000_000,
                aux_paths: 200_000,
                gamma: 0.25,
                scheme: Scheme::ExactSquare,
                ..base
            },
            TimeReversal => Self {
                delta: 1.5,
                horizon: 1e16,
                block_steps: 256,
                n_paths: 5000,
                fractions: vec![0.25, 0.5],
                scheme: Scheme::ExactSquare,
                clock_step: 0.002,
                ..base
            },
            Modification => Self {
                delta: 1.5,
                xs: vec![0.5],
                time: 2.0,
                n_steps: 4096,
                n_paths: 10_000,
                scheme: Scheme::ImplicitDrift,
                ..base
            },
            TauDerivative => Self {
                delta: 1.5,
                scales: vec![1e-1, 1e-2, 1e-3],
                horizon: 1e12,
                n_paths: 2000,
                dt_min: 1e-300,
                scheme: Scheme::ImplicitDrift,
                ..base
            },
        }
    }

    /// Preconditions of the named experiment.
    pub fn validate(&self) -> Result<()> {
        use Experiment::*;
        let fail = |name: &'static str, reason: String| Err(Error::Param { name, reason });
        let hits_zero = matches!(self.experiment, Tau0Law | TimeReversal | Modification | TauDerivative);
        if hits_zero && !(self.delta > 1.0 && self.delta < 2.0) {
            return fail(
                "delta",
                format!("{} needs δ ∈ (1, 2) so that zero is hit, got {}", self.experiment, self.delta),
            );
        }
        if !(self.delta.is_finite() && self.delta > 1.0) {
            return fail("delta", format!("dimension must satisfy δ > 1, got {}", self.delta));
        }
        let needs_paths = !matches!(self.experiment, BellSymbolic);
        if needs_paths && self.n_paths < 50 && !matches!(self.experiment, DualRoute) {
            return fail("n_paths", format!("need at least 50 paths, got {}", self.n_paths));
        }
        if self.experiment == Tau0Law && self.xs.len() > 1 && self.aux_paths < 50 {
            return fail("aux_paths", format!("need at least 50 paths per extra initial value, got {}", self.aux_paths));
        }
        if self.xs.is_empty() {
            return fail("xs", "at least one initial value required".into());
        }
        if self.xs.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return fail("xs", "initial values must be finite and > 0".into());
        }
        match self.experiment {
            SpitzerDelta2 if self.delta != 2.0 => {
                return fail("delta", format!("exp_spitzer_delta2 needs δ = 2, got {}", self.delta));
            }
            Scaling if self.scales.iter().any(|&c| !(c > 0.0)) => {
                return fail("scales", "scale factors must be > 0".into());
            }
            TimeReversal if self.fractions.iter().any(|&q| !(q > 0.0 && q < 1.0)) => {
                return fail("fractions", "reversal fractions must lie in (0, 1); s = 0 is degenerate".into());
            }
            TauDerivative if self.scales.iter().any(|&g| !(g > 0.0)) => {
                return fail("scales", "gaps y − x must be > 0 (y = x gives 0/0)".into());
            }
            _ => {}
        }
        if self.scheme == Scheme::Lamperti {
            let single_path = matches!(self.experiment, SpitzerDelta2 | Exponent | RatioChain | Moment);
            if !single_path || self.delta < 2.0 {
                return fail(
                    "scheme",
                    format!(
                        "lamperti runs single paths in their own clock and needs δ ≥ 2; not usable for {} at δ = {}",
                        self.experiment, self.delta
                    ),
                );
            }
            if !(self.clock_step > 0.0 && self.clock_step.is_finite()) || self.max_steps == 0 {
                return fail("clock_step", "need a positive clock step and step cap".into());
            }
        }
        if self.scheme == Scheme::ExactSquare && !matches!(self.experiment, Tau0Law | TimeReversal) {
            return fail(
                "scheme",
                format!("exact-square draws uncoupled single paths; not usable for {}", self.experiment),
            );
        }
        if self.experiment == Exponent && self.delta == 2.0 {
            return fail("delta", "n(δ) is infinite at δ = 2; use exp_spitzer_delta2".into());
        }
        if matches!(self.experiment, Exponent | RatioChain | Moment) && self.delta < 2.0 && self.scales.is_empty() {
            return fail("scales", "first-zero limits need at least one gap (y − x)/x".into());
        }
        if matches!(self.experiment, Exponent | RatioChain | Moment) {
            let threshold = crate::laws::n_delta(self.delta)?;
            if self.order == 0 || !threshold.admits(self.order) {
                return fail(
                    "order",
                    format!(
                        "order {} is not below the regularity threshold n(δ) = {} at δ = {}",
                        self.order, threshold.n_delta, self.delta
                    ),
                );
            }
        }
        if self.experiment == Moment && self.order > 1 {
            let nu = moment_index(self.delta)?;
            let hi = nu / (self.order - 1) as f64;
            if !(self.gamma > 0.0 && self.gamma < hi) {
                return fail(
                    "gamma",
                    format!("γ must lie in (0, ν/(n−1)) = (0, {hi}) for a finite moment, got {}", self.gamma),
                );
            }
        }
        Ok(())
    }
}

/// Index `ν` of the gamma law of `U₁` for the context of `δ`.
pub(crate) fn moment_index(delta: f64) -> Result<f64> {
    use crate::laws::DufresneIndex;
    if delta > 2.0 {
        DufresneIndex::Flow.nu(delta)
    } else {
        DufresneIndex::FirstZero.nu(delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        for e in Experiment::ALL {
            let cfg = ExperimentConfig::default_for(e, 42);
            cfg.validate().unwrap();
            let back = ExperimentConfig::parse(&cfg.to_text(), None, None).unwrap();
            assert_eq!(back, cfg, "{e}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let text = "experiment = exp_scaling\nseed = 1\ndleta = 2\n";
        match ExperimentConfig::parse(text, None, None) {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("dleta"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(ExperimentConfig::parse("experiment = exp_scaling\n", None, None).is_err());
        let c = ExperimentConfig::parse("experiment = exp_scaling\n", None, Some(7)).unwrap();
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn tau0_rule_is_named() {
        let text = "experiment = exp_tau0_law\nseed = 1\ndelta = 0.5\n";
        let err = ExperimentConfig::parse(text, None, None).unwrap_err().to_string();
        assert!(err.contains("δ ∈ (1, 2)"), "{err}");
        let text = "experiment = exp_tau0_law\nseed = 1\ndelta = 2.5\n";
        let err = ExperimentConfig::parse(text, None, None).unwrap_err().to_string();
        assert!(err.contains("δ ∈ (1, 2)"), "{err}");
    }

    #[test]
    fn moment_band_edge_is_rejected() {
        let text = "experiment = exp_moment\nseed = 1\ngamma = 2\n";
        assert!(ExperimentConfig::parse(text, None, None).is_err());
    }

    #[test]
    fn mismatched_experiment_is_rejected() {
        let text = "experiment = exp_scaling\nseed = 1\n";
        assert!(ExperimentConfig::parse(text, Some(Experiment::Moment), None).is_err());
    }
}

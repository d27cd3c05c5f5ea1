//! One named, config-driven experiment per claim about the Bessel flow.
//!
//! Each experiment is deterministic given its config (seed included) and
//! returns an [`ExperimentReport`] that echoes the config. Paths are
//! simulated in parallel from per-path streams, so results do not depend on
//! the number of workers.

mod chain;
mod config;
mod exponent;
mod reversal;
mod routes;
mod scaling;
mod spitzer;
mod suite;
mod tau;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{parse_list, parse_pairs, parse_value, ExperimentConfig};
pub use suite::{criteria, run_criterion, Criterion, CriterionOutcome};

use crate::error::{param, Error, Result};
use crate::stats::StatReport;

/// Version tag of the JSON report layout.
pub const REPORT_SCHEMA: &str = "besselflow-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "exp_bell_symbolic")]
    BellSymbolic,
    #[serde(rename = "exp_dual_route")]
    DualRoute,
    #[serde(rename = "exp_marginal")]
    Marginal,
    #[serde(rename = "exp_dufresne")]
    Dufresne,
    #[serde(rename = "exp_scaling")]
    Scaling,
    #[serde(rename = "exp_spitzer_delta2")]
    SpitzerDelta2,
    #[serde(rename = "exp_exponent")]
    Exponent,
    #[serde(rename = "exp_ratio_chain")]
    RatioChain,
    #[serde(rename = "exp_moment")]
    Moment,
    #[serde(rename = "exp_tau0_law")]
    Tau0Law,
    #[serde(rename = "exp_time_reversal")]
    TimeReversal,
    #[serde(rename = "exp_modification")]
    Modification,
    #[serde(rename = "exp_tau_derivative")]
    TauDerivative,
}

impl Experiment {
    pub const ALL: [Experiment; 13] = [
        Experiment::BellSymbolic,
        Experiment::DualRoute,
        Experiment::Marginal,
        Experiment::Dufresne,
        Experiment::Scaling,
        Experiment::SpitzerDelta2,
        Experiment::Exponent,
        Experiment::RatioChain,
        Experiment::Moment,
        Experiment::Tau0Law,
        Experiment::TimeReversal,
        Experiment::Modification,
        Experiment::TauDerivative,
    ];

    pub fn name(self) -> &'static str {
        use Experiment::*;
        match self {
            BellSymbolic => "exp_bell_symbolic",
            DualRoute => "exp_dual_route",
            Marginal => "exp_marginal",
            Dufresne => "exp_dufresne",
            Scaling => "exp_scaling",
            SpitzerDelta2 => "exp_spitzer_delta2",
            Exponent => "exp_exponent",
            RatioChain => "exp_ratio_chain",
            Moment => "exp_moment",
            Tau0Law => "exp_tau0_law",
            TimeReversal => "exp_time_reversal",
            Modification => "exp_modification",
            TauDerivative => "exp_tau_derivative",
        }
    }

    /// The claim the experiment checks, in words.
    pub fn claim(self) -> &'static str {
        use Experiment::*;
        match self {
            BellSymbolic => "∂ⁿ⁺¹ρ = Y·P_n(h) with P_n the complete Bell polynomials in ∂ᵏh",
            DualRoute => "closed-form derivatives agree with the variational equations; the increment ratio equals exp(−((δ−1)/2)∫(ρ^xρ^y)⁻¹)",
            Marginal => "the scheme's terminal law matches the exact squared-Bessel transition",
            Dufresne => "(δ−1)∫exp(β_u − νu/2)du has the law 2(δ−1)/Z_ν",
            Scaling => "ρ^x_{c²t}/c has the law of ρ^{x/c}_t",
            SpitzerDelta2 => "at δ = 2, (ln x)⁻²∫ρ⁻² converges in law to the first passage time T₁",
            Exponent => "ln|∂ⁿρ| / ln x tends to n(δ) − n (δ > 2), and its first-zero analogue for δ < 2",
            RatioChain => "x^{n−1}∂ⁿρ/∂ρ converges in law to U_{n−1} = U₁(U₁−1)⋯(U₁−n+2)",
            Moment => "E sup_t |x^{n−1}∂ⁿρ/∂ρ|^γ converges to E|U_{n−1}|^γ",
            Tau0Law => "τ₀(x) has the law x²/(2γ_ν), ν = 1 − δ/2, and E τ₀(x)^γ scales as x^{2γ}",
            TimeReversal => "BES(δ) reversed from τ₀(x) is BES(4−δ) from 0 up to its last passage at x",
            Modification => "the flow restarted from zero after τ₀(x) has the finite-dimensional laws of ρ",
            TauDerivative => "(τ₀(y) − τ₀(x))/(y − x)² tends to 0 in probability",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                param("experiment", format!("unknown experiment `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub experiment: Experiment,
    pub claim: String,
    pub config: ExperimentConfig,
    /// Checks that decide `passed`.
    pub checks: Vec<StatReport>,
    /// Recorded for inspection only.
    pub diagnostics: Vec<StatReport>,
    /// Numerical trouble: truncated integrals, order violations, censored samples.
    pub flags: Vec<String>,
    pub passed: bool,
}

impl ExperimentReport {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            experiment: config.experiment,
            claim: config.experiment.claim().to_string(),
            config: config.clone(),
            checks: Vec::new(),
            diagnostics: Vec::new(),
            flags: Vec::new(),
            passed: true,
        }
    }

    fn check(&mut self, r: StatReport) {
        self.passed &= r.passed;
        self.checks.push(r.with_seed(self.config.seed));
    }

    fn diagnostic(&mut self, r: StatReport) {
        self.diagnostics.push(r.with_seed(self.config.seed));
    }

    fn flag(&mut self, msg: impl Into<String>) {
        self.flags.push(msg.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports hold only finite-or-null numbers")
    }
}

/// Runs the experiment named in the config.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    use Experiment::*;
    config.validate()?;
    match config.experiment {
        BellSymbolic => routes::bell_symbolic(config),
        DualRoute => routes::dual_route(config),
        Marginal => routes::marginal(config),
        Dufresne => routes::dufresne(config),
        Scaling => scaling::scaling(config),
        SpitzerDelta2 => spitzer::spitzer(config),
        Exponent => exponent::exponent(config),
        RatioChain => chain::ratio_chain(config),
        Moment => chain::moment(config),
        Tau0Law => tau::tau0_law(config),
        TimeReversal => reversal::time_reversal(config),
        Modification => reversal::modification(config),
        TauDerivative => tau::tau_derivative(config),
    }
}

/// `f(i)` for every path index, in parallel, in index order.
pub(crate) fn per_path<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    crate::par::map(n, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
            let json = serde_json::to_string(&e).unwrap();
            assert_eq!(json, format!("\"{}\"", e.name()));
        }
        assert!("exp_nothing".parse::<Experiment>().is_err());
    }
}

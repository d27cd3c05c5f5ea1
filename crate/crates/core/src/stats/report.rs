use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Default significance level for KS tests.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Outcome of one statistical check, ready for a JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub sample_sizes: Vec<usize>,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
    pub seeds: Vec<u64>,
    /// What the statistic was held against (p-value level or tolerance).
    pub threshold: f64,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl StatReport {
    pub fn p_test(name: &str, sample_sizes: Vec<usize>, statistic: f64, p: f64) -> Self {
        Self {
            name: name.to_string(),
            sample_sizes,
            statistic,
            p_value: Some(p),
            ci: None,
            seeds: Vec::new(),
            threshold: DEFAULT_ALPHA,
            passed: p > DEFAULT_ALPHA,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// A check decided by the caller.
    pub fn check(name: &str, statistic: f64, threshold: f64, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            sample_sizes: Vec::new(),
            statistic,
            p_value: None,
            ci: None,
            seeds: Vec::new(),
            threshold,
            passed,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Re-decides a p-value test at level `alpha`.
    pub fn at_level(mut self, alpha: f64) -> Self {
        self.threshold = alpha;
        if let Some(p) = self.p_value {
            self.passed = p > alpha;
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds.push(seed);
        self
    }

    pub fn with_sizes(mut self, sizes: Vec<usize>) -> Self {
        self.sample_sizes = sizes;
        self
    }

    pub fn with_ci(mut self, lo: f64, hi: f64) -> Self {
        self.ci = Some((lo.min(hi), lo.max(hi)));
        self
    }

    pub fn metric(mut self, key: impl Into<String>, value: f64) -> Self {
        self.metrics.insert(key.into(), value);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// Combines with another check: fails if either fails.
    pub fn require(mut self, ok: bool, note: impl Into<String>) -> Self {
        if !ok {
            self.passed = false;
            self.notes.push(note.into());
        }
        self
    }
}

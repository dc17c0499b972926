use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Beta, ModelParams};
use crate::polymer::{JumpRadius, TruncationPolicy, WindowPolicy, DEFAULT_SEARCH_CAP};

/// How environments for different `p` relate within one replica.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Bernoulli fields are stacked by superposition (polymer runs) or
    /// derived from one Poisson field (passage-time runs).
    Coupled,
    /// Every `p` gets its own independent field.
    Independent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    /// Target for `n * kernel_tail_mass(L)` when `radius` is not given.
    pub leak_target: f64,
    pub radius: Option<u64>,
    /// Half-width of the box every slice window is clipped to.
    pub clip: Option<u64>,
    pub expand_cap: u64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig { leak_target: 1e-9, radius: None, clip: Some(256), expand_cap: 1 << 12 }
    }
}

impl TruncationConfig {
    pub fn policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            radius: match self.radius {
                Some(r) => JumpRadius::Fixed(r),
                None => JumpRadius::LeakTarget(self.leak_target),
            },
            window: WindowPolicy::Grow { clip: self.clip },
            expand_cap: self.expand_cap,
        }
    }
}

/// Parameter grids and run controls shared by all experiments. Every field
/// has a default, so a config file only lists what it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub alpha: f64,
    pub c2: f64,
    pub d: usize,
    pub p: Vec<f64>,
    pub beta: Vec<Beta>,
    pub n: Vec<u32>,
    /// Block sizes (block bound) or face-to-face sizes.
    pub r: Vec<u32>,
    /// Concentration exponent: deviations below `-n^{1 - lambda}` are counted.
    pub lambda: f64,
    /// Regularization box side `n^theta`.
    pub theta: f64,
    pub eps: Vec<f64>,
    /// `D_n` budgets as multiples of `n`.
    pub delta: Vec<f64>,
    /// Offsets `q - p` of the superposed environment in the zero-temperature run.
    pub q_offset: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub coupling: Coupling,
    pub truncation: TruncationConfig,
    /// Open-block probability required in the block argument.
    pub percolation_threshold: f64,
    pub budget_levels: usize,
    pub search_cap: u64,
    pub max_search: f64,
    /// Relative rounding slack allowed in pathwise floating-point checks.
    pub tolerance: f64,
    /// Test hook: reverse one pathwise inequality so that it must fail.
    pub inject_violation: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            alpha: 0.5,
            c2: 1.0,
            d: 1,
            p: vec![0.5],
            beta: vec![Beta::NegInf, Beta::Finite(-2.0), Beta::Finite(0.0), Beta::Finite(1.0)],
            n: vec![16],
            r: (1..=8).collect(),
            lambda: 0.5,
            theta: 0.5,
            eps: vec![0.1],
            delta: vec![0.5],
            q_offset: vec![0.0, 0.05],
            replicas: 8,
            seed: 1,
            coupling: Coupling::Coupled,
            truncation: TruncationConfig::default(),
            percolation_threshold: 0.8,
            budget_levels: 256,
            search_cap: DEFAULT_SEARCH_CAP,
            max_search: crate::fpp::DEFAULT_MAX_SEARCH,
            tolerance: 1e-9,
            inject_violation: false,
        }
    }
}

pub(crate) fn bad(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

impl SweepConfig {
    /// Checks everything that does not depend on the experiment being run.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(bad("alpha", "must be positive"));
        }
        if !(self.c2 > 0.0 && self.c2.is_finite()) {
            return Err(bad("c2", "must be positive"));
        }
        if self.d == 0 {
            return Err(bad("d", "must be at least 1"));
        }
        if self.p.is_empty() || self.p.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(bad("p", "must be a nonempty list of values in (0, 1]"));
        }
        if self.beta.is_empty() {
            return Err(bad("beta", "must be nonempty"));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(bad("n", "must be a nonempty list of positive integers"));
        }
        if self.r.is_empty() || self.r.contains(&0) {
            return Err(bad("r", "must be a nonempty list of positive integers"));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(bad("lambda", "must lie in (0, 1)"));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(bad("theta", "must be positive"));
        }
        if self.eps.is_empty() || self.eps.iter().any(|&e| !(e > 0.0)) {
            return Err(bad("eps", "must be a nonempty list of positive values"));
        }
        if self.delta.is_empty() || self.delta.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(bad("delta", "must be a nonempty list of positive values"));
        }
        if self.q_offset.is_empty() || self.q_offset.iter().any(|&e| !(e >= 0.0)) {
            return Err(bad("q_offset", "must be a nonempty list of non-negative values"));
        }
        if self.replicas == 0 {
            return Err(bad("replicas", "must be at least 1"));
        }
        let t = &self.truncation;
        if !(t.leak_target > 0.0) {
            return Err(bad("truncation.leak_target", "must be positive"));
        }
        if t.radius == Some(0) {
            return Err(bad("truncation.radius", "must be positive"));
        }
        if !(self.percolation_threshold > 0.0 && self.percolation_threshold < 1.0) {
            return Err(bad("percolation_threshold", "must lie in (0, 1)"));
        }
        if self.budget_levels == 0 {
            return Err(bad("budget_levels", "must be positive"));
        }
        if self.search_cap == 0 {
            return Err(bad("search_cap", "must be positive"));
        }
        if !(self.max_search > 0.0) {
            return Err(bad("max_search", "must be positive"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(bad("tolerance", "must be non-negative"));
        }
        Ok(())
    }

    /// Model parameters at `(p, beta)`.
    pub fn params(&self, p: f64, beta: Beta) -> Result<ModelParams> {
        ModelParams::new(self.alpha, self.c2, self.d, p, beta)
    }

    pub fn n_max(&self) -> u32 {
        self.n.iter().copied().max().unwrap_or(1)
    }

    /// `p` values strictly below one, sorted and deduplicated.
    pub fn p_below_one(&self) -> Result<Vec<f64>> {
        let mut ps: Vec<f64> = self.p.iter().copied().filter(|&p| p < 1.0).collect();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        if ps.is_empty() {
            return Err(bad("p", "needs at least one value below 1"));
        }
        Ok(ps)
    }

    /// Whether `a >= b` up to the configured rounding slack.
    pub(crate) fn at_least(&self, a: f64, b: f64) -> bool {
        if self.inject_violation {
            return a < b;
        }
        a >= b - self.tolerance * b.abs().max(a.abs()).max(1.0) || a == b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SweepConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_key_rejected() {
        let err = serde_json::from_str::<SweepConfig>(r#"{"alpah": 1.0}"#).unwrap_err();
        assert!(err.to_string().contains("alpah"));
    }

    #[test]
    fn beta_accepts_neg_inf_literal() {
        let c: SweepConfig = serde_json::from_str(r#"{"beta": ["-inf", -1.5]}"#).unwrap();
        assert_eq!(c.beta, vec![Beta::NegInf, Beta::Finite(-1.5)]);
    }

    #[test]
    fn bad_value_names_key() {
        let c = SweepConfig { lambda: 1.5, ..Default::default() };
        assert!(c.validate().unwrap_err().to_string().contains("lambda"));
    }
}

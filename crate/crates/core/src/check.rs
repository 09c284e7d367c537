//! Verification results, tolerance budgets and lab-wide constants.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// A metadata value attached to a [`CheckResult`].
#[derive(Clone, Debug, PartialEq)]
pub enum ContextValue {
    Number(f64),
    Integer(i64),
    Text(String),
    Flag(bool),
}

impl From<f64> for ContextValue {
    fn from(v: f64) -> Self {
        ContextValue::Number(v)
    }
}

impl From<usize> for ContextValue {
    fn from(v: usize) -> Self {
        ContextValue::Integer(v as i64)
    }
}

impl From<u64> for ContextValue {
    fn from(v: u64) -> Self {
        match i64::try_from(v) {
            Ok(i) => ContextValue::Integer(i),
            Err(_) => ContextValue::Text(v.to_string()),
        }
    }
}

impl From<i64> for ContextValue {
    fn from(v: i64) -> Self {
        ContextValue::Integer(v)
    }
}

impl From<bool> for ContextValue {
    fn from(v: bool) -> Self {
        ContextValue::Flag(v)
    }
}

impl From<&str> for ContextValue {
    fn from(v: &str) -> Self {
        ContextValue::Text(v.to_string())
    }
}

impl From<String> for ContextValue {
    fn from(v: String) -> Self {
        ContextValue::Text(v)
    }
}

/// One row of a per-time diagnostic trajectory. Quantities that a check does
/// not track are `NaN`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub w2: f64,
    pub entropy: f64,
    pub fisher: f64,
    pub slack: f64,
}

impl SeriesRow {
    pub fn at(t: f64) -> Self {
        SeriesRow { t, w2: f64::NAN, entropy: f64::NAN, fisher: f64::NAN, slack: f64::NAN }
    }
}

/// Outcome of a single verifier run.
///
/// `pass` is always `measured_slack <= tolerance`; a `NaN` slack fails.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    /// Name of the inequality or identity being measured.
    pub anchor: String,
    pub measured_slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub context: BTreeMap<String, ContextValue>,
    pub series: Vec<SeriesRow>,
}

impl CheckResult {
    pub fn new(name: &str, anchor: &str, measured_slack: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            anchor: anchor.to_string(),
            measured_slack,
            tolerance,
            pass: measured_slack <= tolerance,
            context: BTreeMap::new(),
            series: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<ContextValue>) -> Self {
        self.context.insert(key.to_string(), value.into());
        self
    }

    pub fn with_series(mut self, series: Vec<SeriesRow>) -> Self {
        self.series = series;
        self
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        match self.context.get(key)? {
            ContextValue::Number(v) => Some(*v),
            ContextValue::Integer(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        match self.context.get(key)? {
            ContextValue::Flag(v) => Some(*v),
            _ => None,
        }
    }
}

/// How much slack a grid-level check is allowed before it fails.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    /// A fixed absolute allowance, used for closed-form and pure graph statements.
    Absolute(f64),
    /// `c_tol · h · (1 + log_sup)` where `log_sup` is the sum of the sup-norms of
    /// the log-densities involved.
    Grid { h: f64, c_tol: f64 },
}

impl Budget {
    pub fn grid(h: f64, config: &LabConfig) -> Self {
        Budget::Grid { h, c_tol: config.c_tol }
    }

    pub fn resolve(&self, log_sup: f64) -> f64 {
        match *self {
            Budget::Absolute(a) => a,
            Budget::Grid { h, c_tol } => c_tol * h * (1.0 + log_sup),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Budget::Absolute(_) => "absolute".to_string(),
            Budget::Grid { .. } => "grid".to_string(),
        }
    }
}

/// Tolerance constants and solver knobs shared by every verifier.
#[derive(Clone, Debug, PartialEq)]
pub struct LabConfig {
    /// Constant of the grid budget `c_tol · h · (1 + ‖log ρ₀‖∞ + ‖log ρ₁‖∞)`.
    pub c_tol: f64,
    /// Convex-restriction intrinsicity tolerance in units of `h`.
    pub convex_tol_factor: f64,
    /// Multiplicative slack `c · h` of the interpolation L∞ bound.
    pub interpolation_c: f64,
    /// Metric Brenier spread threshold in units of `h`.
    pub brenier_spread_factor: f64,
    /// Total-variation constant of the Brownian sampler check.
    pub tv_constant: f64,
    /// Largest support for which the heat semigroup is diagonalised.
    pub spectral_cap: usize,
    /// Implicit-Euler step above the spectral cap.
    pub euler_step: f64,
    /// Above this support size W₂ falls back to the entropic solver.
    pub exact_w2_cap: usize,
    /// Regularisation of the entropic fallback.
    pub entropic_eps: f64,
    /// Relative step `δ = rel · t` of time-derivative stencils.
    pub derivative_rel_step: f64,
    /// Allowance for pure algebraic graph identities.
    pub identity_tol: f64,
    /// Allowance for semigroup-level graph statements.
    pub semigroup_tol: f64,
    /// Largest product space that will be materialised.
    pub product_cap: usize,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            c_tol: 8.0,
            convex_tol_factor: 1.5,
            interpolation_c: 8.0,
            brenier_spread_factor: 2.0,
            tv_constant: 3.0,
            spectral_cap: 512,
            euler_step: 1e-3,
            exact_w2_cap: 1024,
            entropic_eps: 1e-3,
            derivative_rel_step: 1e-4,
            identity_tol: 1e-12,
            semigroup_tol: 1e-10,
            product_cap: 4096,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_slack() {
        assert!(CheckResult::new("a", "b", 0.5, 1.0).pass);
        assert!(CheckResult::new("a", "b", 1.0, 1.0).pass);
        assert!(!CheckResult::new("a", "b", 1.5, 1.0).pass);
        assert!(!CheckResult::new("a", "b", f64::NAN, 1.0).pass);
    }

    #[test]
    fn grid_budget_formula() {
        let b = Budget::Grid { h: 0.1, c_tol: 8.0 };
        assert!((b.resolve(2.0) - 2.4).abs() < 1e-15);
        assert_eq!(Budget::Absolute(1e-9).resolve(100.0), 1e-9);
    }
}

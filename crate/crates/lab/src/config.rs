//! Scenario configuration.
//!
//! A configuration is read with unknown keys rejected, then *resolved*: every
//! default (measures, per-check curvature, time grids, overrides) is written
//! out explicitly. The resolved form is what reports echo, and resolving it a
//! second time is the identity.

use std::path::Path;

use ricci_lab_core::check::LabConfig;
use serde::{Deserialize, Serialize};

use crate::error::{io_error, json_error, AppError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Circle {
        length: f64,
        n: usize,
    },
    Interval {
        length: f64,
        n: usize,
    },
    Torus {
        lengths: [f64; 2],
        shape: [usize; 2],
    },
    TwoPoint {
        #[serde(default = "one")]
        distance: f64,
        #[serde(default = "half")]
        m0: f64,
        #[serde(default = "one")]
        weight: f64,
    },
    Cycle {
        n: usize,
    },
    File {
        path: String,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

impl SpaceSpec {
    pub fn is_grid(&self) -> bool {
        matches!(self, SpaceSpec::Circle { .. } | SpaceSpec::Interval { .. } | SpaceSpec::Torus { .. })
    }

    /// Point count known without reading files.
    pub fn size_hint(&self) -> Option<usize> {
        match self {
            SpaceSpec::Circle { n, .. } | SpaceSpec::Interval { n, .. } | SpaceSpec::Cycle { n } => Some(*n),
            SpaceSpec::Torus { shape, .. } => Some(shape[0] * shape[1]),
            SpaceSpec::TwoPoint { .. } => Some(2),
            SpaceSpec::File { .. } => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsSpec {
    /// Finite-difference stencil on grids, unit weights on cycles, the single
    /// edge of a two-point space.
    #[default]
    Auto,
    Matrix {
        w: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// The reference measure `m`.
    Reference,
    /// `∝ m · exp(κ cos(2π(x − center)/L))` on circles and cycles.
    VonMises {
        center: f64,
        kappa: f64,
    },
    /// `∝ m · exp(−d(x, center)²/(2σ²))` on grids, using the model distance.
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
    },
    Point {
        index: usize,
    },
    /// `∝ m · (1 + slope · i/(n−1))`.
    Ramp {
        slope: f64,
    },
    /// Explicit masses; normalised if their sum is within `1e-9` of one.
    Explicit {
        weights: Vec<f64>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuresSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<MeasureSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    CyclicalMonotonicity,
    CdConvexity,
    StrongCd,
    InterpolationBound,
    MetricBrenier,
    EnergyMeasureLimit,
    Leibnitz,
    Parallelogram,
    EnergyMeasure,
    IntrinsicDistance,
    Tensorization,
    Restriction,
    Evi,
    Contraction,
    BakryEmery,
    LogSobolev,
    Dissipation,
    Identification,
    DerivativeW2,
    DerivativeEntropy,
    UltraEvi,
    LipschitzRegularization,
    HjIdentity,
    ProductHj,
    KernelSymmetry,
    ChapmanKolmogorov,
    W1L1,
    Brownian,
}

pub const ALL_CHECKS: [CheckKind; 28] = [
    CheckKind::CyclicalMonotonicity,
    CheckKind::CdConvexity,
    CheckKind::StrongCd,
    CheckKind::InterpolationBound,
    CheckKind::MetricBrenier,
    CheckKind::EnergyMeasureLimit,
    CheckKind::Leibnitz,
    CheckKind::Parallelogram,
    CheckKind::EnergyMeasure,
    CheckKind::IntrinsicDistance,
    CheckKind::Tensorization,
    CheckKind::Restriction,
    CheckKind::Evi,
    CheckKind::Contraction,
    CheckKind::BakryEmery,
    CheckKind::LogSobolev,
    CheckKind::Dissipation,
    CheckKind::Identification,
    CheckKind::DerivativeW2,
    CheckKind::DerivativeEntropy,
    CheckKind::UltraEvi,
    CheckKind::LipschitzRegularization,
    CheckKind::HjIdentity,
    CheckKind::ProductHj,
    CheckKind::KernelSymmetry,
    CheckKind::ChapmanKolmogorov,
    CheckKind::W1L1,
    CheckKind::Brownian,
];

/// Which overrides a check reads.
#[derive(Clone, Copy, Debug, Default)]
struct Params {
    k: bool,
    times: bool,
    eps: bool,
    trials: bool,
    taus: bool,
    horizon: bool,
    steps: bool,
    t: bool,
    s: bool,
    dt: bool,
    paths: bool,
    x0: bool,
    tol: bool,
    maxlen: bool,
    pairs: bool,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::CyclicalMonotonicity => "cyclical_monotonicity",
            CheckKind::CdConvexity => "cd_convexity",
            CheckKind::StrongCd => "strong_cd",
            CheckKind::InterpolationBound => "interpolation_bound",
            CheckKind::MetricBrenier => "metric_brenier",
            CheckKind::EnergyMeasureLimit => "energy_measure_limit",
            CheckKind::Leibnitz => "leibnitz",
            CheckKind::Parallelogram => "parallelogram",
            CheckKind::EnergyMeasure => "energy_measure",
            CheckKind::IntrinsicDistance => "intrinsic_distance",
            CheckKind::Tensorization => "tensorization",
            CheckKind::Restriction => "restriction",
            CheckKind::Evi => "evi",
            CheckKind::Contraction => "contraction",
            CheckKind::BakryEmery => "bakry_emery",
            CheckKind::LogSobolev => "log_sobolev",
            CheckKind::Dissipation => "dissipation",
            CheckKind::Identification => "identification",
            CheckKind::DerivativeW2 => "derivative_w2",
            CheckKind::DerivativeEntropy => "derivative_entropy",
            CheckKind::UltraEvi => "ultra_evi",
            CheckKind::LipschitzRegularization => "lipschitz_regularization",
            CheckKind::HjIdentity => "hj_identity",
            CheckKind::ProductHj => "product_hj",
            CheckKind::KernelSymmetry => "kernel_symmetry",
            CheckKind::ChapmanKolmogorov => "chapman_kolmogorov",
            CheckKind::W1L1 => "w1_l1",
            CheckKind::Brownian => "brownian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ALL_CHECKS.iter().copied().find(|c| c.name() == s)
    }

    /// Needs a lattice grid with a continuum model.
    pub fn needs_grid(self) -> bool {
        matches!(
            self,
            CheckKind::CdConvexity
                | CheckKind::StrongCd
                | CheckKind::InterpolationBound
                | CheckKind::MetricBrenier
                | CheckKind::Restriction
        )
    }

    fn params(self) -> Params {
        let p = Params::default();
        match self {
            CheckKind::CyclicalMonotonicity => Params { maxlen: true, ..p },
            CheckKind::CdConvexity | CheckKind::InterpolationBound => Params { k: true, steps: true, ..p },
            CheckKind::StrongCd => Params { k: true, steps: true, trials: true, ..p },
            CheckKind::MetricBrenier => p,
            CheckKind::EnergyMeasureLimit => Params { times: true, trials: true, ..p },
            CheckKind::Leibnitz | CheckKind::Parallelogram | CheckKind::EnergyMeasure | CheckKind::Restriction => {
                Params { trials: true, tol: true, ..p }
            }
            CheckKind::IntrinsicDistance => Params { pairs: true, tol: true, ..p },
            CheckKind::Tensorization => Params { times: true, ..p },
            CheckKind::Evi | CheckKind::Contraction | CheckKind::UltraEvi => Params { k: true, times: true, ..p },
            CheckKind::BakryEmery | CheckKind::LipschitzRegularization => {
                Params { k: true, times: true, trials: true, tol: true, ..p }
            }
            CheckKind::LogSobolev => Params { k: true, trials: true, tol: true, ..p },
            CheckKind::Dissipation => Params { times: true, ..p },
            CheckKind::Identification => Params { taus: true, horizon: true, ..p },
            CheckKind::DerivativeW2 => Params { t: true, eps: true, ..p },
            CheckKind::DerivativeEntropy => Params { k: true, eps: true, ..p },
            CheckKind::HjIdentity | CheckKind::ProductHj => Params { t: true, dt: true, trials: true, ..p },
            CheckKind::KernelSymmetry => Params { t: true, ..p },
            CheckKind::ChapmanKolmogorov => Params { t: true, s: true, ..p },
            CheckKind::W1L1 => Params { k: true, t: true, pairs: true, ..p },
            CheckKind::Brownian => Params { x0: true, horizon: true, paths: true, ..p },
        }
    }
}

/// One entry of the check list. Unset overrides fall back to scenario-level
/// values and per-check defaults during resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub check: CheckKind,
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maxlen: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[usize; 2]>>,
}

impl CheckSpec {
    pub fn new(check: CheckKind) -> Self {
        CheckSpec {
            check,
            k: None,
            times: None,
            eps: None,
            trials: None,
            taus: None,
            horizon: None,
            steps: None,
            t: None,
            s: None,
            dt: None,
            paths: None,
            x0: None,
            tol: None,
            maxlen: None,
            pairs: None,
        }
    }

    fn unexpected(&self) -> Option<&'static str> {
        let p = self.check.params();
        let given: [(&'static str, bool, bool); 15] = [
            ("K", self.k.is_some(), p.k),
            ("times", self.times.is_some(), p.times),
            ("eps", self.eps.is_some(), p.eps),
            ("trials", self.trials.is_some(), p.trials),
            ("taus", self.taus.is_some(), p.taus),
            ("horizon", self.horizon.is_some(), p.horizon),
            ("steps", self.steps.is_some(), p.steps),
            ("t", self.t.is_some(), p.t),
            ("s", self.s.is_some(), p.s),
            ("dt", self.dt.is_some(), p.dt),
            ("paths", self.paths.is_some(), p.paths),
            ("x0", self.x0.is_some(), p.x0),
            ("tol", self.tol.is_some(), p.tol),
            ("maxlen", self.maxlen.is_some(), p.maxlen),
            ("pairs", self.pairs.is_some(), p.pairs),
        ];
        given.iter().find(|(_, set, allowed)| *set && !*allowed).map(|(k, _, _)| *k)
    }
}

/// Tolerance constants and solver knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub c_tol: f64,
    pub convex_tol_factor: f64,
    pub interpolation_c: f64,
    pub brenier_spread_factor: f64,
    pub tv_constant: f64,
    pub spectral_cap: usize,
    pub euler_step: f64,
    pub exact_w2_cap: usize,
    pub entropic_eps: f64,
    pub derivative_rel_step: f64,
    pub identity_tol: f64,
    pub semigroup_tol: f64,
    pub product_cap: usize,
    /// Budget of the budgeted checks on spaces without a grid spacing.
    pub absolute_budget: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let c = LabConfig::default();
        Tolerances {
            c_tol: c.c_tol,
            convex_tol_factor: c.convex_tol_factor,
            interpolation_c: c.interpolation_c,
            brenier_spread_factor: c.brenier_spread_factor,
            tv_constant: c.tv_constant,
            spectral_cap: c.spectral_cap,
            euler_step: c.euler_step,
            exact_w2_cap: c.exact_w2_cap,
            entropic_eps: c.entropic_eps,
            derivative_rel_step: c.derivative_rel_step,
            identity_tol: c.identity_tol,
            semigroup_tol: c.semigroup_tol,
            product_cap: c.product_cap,
            absolute_budget: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn lab_config(&self) -> LabConfig {
        LabConfig {
            c_tol: self.c_tol,
            convex_tol_factor: self.convex_tol_factor,
            interpolation_c: self.interpolation_c,
            brenier_spread_factor: self.brenier_spread_factor,
            tv_constant: self.tv_constant,
            spectral_cap: self.spectral_cap,
            euler_step: self.euler_step,
            exact_w2_cap: self.exact_w2_cap,
            entropic_eps: self.entropic_eps,
            derivative_rel_step: self.derivative_rel_step,
            identity_tol: self.identity_tol,
            semigroup_tol: self.semigroup_tol,
            product_cap: self.product_cap,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    #[default]
    Json,
    CsvBundle,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub format: ReportFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub space: SpaceSpec,
    #[serde(default)]
    pub weights: WeightsSpec,
    /// Scenario-wide curvature; when absent each check uses the known
    /// constant of the space (zero for grids and cycles).
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub measures: MeasuresSpec,
    /// Absent means the default battery; an empty list runs nothing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckSpec>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_name() -> String {
    "scenario".to_string()
}

fn default_times() -> Vec<f64> {
    vec![1e-3, 1e-2, 1e-1, 1.0]
}

fn default_seed() -> u64 {
    1
}

impl ScenarioConfig {
    pub fn new(space: SpaceSpec) -> Self {
        ScenarioConfig {
            name: default_name(),
            space,
            weights: WeightsSpec::Auto,
            k: None,
            times: default_times(),
            seed: default_seed(),
            measures: MeasuresSpec::default(),
            checks: None,
            tolerances: Tolerances::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error("configuration"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Self::from_json(&text)
    }

    fn is_symmetric_two_point(&self) -> Option<f64> {
        match (&self.space, &self.weights) {
            (SpaceSpec::TwoPoint { m0, weight, .. }, WeightsSpec::Auto) if *m0 == 0.5 => Some(4.0 * weight),
            _ => None,
        }
    }

    /// Curvature used by `check` when neither the check nor the scenario sets one.
    ///
    /// On the symmetric two-point space with edge weight `w` the spectral gap
    /// is `λ = 4w`: the pointwise gradient bounds and the log-Sobolev
    /// inequality hold with `λ`, transport contraction with `λ/2`.
    pub fn default_curvature(&self, check: CheckKind) -> f64 {
        match self.is_symmetric_two_point() {
            Some(lambda) => match check {
                CheckKind::BakryEmery
                | CheckKind::LipschitzRegularization
                | CheckKind::LogSobolev
                | CheckKind::W1L1 => lambda,
                _ => lambda / 2.0,
            },
            None => 0.0,
        }
    }

    /// The default battery for this space.
    pub fn default_checks(&self) -> Vec<CheckSpec> {
        self.default_checks_for(self.space.size_hint(), self.space.is_grid())
    }

    fn default_checks_for(&self, n: Option<usize>, grid: bool) -> Vec<CheckSpec> {
        let small = n.is_some_and(|n| n <= 16);
        let mut out = Vec::new();
        for kind in ALL_CHECKS {
            let include = match kind {
                k if k.needs_grid() => grid,
                CheckKind::Identification => false,
                CheckKind::Tensorization | CheckKind::ProductHj => small,
                CheckKind::LogSobolev => self.k.unwrap_or_else(|| self.default_curvature(kind)) > 0.0,
                _ => true,
            };
            if include {
                out.push(CheckSpec::new(kind));
            }
        }
        out
    }

    fn default_measures(&self) -> (MeasureSpec, MeasureSpec) {
        match &self.space {
            SpaceSpec::Circle { length, .. } => (
                MeasureSpec::VonMises { center: 0.1 * length, kappa: 1.0 },
                MeasureSpec::VonMises { center: 0.5 * length, kappa: 1.0 },
            ),
            SpaceSpec::Cycle { n } => (
                MeasureSpec::VonMises { center: 0.0, kappa: 1.0 },
                MeasureSpec::VonMises { center: 0.5 * *n as f64, kappa: 1.0 },
            ),
            SpaceSpec::Interval { length, .. } => (
                MeasureSpec::Gaussian { center: vec![0.3 * length], sigma: 0.2 * length },
                MeasureSpec::Gaussian { center: vec![0.7 * length], sigma: 0.25 * length },
            ),
            SpaceSpec::Torus { lengths, .. } => {
                let sigma = 0.2 * lengths[0].min(lengths[1]);
                (
                    MeasureSpec::Gaussian { center: vec![0.25 * lengths[0], 0.25 * lengths[1]], sigma },
                    MeasureSpec::Gaussian { center: vec![0.6 * lengths[0], 0.5 * lengths[1]], sigma },
                )
            }
            SpaceSpec::TwoPoint { .. } => (MeasureSpec::Explicit { weights: vec![0.9, 0.1] }, MeasureSpec::Reference),
            SpaceSpec::File { .. } => (MeasureSpec::Ramp { slope: 1.0 }, MeasureSpec::Ramp { slope: -0.5 }),
        }
    }

    fn resolve_check(&self, spec: &CheckSpec, n: Option<usize>) -> Result<CheckSpec> {
        if let Some(key) = spec.unexpected() {
            return Err(AppError::Config(format!("check `{}` does not take `{key}`", spec.check.name())));
        }
        let p = spec.check.params();
        let tol = &self.tolerances;
        let mut r = spec.clone();
        let set_f = |slot: &mut Option<f64>, on: bool, v: f64| {
            if on && slot.is_none() {
                *slot = Some(v);
            }
        };
        set_f(&mut r.k, p.k, self.k.unwrap_or_else(|| self.default_curvature(spec.check)));
        if p.times && r.times.is_none() {
            r.times = Some(match spec.check {
                CheckKind::EnergyMeasureLimit => vec![1e-2, 1e-3, 1e-4],
                _ => self.times.clone(),
            });
        }
        if p.eps && r.eps.is_none() {
            r.eps = Some(match spec.check {
                CheckKind::DerivativeEntropy => vec![1e-1, 1e-2, 1e-3],
                _ => vec![1e-2, 1e-3, 1e-4],
            });
        }
        if p.trials && r.trials.is_none() {
            r.trials = Some(match spec.check {
                CheckKind::LogSobolev => 200,
                CheckKind::StrongCd | CheckKind::ProductHj => 3,
                CheckKind::EnergyMeasureLimit | CheckKind::Restriction | CheckKind::HjIdentity => 5,
                _ => 20,
            });
        }
        if p.taus && r.taus.is_none() {
            r.taus = Some(vec![4e-3, 2e-3, 1e-3]);
        }
        set_f(
            &mut r.horizon,
            p.horizon,
            match spec.check {
                CheckKind::Identification => 0.2,
                _ => 0.5,
            },
        );
        if p.steps && r.steps.is_none() {
            r.steps = Some(8);
        }
        set_f(
            &mut r.t,
            p.t,
            match spec.check {
                CheckKind::DerivativeW2 | CheckKind::HjIdentity | CheckKind::ProductHj => 0.5,
                _ => 0.1,
            },
        );
        set_f(&mut r.s, p.s, 0.1);
        set_f(&mut r.dt, p.dt, 1e-3);
        if p.paths && r.paths.is_none() {
            r.paths = Some(20_000);
        }
        if p.x0 && r.x0.is_none() {
            r.x0 = Some(0);
        }
        set_f(
            &mut r.tol,
            p.tol,
            match spec.check {
                CheckKind::BakryEmery | CheckKind::LipschitzRegularization | CheckKind::LogSobolev => tol.semigroup_tol,
                _ => tol.identity_tol,
            },
        );
        if p.maxlen && r.maxlen.is_none() {
            r.maxlen = Some(4);
        }
        if p.pairs && r.pairs.is_none() {
            if let Some(n) = n {
                r.pairs = Some(default_pairs(spec.check, n));
            }
        }
        validate_resolved(&r)?;
        Ok(r)
    }

    /// Materializes every default. Idempotent.
    pub fn resolve(&self) -> Result<Self> {
        let mut out = self.clone();
        if self.times.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(AppError::Config("`times` must hold positive finite values".into()));
        }
        let (mu, nu) = self.default_measures();
        out.measures.mu.get_or_insert(mu);
        out.measures.nu.get_or_insert(nu);
        let (n, grid) = match &self.space {
            SpaceSpec::File { path } => {
                let loaded = crate::spacefile::load_space(Path::new(path))?;
                (Some(loaded.space.n()), loaded.grid.is_some())
            }
            other => (other.size_hint(), other.is_grid()),
        };
        let checks = self.checks.clone().unwrap_or_else(|| self.default_checks_for(n, grid));
        out.checks = Some(checks.iter().map(|c| self.resolve_check(c, n)).collect::<Result<_>>()?);
        Ok(out)
    }

    pub fn resolved_checks(&self) -> &[CheckSpec] {
        self.checks.as_deref().unwrap_or(&[])
    }
}

/// For `w1_l1` every pair on small spaces and the pairs through point 0
/// otherwise; for the intrinsic distance a handful of pairs through point 0.
fn default_pairs(kind: CheckKind, n: usize) -> Vec<[usize; 2]> {
    match kind {
        CheckKind::W1L1 if n <= 16 => (0..n).flat_map(|x| (x + 1..n).map(move |y| [x, y])).collect(),
        CheckKind::W1L1 => (1..n).map(|y| [0, y]).collect(),
        _ => {
            let stride = (n / 4).max(1);
            (1..n).step_by(stride).take(4).map(|y| [0, y]).collect()
        }
    }
}

fn validate_resolved(r: &CheckSpec) -> Result<()> {
    let bad = |what: &str| Err(AppError::Config(format!("check `{}`: {what}", r.check.name())));
    let positive = |v: &Option<f64>| v.is_none_or(|x| x > 0.0 && x.is_finite());
    let all_positive = |v: &Option<Vec<f64>>| v.as_ref().is_none_or(|xs| xs.iter().all(|&x| x > 0.0 && x.is_finite()));
    if !positive(&r.t) || !positive(&r.s) || !positive(&r.dt) || !positive(&r.horizon) || !positive(&r.tol) {
        return bad("t, s, dt, horizon and tol must be positive");
    }
    if !all_positive(&r.times) || !all_positive(&r.eps) || !all_positive(&r.taus) {
        return bad("times, eps and taus must be positive");
    }
    if r.k.is_some_and(|k| !k.is_finite()) {
        return bad("K must be finite");
    }
    if r.trials == Some(0) || r.steps == Some(0) || r.paths == Some(0) {
        return bad("trials, steps and paths must be positive");
    }
    Ok(())
}

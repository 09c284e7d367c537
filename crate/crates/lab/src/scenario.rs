//! Building spaces from configurations and running check lists.

use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rayon::prelude::*;
use ricci_lab_core::check::{Budget, CheckResult, ContextValue, LabConfig};
use ricci_lab_core::dirichlet::{self, DirichletStructure, HeatOperator};
use ricci_lab_core::entropy_geo::{self, density};
use ricci_lab_core::evi_lab;
use ricci_lab_core::hopflax;
use ricci_lab_core::kernel_sim;
use ricci_lab_core::mmspace::{
    build_circle_grid, build_interval_grid, build_torus_grid, product_space, restrict_convex, GridSpace,
    MetricMeasureSpace, Model,
};
use ricci_lab_core::rng::LabRng;
use ricci_lab_core::transport;

use crate::config::{CheckKind, CheckSpec, MeasureSpec, ScenarioConfig, SpaceSpec, WeightsSpec};
use crate::error::{AppError, Result};
use crate::parallel;
use crate::spacefile::load_space;

/// Space, structure and semigroup of a scenario.
#[derive(Clone, Debug)]
pub struct Built {
    pub space: MetricMeasureSpace,
    pub grid: Option<GridSpace>,
    pub ds: DirichletStructure,
    pub ho: HeatOperator,
    /// Circle length and point positions when the space sits on a circle.
    circle: Option<(f64, Vec<f64>)>,
}

impl Built {
    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn budget(&self, config: &ScenarioConfig) -> Budget {
        match &self.grid {
            Some(gs) => Budget::grid(gs.h(), &config.tolerances.lab_config()),
            None => Budget::Absolute(config.tolerances.absolute_budget),
        }
    }
}

fn matrix(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(AppError::Config(format!("weight matrix must be {n}×{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn grid_spec(spec: &SpaceSpec) -> Result<Option<GridSpace>> {
    Ok(match *spec {
        SpaceSpec::Circle { length, n } => Some(build_circle_grid(length, n)?),
        SpaceSpec::Interval { length, n } => Some(build_interval_grid(length, n)?),
        SpaceSpec::Torus { lengths, shape } => Some(build_torus_grid(lengths[0], shape[0], lengths[1], shape[1])?),
        _ => None,
    })
}

pub fn build(config: &ScenarioConfig) -> Result<Built> {
    let lab = config.tolerances.lab_config();
    let (space, grid, auto) = match &config.space {
        SpaceSpec::Cycle { n } => {
            let ds = DirichletStructure::cycle(*n)?;
            (ds.space().clone(), None, Some(ds))
        }
        SpaceSpec::TwoPoint { distance, m0, weight } => {
            let ds = DirichletStructure::two_point(*distance, *m0, *weight)?;
            (ds.space().clone(), None, Some(ds))
        }
        SpaceSpec::File { path } => {
            let loaded = load_space(Path::new(path))?;
            (loaded.space, loaded.grid, None)
        }
        other => {
            let gs = grid_spec(other)?.expect("grid builders yield grids");
            (gs.base().clone(), Some(gs), None)
        }
    };
    let ds = match (&config.weights, auto, &grid) {
        (WeightsSpec::Matrix { w }, _, _) => DirichletStructure::new(space.clone(), matrix(w, space.n())?)?,
        (WeightsSpec::Auto, Some(ds), _) => ds,
        (WeightsSpec::Auto, None, Some(gs)) => DirichletStructure::grid(gs)?,
        (WeightsSpec::Auto, None, None) => {
            return Err(AppError::Config("automatic weights need a grid model; give a weight matrix".into()))
        }
    };
    let ho = HeatOperator::new(&ds, &lab);
    let circle = match (&config.space, &grid) {
        (SpaceSpec::Cycle { n }, _) => Some((*n as f64, (0..*n).map(|i| i as f64).collect())),
        (_, Some(gs)) => match gs.model() {
            Model::Circle { length } => Some((length, gs.coords().iter().map(|c| c[0]).collect())),
            _ => None,
        },
        _ => None,
    };
    Ok(Built { space, grid, ds, ho, circle })
}

/// Evaluates a measure specification on a built space.
pub fn measure(spec: &MeasureSpec, built: &Built) -> Result<Vec<f64>> {
    let m = built.space.m();
    let n = m.len();
    let weights: Vec<f64> = match spec {
        MeasureSpec::Reference => m.to_vec(),
        MeasureSpec::Point { index } => {
            if *index >= n {
                return Err(AppError::Config(format!("point {index} outside a space of {n} points")));
            }
            (0..n).map(|i| if i == *index { 1.0 } else { 0.0 }).collect()
        }
        MeasureSpec::VonMises { center, kappa } => {
            let (length, pos) = built
                .circle
                .as_ref()
                .ok_or_else(|| AppError::Config("von Mises measures need a circle or a cycle".into()))?;
            let tau = 2.0 * std::f64::consts::PI / length;
            (0..n).map(|i| m[i] * (kappa * (tau * (pos[i] - center)).cos()).exp()).collect()
        }
        MeasureSpec::Gaussian { center, sigma } => {
            let gs =
                built.grid.as_ref().ok_or_else(|| AppError::Config("Gaussian measures need a grid model".into()))?;
            if center.is_empty() || center.len() > 2 || !(*sigma > 0.0) {
                return Err(AppError::Config("Gaussian needs a 1- or 2-point center and sigma > 0".into()));
            }
            let c = [center[0], center.get(1).copied().unwrap_or(0.0)];
            (0..n)
                .map(|i| {
                    let d = gs.model().distance(gs.coord(i), c);
                    m[i] * (-d * d / (2.0 * sigma * sigma)).exp()
                })
                .collect()
        }
        MeasureSpec::Ramp { slope } => {
            if *slope <= -1.0 {
                return Err(AppError::Config("ramp slope must exceed -1".into()));
            }
            let denom = (n.max(2) - 1) as f64;
            (0..n).map(|i| m[i] * (1.0 + slope * i as f64 / denom)).collect()
        }
        MeasureSpec::Explicit { weights } => {
            if weights.len() != n {
                return Err(AppError::Config(format!("explicit measure has {} entries, expected {n}", weights.len())));
            }
            let total: f64 = weights.iter().sum();
            if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(AppError::Config("explicit measure must be nonnegative with unit mass".into()));
            }
            weights.clone()
        }
    };
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(AppError::Config("measure has no mass".into()));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Seed of the check at position `index`, derived from the scenario seed.
pub fn check_seed(seed: u64, index: usize) -> u64 {
    LabRng::new(seed, 1 << 32 | index as u64).next_u64()
}

/// Keeps the trial with the largest slack relative to its tolerance.
fn worst(results: Vec<CheckResult>) -> CheckResult {
    let trials = results.len();
    let ratio = |r: &CheckResult| {
        let q = r.measured_slack / r.tolerance.max(f64::MIN_POSITIVE);
        if q.is_nan() {
            f64::INFINITY
        } else {
            q
        }
    };
    let mut best: Option<CheckResult> = None;
    for r in results {
        if best.as_ref().is_none_or(|b| ratio(&r) > ratio(b)) {
            best = Some(r);
        }
    }
    best.expect("at least one trial").with("trials", trials)
}

struct Ctx<'a> {
    config: &'a ScenarioConfig,
    built: &'a Built,
    lab: LabConfig,
    mu: Vec<f64>,
    nu: Vec<f64>,
}

fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| AppError::Config(format!("unresolved parameter `{key}`")))
}

fn need_vec<'a>(v: &'a Option<Vec<f64>>, key: &str) -> Result<&'a [f64]> {
    v.as_deref().ok_or_else(|| AppError::Config(format!("unresolved parameter `{key}`")))
}

fn grid<'a>(ctx: &'a Ctx) -> Result<&'a GridSpace> {
    ctx.built.grid.as_ref().ok_or_else(|| AppError::Config("this check needs a grid model".into()))
}

fn pairs(spec: &CheckSpec, n: usize) -> Result<Vec<(usize, usize)>> {
    let p = spec.pairs.as_ref().ok_or_else(|| AppError::Config("unresolved parameter `pairs`".into()))?;
    if p.iter().any(|&[a, b]| a >= n || b >= n) {
        return Err(AppError::Config("pair index outside the space".into()));
    }
    Ok(p.iter().map(|&[a, b]| (a, b)).collect())
}

fn run_one(ctx: &Ctx, spec: &CheckSpec, seed: u64) -> Result<CheckResult> {
    let b = ctx.built;
    let n = b.n();
    let m = b.space.m();
    let budget = b.budget(ctx.config);
    let lab = &ctx.lab;
    let mut rng = LabRng::new(seed, 0);
    let mut random = |len: usize| rng.vector(len, -1.0, 1.0);
    let trials = spec.trials.unwrap_or(1);
    let result = match spec.check {
        CheckKind::CyclicalMonotonicity => {
            let sol = transport::solve_w2_exact(&b.space, &ctx.mu, &ctx.nu)?;
            transport::check_cyclical_monotonicity(&b.space, &sol.plan, need(spec.maxlen, "maxlen")?)?
                .with("duality_gap", sol.info.duality_gap)
        }
        CheckKind::CdConvexity => entropy_geo::cd_convexity_check(
            grid(ctx)?,
            &ctx.mu,
            &ctx.nu,
            need(spec.k, "K")?,
            need(spec.steps, "steps")?,
            lab,
        )?,
        CheckKind::StrongCd => {
            let gs = grid(ctx)?;
            let plan = entropy_geo::displacement_interpolation(gs, &ctx.mu, &ctx.nu, need(spec.steps, "steps")?)?;
            let mut out = Vec::new();
            for _ in 0..trials {
                let mut f: Vec<f64> = random(plan.paths.len()).iter().map(|v| 1.0 + v).collect();
                let total: f64 = plan.paths.iter().zip(&f).map(|(p, v)| p.weight * v).sum();
                f.iter_mut().for_each(|v| *v /= total);
                out.push(entropy_geo::strong_cd_weighted_check(gs, &plan, &f, need(spec.k, "K")?, lab)?);
            }
            worst(out)
        }
        CheckKind::InterpolationBound => {
            let gs = grid(ctx)?;
            let plan = entropy_geo::displacement_interpolation(gs, &ctx.mu, &ctx.nu, need(spec.steps, "steps")?)?;
            entropy_geo::interpolation_bound_check(gs, &plan, need(spec.k, "K")?, lab)?
        }
        CheckKind::MetricBrenier => entropy_geo::metric_brenier_check(grid(ctx)?, &ctx.mu, &ctx.nu, lab)?,
        CheckKind::EnergyMeasureLimit => {
            let times = need_vec(&spec.times, "times")?;
            let mut out = Vec::new();
            for _ in 0..trials {
                out.push(dirichlet::energy_measure_limit_check(&b.ho, &random(n), times)?);
            }
            worst(out)
        }
        CheckKind::Leibnitz | CheckKind::Parallelogram | CheckKind::EnergyMeasure => {
            let tol = need(spec.tol, "tol")?;
            let mut out = Vec::new();
            for _ in 0..trials {
                let (f, g, h) = (random(n), random(n), random(n));
                out.push(match spec.check {
                    CheckKind::Leibnitz => dirichlet::leibnitz_check(&b.ds, &f, &g, &h, tol)?,
                    CheckKind::Parallelogram => dirichlet::parallelogram_check(&b.ds, &f, &g, tol)?,
                    _ => dirichlet::energy_measure_check(&b.ds, &f, &g, tol)?,
                });
            }
            worst(out)
        }
        CheckKind::IntrinsicDistance => {
            let mut worst_gap = f64::NEG_INFINITY;
            let mut r = CheckResult::new("intrinsic_distance", "intrinsic distance bounds", 0.0, 0.0);
            let ps = pairs(spec, n)?;
            for (i, &(x, y)) in ps.iter().enumerate() {
                let (lo, hi) = dirichlet::intrinsic_distance_bounds(&b.ds, x, y)?;
                worst_gap = worst_gap.max(lo - hi);
                r = r
                    .with(&format!("pair_{i}"), format!("{x},{y}"))
                    .with(&format!("lower_{i}"), lo)
                    .with(&format!("upper_{i}"), hi)
                    .with(&format!("distance_{i}"), b.space.d(x, y));
            }
            let slack = worst_gap.max(0.0);
            let tol = need(spec.tol, "tol")?;
            let mut out = CheckResult::new("intrinsic_distance", "intrinsic distance bounds", slack, tol);
            out.context = r.context;
            out.with("pairs", ps.len())
        }
        CheckKind::Tensorization => {
            let f = random(n * n);
            dirichlet::tensorization_check(
                &b.ds,
                &b.ds,
                &f,
                need_vec(&spec.times, "times")?,
                ctx.config.tolerances.product_cap,
            )?
        }
        CheckKind::Restriction => {
            let gs = grid(ctx)?;
            let half = match gs.model() {
                Model::Circle { length } | Model::Interval { length } => 0.5 * length,
                Model::Torus { lengths } => 0.5 * lengths[0],
            };
            let sel = restrict_convex(gs, |_, c| c[0] < half, lab.convex_tol_factor)?;
            let h = gs.h();
            let inside: Vec<bool> = (0..n).map(|i| sel.parent.contains(&i)).collect();
            let interior: Vec<bool> = (0..n)
                .map(|x| {
                    inside[x] && (0..n).filter(|&z| !inside[z]).all(|z| b.space.d(x, z) >= 2.0 * h * (1.0 - 1e-12))
                })
                .collect();
            if !interior.iter().any(|&v| v) {
                return Err(AppError::Config("restriction leaves no interior points; refine the grid".into()));
            }
            let tol = need(spec.tol, "tol")?;
            let mut out = Vec::new();
            for _ in 0..trials {
                let f: Vec<f64> = random(n).iter().zip(&interior).map(|(v, &i)| if i { *v } else { 0.0 }).collect();
                out.push(dirichlet::restriction_check(&b.ds, &sel.parent, h, &f, tol)?);
            }
            worst(out).with("selected_points", sel.parent.len())
        }
        CheckKind::Evi => evi_lab::evi_check(
            &b.ho,
            &ctx.mu,
            &ctx.nu,
            need(spec.k, "K")?,
            need_vec(&spec.times, "times")?,
            budget,
            lab,
        )?,
        CheckKind::Contraction => evi_lab::contraction_check(
            &b.ho,
            &ctx.mu,
            &ctx.nu,
            need(spec.k, "K")?,
            need_vec(&spec.times, "times")?,
            budget,
            lab,
        )?,
        CheckKind::UltraEvi => {
            evi_lab::ultra_evi_check(&b.ho, &ctx.mu, need(spec.k, "K")?, need_vec(&spec.times, "times")?, budget, lab)?
        }
        CheckKind::BakryEmery | CheckKind::LipschitzRegularization => {
            let (k, times, tol) = (need(spec.k, "K")?, need_vec(&spec.times, "times")?, need(spec.tol, "tol")?);
            let mut out = Vec::new();
            for _ in 0..trials {
                let f = random(n);
                out.push(if spec.check == CheckKind::BakryEmery {
                    evi_lab::bakry_emery_check(&b.ho, &f, k, times, tol)?
                } else {
                    evi_lab::lipschitz_regularization_check(&b.ho, &f, k, times, tol)?
                });
            }
            worst(out)
        }
        CheckKind::LogSobolev => {
            evi_lab::log_sobolev_check(&b.ds, need(spec.k, "K")?, trials, seed, need(spec.tol, "tol")?)?
        }
        CheckKind::Dissipation => {
            evi_lab::dissipation_check(&b.ho, &density(&ctx.mu, m), need_vec(&spec.times, "times")?, lab)?
        }
        CheckKind::Identification => evi_lab::identification_check(
            &b.ho,
            &density(&ctx.mu, m),
            need_vec(&spec.taus, "taus")?,
            need(spec.horizon, "horizon")?,
        )?,
        CheckKind::DerivativeW2 => evi_lab::derivative_w2_check(
            &b.ho,
            &density(&ctx.mu, m),
            &ctx.nu,
            need(spec.t, "t")?,
            need_vec(&spec.eps, "eps")?,
            budget,
            lab,
        )?,
        CheckKind::DerivativeEntropy => evi_lab::derivative_entropy_check(
            &b.ds,
            &density(&ctx.mu, m),
            &density(&ctx.nu, m),
            need(spec.k, "K")?,
            need_vec(&spec.eps, "eps")?,
            budget,
        )?,
        CheckKind::HjIdentity => {
            let (t, dt) = (need(spec.t, "t")?, need(spec.dt, "dt")?);
            let mut out = Vec::new();
            for _ in 0..trials {
                out.push(hopflax::hj_identity_check(&b.space, &random(n), t, dt)?);
            }
            worst(out)
        }
        CheckKind::ProductHj => {
            let (t, dt) = (need(spec.t, "t")?, need(spec.dt, "dt")?);
            let (_, map) = product_space(&b.space, &b.space, ctx.config.tolerances.product_cap)?;
            let mut out = Vec::new();
            for _ in 0..trials {
                out.push(hopflax::product_hj_check(&b.space, &b.space, &map, &random(map.len()), t, dt)?);
            }
            worst(out)
        }
        CheckKind::KernelSymmetry => {
            let t = need(spec.t, "t")?;
            kernel_sim::symmetry_check(&kernel_sim::heat_kernel(&b.ho, t)?).with("t", t)
        }
        CheckKind::ChapmanKolmogorov => {
            kernel_sim::chapman_kolmogorov_check(&b.ho, need(spec.t, "t")?, need(spec.s, "s")?)?
        }
        CheckKind::W1L1 => {
            kernel_sim::w1_l1_check(&b.ho, need(spec.k, "K")?, need(spec.t, "t")?, &pairs(spec, n)?, budget)?
        }
        CheckKind::Brownian => {
            let x0 = need(spec.x0, "x0")?;
            let horizon = need(spec.horizon, "horizon")?;
            let counts = brownian_counts(&b.ds, x0, horizon, need(spec.paths, "paths")?, seed)?;
            kernel_sim::empirical_vs_kernel_from_counts(
                &b.ho,
                x0,
                horizon,
                &counts,
                seed,
                ctx.config.tolerances.tv_constant,
            )?
        }
    };
    Ok(result)
}

/// Final-state histogram of `paths` sampled chains, sampled in parallel.
/// Each path draws from its own stream, so counts do not depend on scheduling.
pub fn brownian_counts(ds: &DirichletStructure, x0: usize, horizon: f64, paths: u64, seed: u64) -> Result<Vec<u64>> {
    let finals: Vec<usize> = (0..paths)
        .into_par_iter()
        .map(|i| kernel_sim::sample_final_state(ds, x0, horizon, seed, i))
        .collect::<std::result::Result<_, _>>()?;
    let mut counts = vec![0u64; ds.n()];
    for s in finals {
        counts[s] += 1;
    }
    Ok(counts)
}

/// Result of one entry of the check list.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub index: usize,
    pub spec: CheckSpec,
    pub seed: u64,
    pub result: std::result::Result<CheckResult, String>,
    pub elapsed: Duration,
}

impl CheckOutcome {
    pub fn status(&self) -> &'static str {
        match &self.result {
            Ok(r) if r.pass => "pass",
            Ok(r) if is_diagnostic(r) => "warn",
            Ok(_) => "fail",
            Err(_) => "error",
        }
    }
}

/// Diagnostic checks report a failed threshold as `warn` and never set the
/// exit code.
pub fn is_diagnostic(r: &CheckResult) -> bool {
    matches!(r.context.get("diagnostic"), Some(ContextValue::Flag(true)))
}

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    /// Fully resolved configuration.
    pub config: ScenarioConfig,
    pub outcomes: Vec<CheckOutcome>,
}

impl ScenarioRun {
    /// 0 when everything passes, 1 when some check fails, 2 when some entry errored.
    pub fn exit_code(&self) -> i32 {
        if self.outcomes.iter().any(|o| o.result.is_err()) {
            2
        } else if self.outcomes.iter().any(|o| o.status() == "fail") {
            1
        } else {
            0
        }
    }
}

/// Resolves the configuration, builds the space and runs the checks on the
/// bounded pool. Configuration errors abort; build and check errors become
/// error entries.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun> {
    let config = config.resolve()?;
    let checks = config.resolved_checks().to_vec();
    let prepared = build(&config).and_then(|built| {
        let mu = measure(config.measures.mu.as_ref().expect("resolved"), &built)?;
        let nu = measure(config.measures.nu.as_ref().expect("resolved"), &built)?;
        Ok((built, mu, nu))
    });
    let outcomes = match prepared {
        Err(e) => {
            let msg = e.to_string();
            checks
                .iter()
                .enumerate()
                .map(|(index, spec)| CheckOutcome {
                    index,
                    spec: spec.clone(),
                    seed: check_seed(config.seed, index),
                    result: Err(msg.clone()),
                    elapsed: Duration::ZERO,
                })
                .collect()
        }
        Ok((built, mu, nu)) => {
            let ctx = Ctx { config: &config, built: &built, lab: config.tolerances.lab_config(), mu, nu };
            parallel::install(|| {
                checks
                    .par_iter()
                    .enumerate()
                    .map(|(index, spec)| {
                        let seed = check_seed(config.seed, index);
                        let start = Instant::now();
                        let result = run_one(&ctx, spec, seed).map_err(|e| e.to_string());
                        CheckOutcome { index, spec: spec.clone(), seed, result, elapsed: start.elapsed() }
                    })
                    .collect()
            })
        }
    };
    Ok(ScenarioRun { config, outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_check_list_passes() {
        let mut c = ScenarioConfig::new(SpaceSpec::Cycle { n: 8 });
        c.checks = Some(Vec::new());
        let run = run_scenario(&c).unwrap();
        assert!(run.outcomes.is_empty());
        assert_eq!(run.exit_code(), 0);
    }

    #[test]
    fn build_errors_become_entries() {
        let mut c = ScenarioConfig::new(SpaceSpec::Cycle { n: 8 });
        c.weights = WeightsSpec::Matrix { w: vec![vec![0.0; 3]; 3] };
        c.checks = Some(vec![CheckSpec::new(CheckKind::Leibnitz)]);
        let run = run_scenario(&c).unwrap();
        assert_eq!(run.outcomes[0].status(), "error");
        assert_eq!(run.exit_code(), 2);
    }

    #[test]
    fn von_mises_is_normalised() {
        let c = ScenarioConfig::new(SpaceSpec::Circle { length: 20.0, n: 32 });
        let built = build(&c).unwrap();
        let mu = measure(&MeasureSpec::VonMises { center: 2.0, kappa: 1.0 }, &built).unwrap();
        assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let peak = mu.iter().cloned().fold(0.0, f64::max);
        assert_eq!(mu.iter().position(|&v| v == peak), Some(3));
    }
}

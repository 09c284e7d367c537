//! Relative entropy, Fisher information and displacement interpolation on
//! grids, with the entropy-convexity verifiers built on them.

use alloc::vec;
use alloc::vec::Vec;

use crate::check::{Budget, CheckResult, LabConfig, SeriesRow};
use crate::dirichlet::DirichletStructure;
use crate::error::{hypothesis, invalid, LabError};
use crate::fmath::{abs, exp, ln, sqrt};
use crate::mmspace::{GridSpace, MetricMeasureSpace};
use crate::transport::{solve_w2_exact, SolveInfo};

/// `Ent(μ | m) = Σ μ log(μ/m)`, `+∞` when `μ` charges an `m`-null point.
pub fn relative_entropy(mu: &[f64], m: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&a, &b) in mu.iter().zip(m) {
        if a > 0.0 {
            if !(b > 0.0) {
                return f64::INFINITY;
            }
            s += a * (ln(a) - ln(b));
        }
    }
    s
}

/// Entropy of the measure `ρ m` given its density.
pub fn density_entropy(rho: &[f64], m: &[f64]) -> f64 {
    rho.iter().zip(m).map(|(&r, &w)| if w > 0.0 { w * crate::fmath::xlogx(r) } else { 0.0 }).sum()
}

/// Fisher information `4 C(√ρ)`.
pub fn fisher_information(ds: &DirichletStructure, rho: &[f64]) -> f64 {
    let root: Vec<f64> = rho.iter().map(|&r| sqrt(r.max(0.0))).collect();
    4.0 * ds.cheeger_energy(&root)
}

/// Density `μ/m` on the support of `m`, zero elsewhere.
pub fn density(mu: &[f64], m: &[f64]) -> Vec<f64> {
    mu.iter().zip(m).map(|(&a, &b)| if b > 0.0 { a / b } else { 0.0 }).collect()
}

/// Measure `ρ m`.
pub fn measure(rho: &[f64], m: &[f64]) -> Vec<f64> {
    rho.iter().zip(m).map(|(a, b)| a * b).collect()
}

/// Sup-norm of `log ρ` over the points where `ρ > 0`.
pub fn log_sup(rho: &[f64], m: &[f64]) -> f64 {
    rho.iter().zip(m).filter(|(r, w)| **r > 0.0 && **w > 0.0).fold(0.0, |acc, (&r, _)| acc.max(abs(ln(r))))
}

/// One discretised geodesic carried by the plan.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPath {
    pub weight: f64,
    pub source: usize,
    pub target: usize,
    /// Grid points at times `k/T`, `k = 0..=T`.
    pub points: Vec<usize>,
    /// Largest model distance between a sampled geodesic point and its grid point.
    pub rounding: f64,
}

/// A discrete optimal geodesic plan: one rounded model geodesic per support
/// pair of an exact optimal plan, weighted by the plan.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPlan {
    pub steps: usize,
    pub n: usize,
    pub paths: Vec<GeodesicPath>,
    /// `W₂(μ₀, μ₁)`.
    pub w2: f64,
    pub info: SolveInfo,
}

impl GeodesicPlan {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 / self.steps as f64).collect()
    }

    /// `(e_{k/T})_♯ π`.
    pub fn measure_at(&self, k: usize) -> Vec<f64> {
        self.weighted_measure_at(k, None)
    }

    fn weighted_measure_at(&self, k: usize, f: Option<&[f64]>) -> Vec<f64> {
        let mut mu = vec![0.0; self.n];
        for (p, path) in self.paths.iter().enumerate() {
            let scale = f.map_or(1.0, |f| f[p]);
            mu[path.points[k]] += scale * path.weight;
        }
        mu
    }

    pub fn max_rounding(&self) -> f64 {
        self.paths.iter().fold(0.0, |a, p| a.max(p.rounding))
    }

    /// Largest distance between the end points of a path.
    pub fn max_pair_distance(&self, space: &MetricMeasureSpace) -> f64 {
        self.paths.iter().fold(0.0, |a, p| a.max(space.d(p.source, p.target)))
    }
}

/// Displacement interpolation between `mu0` and `mu1` sampled at `steps + 1` times.
pub fn displacement_interpolation(
    gs: &GridSpace,
    mu0: &[f64],
    mu1: &[f64],
    steps: usize,
) -> Result<GeodesicPlan, LabError> {
    if steps == 0 {
        return Err(invalid("need at least one time step"));
    }
    let sol = solve_w2_exact(gs.base(), mu0, mu1)?;
    let model = gs.model();
    let mut paths = Vec::new();
    for (x, y, weight) in sol.plan.support(0.0) {
        let (cx, cy) = (gs.coord(x), gs.coord(y));
        let disp = model.displacements(cx, cy)[0];
        let mut points = Vec::with_capacity(steps + 1);
        let mut rounding: f64 = 0.0;
        for k in 0..=steps {
            let p = if k == 0 {
                x
            } else if k == steps {
                y
            } else {
                let q = model.advance(cx, disp, k as f64 / steps as f64);
                let g = gs.nearest(q);
                rounding = rounding.max(model.distance(q, gs.coord(g)));
                g
            };
            points.push(p);
        }
        paths.push(GeodesicPath { weight, source: x, target: y, points, rounding });
    }
    Ok(GeodesicPlan { steps, n: gs.n(), paths, w2: sol.w2, info: sol.info })
}

fn convexity_profile(
    space: &MetricMeasureSpace,
    measures: &[Vec<f64>],
    w2_sq: f64,
    k_curv: f64,
) -> Result<(f64, Vec<SeriesRow>), LabError> {
    let m = space.m();
    let steps = measures.len() - 1;
    let e0 = relative_entropy(&measures[0], m);
    let e1 = relative_entropy(&measures[steps], m);
    if !e0.is_finite() || !e1.is_finite() {
        return Err(LabError::InfiniteEntropy("an end point"));
    }
    let mut worst: f64 = 0.0;
    let mut series = Vec::with_capacity(steps + 1);
    for (k, mu) in measures.iter().enumerate() {
        let t = k as f64 / steps as f64;
        let e = relative_entropy(mu, m);
        let gap = e - (1.0 - t) * e0 - t * e1 + 0.5 * k_curv * t * (1.0 - t) * w2_sq;
        worst = worst.max(gap);
        series.push(SeriesRow { t, w2: t * sqrt(w2_sq), entropy: e, fisher: f64::NAN, slack: gap.max(0.0) });
    }
    Ok((worst, series))
}

fn endpoint_log_sup(space: &MetricMeasureSpace, mu0: &[f64], mu1: &[f64]) -> f64 {
    let m = space.m();
    log_sup(&density(mu0, m), m) + log_sup(&density(mu1, m), m)
}

/// Entropy convexity `Ent(μ_t) ≤ (1−t)Ent(μ₀) + t Ent(μ₁) − (K/2) t(1−t) W₂²`
/// along the displacement interpolation.
pub fn cd_convexity_check(
    gs: &GridSpace,
    mu0: &[f64],
    mu1: &[f64],
    k_curv: f64,
    steps: usize,
    config: &LabConfig,
) -> Result<CheckResult, LabError> {
    let space = gs.base();
    for (mu, which) in [(mu0, "initial measure"), (mu1, "final measure")] {
        if mu.len() != space.n() {
            return Err(invalid("measure length differs from the space"));
        }
        if !relative_entropy(mu, space.m()).is_finite() {
            return Err(LabError::InfiniteEntropy(which));
        }
    }
    let plan = displacement_interpolation(gs, mu0, mu1, steps)?;
    let measures: Vec<Vec<f64>> = (0..=steps).map(|k| plan.measure_at(k)).collect();
    let (worst, series) = convexity_profile(space, &measures, plan.w2 * plan.w2, k_curv)?;
    let budget = Budget::grid(gs.h(), config);
    let ls = endpoint_log_sup(space, mu0, mu1);
    Ok(CheckResult::new(
        "cd_convexity",
        "K-convexity of the entropy along geodesics",
        worst.max(0.0),
        budget.resolve(ls),
    )
    .with("K", k_curv)
    .with("h", gs.h())
    .with("steps", steps)
    .with("w2", plan.w2)
    .with("log_sup", ls)
    .with("max_rounding", plan.max_rounding())
    .with("multiple_optima", plan.info.multiple_optima)
    .with("degenerate_basis", plan.info.degenerate_basis)
    .with("budget", budget.describe())
    .with_series(series))
}

/// The convexity functional along the reweighted plan `F · π`.
pub fn strong_cd_weighted_check(
    gs: &GridSpace,
    plan: &GeodesicPlan,
    f: &[f64],
    k_curv: f64,
    config: &LabConfig,
) -> Result<CheckResult, LabError> {
    if f.len() != plan.paths.len() {
        return Err(invalid("path weight vector has the wrong length"));
    }
    if f.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(invalid("path weights must be finite and nonnegative"));
    }
    let total: f64 = plan.paths.iter().zip(f).map(|(p, v)| p.weight * v).sum();
    if abs(total - 1.0) > 1e-9 {
        return Err(invalid("path weights are not normalised"));
    }
    let space = gs.base();
    let measures: Vec<Vec<f64>> = (0..=plan.steps).map(|k| plan.weighted_measure_at(k, Some(f))).collect();
    let (mu0, mu1) = (&measures[0], &measures[plan.steps]);
    let w2 = solve_w2_exact(space, mu0, mu1)?.w2;
    let (worst, series) = convexity_profile(space, &measures, w2 * w2, k_curv)?;
    let active = plan.paths.iter().zip(f).filter(|(p, v)| p.weight * **v > 0.0).count();
    let budget = Budget::grid(gs.h(), config);
    let ls = endpoint_log_sup(space, mu0, mu1);
    Ok(CheckResult::new(
        "strong_cd_weighted",
        "convexity along reweighted optimal plans",
        worst.max(0.0),
        budget.resolve(ls),
    )
    .with("K", k_curv)
    .with("w2", w2)
    .with("active_paths", active)
    .with("degenerate", active <= 1)
    .with("log_sup", ls)
    .with_series(series))
}

/// `‖ρ_t‖∞ ≤ e^{K⁻ t(1−t) S²/2} ‖ρ₀‖∞^{1−t} ‖ρ₁‖∞^t` up to a factor `1 + c h`.
///
/// The slack is `max_t (‖ρ_t‖∞ / bound_t − 1)⁺` and the tolerance `c h`.
pub fn interpolation_bound_check(
    gs: &GridSpace,
    plan: &GeodesicPlan,
    k_curv: f64,
    config: &LabConfig,
) -> Result<CheckResult, LabError> {
    let space = gs.base();
    let m = space.m();
    let sup = |mu: &[f64]| -> f64 { mu.iter().zip(m).filter(|(_, w)| **w > 0.0).fold(0.0, |a, (x, w)| a.max(x / w)) };
    let r0 = sup(&plan.measure_at(0));
    let r1 = sup(&plan.measure_at(plan.steps));
    let s = plan.max_pair_distance(space);
    let kneg = (-k_curv).max(0.0);
    let mut worst: f64 = 0.0;
    let mut series = Vec::new();
    for k in 0..=plan.steps {
        let t = k as f64 / plan.steps as f64;
        let bound =
            exp(0.5 * kneg * t * (1.0 - t) * s * s) * crate::fmath::powf(r0, 1.0 - t) * crate::fmath::powf(r1, t);
        let rt = sup(&plan.measure_at(k));
        let excess = (rt / bound - 1.0).max(0.0);
        worst = worst.max(excess);
        let mut row = SeriesRow::at(t);
        row.slack = excess;
        series.push(row);
    }
    Ok(CheckResult::new(
        "interpolation_bound",
        "uniform density bound along interpolations",
        worst,
        config.interpolation_c * gs.h(),
    )
    .with("K", k_curv)
    .with("sup_rho0", r0)
    .with("sup_rho1", r1)
    .with("max_pair_distance", s)
    .with_series(series))
}

/// Metric Brenier diagnostic: per-point spread of transport distances and its
/// distance to the ascending slope of the Kantorovich potential.
pub fn metric_brenier_check(
    gs: &GridSpace,
    mu0: &[f64],
    mu1: &[f64],
    config: &LabConfig,
) -> Result<CheckResult, LabError> {
    let space = gs.base();
    if !relative_entropy(mu0, space.m()).is_finite() {
        return Err(hypothesis("initial measure must have a density"));
    }
    let sol = solve_w2_exact(space, mu0, mu1)?;
    let n = space.n();
    let phi = &sol.potentials.phi;
    let mut spread: f64 = 0.0;
    let mut slope_gap: f64 = 0.0;
    for x in (0..n).filter(|&x| mu0[x] > 0.0) {
        let dists: Vec<f64> = (0..n).filter(|&y| sol.plan.gamma[(x, y)] > 0.0).map(|y| space.d(x, y)).collect();
        let lo = dists.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = dists.iter().copied().fold(0.0, f64::max);
        spread = spread.max(hi - lo);
        let slope = (0..n)
            .filter(|&y| y != x && space.in_support(y))
            .map(|y| (phi[y] - phi[x]).max(0.0) / space.d(x, y))
            .fold(0.0, f64::max);
        slope_gap = slope_gap.max(abs(0.5 * (lo + hi) - slope));
    }
    let threshold = config.brenier_spread_factor * gs.h();
    Ok(CheckResult::new("metric_brenier", "metric Brenier theorem", spread, threshold)
        .with("max_spread", spread)
        .with("max_slope_gap", slope_gap)
        .with("diagnostic", true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::{build_circle_grid, build_interval_grid};

    #[test]
    fn entropy_values() {
        let m = [0.25; 4];
        assert_eq!(relative_entropy(&m, &m), 0.0);
        assert!((relative_entropy(&[1.0, 0.0, 0.0, 0.0], &m) - libm::log(4.0)).abs() < 1e-15);
        assert_eq!(relative_entropy(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn constant_density_has_no_fisher_information() {
        let ds = DirichletStructure::cycle(5).unwrap();
        assert_eq!(fisher_information(&ds, &[1.0; 5]), 0.0);
    }

    #[test]
    fn midpoint_of_interval_diracs() {
        let gs = build_interval_grid(1.0, 5).unwrap();
        let plan = displacement_interpolation(&gs, &[1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(plan.measure_at(1), vec![0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn static_interpolation_is_constant() {
        let gs = build_circle_grid(1.0, 8).unwrap();
        let mu: Vec<f64> = (1..=8).map(|i| i as f64 / 36.0).collect();
        let plan = displacement_interpolation(&gs, &mu, &mu, 4).unwrap();
        for k in 0..=4 {
            let mk = plan.measure_at(k);
            assert!(crate::fmath::sup_dist(&mk, &mu) < 1e-15);
        }
        let r = cd_convexity_check(&gs, &mu, &mu, 0.0, 4, &LabConfig::default()).unwrap();
        assert!(r.measured_slack.abs() < 1e-14);
    }
}

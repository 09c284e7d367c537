//! Flow-level verifiers: evolution variational inequality, contraction,
//! Bakry–Émery, log-Sobolev, entropy dissipation, the minimizing-movement
//! scheme, and the derivative and regularization estimates.
//!
//! The descending slope of the entropy is represented throughout by the Fisher
//! information `4 C(√ρ)`.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::check::{Budget, CheckResult, LabConfig, SeriesRow};
use crate::dirichlet::{DirichletStructure, HeatOperator};
use crate::entropy_geo::{density, density_entropy, fisher_information, log_sup, measure, relative_entropy};
use crate::error::{hypothesis, invalid, LabError};
use crate::fmath::{abs, exp, expm1, ln, sqrt};
use crate::mmspace::MetricMeasureSpace;
use crate::rng::LabRng;
use crate::transport::{solve_w2_exact, transport_simplex, w1, w2_auto};

/// Name under which the Fisher-information substitution is stamped into reports.
pub const SLOPE_SURROGATE: &str = "fisher_information_4C(sqrt(rho))";

/// `I_K(t) = ∫₀ᵗ e^{Kr} dr`.
pub fn ik(k: f64, t: f64) -> f64 {
    if abs(k) < 1e-14 {
        t + 0.5 * k * t * t
    } else {
        expm1(k * t) / k
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Heat,
    Jko,
}

impl Provenance {
    pub fn name(&self) -> &'static str {
        match self {
            Provenance::Heat => "heat",
            Provenance::Jko => "jko",
        }
    }
}

/// Densities w.r.t. `m` along a flow.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl FlowTrajectory {
    /// Largest `|Σ ρ m − 1|` over the trajectory.
    pub fn mass_defect(&self, m: &[f64]) -> f64 {
        self.densities.iter().map(|r| abs(r.iter().zip(m).map(|(a, b)| a * b).sum::<f64>() - 1.0)).fold(0.0, f64::max)
    }
}

fn check_measure(space: &MetricMeasureSpace, mu: &[f64], what: &'static str) -> Result<(), LabError> {
    if mu.len() != space.n() {
        return Err(invalid("measure length differs from the space"));
    }
    if mu.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(invalid("measure entries must be finite and nonnegative"));
    }
    if abs(mu.iter().sum::<f64>() - 1.0) > 1e-9 {
        return Err(invalid("measure must have unit mass"));
    }
    if !relative_entropy(mu, space.m()).is_finite() {
        return Err(LabError::InfiniteEntropy(what));
    }
    Ok(())
}

/// `H_t μ` as a measure; rounding negatives are clipped.
pub fn evolve_measure(ho: &HeatOperator, mu: &[f64], t: f64) -> Result<Vec<f64>, LabError> {
    let m = ho.structure().m();
    let rho = ho.apply(&density(mu, m), t)?;
    Ok(rho.iter().zip(m).map(|(r, w)| (r * w).max(0.0)).collect())
}

/// Heat flow of a density sampled at `times`.
pub fn heat_flow(ho: &HeatOperator, rho0: &[f64], times: &[f64]) -> Result<FlowTrajectory, LabError> {
    check_times(times)?;
    let densities = times.iter().map(|&t| ho.apply(rho0, t).map_err(LabError::from)).collect::<Result<Vec<_>, _>>()?;
    Ok(FlowTrajectory { times: times.to_vec(), densities, provenance: Provenance::Heat })
}

fn check_times(times: &[f64]) -> Result<(), LabError> {
    if times.is_empty() {
        return Err(invalid("time grid is empty"));
    }
    if times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(invalid("times must be finite and nonnegative"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("times must be strictly increasing"));
    }
    Ok(())
}

/// Central difference at steps `δ` and `δ/2` combined by Richardson extrapolation.
pub fn richardson_derivative(
    mut f: impl FnMut(f64) -> Result<f64, LabError>,
    t: f64,
    delta: f64,
) -> Result<f64, LabError> {
    let d1 = (f(t + delta)? - f(t - delta)?) / (2.0 * delta);
    let d2 = (f(t + 0.5 * delta)? - f(t - 0.5 * delta)?) / delta;
    Ok((4.0 * d2 - d1) / 3.0)
}

fn squared_w2(space: &MetricMeasureSpace, a: &[f64], b: &[f64], config: &LabConfig) -> Result<(f64, f64), LabError> {
    let (w, extra) = w2_auto(space, a, b, config.exact_w2_cap, config.entropic_eps)?;
    Ok((w * w, extra))
}

fn measure_log_sup(space: &MetricMeasureSpace, mu: &[f64]) -> f64 {
    log_sup(&density(mu, space.m()), space.m())
}

/// Evolution variational inequality along the heat flow from `mu`, tested
/// against `nu`, in integral form on every pair `s < t` of the grid and in
/// differential form at interior times.
pub fn evi_check(
    ho: &HeatOperator,
    mu: &[f64],
    nu: &[f64],
    k: f64,
    times: &[f64],
    budget: Budget,
    config: &LabConfig,
) -> Result<CheckResult, LabError> {
    let space = ho.structure().space();
    check_measure(space, mu, "initial measure")?;
    check_measure(space, nu, "reference measure")?;
    check_times(times)?;
    let m = space.m();
    let ent_nu = relative_entropy(nu, m);
    let mut w2s = Vec::with_capacity(times.len());
    let mut ents = Vec::with_capacity(times.len());
    let mut extra: f64 = 0.0;
    for &t in times {
        let mt = evolve_measure(ho, mu, t)?;
        let (w, e) = squared_w2(space, &mt, nu, config)?;
        extra = extra.max(e);
        w2s.push(w);
        ents.push(relative_entropy(&mt, m));
    }
    let mut integral: f64 = 0.0;
    for j in 0..times.len() {
        for i in 0..j {
            let dt = times[j] - times[i];
            let v = 0.5 * exp(k * dt) * w2s[j] - 0.5 * w2s[i] - ik(k, dt) * (ent_nu - ents[j]);
            integral = integral.max(v);
        }
    }
    let mut differential: f64 = 0.0;
    let mut series = Vec::with_capacity(times.len());
    for (idx, &t) in times.iter().enumerate() {
        let mut row = SeriesRow::at(t);
        row.w2 = sqrt(w2s[idx]);
        row.entropy = ents[idx];
        if idx > 0 && idx + 1 < times.len() && t > 0.0 {
            let delta = config.derivative_rel_step * t;
            let deriv = richardson_derivative(
                |s| {
                    let ms = evolve_measure(ho, mu, s)?;
                    Ok(0.5 * squared_w2(space, &ms, nu, config)?.0)
                },
                t,
                delta,
            )?;
            let v = deriv + 0.5 * k * w2s[idx] + ents[idx] - ent_nu;
            row.slack = v.max(0.0);
            differential = differential.max(v);
        }
        series.push(row);
    }
    let ls = measure_log_sup(space, mu) + measure_log_sup(space, nu);
    let tol = budget.resolve(ls) + extra;
    Ok(CheckResult::new("evi", "evolution variational inequality", integral.max(differential).max(0.0), tol)
        .with("K", k)
        .with("integral_slack", integral.max(0.0))
        .with("differential_slack", differential.max(0.0))
        .with("log_sup", ls)
        .with("entropic_extra", extra)
        .with("budget", budget.describe())
        .with_series(series))
}

/// `W(H_t μ, H_t ν) ≤ e^{−Kt} W(μ, ν)` for `W₂` and `W₁`.
pub fn contraction_check(
    ho: &HeatOperator,
    mu: &[f64],
    nu: &[f64],
    k: f64,
    times: &[f64],
    budget: Budget,
    config: &LabConfig,
) -> Result<CheckResult, LabError> {
    let space = ho.structure().space();
    check_measure(space, mu, "first measure")?;
    check_measure(space, nu, "second measure")?;
    check_times(times)?;
    let (w2_0, e0) = squared_w2(space, mu, nu, config)?;
    let w2_0 = sqrt(w2_0);
    let w1_0 = w1(space, mu, nu)?;
    let mut worst2: f64 = 0.0;
    let mut worst1: f64 = 0.0;
    let mut extra = e0;
    let mut series = Vec::new();
    for &t in times {
        let (a, b) = (evolve_measure(ho, mu, t)?, evolve_measure(ho, nu, t)?);
        let (w, e) = squared_w2(space, &a, &b, config)?;
        extra = extra.max(e);
        let w2t = sqrt(w);
        let w1t = w1(space, &a, &b)?;
        let s2 = w2t - exp(-k * t) * w2_0;
        let s1 = w1t - exp(-k * t) * w1_0;
        worst2 = worst2.max(s2);
        worst1 = worst1.max(s1);
        let mut row = SeriesRow::at(t);
        row.w2 = w2t;
        row.slack = s2.max(s1).max(0.0);
        series.push(row);
    }
    let ls = measure_log_sup(space, mu) + measure_log_sup(space, nu);
    Ok(CheckResult::new(
        "contraction",
        "Wasserstein contraction of the heat flow",
        worst2.max(worst1).max(0.0),
        budget.resolve(ls) + extra,
    )
    .with("K", k)
    .with("w2_slack", worst2.max(0.0))
    .with("w1_slack", worst1.max(0.0))
    .with("w2_initial", w2_0)
    .with("w1_initial", w1_0)
    .with_series(series))
}

/// `Γ(H_t f) ≤ e^{−2Kt} H_t Γ(f)` pointwise.
pub fn bakry_emery_check(
    ho: &HeatOperator,
    f: &[f64],
    k: f64,
    times: &[f64],
    tol: f64,
) -> Result<CheckResult, LabError> {
    let ds = ho.structure();
    let gf = ds.gamma(f);
    let supp = ds.space().support();
    let mut worst: f64 = 0.0;
    for &t in times {
        let hf = ho.apply(f, t)?;
        let lhs = ds.gamma(&hf);
        let rhs = ho.apply(&gf, t)?;
        let c = exp(-2.0 * k * t);
        for &x in &supp {
            worst = worst.max(lhs[x] - c * rhs[x]);
        }
    }
    Ok(CheckResult::new("bakry_emery", "Bakry–Émery gradient estimate", worst.max(0.0), tol).with("K", k))
}

/// `Σ m f² log f² − ‖f‖² log ‖f‖²`, evaluated through `(1+v) log(1+v) − v`
/// to keep accuracy for nearly constant `f`.
pub fn entropy_of_square(m: &[f64], f: &[f64]) -> f64 {
    let psi = |v: f64| -> f64 {
        if abs(v) < 1e-3 {
            // series of (1+v)log(1+v) − v
            let v2 = v * v;
            v2 * (0.5 - v / 6.0 + v2 / 12.0 - v2 * v / 20.0 + v2 * v2 / 30.0)
        } else if v <= -1.0 {
            1.0
        } else {
            (1.0 + v) * libm::log1p(v) - v
        }
    };
    let mut mean_v = 0.0;
    let mut s = 0.0;
    for (&w, &x) in m.iter().zip(f) {
        if w > 0.0 {
            let v = (x - 1.0) * (x + 1.0);
            mean_v += w * v;
            s += w * psi(v);
        }
    }
    s - psi(mean_v)
}

/// Samples functions and tests `Ent(f²) ≤ (2/K) Σ m Γ(f)`.
///
/// Trials are uniform random functions plus nearly constant ones `1 + εg`,
/// which probe the constant in its sharp regime. The slack is the largest
/// `Ent(f²) − (2/K) E(f, f)` after normalising `Σ m f² = 1`.
pub fn log_sobolev_check(
    ds: &DirichletStructure,
    k: f64,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckResult, LabError> {
    if !(k > 0.0) {
        return Err(invalid("log-Sobolev constant must be positive"));
    }
    let n = ds.n();
    let m = ds.m();
    let mut rng = LabRng::new(seed, 0);
    let mut worst = f64::NEG_INFINITY;
    let mut best_constant = f64::INFINITY;
    let mut evaluate = |f: Vec<f64>| {
        let norm = sqrt(f.iter().zip(m).map(|(a, b)| b * a * a).sum::<f64>());
        if !(norm > 0.0) {
            return;
        }
        let f: Vec<f64> = f.iter().map(|a| a / norm).collect();
        let ent = entropy_of_square(m, &f);
        let energy = ds.energy(&f, &f);
        worst = worst.max(ent - 2.0 / k * energy);
        if ent > 0.0 {
            best_constant = best_constant.min(2.0 * energy / ent);
        }
    };
    for _ in 0..trials {
        let f = rng.vector(n, -1.0, 1.0);
        evaluate(f);
    }
    for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
        for _ in 0..trials.max(1) {
            let g = rng.vector(n, -1.0, 1.0);
            evaluate(g.iter().map(|v| 1.0 + eps * v).collect());
        }
    }
    Ok(CheckResult::new("log_sobolev", "log-Sobolev inequality", worst.max(0.0), tol)
        .with("K", k)
        .with("implied_constant", best_constant)
        .with("trials", trials))
}

/// Entropy dissipation along the heat flow: `−d/dt Ent = E(ρ, log ρ)`, with
/// the gap to the Fisher information `4C(√ρ)` reported.
pub fn dissipation_check(
    ho: &HeatOperator,
    rho0: &[f64],
    times: &[f64],
    config: &LabConfig,
) -> Result<CheckResult, LabError> {
    let ds = ho.structure();
    let m = ds.m();
    let supp = ds.space().support();
    if supp.iter().any(|&x| !(rho0[x] > 0.0)) {
        return Err(hypothesis("initial density must be positive on the support"));
    }
    check_times(times)?;
    let ent = |t: f64| -> Result<f64, LabError> { Ok(density_entropy(&ho.apply(rho0, t)?, m)) };
    let mut worst: f64 = 0.0;
    let mut defect: f64 = 0.0;
    let mut min_defect = f64::INFINITY;
    let mut series = Vec::new();
    for &t in times.iter().filter(|&&t| t > 0.0) {
        let rho = ho.apply(rho0, t)?;
        let log_rho: Vec<f64> = rho.iter().enumerate().map(|(i, &r)| if m[i] > 0.0 { ln(r) } else { 0.0 }).collect();
        let rate = ds.energy(&rho, &log_rho);
        let deriv = richardson_derivative(&ent, t, config.derivative_rel_step * t)?;
        let fisher = fisher_information(ds, &rho);
        worst = worst.max(abs(-deriv - rate));
        defect = defect.max(rate - fisher);
        min_defect = min_defect.min(rate - fisher);
        let mut row = SeriesRow::at(t);
        row.entropy = density_entropy(&rho, m);
        row.fisher = fisher;
        row.slack = abs(-deriv - rate);
        series.push(row);
    }
    Ok(CheckResult::new("dissipation", "entropy dissipation along the heat flow", worst, 1e-8)
        .with("max_fisher_defect", defect)
        .with("min_fisher_defect", min_defect)
        .with("slope_surrogate", SLOPE_SURROGATE)
        .with_series(series))
}

/// Diagnostics of one minimizing-movement step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JkoStepInfo {
    pub iterations: usize,
    /// Duality-gap certificate `P(ν) − P*` upper bound.
    pub kkt_residual: f64,
}

/// Largest accepted KKT certificate of a step.
pub const JKO_KKT_TOL: f64 = 1e-7;

/// One step `argmin_ν W₂²(μ, ν)/(2τ) + Ent(ν | m)`.
///
/// Solved on the dual `max Σ μφ − Σ m e^{−1−ψ}` subject to
/// `φ_x + ψ_y ≤ d(x,y)²/(2τ)` by a primal–dual interior point method, with
/// `ν = m e^{−1−ψ}`. The returned residual is the exact gap
/// `OT(μ,ν) − Σ μ ψ̃^c − Σ ν ψ̃` at `ψ̃ = −log(ν/m)`.
pub fn jko_step(space: &MetricMeasureSpace, mu: &[f64], tau: f64) -> Result<(Vec<f64>, JkoStepInfo), LabError> {
    if !(tau > 0.0) {
        return Err(invalid("time step must be positive"));
    }
    let m = space.m();
    let rows: Vec<usize> = (0..space.n()).filter(|&x| mu[x] > 0.0).collect();
    let cols = space.support();
    let (p, q) = (rows.len(), cols.len());
    let c = DMatrix::from_fn(p, q, |a, b| {
        let d = space.d(rows[a], cols[b]);
        d * d / (2.0 * tau)
    });
    let mu_r: Vec<f64> = rows.iter().map(|&x| mu[x]).collect();
    let m_c: Vec<f64> = cols.iter().map(|&y| m[y]).collect();
    let mut psi: Vec<f64> = cols.iter().map(|&y| -1.0 - ln((mu[y] / m[y]).max(1e-8))).collect();
    let mut phi: Vec<f64> =
        (0..p).map(|a| (0..q).map(|b| c[(a, b)] - psi[b]).fold(f64::INFINITY, f64::min) - 1.0).collect();
    let nu_of = |psi: &[f64]| -> Vec<f64> { (0..q).map(|b| m_c[b] * exp(-1.0 - psi[b])).collect() };
    let mut gamma = DMatrix::from_fn(p, q, |a, b| mu_r[a] * m_c[b]);
    let mut iterations = 0;
    let max_iter = 300;
    loop {
        let nu = nu_of(&psi);
        let s = DMatrix::from_fn(p, q, |a, b| c[(a, b)] - phi[a] - psi[b]);
        let r_phi: Vec<f64> = (0..p).map(|a| gamma.row(a).sum() - mu_r[a]).collect();
        let r_psi: Vec<f64> = (0..q).map(|b| gamma.column(b).sum() - nu[b]).collect();
        let comp: f64 = gamma.component_mul(&s).sum();
        let infeas = r_phi.iter().chain(&r_psi).fold(0.0f64, |a, &v| a.max(abs(v)));
        if (infeas <= 1e-14 && comp <= 1e-13) || iterations >= max_iter {
            break;
        }
        iterations += 1;
        let sigma = 0.1 * comp / (p * q) as f64;
        let dmat = DMatrix::from_fn(p, q, |a, b| gamma[(a, b)] / s[(a, b)]);
        // γ − σ/s is r_c / s
        let rc_s = DMatrix::from_fn(p, q, |a, b| gamma[(a, b)] - sigma / s[(a, b)]);
        let a11: Vec<f64> = (0..p).map(|a| dmat.row(a).sum()).collect();
        let rhs1: Vec<f64> = (0..p).map(|a| -r_phi[a] + rc_s.row(a).sum()).collect();
        let rhs2: Vec<f64> = (0..q).map(|b| -r_psi[b] + rc_s.column(b).sum()).collect();
        let mut schur = DMatrix::zeros(q, q);
        let mut rhs_s = DVector::zeros(q);
        for b in 0..q {
            schur[(b, b)] += dmat.column(b).sum() + nu[b];
            rhs_s[b] = rhs2[b];
        }
        for a in 0..p {
            let inv = 1.0 / a11[a];
            let row = dmat.row(a);
            for b in 0..q {
                let rb = row[b] * inv;
                rhs_s[b] -= rb * rhs1[a];
                for b2 in 0..q {
                    schur[(b, b2)] -= rb * row[b2];
                }
            }
        }
        let Some(chol) = schur.cholesky() else {
            break;
        };
        let dpsi = chol.solve(&rhs_s);
        let dphi: Vec<f64> =
            (0..p).map(|a| (rhs1[a] - (0..q).map(|b| dmat[(a, b)] * dpsi[b]).sum::<f64>()) / a11[a]).collect();
        let mut alpha: f64 = 1.0;
        let mut dgamma = DMatrix::zeros(p, q);
        for a in 0..p {
            for b in 0..q {
                let ds = -dphi[a] - dpsi[b];
                let dg = -rc_s[(a, b)] - dmat[(a, b)] * ds;
                dgamma[(a, b)] = dg;
                if ds < 0.0 {
                    alpha = alpha.min(-0.99 * s[(a, b)] / ds);
                }
                if dg < 0.0 {
                    alpha = alpha.min(-0.99 * gamma[(a, b)] / dg);
                }
            }
        }
        for a in 0..p {
            phi[a] += alpha * dphi[a];
        }
        for b in 0..q {
            psi[b] += alpha * dpsi[b];
        }
        gamma += dgamma * alpha;
    }
    let nu_c = nu_of(&psi);
    let total: f64 = nu_c.iter().sum();
    let mut nu = vec![0.0; space.n()];
    for (b, &y) in cols.iter().enumerate() {
        nu[y] = nu_c[b] / total;
    }
    let residual = jko_certificate(space, mu, &nu, tau)?;
    if !(residual <= JKO_KKT_TOL) {
        return Err(LabError::NonConvergence { iterations, residual });
    }
    Ok((nu, JkoStepInfo { iterations, kkt_residual: residual }))
}

/// Optimality gap of `ν` for the step from `μ`: `OT_c(μ,ν) − Σ μ ψ̃^c − Σ ν ψ̃`
/// with `c = d²/(2τ)` and `ψ̃ = −log(ν/m)`. Nonnegative, zero exactly at the minimiser.
pub fn jko_certificate(space: &MetricMeasureSpace, mu: &[f64], nu: &[f64], tau: f64) -> Result<f64, LabError> {
    let m = space.m();
    let rows: Vec<usize> = (0..space.n()).filter(|&x| mu[x] > 0.0).collect();
    let cols: Vec<usize> = (0..space.n()).filter(|&y| nu[y] > 0.0).collect();
    if cols.len() != space.support().len() {
        return Ok(f64::INFINITY);
    }
    let c = DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
        let d = space.d(rows[a], cols[b]);
        d * d / (2.0 * tau)
    });
    let supply: Vec<f64> = rows.iter().map(|&x| mu[x]).collect();
    let demand: Vec<f64> = cols.iter().map(|&y| nu[y]).collect();
    let ot = transport_simplex(&c, &supply, &demand)?.objective;
    let psi: Vec<f64> = cols.iter().map(|&y| -ln(nu[y] / m[y])).collect();
    let mut dual = 0.0;
    for (a, &x) in rows.iter().enumerate() {
        let pc = (0..cols.len()).map(|b| c[(a, b)] - psi[b]).fold(f64::INFINITY, f64::min);
        dual += mu[x] * pc;
    }
    for (b, &y) in cols.iter().enumerate() {
        dual += nu[y] * psi[b];
    }
    Ok((ot - dual).max(0.0))
}

/// Minimizing-movement trajectory of the entropy with step `tau`.
pub fn jko_flow(
    space: &MetricMeasureSpace,
    rho0: &[f64],
    tau: f64,
    steps: usize,
) -> Result<(FlowTrajectory, Vec<JkoStepInfo>), LabError> {
    let m = space.m();
    let mut mu = measure(rho0, m);
    check_measure(space, &mu, "initial measure")?;
    let mut times = vec![0.0];
    let mut densities = vec![rho0.to_vec()];
    let mut infos = Vec::with_capacity(steps);
    for k in 1..=steps {
        let (nu, info) = jko_step(space, &mu, tau)?;
        densities.push(density(&nu, m));
        times.push(k as f64 * tau);
        infos.push(info);
        mu = nu;
    }
    Ok((FlowTrajectory { times, densities, provenance: Provenance::Jko }, infos))
}

/// Runs the scheme for each step size in `taus` up to `horizon` and compares
/// with the heat flow in `L¹(m)`. Passes when every halving of the step
/// shrinks the error by at least the factor 0.75.
pub fn identification_check(
    ho: &HeatOperator,
    rho0: &[f64],
    taus: &[f64],
    horizon: f64,
) -> Result<CheckResult, LabError> {
    if taus.len() < 2 {
        return Err(invalid("need at least two step sizes"));
    }
    let ds = ho.structure();
    let space = ds.space();
    let m = space.m();
    let target = ho.apply(rho0, horizon)?;
    let mut errors = Vec::with_capacity(taus.len());
    let mut worst_kkt: f64 = 0.0;
    for &tau in taus {
        let steps = crate::fmath::round(horizon / tau) as usize;
        if abs(steps as f64 * tau - horizon) > 1e-9 * horizon {
            return Err(invalid("horizon must be a multiple of every step"));
        }
        let (traj, infos) = jko_flow(space, rho0, tau, steps)?;
        worst_kkt = infos.iter().fold(worst_kkt, |a, i| a.max(i.kkt_residual));
        let last = traj.densities.last().expect("trajectory has the initial density");
        errors.push((0..space.n()).map(|x| m[x] * abs(last[x] - target[x])).sum::<f64>());
    }
    let mut worst_ratio: f64 = 0.0;
    for i in 1..taus.len() {
        let ratio = errors[i] / errors[i - 1];
        worst_ratio = worst_ratio.max(if ratio.is_nan() { f64::INFINITY } else { ratio });
    }
    let mut r =
        CheckResult::new("jko_identification", "minimizing movements converge to the heat flow", worst_ratio, 0.75)
            .with("horizon", horizon)
            .with("max_kkt_residual", worst_kkt);
    for (i, (&tau, &e)) in taus.iter().zip(&errors).enumerate() {
        r = r.with(&alloc::format!("tau_{i}"), tau).with(&alloc::format!("l1_error_{i}"), e);
    }
    Ok(r)
}

fn require_positive_density(space: &MetricMeasureSpace, rho: &[f64], what: &str) -> Result<(), LabError> {
    if rho.len() != space.n() {
        return Err(invalid("density length differs from the space"));
    }
    if space.support().iter().any(|&x| !(rho[x] > 0.0) || !rho[x].is_finite()) {
        let mut msg = what.to_string();
        msg.push_str(" must be bounded and bounded away from zero on the support");
        return Err(LabError::Hypothesis(msg));
    }
    Ok(())
}

/// `d/dt ½W₂²(ρ_t m, σ) ≤ (C(ρ_t − εφ_t) − C(ρ_t))/ε` for each `ε`, with
/// `φ_t` the anchored Kantorovich potential from `ρ_t m` to `σ`.
pub fn derivative_w2_check(
    ho: &HeatOperator,
    rho0: &[f64],
    sigma: &[f64],
    t: f64,
    eps_list: &[f64],
    budget: Budget,
    config: &LabConfig,
) -> Result<CheckResult, LabError> {
    let ds = ho.structure();
    let space = ds.space();
    require_positive_density(space, rho0, "initial density")?;
    check_measure(space, sigma, "target measure")?;
    if !(t > 0.0) {
        return Err(invalid("time must be positive"));
    }
    let m = space.m();
    let rho = ho.apply(rho0, t)?;
    let mu_t = measure(&rho, m);
    let sol = solve_w2_exact(space, &mu_t, sigma)?;
    let lhs = richardson_derivative(
        |s| {
            let ms = evolve_measure(ho, &measure(rho0, m), s)?;
            let w = solve_w2_exact(space, &ms, sigma)?.w2;
            Ok(0.5 * w * w)
        },
        t,
        config.derivative_rel_step * t,
    )?;
    let last = *space.support().last().expect("support is nonempty");
    let alt = sol.potentials.reanchored(last);
    let c0 = ds.cheeger_energy(&rho);
    let mut worst = f64::NEG_INFINITY;
    let mut gauge: f64 = 0.0;
    for &eps in eps_list {
        let rhs_for = |phi: &[f64]| {
            let shifted: Vec<f64> = rho.iter().zip(phi).map(|(r, p)| r - eps * p).collect();
            (ds.cheeger_energy(&shifted) - c0) / eps
        };
        let rhs = rhs_for(&sol.potentials.phi);
        let rhs_alt = rhs_for(&alt.phi);
        gauge = gauge.max(abs(rhs - rhs_alt));
        worst = worst.max(lhs - rhs);
    }
    let ls = log_sup(&rho, m) + measure_log_sup(space, sigma);
    Ok(CheckResult::new(
        "derivative_w2",
        "derivative of the squared distance along the heat flow",
        worst.max(0.0),
        budget.resolve(ls) + gauge,
    )
    .with("t", t)
    .with("lhs", lhs)
    .with("gauge_sensitivity", gauge)
    .with("multiple_optima", sol.info.multiple_optima))
}

/// `Ent(ρ₁m) − Ent(ρ₀m) − (K/2)W₂² ≥ (C(φ) − C(φ + ερ₀))/ε` for each `ε`.
pub fn derivative_entropy_check(
    ds: &DirichletStructure,
    rho0: &[f64],
    rho1: &[f64],
    k: f64,
    eps_list: &[f64],
    budget: Budget,
) -> Result<CheckResult, LabError> {
    let space = ds.space();
    require_positive_density(space, rho0, "initial density")?;
    let m = space.m();
    let (mu0, mu1) = (measure(rho0, m), measure(rho1, m));
    check_measure(space, &mu1, "final measure")?;
    let sol = solve_w2_exact(space, &mu0, &mu1)?;
    let lhs = relative_entropy(&mu1, m) - relative_entropy(&mu0, m) - 0.5 * k * sol.w2 * sol.w2;
    let last = *space.support().last().expect("support is nonempty");
    let alt = sol.potentials.reanchored(last);
    let mut worst = f64::NEG_INFINITY;
    let mut gauge: f64 = 0.0;
    for &eps in eps_list {
        let rhs_for = |phi: &[f64]| {
            let shifted: Vec<f64> = phi.iter().zip(rho0).map(|(p, r)| p + eps * r).collect();
            (ds.cheeger_energy(phi) - ds.cheeger_energy(&shifted)) / eps
        };
        let rhs = rhs_for(&sol.potentials.phi);
        gauge = gauge.max(abs(rhs - rhs_for(&alt.phi)));
        worst = worst.max(rhs - lhs);
    }
    let ls = log_sup(rho0, m) + log_sup(rho1, m);
    Ok(CheckResult::new(
        "derivative_entropy",
        "derivative of the entropy along a geodesic",
        worst.max(0.0),
        budget.resolve(ls) + gauge,
    )
    .with("K", k)
    .with("lhs", lhs)
    .with("gauge_sensitivity", gauge))
}

/// `I_K(t) Ent(μ_t) + I_K(t)²/2 · F(μ_t) ≤ ½W₂²(m, μ)` along the heat flow,
/// with `F = 4C(√ρ_t)`.
pub fn ultra_evi_check(
    ho: &HeatOperator,
    mu: &[f64],
    k: f64,
    times: &[f64],
    budget: Budget,
    config: &LabConfig,
) -> Result<CheckResult, LabError> {
    let ds = ho.structure();
    let space = ds.space();
    check_measure(space, mu, "initial measure")?;
    check_times(times)?;
    let m = space.m();
    let (w0, extra) = squared_w2(space, m, mu, config)?;
    let mut worst: f64 = 0.0;
    let mut series = Vec::new();
    for &t in times {
        let mt = evolve_measure(ho, mu, t)?;
        let rho = density(&mt, m);
        let i = ik(k, t);
        let ent = relative_entropy(&mt, m);
        let fisher = fisher_information(ds, &rho);
        let v = i * ent + 0.5 * i * i * fisher - 0.5 * w0;
        worst = worst.max(v);
        let mut row = SeriesRow::at(t);
        row.entropy = ent;
        row.fisher = fisher;
        row.slack = v.max(0.0);
        series.push(row);
    }
    Ok(CheckResult::new(
        "ultra_evi",
        "entropy and slope regularization estimate",
        worst,
        budget.resolve(measure_log_sup(space, mu)) + extra,
    )
    .with("K", k)
    .with("w2_to_reference", sqrt(w0))
    .with("slope_surrogate", SLOPE_SURROGATE)
    .with_series(series))
}

/// `2 I_{2K}(t) Γ(H_t f) ≤ H_t(f²)` pointwise.
pub fn lipschitz_regularization_check(
    ho: &HeatOperator,
    f: &[f64],
    k: f64,
    times: &[f64],
    tol: f64,
) -> Result<CheckResult, LabError> {
    let ds = ho.structure();
    let f2: Vec<f64> = f.iter().map(|v| v * v).collect();
    let supp = ds.space().support();
    let mut worst: f64 = 0.0;
    for &t in times {
        let g = ds.gamma(&ho.apply(f, t)?);
        let h2 = ho.apply(&f2, t)?;
        let c = 2.0 * ik(2.0 * k, t);
        for &x in &supp {
            worst = worst.max(c * g[x] - h2[x]);
        }
    }
    Ok(CheckResult::new("lipschitz_regularization", "Lipschitz regularization of the heat flow", worst, tol)
        .with("K", k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ik_values() {
        assert_eq!(ik(0.0, 1.0), 1.0);
        assert!((ik(1.0, 1.0) - 1.718_281_828_459_045).abs() < 1e-15);
        assert!((ik(-2.0, 0.5) - 0.316_060_279_4).abs() < 1e-10);
    }

    #[test]
    fn jko_fixed_point_at_reference() {
        let gs = crate::mmspace::build_circle_grid(1.0, 8).unwrap();
        let m = gs.base().m().to_vec();
        let (nu, info) = jko_step(gs.base(), &m, 1e-2).unwrap();
        assert!(crate::fmath::sup_dist(&nu, &m) < 1e-10);
        assert!(info.kkt_residual <= JKO_KKT_TOL);
    }

    #[test]
    fn entropy_of_square_constant_is_zero() {
        let m = [0.25; 4];
        assert_eq!(entropy_of_square(&m, &[1.0; 4]), 0.0);
        let f = [2.0, 0.0, 0.0, 0.0];
        // f² = (4,0,0,0): Σ m f² log f² = log 4, ‖f‖² = 1
        assert!((entropy_of_square(&m, &f) - libm::log(4.0)).abs() < 1e-14);
    }
}

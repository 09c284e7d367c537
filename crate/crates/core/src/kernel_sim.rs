//! Heat kernels and continuous-time Markov chain sampling of the Brownian motion.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::check::{Budget, CheckResult};
use crate::dirichlet::{DirichletStructure, HeatOperator};
use crate::error::{invalid, LabError};
use crate::evi_lab::ik;
use crate::fmath::{abs, sqrt};
use crate::rng::LabRng;

/// Transition densities `p_t(x, y)` with respect to `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatKernel {
    pub t: f64,
    pub p: DMatrix<f64>,
    /// Total `|p|·m_x·m_y` removed by clipping negative rounding values.
    pub clip_mass: f64,
}

impl HeatKernel {
    /// `Σ_y p(x, y) f(y) m_y`.
    pub fn apply(&self, f: &[f64], m: &[f64]) -> Vec<f64> {
        let n = m.len();
        (0..n).map(|x| (0..n).map(|y| self.p[(x, y)] * f[y] * m[y]).sum()).collect()
    }

    /// Largest `|Σ_y p(x,y) m_y − 1|` over support rows.
    pub fn row_mass_defect(&self, m: &[f64]) -> f64 {
        (0..m.len())
            .filter(|&x| m[x] > 0.0)
            .map(|x| abs((0..m.len()).map(|y| self.p[(x, y)] * m[y]).sum::<f64>() - 1.0))
            .fold(0.0, f64::max)
    }
}

pub fn heat_kernel(ho: &HeatOperator, t: f64) -> Result<HeatKernel, LabError> {
    if !(t >= 0.0) {
        return Err(invalid("time must be nonnegative"));
    }
    let mut p = ho.kernel_matrix(t)?;
    let m = ho.structure().m();
    let mut clip_mass = 0.0;
    for x in 0..p.nrows() {
        for y in 0..p.ncols() {
            if p[(x, y)] < 0.0 {
                clip_mass += -p[(x, y)] * m[x] * m[y];
                p[(x, y)] = 0.0;
            }
        }
    }
    Ok(HeatKernel { t, p, clip_mass })
}

pub fn symmetry_check(kernel: &HeatKernel) -> CheckResult {
    let p = &kernel.p;
    let mut worst: f64 = 0.0;
    for x in 0..p.nrows() {
        for y in (x + 1)..p.ncols() {
            worst = worst.max(abs(p[(x, y)] - p[(y, x)]));
        }
    }
    CheckResult::new("kernel_symmetry", "symmetry of transition densities", worst, 1e-10).with("t", kernel.t)
}

pub fn chapman_kolmogorov_check(ho: &HeatOperator, t: f64, s: f64) -> Result<CheckResult, LabError> {
    let m = ho.structure().m();
    let (pt, ps, pts) = (heat_kernel(ho, t)?, heat_kernel(ho, s)?, heat_kernel(ho, t + s)?);
    let n = m.len();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            let comp: f64 = (0..n).map(|z| pt.p[(x, z)] * ps.p[(z, y)] * m[z]).sum();
            worst = worst.max(abs(pts.p[(x, y)] - comp));
        }
    }
    Ok(CheckResult::new("chapman_kolmogorov", "Chapman–Kolmogorov composition", worst, 1e-10).with("t", t).with("s", s))
}

/// `√I_{2K}(t) · ‖p_t(x,·) − p_t(y,·)‖_{L¹(m)} ≤ d(x, y)` for each pair.
pub fn w1_l1_check(
    ho: &HeatOperator,
    k: f64,
    t: f64,
    pairs: &[(usize, usize)],
    budget: Budget,
) -> Result<CheckResult, LabError> {
    if !(t > 0.0) {
        return Err(invalid("time must be positive"));
    }
    let ds = ho.structure();
    let space = ds.space();
    let m = ds.m();
    let kernel = heat_kernel(ho, t)?;
    let c = sqrt(ik(2.0 * k, t));
    let mut worst = f64::NEG_INFINITY;
    for &(x, y) in pairs {
        if !space.in_support(x) || !space.in_support(y) {
            return Err(invalid("pairs must consist of support points"));
        }
        let l1: f64 = (0..m.len()).map(|z| abs(kernel.p[(x, z)] - kernel.p[(y, z)]) * m[z]).sum();
        worst = worst.max(c * l1 - space.d(x, y));
    }
    Ok(CheckResult::new("w1_l1", "W₁–L¹ regularization of the heat kernel", worst.max(0.0), budget.resolve(0.0))
        .with("K", k)
        .with("t", t)
        .with("pairs", pairs.len()))
}

/// A right-continuous path: state `states[i]` is held on `[jump_times[i], jump_times[i+1])`,
/// with `jump_times[0] = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    pub jump_times: Vec<f64>,
    pub states: Vec<usize>,
    pub horizon: f64,
}

impl SamplePath {
    pub fn state_at(&self, t: f64) -> usize {
        let i = self.jump_times.partition_point(|&s| s <= t);
        self.states[i.saturating_sub(1)]
    }

    pub fn final_state(&self) -> usize {
        *self.states.last().expect("a path has its initial state")
    }
}

fn total_rates(ds: &DirichletStructure) -> Vec<f64> {
    let m = ds.m();
    (0..ds.n())
        .map(|x| if m[x] > 0.0 { ds.neighbours(x).iter().map(|&(_, w)| w).sum::<f64>() / m[x] } else { 0.0 })
        .collect()
}

/// Chain with jump rates `w_xy / m_x` on `[0, horizon]`, drawn from stream `path_index` of `seed`.
pub fn sample_brownian(
    ds: &DirichletStructure,
    x0: usize,
    horizon: f64,
    seed: u64,
    path_index: u64,
) -> Result<SamplePath, LabError> {
    if x0 >= ds.n() || !ds.space().in_support(x0) {
        return Err(invalid("starting point must be a support point"));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(invalid("horizon must be finite and nonnegative"));
    }
    let rates = total_rates(ds);
    let mut rng = LabRng::new(seed, path_index);
    Ok(run_chain(ds, &rates, x0, horizon, &mut rng))
}

fn run_chain(ds: &DirichletStructure, rates: &[f64], x0: usize, horizon: f64, rng: &mut LabRng) -> SamplePath {
    let mut t = 0.0;
    let mut x = x0;
    let mut jump_times = vec![0.0];
    let mut states = vec![x0];
    loop {
        let r = rates[x];
        if r <= 0.0 {
            break;
        }
        t += rng.exponential(r);
        if t > horizon {
            break;
        }
        let nb = ds.neighbours(x);
        let target = rng.uniform() * r * ds.m()[x];
        let mut acc = 0.0;
        let mut next = nb[nb.len() - 1].0;
        for &(y, w) in nb {
            acc += w;
            if target < acc {
                next = y;
                break;
            }
        }
        x = next;
        jump_times.push(t);
        states.push(x);
    }
    SamplePath { jump_times, states, horizon }
}

/// Final state of path `path_index`; the unit of work for parallel sampling.
pub fn sample_final_state(
    ds: &DirichletStructure,
    x0: usize,
    horizon: f64,
    seed: u64,
    path_index: u64,
) -> Result<usize, LabError> {
    Ok(sample_brownian(ds, x0, horizon, seed, path_index)?.final_state())
}

/// Whether the edge graph restricted to the support is connected.
pub fn is_connected(ds: &DirichletStructure) -> bool {
    let supp = ds.space().support();
    let Some(&start) = supp.first() else {
        return true;
    };
    let mut seen = vec![false; ds.n()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(x) = stack.pop() {
        for &(y, _) in ds.neighbours(x) {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    supp.iter().all(|&x| seen[x])
}

/// Compares final-state counts of sampled paths with `p_T(x0, ·) m` in total
/// variation; passes at `TV ≤ c·√(n/N)` with `n` the support size.
pub fn empirical_vs_kernel_from_counts(
    ho: &HeatOperator,
    x0: usize,
    horizon: f64,
    counts: &[u64],
    seed: u64,
    tv_constant: f64,
) -> Result<CheckResult, LabError> {
    let ds = ho.structure();
    let m = ds.m();
    let n = ds.n();
    if counts.len() != n {
        return Err(invalid("count vector length differs from the space"));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(invalid("need at least one path"));
    }
    let mut e = vec![0.0; n];
    e[x0] = 1.0 / m[x0];
    let rho = ho.apply(&e, horizon)?;
    let tv: f64 = 0.5 * (0..n).map(|y| abs(counts[y] as f64 / total as f64 - (rho[y] * m[y]).max(0.0))).sum::<f64>();
    let support = ds.space().support().len();
    let tol = tv_constant * sqrt(support as f64 / total as f64);
    let rates = total_rates(ds);
    let absorbing = support > 1 && ds.space().support().iter().any(|&x| rates[x] == 0.0);
    Ok(CheckResult::new("brownian_sampling", "empirical law of the Markov chain against the heat kernel", tv, tol)
        .with("paths", total)
        .with("seed", seed)
        .with("horizon", horizon)
        .with("absorbing_state", absorbing)
        .with("disconnected", !is_connected(ds)))
}

/// Sequential sampling of `paths` chains followed by [`empirical_vs_kernel_from_counts`].
pub fn empirical_vs_kernel_check(
    ho: &HeatOperator,
    x0: usize,
    horizon: f64,
    paths: u64,
    seed: u64,
    tv_constant: f64,
) -> Result<CheckResult, LabError> {
    let ds = ho.structure();
    if paths == 0 {
        return Err(invalid("need at least one path"));
    }
    let mut counts = vec![0u64; ds.n()];
    for i in 0..paths {
        counts[sample_final_state(ds, x0, horizon, seed, i)?] += 1;
    }
    empirical_vs_kernel_from_counts(ho, x0, horizon, &counts, seed, tv_constant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::LabConfig;

    #[test]
    fn two_point_kernel_closed_form() {
        let ds = DirichletStructure::two_point(1.0, 0.5, 1.0).unwrap();
        let ho = HeatOperator::new(&ds, &LabConfig::default());
        let k = heat_kernel(&ho, 0.25).unwrap();
        let e = libm::exp(-1.0);
        assert!((k.p[(0, 0)] - (1.0 + e)).abs() < 1e-13);
        assert!((k.p[(0, 1)] - (1.0 - e)).abs() < 1e-13);
        assert!(k.row_mass_defect(ds.m()) < 1e-12);
    }

    #[test]
    fn single_point_path_is_constant() {
        let s = crate::mmspace::MetricMeasureSpace::one_point();
        let ds = DirichletStructure::new(s, DMatrix::zeros(1, 1)).unwrap();
        let p = sample_brownian(&ds, 0, 3.0, 1, 0).unwrap();
        assert_eq!(p.states, [0]);
        let ho = HeatOperator::new(&ds, &LabConfig::default());
        let r = empirical_vs_kernel_check(&ho, 0, 3.0, 10, 1, 3.0).unwrap();
        assert_eq!(r.measured_slack, 0.0);
    }
}

//! Upper bounds on the transport distance `𝔻` between metric measure spaces,
//! and a refinement-stability harness.
//!
//! A bound is a pair `(γ, b)`: a coupling of `m_X` and `m_Y`, and a bridge `b`
//! that extends `d_X` and `d_Y` to a pseudo-distance on the disjoint union.
//! Its value is `(Σ γ b²)^{1/2}`. The search alternates an exact transport
//! solve for `γ` with a proximal quadratic program for `b`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::check::CheckResult;
use crate::error::{invalid, LabError};
use crate::fmath::{abs, sqrt};
use crate::mmspace::{GridSpace, MetricMeasureSpace};
use crate::rng::LabRng;
use crate::transport::transport_simplex;

/// Largest accepted violation of a mixed triangle inequality.
pub const BRIDGE_TOL: f64 = 1e-10;

/// `|X| × |Y|` table of cross distances.
#[derive(Clone, Debug, PartialEq)]
pub struct BridgeMetric {
    pub b: DMatrix<f64>,
}

impl BridgeMetric {
    /// Largest violation of nonnegativity and of the mixed triangle inequalities.
    pub fn violation(&self, x: &MetricMeasureSpace, y: &MetricMeasureSpace) -> f64 {
        let b = &self.b;
        let (nx, ny) = (x.n(), y.n());
        let mut worst: f64 = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                worst = worst.max(-b[(i, j)]);
                for k in 0..nx {
                    let d = x.d(i, k);
                    worst = worst.max(b[(i, j)] - d - b[(k, j)]);
                    worst = worst.max(d - b[(i, j)] - b[(k, j)]);
                }
                for l in 0..ny {
                    let d = y.d(j, l);
                    worst = worst.max(b[(i, j)] - d - b[(i, l)]);
                    worst = worst.max(d - b[(i, j)] - b[(i, l)]);
                }
            }
        }
        worst
    }

    pub fn cost(&self, coupling: &DMatrix<f64>) -> f64 {
        coupling.iter().zip(self.b.iter()).map(|(g, b)| g * b * b).sum()
    }
}

/// How the alternation is seeded.
#[derive(Clone, Debug, PartialEq)]
pub enum Initialization {
    /// A map `X → Y`; unmatched points of `Y` join their nearest image.
    Map(Vec<usize>),
    /// The support of a coupling, completed to a correspondence.
    Plan(DMatrix<f64>),
    /// Quantile matching of the eccentricities `(Σ m d²)^{1/2}`.
    Eccentricity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceBound {
    pub upper: f64,
    pub coupling: DMatrix<f64>,
    pub bridge: BridgeMetric,
    /// Objective `Σ γ b²` after every half-step.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Bridge induced by a correspondence `R`:
/// `b(x,y) = min_{(x',y') ∈ R} d_X(x,x') + r + d_Y(y',y)` with `r` half the distortion.
pub fn correspondence_bridge(
    x: &MetricMeasureSpace,
    y: &MetricMeasureSpace,
    pairs: &[(usize, usize)],
) -> Result<BridgeMetric, LabError> {
    if pairs.is_empty() {
        return Err(invalid("correspondence is empty"));
    }
    let mut dis: f64 = 0.0;
    for &(a, b) in pairs {
        for &(c, d) in pairs {
            dis = dis.max(abs(x.d(a, c) - y.d(b, d)));
        }
    }
    let r = 0.5 * dis;
    let b = DMatrix::from_fn(x.n(), y.n(), |i, j| {
        pairs.iter().map(|&(a, c)| x.d(i, a) + r + y.d(c, j)).fold(f64::INFINITY, f64::min)
    });
    Ok(BridgeMetric { b })
}

fn complete_pairs(
    x: &MetricMeasureSpace,
    y: &MetricMeasureSpace,
    mut pairs: Vec<(usize, usize)>,
) -> Vec<(usize, usize)> {
    for i in 0..x.n() {
        if !pairs.iter().any(|p| p.0 == i) {
            let &(_, j) = pairs.iter().min_by(|p, q| x.d(i, p.0).total_cmp(&x.d(i, q.0))).expect("pairs nonempty");
            pairs.push((i, j));
        }
    }
    for j in 0..y.n() {
        if !pairs.iter().any(|p| p.1 == j) {
            let &(i, _) = pairs.iter().min_by(|p, q| y.d(j, p.1).total_cmp(&y.d(j, q.1))).expect("pairs nonempty");
            pairs.push((i, j));
        }
    }
    pairs
}

fn eccentricities(s: &MetricMeasureSpace) -> Vec<f64> {
    let m = s.m();
    (0..s.n()).map(|i| sqrt((0..s.n()).map(|k| m[k] * s.d(i, k) * s.d(i, k)).sum())).collect()
}

/// Monotone coupling of two weighted point sets after sorting by `key`.
fn quantile_plan(kx: &[f64], mx: &[f64], ky: &[f64], my: &[f64]) -> DMatrix<f64> {
    let mut ox: Vec<usize> = (0..kx.len()).collect();
    let mut oy: Vec<usize> = (0..ky.len()).collect();
    ox.sort_by(|&a, &b| kx[a].total_cmp(&kx[b]).then(a.cmp(&b)));
    oy.sort_by(|&a, &b| ky[a].total_cmp(&ky[b]).then(a.cmp(&b)));
    let mut plan = DMatrix::zeros(kx.len(), ky.len());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (mx[ox[0]], my[oy[0]]);
    while i < ox.len() && j < oy.len() {
        let f = ra.min(rb);
        plan[(ox[i], oy[j])] += f;
        ra -= f;
        rb -= f;
        if ra <= rb {
            i += 1;
            if i < ox.len() {
                ra = mx[ox[i]];
            }
        } else {
            j += 1;
            if j < oy.len() {
                rb = my[oy[j]];
            }
        }
    }
    plan
}

fn initial_pairs(
    x: &MetricMeasureSpace,
    y: &MetricMeasureSpace,
    init: &Initialization,
) -> Result<Vec<(usize, usize)>, LabError> {
    let pairs = match init {
        Initialization::Map(f) => {
            if f.len() != x.n() || f.iter().any(|&j| j >= y.n()) {
                return Err(invalid("map must send every point of X into Y"));
            }
            f.iter().enumerate().map(|(i, &j)| (i, j)).collect()
        }
        Initialization::Plan(p) => {
            if p.nrows() != x.n() || p.ncols() != y.n() {
                return Err(invalid("plan shape differs from the spaces"));
            }
            let mut v = Vec::new();
            for i in 0..x.n() {
                for j in 0..y.n() {
                    if p[(i, j)] > 1e-15 {
                        v.push((i, j));
                    }
                }
            }
            if v.is_empty() {
                return Err(invalid("plan has empty support"));
            }
            v
        }
        Initialization::Eccentricity => {
            let p = quantile_plan(&eccentricities(x), x.m(), &eccentricities(y), y.m());
            return initial_pairs(x, y, &Initialization::Plan(p));
        }
    };
    Ok(complete_pairs(x, y, pairs))
}

fn optimal_coupling(
    x: &MetricMeasureSpace,
    y: &MetricMeasureSpace,
    bridge: &BridgeMetric,
) -> Result<DMatrix<f64>, LabError> {
    let rows = x.support();
    let cols = y.support();
    let cost = DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
        let v = bridge.b[(rows[a], cols[b])];
        v * v
    });
    let supply: Vec<f64> = rows.iter().map(|&i| x.m()[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| y.m()[j]).collect();
    let lp = transport_simplex(&cost, &supply, &demand)?;
    let mut g = DMatrix::zeros(x.n(), y.n());
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            g[(i, j)] = lp.flow[(a, b)];
        }
    }
    Ok(g)
}

enum Halfspace {
    /// `b[p] − b[q] ≤ c`
    Diff(usize, usize, f64),
    /// `−b[p] − b[q] ≤ −c`
    Sum(usize, usize, f64),
    /// `−b[p] ≤ 0`
    Nonneg(usize),
}

fn mixed_triangles(x: &MetricMeasureSpace, y: &MetricMeasureSpace) -> Vec<Halfspace> {
    let (nx, ny) = (x.n(), y.n());
    let idx = |i: usize, j: usize| i + j * nx;
    let mut hs = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            hs.push(Halfspace::Nonneg(idx(i, j)));
            for k in 0..nx {
                if k != i {
                    hs.push(Halfspace::Diff(idx(i, j), idx(k, j), x.d(i, k)));
                    if k > i {
                        hs.push(Halfspace::Sum(idx(i, j), idx(k, j), x.d(i, k)));
                    }
                }
            }
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            for l in 0..ny {
                if l != j {
                    hs.push(Halfspace::Diff(idx(i, j), idx(i, l), y.d(j, l)));
                    if l > j {
                        hs.push(Halfspace::Sum(idx(i, j), idx(i, l), y.d(j, l)));
                    }
                }
            }
        }
    }
    hs
}

/// `argmin Σ W (b − c)²` over the mixed-triangle polytope by Hildreth's
/// cyclic dual coordinate ascent, which coincides with Dykstra's projections
/// for half-spaces.
fn weighted_projection(hs: &[Halfspace], w: &[f64], c: &[f64], tol: f64, max_sweeps: usize) -> (Vec<f64>, bool) {
    let mut z = c.to_vec();
    let mut mu = vec![0.0; hs.len()];
    let inv: Vec<f64> = w.iter().map(|v| 1.0 / v).collect();
    for _ in 0..max_sweeps {
        let mut change: f64 = 0.0;
        for (k, h) in hs.iter().enumerate() {
            let (viol, norm2) = match *h {
                Halfspace::Diff(p, q, d) => (z[p] - z[q] - d, inv[p] + inv[q]),
                Halfspace::Sum(p, q, d) => (d - z[p] - z[q], inv[p] + inv[q]),
                Halfspace::Nonneg(p) => (-z[p], inv[p]),
            };
            let new = (mu[k] + viol / norm2).max(0.0);
            let delta = new - mu[k];
            if delta == 0.0 {
                continue;
            }
            mu[k] = new;
            match *h {
                Halfspace::Diff(p, q, _) => {
                    z[p] -= delta * inv[p];
                    z[q] += delta * inv[q];
                    change = change.max(abs(delta * inv[p])).max(abs(delta * inv[q]));
                }
                Halfspace::Sum(p, q, _) => {
                    z[p] += delta * inv[p];
                    z[q] += delta * inv[q];
                    change = change.max(abs(delta * inv[p])).max(abs(delta * inv[q]));
                }
                Halfspace::Nonneg(p) => {
                    z[p] += delta * inv[p];
                    change = change.max(abs(delta * inv[p]));
                }
            }
        }
        if change <= tol {
            return (z, true);
        }
    }
    (z, false)
}

/// Makes a table exactly feasible: closes it under the upper triangle
/// inequalities, then lifts it uniformly by half the worst remaining violation.
pub fn repair_bridge(x: &MetricMeasureSpace, y: &MetricMeasureSpace, b: &DMatrix<f64>) -> BridgeMetric {
    let (nx, ny) = (x.n(), y.n());
    let base = b.map(|v| v.max(0.0));
    let left = DMatrix::from_fn(nx, ny, |i, j| (0..nx).map(|k| x.d(i, k) + base[(k, j)]).fold(f64::INFINITY, f64::min));
    let closed =
        DMatrix::from_fn(nx, ny, |i, j| (0..ny).map(|l| left[(i, l)] + y.d(l, j)).fold(f64::INFINITY, f64::min));
    let mut lower: f64 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            for k in 0..nx {
                lower = lower.max(x.d(i, k) - closed[(i, j)] - closed[(k, j)]);
            }
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            for l in 0..ny {
                lower = lower.max(y.d(j, l) - closed[(i, j)] - closed[(i, l)]);
            }
        }
    }
    let shift = if lower > 0.0 { 0.5 * lower * (1.0 + 1e-12) } else { 0.0 };
    BridgeMetric { b: closed.map(|v| v + shift) }
}

/// Alternating minimization of `Σ γ b²` from `init` for at most `rounds` rounds.
pub fn d_upper_bound(
    x: &MetricMeasureSpace,
    y: &MetricMeasureSpace,
    init: &Initialization,
    rounds: usize,
) -> Result<DistanceBound, LabError> {
    let pairs = initial_pairs(x, y, init)?;
    let mut bridge = correspondence_bridge(x, y, &pairs)?;
    let hs = mixed_triangles(x, y);
    let (nx, ny) = (x.n(), y.n());
    let mut history = Vec::new();
    let mut coupling = optimal_coupling(x, y, &bridge)?;
    let mut cost = bridge.cost(&coupling);
    history.push(cost);
    let mut converged = false;
    for _ in 0..rounds {
        let gmax = coupling.iter().copied().fold(0.0, f64::max);
        let lambda = 0.1 * gmax;
        let w: Vec<f64> = (0..nx * ny).map(|k| coupling[(k % nx, k / nx)] + lambda).collect();
        let c: Vec<f64> = (0..nx * ny).map(|k| lambda * bridge.b[(k % nx, k / nx)] / w[k]).collect();
        let (z, _) = weighted_projection(&hs, &w, &c, 1e-8 * (1.0 + x.diameter() + y.diameter()), 400);
        let candidate = repair_bridge(x, y, &DMatrix::from_fn(nx, ny, |i, j| z[i + j * nx]));
        let qp_cost = candidate.cost(&coupling);
        if qp_cost < cost {
            bridge = candidate;
        }
        let after_qp = bridge.cost(&coupling);
        history.push(after_qp);
        coupling = optimal_coupling(x, y, &bridge)?;
        let new_cost = bridge.cost(&coupling).min(after_qp);
        history.push(new_cost);
        let improvement = cost - new_cost;
        cost = new_cost;
        if improvement <= 1e-12 * (1.0 + cost) {
            converged = true;
            break;
        }
    }
    let cost = bridge.cost(&coupling);
    Ok(DistanceBound { upper: sqrt(cost.max(0.0)), coupling, bridge, history, converged })
}

/// Random map `X → Y` seeding restart `r`.
pub fn restart_initialization(nx: usize, ny: usize, seed: u64, r: usize) -> Initialization {
    let mut rng = LabRng::new(seed, r as u64);
    Initialization::Map((0..nx).map(|_| rng.index(ny)).collect())
}

/// Best bound over the eccentricity seed and `restarts` random maps; ties go
/// to the earlier candidate.
pub fn d_upper_bound_restarts(
    x: &MetricMeasureSpace,
    y: &MetricMeasureSpace,
    rounds: usize,
    restarts: usize,
    seed: u64,
) -> Result<DistanceBound, LabError> {
    let mut best = d_upper_bound(x, y, &Initialization::Eccentricity, rounds)?;
    for r in 0..restarts {
        let cand = d_upper_bound(x, y, &restart_initialization(x.n(), y.n(), seed, r), rounds)?;
        if cand.upper < best.upper {
            best = cand;
        }
    }
    Ok(best)
}

/// Map of a coarse grid into a finer one sending each point to its nearest neighbour.
pub fn nearest_point_map(coarse: &GridSpace, fine: &GridSpace) -> Vec<usize> {
    coarse.coords().iter().map(|&c| fine.nearest(c)).collect()
}

/// Slack series of one check across a refining family.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilitySeries {
    pub name: String,
    pub slacks: Vec<f64>,
    pub passes: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub sizes: Vec<usize>,
    pub series: Vec<StabilitySeries>,
    /// `𝔻` upper bound between consecutive members.
    pub distance_bounds: Vec<f64>,
    pub slack_monotone: bool,
    pub distance_decreasing: bool,
    pub checks: Vec<CheckResult>,
}

/// Runs `battery` on every member of a refining family and bounds `𝔻`
/// between consecutive members, seeded by the nearest-point map.
pub fn stability_experiment(
    family: &[GridSpace],
    mut battery: impl FnMut(&GridSpace) -> Result<Vec<CheckResult>, LabError>,
    rounds: usize,
) -> Result<StabilityReport, LabError> {
    if family.is_empty() {
        return Err(invalid("family is empty"));
    }
    let mut series: Vec<StabilitySeries> = Vec::new();
    let mut checks = Vec::new();
    for gs in family {
        for r in battery(gs)? {
            match series.iter_mut().find(|s| s.name == r.name) {
                Some(s) => {
                    s.slacks.push(r.measured_slack);
                    s.passes.push(r.pass);
                }
                None => series.push(StabilitySeries {
                    name: r.name.clone(),
                    slacks: vec![r.measured_slack],
                    passes: vec![r.pass],
                }),
            }
            checks.push(r);
        }
    }
    let mut distance_bounds = Vec::new();
    for w in family.windows(2) {
        let map = nearest_point_map(&w[0], &w[1]);
        let bound = d_upper_bound(w[0].base(), w[1].base(), &Initialization::Map(map), rounds)?;
        distance_bounds.push(bound.upper);
    }
    let slack_monotone = series.iter().all(|s| s.slacks.windows(2).all(|p| p[1] <= p[0] + 1e-9));
    let distance_decreasing = distance_bounds.windows(2).all(|p| p[1] <= p[0] + 1e-9);
    Ok(StabilityReport {
        sizes: family.iter().map(|g| g.n()).collect(),
        series,
        distance_bounds,
        slack_monotone,
        distance_decreasing,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_spaces_have_zero_bound() {
        let gs = crate::mmspace::build_circle_grid(1.0, 6).unwrap();
        let s = gs.base();
        let r = d_upper_bound(s, s, &Initialization::Map((0..6).collect()), 5).unwrap();
        assert!(r.upper <= 1e-9);
        assert!(r.bridge.violation(s, s) <= BRIDGE_TOL);
    }

    #[test]
    fn one_point_spaces() {
        let s = MetricMeasureSpace::one_point();
        let r = d_upper_bound(&s, &s, &Initialization::Eccentricity, 3).unwrap();
        assert_eq!(r.upper, 0.0);
    }

    #[test]
    fn repair_yields_feasible_bridge() {
        let a = crate::mmspace::build_circle_grid(1.0, 4).unwrap();
        let b = crate::mmspace::build_circle_grid(1.3, 6).unwrap();
        let junk = DMatrix::from_fn(4, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.1);
        let r = repair_bridge(a.base(), b.base(), &junk);
        assert!(r.violation(a.base(), b.base()) <= BRIDGE_TOL);
    }
}

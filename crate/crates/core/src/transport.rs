//! Optimal transport for the quadratic cost on finite spaces.
//!
//! The exact solver is a transportation simplex on the dense bipartite
//! instance restricted to the supports of the marginals. Entering cells follow
//! the most negative reduced cost; after a degenerate pivot the next choice
//! follows Bland's rule (smallest entering cell, smallest leaving cell), which
//! rules out cycling. The dual is read off the final basis tree. The entropic solver runs
//! log-domain Sinkhorn iterations with a halving ε schedule.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::check::CheckResult;
use crate::fmath::{abs, exp, ln, log_sum_exp, sqrt};
use crate::mmspace::MetricMeasureSpace;

/// Allowed difference between the total masses of two marginals.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("marginal has length {got}, space has {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("marginal entry {0} is negative or not finite")]
    InvalidEntry(usize),
    #[error("marginal masses differ by {0:e}")]
    MassMismatch(f64),
    #[error("marginal is empty")]
    EmptySupport,
    #[error("marginal charges point {0} outside the support of m")]
    OutsideSupport(usize),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("measure is not absolutely continuous w.r.t. the first marginal at point {0}")]
    NotAbsolutelyContinuous(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// A coupling `γ` between `source` and `target` on one space.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub gamma: DMatrix<f64>,
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    /// `Σ γ_xy d(x,y)²`.
    pub cost: f64,
}

impl TransportPlan {
    /// Entries above `threshold` as `(x, y, mass)` in row-major order.
    pub fn support(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        let (r, c) = self.gamma.shape();
        let mut out = Vec::new();
        for x in 0..r {
            for y in 0..c {
                let g = self.gamma[(x, y)];
                if g > threshold {
                    out.push((x, y, g));
                }
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.gamma.nrows()).map(|x| self.gamma.row(x).iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.gamma.ncols()).map(|y| self.gamma.column(y).iter().sum()).collect()
    }

    /// Sup-norm distance of the plan's marginals to `source` and `target`.
    pub fn marginal_violation(&self) -> f64 {
        let r = crate::fmath::sup_dist(&self.row_sums(), &self.source);
        let c = crate::fmath::sup_dist(&self.column_sums(), &self.target);
        r.max(c)
    }

    pub fn recompute_cost(&self, space: &MetricMeasureSpace) -> f64 {
        squared_cost(space, &self.gamma)
    }
}

fn squared_cost(space: &MetricMeasureSpace, gamma: &DMatrix<f64>) -> f64 {
    let mut c = 0.0;
    for x in 0..gamma.nrows() {
        for y in 0..gamma.ncols() {
            let g = gamma[(x, y)];
            if g != 0.0 {
                let d = space.d(x, y);
                c += g * d * d;
            }
        }
    }
    c
}

/// Kantorovich pair for the cost `c = ½d²`, anchored so `phi[anchor] = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPotentials {
    pub phi: Vec<f64>,
    pub phi_c: Vec<f64>,
    pub anchor: usize,
}

impl DualPotentials {
    /// Same pair with `phi` vanishing at another point.
    pub fn reanchored(&self, anchor: usize) -> Self {
        let a = self.phi[anchor];
        DualPotentials {
            phi: self.phi.iter().map(|p| p - a).collect(),
            phi_c: self.phi_c.iter().map(|p| p + a).collect(),
            anchor,
        }
    }
}

/// Bookkeeping of an exact solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveInfo {
    pub pivots: usize,
    /// Some basic cell carries zero mass.
    pub degenerate_basis: bool,
    /// Some non-basic cell has zero reduced cost, so another optimal vertex exists.
    pub multiple_optima: bool,
    /// Primal minus dual objective.
    pub duality_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactSolution {
    pub plan: TransportPlan,
    pub potentials: DualPotentials,
    pub w2: f64,
    pub info: SolveInfo,
}

/// Optimal basic solution of a dense transportation problem.
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub flow: DMatrix<f64>,
    /// Row potentials, `u[0] = 0`.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
    pub degenerate_basis: bool,
    pub multiple_optima: bool,
}

struct BasisTree {
    p: usize,
    q: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl BasisTree {
    fn new(p: usize, q: usize) -> Self {
        BasisTree { p, q, rows: vec![Vec::new(); p], cols: vec![Vec::new(); q] }
    }

    fn insert(&mut self, i: usize, j: usize) {
        self.rows[i].push(j);
        self.cols[j].push(i);
    }

    fn remove(&mut self, i: usize, j: usize) {
        if let Some(k) = self.rows[i].iter().position(|&c| c == j) {
            self.rows[i].swap_remove(k);
        }
        if let Some(k) = self.cols[j].iter().position(|&r| r == i) {
            self.cols[j].swap_remove(k);
        }
    }

    /// Duals with `u[0] = 0` and `u_i + v_j = c_ij` on every basic cell.
    fn duals(&self, cost: &DMatrix<f64>, u: &mut [f64], v: &mut [f64]) {
        let mut row_done = vec![false; self.p];
        let mut col_done = vec![false; self.q];
        let mut stack: Vec<(bool, usize)> = vec![(true, 0)];
        u[0] = 0.0;
        row_done[0] = true;
        while let Some((is_row, k)) = stack.pop() {
            if is_row {
                for &j in &self.rows[k] {
                    if !col_done[j] {
                        v[j] = cost[(k, j)] - u[k];
                        col_done[j] = true;
                        stack.push((false, j));
                    }
                }
            } else {
                for &i in &self.cols[k] {
                    if !row_done[i] {
                        u[i] = cost[(i, k)] - v[k];
                        row_done[i] = true;
                        stack.push((true, i));
                    }
                }
            }
        }
    }

    /// Basic cells on the tree path from column `j` to row `i`, in order.
    fn path(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        // nodes: rows 0..p, columns p..p+q
        let total = self.p + self.q;
        let mut parent = vec![usize::MAX; total];
        parent[i] = i;
        let mut stack = vec![i];
        let target = self.p + j;
        while let Some(node) = stack.pop() {
            if node == target {
                break;
            }
            if node < self.p {
                for &c in &self.rows[node] {
                    let nc = self.p + c;
                    if parent[nc] == usize::MAX {
                        parent[nc] = node;
                        stack.push(nc);
                    }
                }
            } else {
                for &r in &self.cols[node - self.p] {
                    if parent[r] == usize::MAX {
                        parent[r] = node;
                        stack.push(r);
                    }
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = target;
        while node != i {
            let prev = parent[node];
            let cell = if node >= self.p { (prev, node - self.p) } else { (node, prev - self.p) };
            cells.push(cell);
            node = prev;
        }
        cells
    }
}

/// Solves `min Σ c_ij x_ij` over couplings of strictly positive `supply` and
/// `demand` with equal totals.
pub fn transport_simplex(cost: &DMatrix<f64>, supply: &[f64], demand: &[f64]) -> Result<LpSolution, TransportError> {
    let p = supply.len();
    let q = demand.len();
    if p == 0 || q == 0 {
        return Err(TransportError::EmptySupport);
    }
    if cost.nrows() != p || cost.ncols() != q {
        return Err(TransportError::LengthMismatch { expected: p * q, got: cost.nrows() * cost.ncols() });
    }
    let cmax = cost.iter().fold(0.0f64, |a, &c| a.max(abs(c)));
    let tol = 1e-12 * cmax.max(1.0);

    let mut flow = DMatrix::zeros(p, q);
    let mut basic = vec![false; p * q];
    let mut tree = BasisTree::new(p, q);
    {
        let mut ra = supply.to_vec();
        let mut rb = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = if i == p - 1 {
                rb[j]
            } else if j == q - 1 {
                ra[i]
            } else {
                ra[i].min(rb[j])
            }
            .max(0.0);
            flow[(i, j)] = x;
            basic[i * q + j] = true;
            tree.insert(i, j);
            ra[i] -= x;
            rb[j] -= x;
            if i == p - 1 && j == q - 1 {
                break;
            }
            if i == p - 1 {
                j += 1;
            } else if j == q - 1 || ra[i] <= rb[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let mut u = vec![0.0; p];
    let mut v = vec![0.0; q];
    let max_pivots = 200 * p * q + 10_000;
    let mut pivots = 0;
    // Dantzig's rule, switching to Bland's rule while pivots are degenerate.
    let mut bland = false;
    loop {
        tree.duals(cost, &mut u, &mut v);
        let mut entering = None;
        if bland {
            'scan: for i in 0..p {
                for j in 0..q {
                    if !basic[i * q + j] && cost[(i, j)] - u[i] - v[j] < -tol {
                        entering = Some((i, j));
                        break 'scan;
                    }
                }
            }
        } else {
            let mut best = -tol;
            for i in 0..p {
                for j in 0..q {
                    let r = cost[(i, j)] - u[i] - v[j];
                    if r < best && !basic[i * q + j] {
                        best = r;
                        entering = Some((i, j));
                    }
                }
            }
        }
        let Some((ei, ej)) = entering else { break };
        if pivots >= max_pivots {
            return Err(TransportError::NonConvergence {
                iterations: pivots,
                residual: cost[(ei, ej)] - u[ei] - v[ej],
            });
        }
        pivots += 1;
        let path = tree.path(ei, ej);
        // path[0] touches column ej and loses mass, signs alternate from there
        let mut theta = f64::INFINITY;
        let mut leaving = (usize::MAX, usize::MAX);
        for (k, &(r, c)) in path.iter().enumerate() {
            if k % 2 == 0 {
                let f = flow[(r, c)];
                let better = f < theta || (f == theta && r * q + c < leaving.0 * q + leaving.1);
                if better {
                    theta = f;
                    leaving = (r, c);
                }
            }
        }
        for (k, &(r, c)) in path.iter().enumerate() {
            if k % 2 == 0 {
                flow[(r, c)] -= theta;
            } else {
                flow[(r, c)] += theta;
            }
        }
        flow[leaving] = 0.0;
        flow[(ei, ej)] = theta;
        bland = theta == 0.0;
        basic[leaving.0 * q + leaving.1] = false;
        tree.remove(leaving.0, leaving.1);
        basic[ei * q + ej] = true;
        tree.insert(ei, ej);
    }

    let mut objective = 0.0;
    let mut degenerate = false;
    let mut multiple = false;
    for i in 0..p {
        for j in 0..q {
            objective += flow[(i, j)] * cost[(i, j)];
            if basic[i * q + j] {
                if flow[(i, j)] == 0.0 {
                    degenerate = true;
                }
            } else if abs(cost[(i, j)] - u[i] - v[j]) <= tol {
                multiple = true;
            }
        }
    }
    Ok(LpSolution { flow, u, v, objective, pivots, degenerate_basis: degenerate, multiple_optima: multiple })
}

fn check_marginal(space: &MetricMeasureSpace, mu: &[f64]) -> Result<Vec<usize>, TransportError> {
    if mu.len() != space.n() {
        return Err(TransportError::LengthMismatch { expected: space.n(), got: mu.len() });
    }
    let mut supp = Vec::new();
    for (i, &x) in mu.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(TransportError::InvalidEntry(i));
        }
        if x > 0.0 {
            if !space.in_support(i) {
                return Err(TransportError::OutsideSupport(i));
            }
            supp.push(i);
        }
    }
    if supp.is_empty() {
        return Err(TransportError::EmptySupport);
    }
    Ok(supp)
}

fn check_pair(space: &MetricMeasureSpace, mu: &[f64], nu: &[f64]) -> Result<(Vec<usize>, Vec<usize>), TransportError> {
    let sm = check_marginal(space, mu)?;
    let sn = check_marginal(space, nu)?;
    let defect = abs(mu.iter().sum::<f64>() - nu.iter().sum::<f64>());
    if defect > MASS_TOL {
        return Err(TransportError::MassMismatch(defect));
    }
    Ok((sm, sn))
}

fn solve_on_supports(
    space: &MetricMeasureSpace,
    mu: &[f64],
    nu: &[f64],
    rows: &[usize],
    cols: &[usize],
    cost: impl Fn(f64) -> f64,
) -> Result<(DMatrix<f64>, LpSolution), TransportError> {
    let c = DMatrix::from_fn(rows.len(), cols.len(), |a, b| cost(space.d(rows[a], cols[b])));
    let supply: Vec<f64> = rows.iter().map(|&i| mu[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| nu[j]).collect();
    let lp = transport_simplex(&c, &supply, &demand)?;
    let n = space.n();
    let mut gamma = DMatrix::zeros(n, n);
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            gamma[(i, j)] = lp.flow[(a, b)];
        }
    }
    Ok((gamma, lp))
}

/// Exact W₂ with optimal plan and anchored Kantorovich potentials for `c = ½d²`.
pub fn solve_w2_exact(space: &MetricMeasureSpace, mu: &[f64], nu: &[f64]) -> Result<ExactSolution, TransportError> {
    let (rows, cols) = check_pair(space, mu, nu)?;
    let half_sq = |d: f64| 0.5 * d * d;
    let (gamma, lp) = solve_on_supports(space, mu, nu, &rows, &cols, half_sq)?;
    let n = space.n();

    // c-transforms extend the basis duals to every point
    let phi_c: Vec<f64> = (0..n)
        .map(|y| rows.iter().enumerate().map(|(a, &x)| half_sq(space.d(x, y)) - lp.u[a]).fold(f64::INFINITY, f64::min))
        .collect();
    let phi = c_transform(space, &phi_c);
    let anchor = rows[0];
    let potentials = DualPotentials { phi, phi_c, anchor: 0 }.reanchored(anchor);

    let dual: f64 = mu.iter().zip(&potentials.phi).map(|(m, p)| m * p).sum::<f64>()
        + nu.iter().zip(&potentials.phi_c).map(|(m, p)| m * p).sum::<f64>();
    let cost = squared_cost(space, &gamma);
    let info = SolveInfo {
        pivots: lp.pivots,
        degenerate_basis: lp.degenerate_basis,
        multiple_optima: lp.multiple_optima,
        duality_gap: lp.objective - dual,
    };
    Ok(ExactSolution {
        plan: TransportPlan { gamma, source: mu.to_vec(), target: nu.to_vec(), cost },
        potentials,
        w2: sqrt(cost.max(0.0)),
        info,
    })
}

/// Exact W₁ (cost `d`).
pub fn w1(space: &MetricMeasureSpace, mu: &[f64], nu: &[f64]) -> Result<f64, TransportError> {
    Ok(w1_plan(space, mu, nu)?.1)
}

/// Exact W₁ together with an optimal plan.
pub fn w1_plan(space: &MetricMeasureSpace, mu: &[f64], nu: &[f64]) -> Result<(TransportPlan, f64), TransportError> {
    let (rows, cols) = check_pair(space, mu, nu)?;
    let (gamma, lp) = solve_on_supports(space, mu, nu, &rows, &cols, |d| d)?;
    let cost = squared_cost(space, &gamma);
    Ok((TransportPlan { gamma, source: mu.to_vec(), target: nu.to_vec(), cost }, lp.objective))
}

/// `(ψ^c)(x) = min_y ½d(x,y)² − ψ(y)`.
pub fn c_transform(space: &MetricMeasureSpace, psi: &[f64]) -> Vec<f64> {
    let n = space.n();
    (0..n)
        .map(|x| {
            (0..n)
                .map(|y| {
                    let d = space.d(x, y);
                    0.5 * d * d - psi[y]
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Entropic transport for the cost `d²` with regularisation `eps`.
///
/// Returns a plan whose marginals match to `1e-9` in sup-norm.
pub fn solve_entropic(
    space: &MetricMeasureSpace,
    mu: &[f64],
    nu: &[f64],
    eps: f64,
) -> Result<TransportPlan, TransportError> {
    solve_entropic_with(space, mu, nu, eps, 1e-9, 500_000)
}

pub fn solve_entropic_with(
    space: &MetricMeasureSpace,
    mu: &[f64],
    nu: &[f64],
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<TransportPlan, TransportError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(TransportError::InvalidParameter("eps must be positive"));
    }
    let (rows, cols) = check_pair(space, mu, nu)?;
    let (p, q) = (rows.len(), cols.len());
    let c = DMatrix::from_fn(p, q, |a, b| {
        let d = space.d(rows[a], cols[b]);
        d * d
    });
    let la: Vec<f64> = rows.iter().map(|&i| ln(mu[i])).collect();
    let lb: Vec<f64> = cols.iter().map(|&j| ln(nu[j])).collect();
    let a: Vec<f64> = rows.iter().map(|&i| mu[i]).collect();
    let mut f = vec![0.0; p];
    let mut g = vec![0.0; q];

    let cmax = c.iter().fold(0.0f64, |m, &x| m.max(x));
    let mut schedule = Vec::new();
    let mut e = cmax.max(eps);
    while e > eps {
        schedule.push(e);
        e *= 0.5;
    }
    schedule.push(eps);

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    for (stage, &e) in schedule.iter().enumerate() {
        let last = stage + 1 == schedule.len();
        let (stage_tol, stage_max) = if last { (tol, max_iter) } else { (1e-3, 500) };
        let mut k = 0;
        loop {
            for i in 0..p {
                f[i] = -e * log_sum_exp((0..q).map(|j| lb[j] + (g[j] - c[(i, j)]) / e));
            }
            for j in 0..q {
                g[j] = -e * log_sum_exp((0..p).map(|i| la[i] + (f[i] - c[(i, j)]) / e));
            }
            k += 1;
            iterations += 1;
            if k % 5 == 0 || k >= stage_max {
                residual = (0..p)
                    .map(|i| {
                        let row: f64 = (0..q).map(|j| exp(la[i] + lb[j] + (f[i] + g[j] - c[(i, j)]) / e)).sum();
                        abs(row - a[i])
                    })
                    .fold(0.0, f64::max);
                if residual <= stage_tol {
                    break;
                }
                if k >= stage_max {
                    if last {
                        return Err(TransportError::NonConvergence { iterations, residual });
                    }
                    break;
                }
            }
        }
    }
    let _ = residual;
    let n = space.n();
    let mut gamma = DMatrix::zeros(n, n);
    for (ai, &i) in rows.iter().enumerate() {
        for (bj, &j) in cols.iter().enumerate() {
            gamma[(i, j)] = exp(la[ai] + lb[bj] + (f[ai] + g[bj] - c[(ai, bj)]) / eps);
        }
    }
    let cost = squared_cost(space, &gamma);
    Ok(TransportPlan { gamma, source: mu.to_vec(), target: nu.to_vec(), cost })
}

/// W₂ through the exact solver, or the entropic one above `exact_cap` support
/// points. Returns `(w2, extra_budget)` where the budget accounts for the
/// entropic bias `ε log n`.
pub fn w2_auto(
    space: &MetricMeasureSpace,
    mu: &[f64],
    nu: &[f64],
    exact_cap: usize,
    eps: f64,
) -> Result<(f64, f64), TransportError> {
    let sm = mu.iter().filter(|&&x| x > 0.0).count();
    let sn = nu.iter().filter(|&&x| x > 0.0).count();
    if sm.max(sn) <= exact_cap {
        Ok((solve_w2_exact(space, mu, nu)?.w2, 0.0))
    } else {
        let plan = solve_entropic(space, mu, nu, eps)?;
        Ok((sqrt(plan.cost), eps * ln(space.n() as f64)))
    }
}

/// Worst violation `Σ c(x_i, y_i) − Σ c(x_i, y_{i+1})` over cycles of at most
/// `maxlen` support pairs of `plan`, for `c = ½d²`.
pub fn check_cyclical_monotonicity(
    space: &MetricMeasureSpace,
    plan: &TransportPlan,
    maxlen: usize,
) -> Result<CheckResult, TransportError> {
    if !(2..=4).contains(&maxlen) {
        return Err(TransportError::InvalidParameter("cycle length must be in 2..=4"));
    }
    let pairs: Vec<(usize, usize)> = plan.support(1e-12).into_iter().map(|(x, y, _)| (x, y)).collect();
    let c = |x: usize, y: usize| {
        let d = space.d(x, y);
        0.5 * d * d
    };
    let mut worst = f64::NEG_INFINITY;
    let mut cycles = 0usize;
    let mut stack: Vec<usize> = Vec::with_capacity(maxlen);
    fn extend(
        pairs: &[(usize, usize)],
        stack: &mut Vec<usize>,
        maxlen: usize,
        c: &dyn Fn(usize, usize) -> f64,
        worst: &mut f64,
        cycles: &mut usize,
    ) {
        if stack.len() >= 2 {
            let k = stack.len();
            let mut v = 0.0;
            for i in 0..k {
                let (x, y) = pairs[stack[i]];
                let (_, y_next) = pairs[stack[(i + 1) % k]];
                v += c(x, y) - c(x, y_next);
            }
            *cycles += 1;
            if v > *worst {
                *worst = v;
            }
        }
        if stack.len() == maxlen {
            return;
        }
        for idx in stack[0] + 1..pairs.len() {
            if stack.contains(&idx) {
                continue;
            }
            stack.push(idx);
            extend(pairs, stack, maxlen, c, worst, cycles);
            stack.pop();
        }
    }
    for first in 0..pairs.len() {
        stack.clear();
        stack.push(first);
        extend(&pairs, &mut stack, maxlen, &c, &mut worst, &mut cycles);
    }
    let slack = worst.max(0.0);
    Ok(CheckResult::new("cyclical_monotonicity", "c-cyclical monotonicity", slack, 1e-10)
        .with("support_pairs", pairs.len())
        .with("cycles_scanned", cycles)
        .with("max_cycle_length", maxlen))
}

/// Push-forward `γ_♯μ̃` of a measure `μ̃ ≪ γ¹` through a plan.
pub fn push_forward_plan(plan: &TransportPlan, mu_tilde: &[f64]) -> Result<Vec<f64>, TransportError> {
    let n = plan.gamma.nrows();
    if mu_tilde.len() != n {
        return Err(TransportError::LengthMismatch { expected: n, got: mu_tilde.len() });
    }
    let rows = plan.row_sums();
    let mut out = vec![0.0; plan.gamma.ncols()];
    for x in 0..n {
        let mt = mu_tilde[x];
        if !mt.is_finite() || mt < 0.0 {
            return Err(TransportError::InvalidEntry(x));
        }
        if mt == 0.0 {
            continue;
        }
        if !(rows[x] > 0.0) {
            return Err(TransportError::NotAbsolutelyContinuous(x));
        }
        let density = mt / rows[x];
        for (y, o) in out.iter_mut().enumerate() {
            *o += density * plan.gamma[(x, y)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::{build_circle_grid, MetricMeasureSpace};

    #[test]
    fn identical_marginals_cost_nothing() {
        let g = build_circle_grid(1.0, 6).unwrap();
        let mu = [0.1, 0.2, 0.3, 0.1, 0.2, 0.1];
        let sol = solve_w2_exact(g.base(), &mu, &mu).unwrap();
        assert_eq!(sol.w2, 0.0);
        for x in 0..6 {
            for y in 0..6 {
                if x != y {
                    assert_eq!(sol.plan.gamma[(x, y)], 0.0);
                }
            }
        }
    }

    #[test]
    fn dirac_to_dirac() {
        let s = MetricMeasureSpace::two_point(1.0, 0.5).unwrap();
        let sol = solve_w2_exact(&s, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(sol.w2, 1.0);
        assert_eq!(sol.plan.gamma[(0, 1)], 1.0);
        assert_eq!(sol.potentials.phi[0], 0.0);
        assert!(sol.info.duality_gap.abs() < 1e-12);
    }

    #[test]
    fn mass_mismatch_rejected() {
        let s = MetricMeasureSpace::two_point(1.0, 0.5).unwrap();
        assert!(matches!(solve_w2_exact(&s, &[1.0, 0.0], &[0.0, 0.9]), Err(TransportError::MassMismatch(_))));
    }

    #[test]
    fn c_transform_hand_values() {
        let s = MetricMeasureSpace::two_point(1.0, 0.5).unwrap();
        assert_eq!(c_transform(&s, &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(c_transform(&s, &[0.0, 1.0]), vec![-0.5, -1.0]);
    }

    #[test]
    fn push_forward_through_diagonal_plan() {
        let g = build_circle_grid(1.0, 4).unwrap();
        let mu = [0.25; 4];
        let sol = solve_w2_exact(g.base(), &mu, &mu).unwrap();
        let mt = [0.4, 0.1, 0.3, 0.2];
        let out = push_forward_plan(&sol.plan, &mt).unwrap();
        for (a, b) in out.iter().zip(&mt) {
            assert!((a - b).abs() < 1e-15);
        }
        let bad = [0.0; 4];
        let mut p = sol.plan.clone();
        p.gamma[(0, 0)] = 0.0;
        assert!(push_forward_plan(&p, &[1.0, 0.0, 0.0, 0.0]).is_err());
        assert_eq!(push_forward_plan(&p, &bad).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn single_pair_plan_is_monotone() {
        let s = MetricMeasureSpace::two_point(1.0, 0.5).unwrap();
        let sol = solve_w2_exact(&s, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let r = check_cyclical_monotonicity(&s, &sol.plan, 4).unwrap();
        assert!(r.pass);
        assert_eq!(r.measured_slack, 0.0);
    }

    #[test]
    fn w1_diracs() {
        let s = MetricMeasureSpace::two_point(1.0, 0.5).unwrap();
        assert_eq!(w1(&s, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(w1(&s, &[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
    }
}

//! Quadratic Dirichlet forms on weighted graphs over a finite space.
//!
//! With symmetric edge weights `w` and vertex measure `m`,
//!
//! ```text
//! E(f, g)    = ½ Σ_{x,y} w_xy (f(y) − f(x)) (g(y) − g(x))
//! Δf(x)      = (1/m_x) Σ_y w_xy (f(y) − f(x))
//! Γ(f, g)(x) = (1/(2 m_x)) Σ_y w_xy (f(y) − f(x)) (g(y) − g(x))
//! ```
//!
//! so that `Σ m g Δf = −E(f, g)` and `Σ m Γ(f, g) = E(f, g)`. The Cheeger
//! energy is `C(f) = ½ E(f, f)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::check::{CheckResult, LabConfig};
use crate::fmath::{abs, exp, ln, sqrt};
use crate::mmspace::{product_space, GridSpace, MetricMeasureSpace, Model, ProductMap, SpaceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirichletError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("weight table is {rows}x{cols}, space has {n} points")]
    WeightShape { rows: usize, cols: usize, n: usize },
    #[error("weight ({0}, {1}) is negative or not finite")]
    InvalidWeight(usize, usize),
    #[error("weights are not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("weight on the diagonal at {0}")]
    SelfLoop(usize),
    #[error("point {0} carries an edge but has zero mass")]
    ZeroMassVertex(usize),
    #[error("time must be nonnegative")]
    NegativeTime,
    #[error("function has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("grid is not a full lattice; restrict a lattice structure instead")]
    NotLattice,
    #[error("point {0} is outside the support")]
    OutsideSupport(usize),
    #[error("function support is {dist} from the complement, {required} required")]
    SupportTooClose { dist: f64, required: f64 },
    #[error("linear solver stalled after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Edge weights and vertex measure of a graph Dirichlet form.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletStructure {
    space: MetricMeasureSpace,
    w: DMatrix<f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl DirichletStructure {
    pub fn new(space: MetricMeasureSpace, w: DMatrix<f64>) -> Result<Self, DirichletError> {
        let n = space.n();
        if w.nrows() != n || w.ncols() != n {
            return Err(DirichletError::WeightShape { rows: w.nrows(), cols: w.ncols(), n });
        }
        let mut adjacency = vec![Vec::new(); n];
        for x in 0..n {
            if w[(x, x)] != 0.0 {
                return Err(DirichletError::SelfLoop(x));
            }
            for y in 0..n {
                let v = w[(x, y)];
                if !v.is_finite() || v < 0.0 {
                    return Err(DirichletError::InvalidWeight(x, y));
                }
                if v != w[(y, x)] {
                    return Err(DirichletError::Asymmetric(x, y));
                }
                if v > 0.0 {
                    if !(space.m()[x] > 0.0) {
                        return Err(DirichletError::ZeroMassVertex(x));
                    }
                    adjacency[x].push((y, v));
                }
            }
        }
        Ok(DirichletStructure { space, w, adjacency })
    }

    /// Finite-difference stencil on a lattice grid: neighbours along each axis
    /// with weight `m̂ / h_axis²`, where `m̂` averages the two cell masses
    /// (interval end points count as full cells).
    pub fn grid(gs: &GridSpace) -> Result<Self, DirichletError> {
        let [n0, n1] = gs.lattice().ok_or(DirichletError::NotLattice)?;
        let n = gs.n();
        let m = gs.base().m();
        let (steps, wraps): ([f64; 2], bool) = match gs.model() {
            Model::Interval { length } => ([length / (n0 - 1) as f64, 0.0], false),
            Model::Circle { length } => ([length / n0 as f64, 0.0], true),
            Model::Torus { lengths } => ([lengths[0] / n0 as f64, lengths[1] / n1 as f64], true),
        };
        let cell = |i: usize| -> f64 {
            if !wraps && (i == 0 || i == n - 1) {
                2.0 * m[i]
            } else {
                m[i]
            }
        };
        let mut w = DMatrix::zeros(n, n);
        let axes = if n1 > 1 { 2 } else { 1 };
        for i in 0..n {
            let (a0, a1) = (i / n1, i % n1);
            for axis in 0..axes {
                let len = if axis == 0 { n0 } else { n1 };
                let pos = if axis == 0 { a0 } else { a1 };
                for step in [-1i64, 1] {
                    let q = pos as i64 + step;
                    let q = if wraps {
                        q.rem_euclid(len as i64) as usize
                    } else if q < 0 || q >= len as i64 {
                        continue;
                    } else {
                        q as usize
                    };
                    let j = if axis == 0 { q * n1 + a1 } else { a0 * n1 + q };
                    let h = steps[axis];
                    w[(i, j)] += 0.5 * (cell(i) + cell(j)) / (h * h);
                }
            }
        }
        Self::new(gs.base().clone(), w)
    }

    /// Cycle graph on `n` vertices with unit weights, uniform measure and the
    /// graph distance.
    pub fn cycle(n: usize) -> Result<Self, DirichletError> {
        let gs = crate::mmspace::build_circle_grid(n as f64, n)?;
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            w[(i, (i + 1) % n)] += 1.0;
            w[((i + 1) % n, i)] += 1.0;
        }
        if n == 2 {
            w[(0, 1)] = 1.0;
            w[(1, 0)] = 1.0;
        }
        Self::new(gs.into_base(), w)
    }

    /// Two points at distance `d01` with masses `(m0, 1 − m0)` joined by one edge.
    pub fn two_point(d01: f64, m0: f64, weight: f64) -> Result<Self, DirichletError> {
        let s = MetricMeasureSpace::two_point(d01, m0)?;
        let w = DMatrix::from_row_slice(2, 2, &[0.0, weight, weight, 0.0]);
        Self::new(s, w)
    }

    pub fn space(&self) -> &MetricMeasureSpace {
        &self.space
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn neighbours(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn m(&self) -> &[f64] {
        self.space.m()
    }

    fn check_len(&self, f: &[f64]) -> Result<(), DirichletError> {
        if f.len() != self.n() {
            Err(DirichletError::LengthMismatch { expected: self.n(), got: f.len() })
        } else {
            Ok(())
        }
    }

    /// `Δf`; zero at isolated points.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let m = self.m();
        (0..self.n())
            .map(|x| {
                let s: f64 = self.adjacency[x].iter().map(|&(y, w)| w * (f[y] - f[x])).sum();
                if s == 0.0 {
                    0.0
                } else {
                    s / m[x]
                }
            })
            .collect()
    }

    /// The bilinear form `E(f, g)`.
    pub fn energy(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut s = 0.0;
        for x in 0..self.n() {
            for &(y, w) in &self.adjacency[x] {
                s += w * (f[y] - f[x]) * (g[y] - g[x]);
            }
        }
        0.5 * s
    }

    /// `C(f) = ½ E(f, f)`.
    pub fn cheeger_energy(&self, f: &[f64]) -> f64 {
        0.5 * self.energy(f, f)
    }

    /// Pointwise `Γ(f, g)`.
    pub fn carre_du_champ(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        let m = self.m();
        (0..self.n())
            .map(|x| {
                let s: f64 = self.adjacency[x].iter().map(|&(y, w)| w * (f[y] - f[x]) * (g[y] - g[x])).sum();
                if s == 0.0 {
                    0.0
                } else {
                    s / (2.0 * m[x])
                }
            })
            .collect()
    }

    pub fn gamma(&self, f: &[f64]) -> Vec<f64> {
        self.carre_du_champ(f, f)
    }

    /// `∫ φ d[f]`, evaluated as `E(f, fφ) − E(f²/2, φ)`; equals `Σ m φ Γ(f)`.
    pub fn energy_measure(&self, f: &[f64], phi: &[f64]) -> f64 {
        let f_phi: Vec<f64> = f.iter().zip(phi).map(|(a, b)| a * b).collect();
        let half_sq: Vec<f64> = f.iter().map(|a| 0.5 * a * a).collect();
        self.energy(f, &f_phi) - self.energy(&half_sq, phi)
    }

    /// Integral against `m`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.m().iter().zip(f).map(|(m, v)| m * v).sum()
    }

    /// Induced structure on `indices` with measure `m / m(Y)` and weights
    /// `w / m(Y)`, so `Γ` is unchanged at interior points.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self, DirichletError> {
        let space = self.space.subspace(indices)?;
        let mass: f64 = indices.iter().map(|&i| self.m()[i]).sum();
        let k = indices.len();
        let w = DMatrix::from_fn(k, k, |a, b| self.w[(indices[a], indices[b])] / mass);
        Self::new(space, w)
    }

    /// Cartesian product with `Δ_Z = Δ_X ⊕ Δ_Y`.
    pub fn product(
        &self,
        other: &DirichletStructure,
        cap: usize,
    ) -> Result<(DirichletStructure, ProductMap), DirichletError> {
        let (space, map) = product_space(&self.space, &other.space, cap)?;
        let n = map.len();
        let (mx, my) = (self.m(), other.m());
        let mut w = DMatrix::zeros(n, n);
        for x in 0..map.nx {
            for y in 0..map.ny {
                let z = map.index(x, y);
                for &(x2, wx) in &self.adjacency[x] {
                    w[(z, map.index(x2, y))] = wx * my[y];
                }
                for &(y2, wy) in &other.adjacency[y] {
                    w[(z, map.index(x, y2))] = wy * mx[x];
                }
            }
        }
        Ok((Self::new(space, w)?, map))
    }

    /// Symmetric generator `S = M^{-1/2} (D − W) M^{-1/2}` on `indices`.
    fn similarity_generator(&self, indices: &[usize]) -> DMatrix<f64> {
        let k = indices.len();
        let mut pos = vec![usize::MAX; self.n()];
        for (a, &i) in indices.iter().enumerate() {
            pos[i] = a;
        }
        let m = self.m();
        let mut s = DMatrix::zeros(k, k);
        for (a, &x) in indices.iter().enumerate() {
            let mut deg = 0.0;
            for &(y, w) in &self.adjacency[x] {
                deg += w;
                let b = pos[y];
                s[(a, b)] -= w / sqrt(m[x] * m[y]);
            }
            s[(a, a)] += deg / m[x];
        }
        s
    }
}

/// Heat semigroup `H_t = e^{tΔ}`.
#[derive(Clone, Debug)]
pub struct HeatOperator {
    structure: DirichletStructure,
    support: Vec<usize>,
    mode: HeatMode,
}

#[derive(Clone, Debug)]
enum HeatMode {
    Spectral { eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>, sqrt_m: Vec<f64> },
    Euler { step: f64 },
}

impl HeatOperator {
    /// Spectral up to `config.spectral_cap` support points, implicit Euler beyond.
    pub fn new(structure: &DirichletStructure, config: &LabConfig) -> Self {
        if structure.space.support().len() <= config.spectral_cap {
            Self::spectral(structure)
        } else {
            Self::implicit_euler(structure, config.euler_step)
        }
    }

    pub fn spectral(structure: &DirichletStructure) -> Self {
        let support = structure.space.support();
        let s = structure.similarity_generator(&support);
        let eig = SymmetricEigen::new(s);
        let eigenvalues = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let sqrt_m = support.iter().map(|&i| sqrt(structure.m()[i])).collect();
        HeatOperator {
            structure: structure.clone(),
            support,
            mode: HeatMode::Spectral { eigenvalues, eigenvectors: eig.eigenvectors, sqrt_m },
        }
    }

    /// Implicit Euler at step `step` with one Richardson extrapolation
    /// (`2u_{τ/2} − u_τ`); linear systems by conjugate gradients.
    pub fn implicit_euler(structure: &DirichletStructure, step: f64) -> Self {
        HeatOperator {
            structure: structure.clone(),
            support: structure.space.support(),
            mode: HeatMode::Euler { step },
        }
    }

    pub fn structure(&self) -> &DirichletStructure {
        &self.structure
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.mode, HeatMode::Spectral { .. })
    }

    /// Eigenvalues of `−Δ` on the support, ascending; empty in Euler mode.
    pub fn spectrum(&self) -> Vec<f64> {
        match &self.mode {
            HeatMode::Spectral { eigenvalues, .. } => {
                let mut e = eigenvalues.clone();
                e.sort_by(f64::total_cmp);
                e
            }
            HeatMode::Euler { .. } => Vec::new(),
        }
    }

    /// `H_t f`. Values at zero-mass points are returned unchanged.
    pub fn apply(&self, f: &[f64], t: f64) -> Result<Vec<f64>, DirichletError> {
        self.structure.check_len(f)?;
        if !(t >= 0.0) {
            return Err(DirichletError::NegativeTime);
        }
        let mut out = f.to_vec();
        if t == 0.0 {
            return Ok(out);
        }
        match &self.mode {
            HeatMode::Spectral { eigenvalues, eigenvectors, sqrt_m } => {
                let k = self.support.len();
                let g = DVector::from_fn(k, |a, _| sqrt_m[a] * f[self.support[a]]);
                let mut c = eigenvectors.tr_mul(&g);
                for (ci, &l) in c.iter_mut().zip(eigenvalues) {
                    *ci *= exp(-l * t);
                }
                let r = eigenvectors * c;
                for (a, &i) in self.support.iter().enumerate() {
                    out[i] = r[a] / sqrt_m[a];
                }
            }
            HeatMode::Euler { step } => {
                let steps = crate::fmath::ceil(t / step).max(1.0) as usize;
                let coarse = self.euler(f, t, steps)?;
                let fine = self.euler(f, t, 2 * steps)?;
                for &i in &self.support {
                    out[i] = 2.0 * fine[i] - coarse[i];
                }
            }
        }
        Ok(out)
    }

    fn euler(&self, f: &[f64], t: f64, steps: usize) -> Result<Vec<f64>, DirichletError> {
        let tau = t / steps as f64;
        let ds = &self.structure;
        let m = ds.m();
        let apply_a = |u: &[f64]| -> Vec<f64> {
            let lap = ds.laplacian(u);
            (0..u.len()).map(|x| if m[x] > 0.0 { m[x] * (u[x] - tau * lap[x]) } else { u[x] }).collect()
        };
        let mut u = f.to_vec();
        for _ in 0..steps {
            let b: Vec<f64> = (0..u.len()).map(|x| if m[x] > 0.0 { m[x] * u[x] } else { u[x] }).collect();
            u = conjugate_gradient(apply_a, &b, &u, 1e-12)?;
        }
        Ok(u)
    }

    /// Transition densities `p_t(x, y)` w.r.t. `m`, so that
    /// `H_t f(x) = Σ_y p_t(x, y) f(y) m_y`. Rows and columns of zero-mass points are zero.
    pub fn kernel_matrix(&self, t: f64) -> Result<DMatrix<f64>, DirichletError> {
        if !(t >= 0.0) {
            return Err(DirichletError::NegativeTime);
        }
        let n = self.structure.n();
        let mut p = DMatrix::zeros(n, n);
        match &self.mode {
            HeatMode::Spectral { eigenvalues, eigenvectors, sqrt_m } => {
                let k = self.support.len();
                let mut scaled = eigenvectors.clone();
                for (b, &l) in eigenvalues.iter().enumerate() {
                    let e = exp(-0.5 * l * t);
                    for a in 0..k {
                        scaled[(a, b)] *= e / sqrt_m[a];
                    }
                }
                let q = &scaled * scaled.transpose();
                for (a, &i) in self.support.iter().enumerate() {
                    for (b, &j) in self.support.iter().enumerate() {
                        p[(i, j)] = q[(a, b)];
                    }
                }
            }
            HeatMode::Euler { .. } => {
                let m = self.structure.m();
                for &y in &self.support {
                    let mut e = vec![0.0; n];
                    e[y] = 1.0 / m[y];
                    let col = self.apply(&e, t)?;
                    for &x in &self.support {
                        p[(x, y)] = col[x];
                    }
                }
                let sym = (&p + p.transpose()) * 0.5;
                p = sym;
            }
        }
        Ok(p)
    }
}

/// Conjugate gradients for a symmetric positive definite operator.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: &[f64],
    rel_tol: f64,
) -> Result<Vec<f64>, DirichletError> {
    let n = b.len();
    let dot = |a: &[f64], c: &[f64]| -> f64 { a.iter().zip(c).map(|(x, y)| x * y).sum() };
    let mut x = x0.to_vec();
    let ax = apply(&x);
    let mut r: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
    let mut p = r.clone();
    let bnorm = sqrt(dot(b, b)).max(f64::MIN_POSITIVE);
    let mut rr = dot(&r, &r);
    let max_iter = 10 * n + 100;
    for _ in 0..max_iter {
        if sqrt(rr) <= rel_tol * bnorm {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if sqrt(rr) <= 1e3 * rel_tol * bnorm {
        return Ok(x);
    }
    Err(DirichletError::NonConvergence { iterations: max_iter, residual: sqrt(rr) / bnorm })
}

/// Checks `(f² + H_t f² − 2f H_t f)/(2t) → Γ(f)` with first-order error as `t ↓ 0`.
///
/// The slack is the error at the smallest time; the tolerance is twice the
/// first-order extrapolation of the error at the largest time.
pub fn energy_measure_limit_check(ho: &HeatOperator, f: &[f64], times: &[f64]) -> Result<CheckResult, DirichletError> {
    if times.len() < 2 || times.iter().any(|&t| !(t > 0.0)) {
        return Err(DirichletError::InvalidParameter("need at least two positive times"));
    }
    let ds = ho.structure();
    let gamma = ds.gamma(f);
    let f2: Vec<f64> = f.iter().map(|v| v * v).collect();
    let supp = ds.space().support();
    let mut errors = Vec::with_capacity(times.len());
    for &t in times {
        let hf = ho.apply(f, t)?;
        let hf2 = ho.apply(&f2, t)?;
        let e = supp
            .iter()
            .map(|&x| {
                let q = (f2[x] + hf2[x] - 2.0 * f[x] * hf[x]) / (2.0 * t);
                abs(q - gamma[x])
            })
            .fold(0.0, f64::max);
        errors.push(e);
    }
    let (mut i_max, mut i_min) = (0, 0);
    for i in 0..times.len() {
        if times[i] > times[i_max] {
            i_max = i;
        }
        if times[i] < times[i_min] {
            i_min = i;
        }
    }
    let tol = 2.0 * errors[i_max] * times[i_min] / times[i_max] + 1e-10;
    let order = if errors[i_min] > 0.0 && errors[i_max] > 0.0 && i_min != i_max {
        ln(errors[i_max] / errors[i_min]) / ln(times[i_max] / times[i_min])
    } else {
        f64::NAN
    };
    let mut r = CheckResult::new("energy_measure_limit", "energy measure as a heat-flow limit", errors[i_min], tol)
        .with("observed_order", order);
    for (k, (&t, &e)) in times.iter().zip(&errors).enumerate() {
        r = r.with(&alloc::format!("t_{k}"), t).with(&alloc::format!("error_{k}"), e);
    }
    Ok(r)
}

/// Integrated Leibnitz rule `E(f, gh) = Σ m [h Γ(f,g) + g Γ(f,h)]`.
pub fn leibnitz_check(
    ds: &DirichletStructure,
    f: &[f64],
    g: &[f64],
    h: &[f64],
    tol: f64,
) -> Result<CheckResult, DirichletError> {
    ds.check_len(f)?;
    ds.check_len(g)?;
    ds.check_len(h)?;
    let gh: Vec<f64> = g.iter().zip(h).map(|(a, b)| a * b).collect();
    let lhs = ds.energy(f, &gh);
    let gfg = ds.carre_du_champ(f, g);
    let gfh = ds.carre_du_champ(f, h);
    let m = ds.m();
    let rhs: f64 = (0..ds.n()).map(|x| m[x] * (h[x] * gfg[x] + g[x] * gfh[x])).sum();
    let mut cubic = 0.0;
    for x in 0..ds.n() {
        for &(y, w) in ds.neighbours(x) {
            cubic += w * (f[y] - f[x]) * (g[y] - g[x]) * (h[y] - h[x]);
        }
    }
    Ok(CheckResult::new("leibnitz", "integrated Leibnitz rule", abs(lhs - rhs), tol)
        .with("lhs", lhs)
        .with("rhs", rhs)
        .with("cubic_defect", 0.5 * cubic))
}

/// Parallelogram law for `C` and pointwise for `Γ`.
pub fn parallelogram_check(
    ds: &DirichletStructure,
    f: &[f64],
    g: &[f64],
    tol: f64,
) -> Result<CheckResult, DirichletError> {
    ds.check_len(f)?;
    ds.check_len(g)?;
    let sum: Vec<f64> = f.iter().zip(g).map(|(a, b)| a + b).collect();
    let diff: Vec<f64> = f.iter().zip(g).map(|(a, b)| a - b).collect();
    let global = abs(ds.cheeger_energy(&sum) + ds.cheeger_energy(&diff)
        - 2.0 * ds.cheeger_energy(f)
        - 2.0 * ds.cheeger_energy(g));
    let (gs, gd, gf, gg) = (ds.gamma(&sum), ds.gamma(&diff), ds.gamma(f), ds.gamma(g));
    let pointwise = (0..ds.n()).map(|x| abs(gs[x] + gd[x] - 2.0 * gf[x] - 2.0 * gg[x])).fold(0.0, f64::max);
    Ok(CheckResult::new("parallelogram", "parallelogram law of the Cheeger energy", global.max(pointwise), tol)
        .with("global_residual", global)
        .with("pointwise_residual", pointwise))
}

/// Residual of `Σ m φ Γ(f) = E(f, fφ) − E(f²/2, φ)` together with `Σ m Γ(f,g) = E(f,g)`.
pub fn energy_measure_check(
    ds: &DirichletStructure,
    f: &[f64],
    phi: &[f64],
    tol: f64,
) -> Result<CheckResult, DirichletError> {
    ds.check_len(f)?;
    ds.check_len(phi)?;
    let gamma = ds.gamma(f);
    let direct: f64 = (0..ds.n()).map(|x| ds.m()[x] * phi[x] * gamma[x]).sum();
    let form = ds.energy_measure(f, phi);
    let integrated = abs(ds.integrate(&ds.carre_du_champ(f, phi)) - ds.energy(f, phi));
    let slack = abs(direct - form).max(integrated);
    Ok(CheckResult::new("energy_measure", "energy measure equals Γ(f) m", slack, tol)
        .with("form_value", form)
        .with("density_value", direct)
        .with("integration_residual", integrated))
}

/// Bounds `lower ≤ d_E(x, y) ≤ upper` on the intrinsic distance
/// `sup { g(x) − g(y) : Γ(g) ≤ 1 }`.
///
/// The upper bound is the shortest path under `ℓ_uv = √(2 min(m_u, m_v) / w_uv)`.
/// The lower bound comes from a feasible `g` produced by a log-barrier Newton
/// method and rescaled so that `max Γ(g) ≤ 1` holds exactly.
pub fn intrinsic_distance_bounds(ds: &DirichletStructure, x: usize, y: usize) -> Result<(f64, f64), DirichletError> {
    let space = ds.space();
    for p in [x, y] {
        if p >= ds.n() || !space.in_support(p) {
            return Err(DirichletError::OutsideSupport(p));
        }
    }
    if x == y {
        return Ok((0.0, 0.0));
    }
    let m = ds.m();
    let dist = shortest_paths(ds, y, |u, v, w| sqrt(2.0 * m[u].min(m[v]) / w));
    let upper = dist[x];
    if !upper.is_finite() {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let g = barrier_ascent(ds, x, y, &dist);
    let gmax = ds.gamma(&g).into_iter().fold(0.0, f64::max);
    let lower = if gmax > 0.0 { (g[x] - g[y]) / sqrt(gmax) } else { 0.0 };
    Ok((lower.min(upper), upper))
}

fn shortest_paths(ds: &DirichletStructure, source: usize, length: impl Fn(usize, usize, f64) -> f64) -> Vec<f64> {
    let n = ds.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for i in 0..n {
            if !done[i] && dist[i] < best {
                best = dist[i];
                u = i;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        for &(v, w) in ds.neighbours(u) {
            let nd = dist[u] + length(u, v, w);
            if nd < dist[v] {
                dist[v] = nd;
            }
        }
    }
    dist
}

/// Approximately maximises `g(x)` subject to `Γ(g) ≤ 1`, `g(y) = 0`, on the
/// connected component of `y`.
fn barrier_ascent(ds: &DirichletStructure, x: usize, y: usize, dist: &[f64]) -> Vec<f64> {
    let n = ds.n();
    let comp: Vec<usize> = (0..n).filter(|&i| dist[i].is_finite() && i != y).collect();
    let mut pos = vec![usize::MAX; n];
    for (a, &i) in comp.iter().enumerate() {
        pos[i] = a;
    }
    let k = comp.len();
    let m = ds.m();
    let lift = |v: &DVector<f64>| -> Vec<f64> {
        let mut g = vec![0.0; n];
        for (a, &i) in comp.iter().enumerate() {
            g[i] = v[a];
        }
        g
    };
    // Start from a scaled truncated distance so every constraint is slack.
    let start = lift(&DVector::from_fn(k, |a, _| dist[comp[a]]));
    let gmax = ds.gamma(&start).into_iter().fold(0.0, f64::max);
    let scale = if gmax > 0.0 { 0.5 / sqrt(gmax) } else { 0.0 };
    let mut v = DVector::from_fn(k, |a, _| scale * dist[comp[a]]);
    let xa = pos[x];
    let vertices: Vec<usize> = (0..n).filter(|&u| dist[u].is_finite() && m[u] > 0.0).collect();

    let objective = |v: &DVector<f64>, t: f64| -> f64 {
        let g = lift(v);
        let gam = ds.gamma(&g);
        let mut val = -t * v[xa];
        for &u in &vertices {
            let s = 1.0 - gam[u];
            if !(s > 0.0) {
                return f64::INFINITY;
            }
            val -= ln(s);
        }
        val
    };

    let mut t = 1.0;
    while t <= 1e11 {
        for _ in 0..100 {
            let g = lift(&v);
            let gam = ds.gamma(&g);
            let mut grad = DVector::zeros(k);
            grad[xa] -= t;
            let mut hess: DMatrix<f64> = DMatrix::zeros(k, k);
            for &u in &vertices {
                let s = 1.0 - gam[u];
                // ∇Γ(g)(u) has entries on u and its neighbours
                let mut entries: Vec<(usize, f64)> = Vec::new();
                let mut du = 0.0;
                for &(vv, w) in ds.neighbours(u) {
                    let c = w * (g[vv] - g[u]) / m[u];
                    du -= c;
                    if pos[vv] != usize::MAX {
                        entries.push((pos[vv], c));
                    }
                }
                if pos[u] != usize::MAX {
                    entries.push((pos[u], du));
                }
                for &(a, c) in &entries {
                    grad[a] += c / s;
                    for &(b, e) in &entries {
                        hess[(a, b)] += c * e / (s * s);
                    }
                }
                // 2 A_u / s
                let cu = 1.0 / (m[u] * s);
                for &(vv, w) in ds.neighbours(u) {
                    let (pa, pb) = (pos[u], pos[vv]);
                    let c = w * cu;
                    if pa != usize::MAX {
                        hess[(pa, pa)] += c;
                    }
                    if pb != usize::MAX {
                        hess[(pb, pb)] += c;
                    }
                    if pa != usize::MAX && pb != usize::MAX {
                        hess[(pa, pb)] -= c;
                        hess[(pb, pa)] -= c;
                    }
                }
            }
            let Some(chol) = hess.clone().cholesky() else { break };
            let dir = -chol.solve(&grad);
            let decrement = -grad.dot(&dir);
            if decrement < 1e-14 {
                break;
            }
            let f0 = objective(&v, t);
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand = &v + &dir * step;
                let fc = objective(&cand, t);
                if fc <= f0 - 0.25 * step * decrement {
                    v = cand;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        t *= 10.0;
    }
    lift(&v)
}

/// Tensorization diagnostics on `Z = X × Y` for the Cartesian product form.
///
/// Measures `Γ_Z(f) − Γ_X(f^y) − Γ_Y(f^x)`, `p^Z_t − p^X_t ⊗ p^Y_t` at every
/// time, and `−dEnt/dt − E_Z(ρ, log ρ)` along the product heat flow started
/// from `ρ ∝ e^f`. The slack is the largest of the three residuals divided by
/// its own tolerance (`1e-12`, `1e-10`, `1e-8`), so the check passes at slack ≤ 1.
pub fn tensorization_check(
    dx: &DirichletStructure,
    dy: &DirichletStructure,
    f: &[f64],
    times: &[f64],
    cap: usize,
) -> Result<CheckResult, DirichletError> {
    let (dz, map) = dx.product(dy, cap)?;
    dz.check_len(f)?;
    let gz = dz.gamma(f);
    let mut gamma_defect: f64 = 0.0;
    for x in 0..map.nx {
        for y in 0..map.ny {
            let fy: Vec<f64> = (0..map.nx).map(|a| f[map.index(a, y)]).collect();
            let fx: Vec<f64> = (0..map.ny).map(|b| f[map.index(x, b)]).collect();
            let v = dx.gamma(&fy)[x] + dy.gamma(&fx)[y];
            gamma_defect = gamma_defect.max(abs(gz[map.index(x, y)] - v));
        }
    }
    let (hx, hy, hz) = (HeatOperator::spectral(dx), HeatOperator::spectral(dy), HeatOperator::spectral(&dz));
    let mut kernel_defect: f64 = 0.0;
    for &t in times {
        let (px, py, pz) = (hx.kernel_matrix(t)?, hy.kernel_matrix(t)?, hz.kernel_matrix(t)?);
        for a in 0..map.len() {
            let (xa, ya) = map.split(a);
            for b in 0..map.len() {
                let (xb, yb) = map.split(b);
                kernel_defect = kernel_defect.max(abs(pz[(a, b)] - px[(xa, xb)] * py[(ya, yb)]));
            }
        }
    }
    let supp = dz.space().support();
    let fmax = supp.iter().map(|&i| f[i]).fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = (0..dz.n()).map(|i| if dz.m()[i] > 0.0 { exp(f[i] - fmax) } else { 0.0 }).collect();
    let z = dz.integrate(&raw);
    let rho0: Vec<f64> = raw.iter().map(|r| r / z).collect();
    let t0 = times.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    let ent = |t: f64| -> Result<f64, DirichletError> {
        let r = hz.apply(&rho0, t)?;
        Ok((0..dz.n()).map(|i| dz.m()[i] * crate::fmath::xlogx(r[i])).sum())
    };
    let delta = 1e-3 * t0;
    let d1 = (ent(t0 + delta)? - ent(t0 - delta)?) / (2.0 * delta);
    let d2 = (ent(t0 + 0.5 * delta)? - ent(t0 - 0.5 * delta)?) / delta;
    let derivative = (4.0 * d2 - d1) / 3.0;
    let rho = hz.apply(&rho0, t0)?;
    let log_rho: Vec<f64> = rho.iter().enumerate().map(|(i, &r)| if dz.m()[i] > 0.0 { ln(r) } else { 0.0 }).collect();
    let fisher = dz.energy(&rho, &log_rho);
    let dissipation_defect = abs(-derivative - fisher);
    let slack = (gamma_defect / 1e-12).max(kernel_defect / 1e-10).max(dissipation_defect / 1e-8);
    Ok(CheckResult::new("tensorization", "tensorization of the Cheeger energy", slack, 1.0)
        .with("gamma_defect", gamma_defect)
        .with("kernel_defect", kernel_defect)
        .with("dissipation_defect", dissipation_defect)
        .with("dissipation_time", t0)
        .with("product_points", map.len()))
}

/// Compares `Γ` of the restricted structure with `Γ` of the full one for a
/// function supported at distance `≥ 2h` from the complement of the selection,
/// including the extension-by-zero statement on the whole space.
pub fn restriction_check(
    full: &DirichletStructure,
    parent: &[usize],
    h: f64,
    f: &[f64],
    tol: f64,
) -> Result<CheckResult, DirichletError> {
    full.check_len(f)?;
    let n = full.n();
    let mut inside = vec![false; n];
    for &i in parent {
        inside[i] = true;
    }
    let space = full.space();
    let mut gap = f64::INFINITY;
    for x in (0..n).filter(|&x| f[x] != 0.0) {
        if !inside[x] {
            return Err(DirichletError::SupportTooClose { dist: 0.0, required: 2.0 * h });
        }
        for z in (0..n).filter(|&z| !inside[z]) {
            gap = gap.min(space.d(x, z));
        }
    }
    if gap < 2.0 * h - 1e-12 * h {
        return Err(DirichletError::SupportTooClose { dist: gap, required: 2.0 * h });
    }
    let restricted = full.restrict(parent)?;
    let fr: Vec<f64> = parent.iter().map(|&i| f[i]).collect();
    let gr = restricted.gamma(&fr);
    let gf = full.gamma(f);
    let mut on_support: f64 = 0.0;
    let mut extension: f64 = 0.0;
    let mut local = vec![f64::NAN; n];
    for (a, &i) in parent.iter().enumerate() {
        local[i] = gr[a];
    }
    for x in 0..n {
        let ext = if inside[x] { local[x] } else { 0.0 };
        let e = abs(gf[x] - ext);
        extension = extension.max(e);
        if f[x] != 0.0 {
            on_support = on_support.max(e);
        }
    }
    Ok(CheckResult::new("restriction", "locality of Γ on convex restrictions", on_support.max(extension), tol)
        .with("support_residual", on_support)
        .with("extension_residual", extension)
        .with("boundary_gap", gap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> DirichletStructure {
        DirichletStructure::two_point(1.0, 0.5, 1.0).unwrap()
    }

    #[test]
    fn single_edge_values() {
        let ds = two_point();
        let f = [0.0, 1.0];
        assert_eq!(ds.energy(&f, &f), 1.0);
        assert_eq!(ds.cheeger_energy(&f), 0.5);
        assert_eq!(ds.gamma(&f), vec![1.0, 1.0]);
        assert_eq!(ds.laplacian(&f), vec![2.0, -2.0]);
    }

    #[test]
    fn two_point_heat_closed_form() {
        let ds = two_point();
        let ho = HeatOperator::spectral(&ds);
        let f = [0.3, -1.1];
        let mean = 0.5 * (f[0] + f[1]);
        for t in [0.0, 0.01, 0.3, 2.0] {
            let u = ho.apply(&f, t).unwrap();
            for i in 0..2 {
                let expect = mean + (f[i] - mean) * libm::exp(-4.0 * t);
                assert!((u[i] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn grid_stencil_is_second_difference() {
        let gs = crate::mmspace::build_circle_grid(1.0, 10).unwrap();
        let ds = DirichletStructure::grid(&gs).unwrap();
        let f: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let lap = ds.laplacian(&f);
        let h: f64 = 0.1;
        assert!((lap[4] - 2.0 / (h * h)).abs() < 1e-9);
        let gi = crate::mmspace::build_interval_grid(1.0, 5).unwrap();
        let di = DirichletStructure::grid(&gi).unwrap();
        let lin = [0.0, 1.0, 2.0, 3.0, 4.0];
        let l = di.laplacian(&lin);
        assert!(l[2].abs() < 1e-12);
        assert!((l[0] - 2.0 * 1.0 / (0.25 * 0.25)).abs() < 1e-9);
    }

    #[test]
    fn integration_by_parts() {
        let ds = DirichletStructure::cycle(7).unwrap();
        let f: Vec<f64> = (0..7).map(|i| libm::sin(i as f64)).collect();
        let g: Vec<f64> = (0..7).map(|i| libm::cos(2.0 * i as f64)).collect();
        let lhs: f64 = ds.integrate(&g.iter().zip(ds.laplacian(&f)).map(|(a, b)| a * b).collect::<Vec<_>>());
        assert!((lhs + ds.energy(&f, &g)).abs() < 1e-12);
    }

    #[test]
    fn euler_agrees_with_spectral() {
        let gs = crate::mmspace::build_circle_grid(2.0 * core::f64::consts::PI, 32).unwrap();
        let ds = DirichletStructure::grid(&gs).unwrap();
        let f: Vec<f64> = (0..32).map(|i| libm::cos(2.0 * core::f64::consts::PI * i as f64 / 32.0)).collect();
        let a = HeatOperator::spectral(&ds).apply(&f, 0.5).unwrap();
        let b = HeatOperator::implicit_euler(&ds, 1e-3).apply(&f, 0.5).unwrap();
        assert!(crate::fmath::sup_dist(&a, &b) < 1e-6);
    }

    #[test]
    fn intrinsic_two_point_is_one() {
        let ds = two_point();
        let (lo, hi) = intrinsic_distance_bounds(&ds, 0, 1).unwrap();
        assert!((hi - 1.0).abs() < 1e-15);
        assert!((lo - 1.0).abs() < 1e-9, "{lo}");
    }
}

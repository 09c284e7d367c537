//! Finite metric measure spaces `(X, d, m)`, grid discretisations of the
//! interval, circle and flat torus, products, convex restrictions and
//! exponential reweightings.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::fmath::{abs, ceil, exp, round, sqrt};

/// Absolute tolerance on the metric and probability axioms.
pub const AXIOM_TOL: f64 = 1e-12;

/// Default cap on the number of points of a materialised product.
pub const DEFAULT_PRODUCT_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("distance table is {rows}x{cols} but {n} weights were given")]
    ShapeMismatch { rows: usize, cols: usize, n: usize },
    #[error("space must have at least one point")]
    Empty,
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("need at least {min} points, got {n}")]
    TooFewPoints { n: usize, min: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(
        "space violates the metric measure axioms (triangle {triangle:e}, mass {mass:e}, asymmetry {asymmetry:e})"
    )]
    InvalidAxioms { triangle: f64, mass: f64, asymmetry: f64 },
    #[error("product would have {n} points, cap is {cap}")]
    ProductTooLarge { n: usize, cap: usize },
    #[error("selection is empty")]
    EmptySelection,
    #[error("selection is not convex: geodesic from {0} to {1} leaves the set")]
    NonConvex(usize, usize),
    #[error("reweighting leaves no mass")]
    ZeroMass,
    #[error("potential is not finite at support point {0}")]
    NonFinitePotential(usize),
    #[error("labels: expected {expected}, got {got}")]
    LabelCount { expected: usize, got: usize },
}

/// A finite metric measure space: symmetric distance table and probability weights.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricMeasureSpace {
    d: DMatrix<f64>,
    m: Vec<f64>,
    labels: Option<Vec<String>>,
}

/// Diagnostics of [`MetricMeasureSpace::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationResult {
    /// Largest `d(x,z) − d(x,y) − d(y,z)`, clamped at 0.
    pub max_triangle_violation: f64,
    pub worst_triple: Option<(usize, usize, usize)>,
    /// `|Σ m − 1|`.
    pub mass_defect: f64,
    pub max_asymmetry: f64,
    /// Largest `|d(x,x)|`.
    pub max_diagonal: f64,
    /// Largest negative part among distances and weights.
    pub max_negative: f64,
    pub pass: bool,
}

impl MetricMeasureSpace {
    /// Builds a space after checking shapes and finiteness only. Use
    /// [`validate`](Self::validate) or [`new`](Self::new) for the axioms.
    pub fn from_parts(d: DMatrix<f64>, m: Vec<f64>) -> Result<Self, SpaceError> {
        let n = m.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        if d.nrows() != n || d.ncols() != n {
            return Err(SpaceError::ShapeMismatch { rows: d.nrows(), cols: d.ncols(), n });
        }
        for i in 0..n {
            if !m[i].is_finite() {
                return Err(SpaceError::NonFinite(i, i));
            }
            for j in 0..n {
                if !d[(i, j)].is_finite() {
                    return Err(SpaceError::NonFinite(i, j));
                }
            }
        }
        Ok(MetricMeasureSpace { d, m, labels: None })
    }

    /// Builds a space and rejects it unless [`validate`](Self::validate) passes.
    pub fn new(d: DMatrix<f64>, m: Vec<f64>) -> Result<Self, SpaceError> {
        let s = Self::from_parts(d, m)?;
        let v = s.validate();
        if !v.pass {
            return Err(SpaceError::InvalidAxioms {
                triangle: v.max_triangle_violation,
                mass: v.mass_defect,
                asymmetry: v.max_asymmetry.max(v.max_diagonal).max(v.max_negative),
            });
        }
        Ok(s)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, SpaceError> {
        if labels.len() != self.n() {
            return Err(SpaceError::LabelCount { expected: self.n(), got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// The single-point space.
    pub fn one_point() -> Self {
        MetricMeasureSpace { d: DMatrix::zeros(1, 1), m: vec![1.0], labels: None }
    }

    /// Two points at distance `d01` with masses `(m0, 1 − m0)`.
    pub fn two_point(d01: f64, m0: f64) -> Result<Self, SpaceError> {
        if !(d01 > 0.0) || !d01.is_finite() {
            return Err(SpaceError::InvalidParameter("two-point distance must be positive"));
        }
        if !(m0 > 0.0 && m0 < 1.0) {
            return Err(SpaceError::InvalidParameter("two-point mass must lie in (0, 1)"));
        }
        let d = DMatrix::from_row_slice(2, 2, &[0.0, d01, d01, 0.0]);
        Self::new(d, vec![m0, 1.0 - m0])
    }

    /// The discrete metric (all distinct points at distance 1) with weights `m`.
    pub fn discrete(m: Vec<f64>) -> Result<Self, SpaceError> {
        let n = m.len();
        let d = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
        Self::new(d, m)
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.d[(i, j)]
    }

    pub fn distances(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Points of positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.m[i] > 0.0).collect()
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.m[i] > 0.0
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().fold(0.0, |a, &x| a.max(x))
    }

    /// Exhaustive check of the metric and probability axioms.
    pub fn validate(&self) -> ValidationResult {
        let n = self.n();
        let mut max_asym = 0.0f64;
        let mut max_diag = 0.0f64;
        let mut max_neg = 0.0f64;
        for i in 0..n {
            max_diag = max_diag.max(abs(self.d[(i, i)]));
            max_neg = max_neg.max(-self.m[i]);
            for j in 0..n {
                max_neg = max_neg.max(-self.d[(i, j)]);
                if j > i {
                    max_asym = max_asym.max(abs(self.d[(i, j)] - self.d[(j, i)]));
                }
            }
        }
        let mut worst = 0.0f64;
        let mut worst_triple = None;
        for x in 0..n {
            for z in 0..n {
                let dxz = self.d[(x, z)];
                for y in 0..n {
                    let v = dxz - self.d[(x, y)] - self.d[(y, z)];
                    if v > worst {
                        worst = v;
                        worst_triple = Some((x, y, z));
                    }
                }
            }
        }
        let total: f64 = self.m.iter().sum();
        let mass_defect = abs(total - 1.0);
        let pass = worst <= AXIOM_TOL
            && mass_defect <= AXIOM_TOL
            && max_asym <= AXIOM_TOL
            && max_diag <= AXIOM_TOL
            && max_neg <= 0.0;
        ValidationResult {
            max_triangle_violation: worst,
            worst_triple,
            mass_defect,
            max_asymmetry: max_asym,
            max_diagonal: max_diag,
            max_negative: max_neg.max(0.0),
            pass,
        }
    }

    /// Sub-space on `indices` with renormalised weights.
    pub fn subspace(&self, indices: &[usize]) -> Result<Self, SpaceError> {
        if indices.is_empty() {
            return Err(SpaceError::EmptySelection);
        }
        let k = indices.len();
        let d = DMatrix::from_fn(k, k, |a, b| self.d[(indices[a], indices[b])]);
        let mass: f64 = indices.iter().map(|&i| self.m[i]).sum();
        if !(mass > 0.0) {
            return Err(SpaceError::ZeroMass);
        }
        let m = indices.iter().map(|&i| self.m[i] / mass).collect();
        let labels = self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i].clone()).collect());
        Ok(MetricMeasureSpace { d, m, labels })
    }

    /// Reweights `m` by `e^{−V}` and renormalises.
    pub fn reweight(&self, potential: &[f64]) -> Result<Self, SpaceError> {
        if potential.len() != self.n() {
            return Err(SpaceError::ShapeMismatch { rows: potential.len(), cols: 1, n: self.n() });
        }
        let mut vmin = f64::INFINITY;
        for i in self.support() {
            if !potential[i].is_finite() {
                return Err(SpaceError::NonFinitePotential(i));
            }
            vmin = vmin.min(potential[i]);
        }
        let raw: Vec<f64> = (0..self.n())
            .map(|i| if self.m[i] > 0.0 { self.m[i] * exp(-(potential[i] - vmin)) } else { 0.0 })
            .collect();
        let z: f64 = raw.iter().sum();
        if !(z > 0.0) || !z.is_finite() {
            return Err(SpaceError::ZeroMass);
        }
        Ok(MetricMeasureSpace {
            d: self.d.clone(),
            m: raw.iter().map(|x| x / z).collect(),
            labels: self.labels.clone(),
        })
    }
}

/// Index bijection `(x, y) ↔ z = x · n_Y + y` of a product space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductMap {
    pub nx: usize,
    pub ny: usize,
}

impl ProductMap {
    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        x * self.ny + y
    }

    #[inline]
    pub fn split(&self, z: usize) -> (usize, usize) {
        (z / self.ny, z % self.ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[inline]
fn pythagoras(a: f64, b: f64) -> f64 {
    sqrt(a * a + b * b)
}

/// Cartesian product with `d_Z² = d_X² + d_Y²` and `m_Z = m_X ⊗ m_Y`.
pub fn product_space(
    x: &MetricMeasureSpace,
    y: &MetricMeasureSpace,
    cap: usize,
) -> Result<(MetricMeasureSpace, ProductMap), SpaceError> {
    let map = ProductMap { nx: x.n(), ny: y.n() };
    let n = x.n().checked_mul(y.n()).ok_or(SpaceError::ProductTooLarge { n: usize::MAX, cap })?;
    if n > cap {
        return Err(SpaceError::ProductTooLarge { n, cap });
    }
    let d = DMatrix::from_fn(n, n, |a, b| {
        let (xa, ya) = map.split(a);
        let (xb, yb) = map.split(b);
        pythagoras(x.d(xa, xb), y.d(ya, yb))
    });
    let m = (0..n)
        .map(|z| {
            let (i, j) = map.split(z);
            x.m[i] * y.m[j]
        })
        .collect();
    Ok((MetricMeasureSpace { d, m, labels: None }, map))
}

/// A point of a model space: one coordinate for the interval and circle, two for the torus.
pub type Coord = [f64; 2];

/// Continuum model a grid discretises.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    Interval { length: f64 },
    Circle { length: f64 },
    Torus { lengths: [f64; 2] },
}

fn wrap(s: f64, length: f64) -> f64 {
    let r = s % length;
    if r < 0.0 {
        r + length
    } else {
        r
    }
}

/// Signed shortest displacements from `a` to `b` on a circle; two when antipodal,
/// the positive orientation first.
fn circle_displacements(a: f64, b: f64, length: f64) -> Vec<f64> {
    let half = 0.5 * length;
    let mut dl = b - a;
    if dl > half {
        dl -= length;
    } else if dl < -half {
        dl += length;
    }
    if abs(abs(dl) - half) <= 1e-12 * length {
        vec![half, -half]
    } else {
        vec![dl]
    }
}

fn circle_distance(a: f64, b: f64, length: f64) -> f64 {
    let t = abs(a - b) % length;
    t.min(length - t)
}

impl Model {
    pub fn distance(&self, a: Coord, b: Coord) -> f64 {
        match *self {
            Model::Interval { .. } => abs(a[0] - b[0]),
            Model::Circle { length } => circle_distance(a[0], b[0], length),
            Model::Torus { lengths } => {
                pythagoras(circle_distance(a[0], b[0], lengths[0]), circle_distance(a[1], b[1], lengths[1]))
            }
        }
    }

    /// Displacement vectors of the minimising geodesics from `a` to `b`; the
    /// first one is the deterministic choice (positive orientation on ties).
    pub fn displacements(&self, a: Coord, b: Coord) -> Vec<Coord> {
        match *self {
            Model::Interval { .. } => vec![[b[0] - a[0], 0.0]],
            Model::Circle { length } => {
                circle_displacements(a[0], b[0], length).into_iter().map(|d| [d, 0.0]).collect()
            }
            Model::Torus { lengths } => {
                let d0 = circle_displacements(a[0], b[0], lengths[0]);
                let d1 = circle_displacements(a[1], b[1], lengths[1]);
                let mut out = Vec::with_capacity(d0.len() * d1.len());
                for &u in &d0 {
                    for &v in &d1 {
                        out.push([u, v]);
                    }
                }
                out
            }
        }
    }

    /// Point reached at time `t ∈ [0, 1]` moving from `a` along `disp`.
    pub fn advance(&self, a: Coord, disp: Coord, t: f64) -> Coord {
        match *self {
            Model::Interval { .. } => [a[0] + t * disp[0], 0.0],
            Model::Circle { length } => [wrap(a[0] + t * disp[0], length), 0.0],
            Model::Torus { lengths } => [wrap(a[0] + t * disp[0], lengths[0]), wrap(a[1] + t * disp[1], lengths[1])],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Interval { .. } => "interval",
            Model::Circle { .. } => "circle",
            Model::Torus { .. } => "torus",
        }
    }
}

/// A metric measure space sampled from a model, with known geodesics.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpace {
    base: MetricMeasureSpace,
    model: Model,
    h: f64,
    coords: Vec<Coord>,
    /// Lattice counts when the grid is a full regular lattice of the model.
    lattice: Option<[usize; 2]>,
}

impl GridSpace {
    pub fn base(&self) -> &MetricMeasureSpace {
        &self.base
    }

    pub fn into_base(self) -> MetricMeasureSpace {
        self.base
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn coord(&self, i: usize) -> Coord {
        self.coords[i]
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn lattice(&self) -> Option<[usize; 2]> {
        self.lattice
    }

    /// Replaces the weights, keeping geometry. Used by reweighting.
    pub fn with_space(&self, base: MetricMeasureSpace) -> Result<Self, SpaceError> {
        if base.n() != self.n() {
            return Err(SpaceError::ShapeMismatch { rows: base.n(), cols: base.n(), n: self.n() });
        }
        Ok(GridSpace { base, ..self.clone() })
    }

    /// Nearest grid point to a model point; ties go to the smaller index.
    pub fn nearest(&self, p: Coord) -> usize {
        match (self.model, self.lattice) {
            (Model::Interval { length }, Some([n, _])) => {
                let k = round(p[0] / (length / (n - 1) as f64));
                k.max(0.0).min((n - 1) as f64) as usize
            }
            (Model::Circle { length }, Some([n, _])) => {
                let k = round(p[0] / (length / n as f64)) as i64;
                k.rem_euclid(n as i64) as usize
            }
            (Model::Torus { lengths }, Some([n0, n1])) => {
                let k0 = (round(p[0] / (lengths[0] / n0 as f64)) as i64).rem_euclid(n0 as i64);
                let k1 = (round(p[1] / (lengths[1] / n1 as f64)) as i64).rem_euclid(n1 as i64);
                k0 as usize * n1 + k1 as usize
            }
            _ => {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (i, &c) in self.coords.iter().enumerate() {
                    let dd = self.model.distance(p, c);
                    if dd < best_d {
                        best_d = dd;
                        best = i;
                    }
                }
                best
            }
        }
    }

    /// Weights `e^{−V} m`, renormalised; geometry unchanged.
    pub fn reweight(&self, potential: &[f64]) -> Result<Self, SpaceError> {
        self.with_space(self.base.reweight(potential)?)
    }
}

/// `n` equispaced points on a circle of length `length`, uniform weights.
pub fn build_circle_grid(length: f64, n: usize) -> Result<GridSpace, SpaceError> {
    if n < 2 {
        return Err(SpaceError::TooFewPoints { n, min: 2 });
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(SpaceError::InvalidParameter("circle length must be positive"));
    }
    let nf = n as f64;
    let d = DMatrix::from_fn(n, n, |i, j| {
        let k = i.abs_diff(j);
        let k = k.min(n - k);
        (k as f64 * length) / nf
    });
    let coords = (0..n).map(|i| [(i as f64 * length) / nf, 0.0]).collect();
    Ok(GridSpace {
        base: MetricMeasureSpace::from_parts(d, vec![1.0 / nf; n])?,
        model: Model::Circle { length },
        h: length / nf,
        coords,
        lattice: Some([n, 1]),
    })
}

/// `n` equispaced points on `[0, length]` including both ends, trapezoidal
/// weights (half mass at the end points).
pub fn build_interval_grid(length: f64, n: usize) -> Result<GridSpace, SpaceError> {
    if n < 2 {
        return Err(SpaceError::TooFewPoints { n, min: 2 });
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(SpaceError::InvalidParameter("interval length must be positive"));
    }
    let cells = (n - 1) as f64;
    let d = DMatrix::from_fn(n, n, |i, j| (i.abs_diff(j) as f64 * length) / cells);
    let m = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 / cells } else { 1.0 / cells }).collect();
    let coords = (0..n).map(|i| [(i as f64 * length) / cells, 0.0]).collect();
    Ok(GridSpace {
        base: MetricMeasureSpace::from_parts(d, m)?,
        model: Model::Interval { length },
        h: length / cells,
        coords,
        lattice: Some([n, 1]),
    })
}

/// Flat torus `circle(l0, n0) × circle(l1, n1)` with the product indexing of
/// [`product_space`].
pub fn build_torus_grid(l0: f64, n0: usize, l1: f64, n1: usize) -> Result<GridSpace, SpaceError> {
    let a = build_circle_grid(l0, n0)?;
    let b = build_circle_grid(l1, n1)?;
    let (base, map) = product_space(a.base(), b.base(), usize::MAX)?;
    let coords = (0..map.len())
        .map(|z| {
            let (i, j) = map.split(z);
            [a.coords[i][0], b.coords[j][0]]
        })
        .collect();
    Ok(GridSpace { base, model: Model::Torus { lengths: [l0, l1] }, h: a.h.max(b.h), coords, lattice: Some([n0, n1]) })
}

/// A convex sub-grid together with its indices in the parent grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Restriction {
    pub grid: GridSpace,
    pub parent: Vec<usize>,
}

/// Restricts a grid to the points selected by `predicate`, renormalising the
/// measure. Rejects selections for which some pair is joined by no model
/// geodesic staying within `tol_factor · h` of the selection.
pub fn restrict_convex(
    gs: &GridSpace,
    mut predicate: impl FnMut(usize, Coord) -> bool,
    tol_factor: f64,
) -> Result<Restriction, SpaceError> {
    let n = gs.n();
    let selected: Vec<bool> = (0..n).map(|i| predicate(i, gs.coords[i])).collect();
    let parent: Vec<usize> = (0..n).filter(|&i| selected[i]).collect();
    if parent.is_empty() {
        return Err(SpaceError::EmptySelection);
    }
    let reach = tol_factor * gs.h;
    let near_selection = |p: Coord| -> bool {
        match (gs.model, gs.lattice) {
            (_, Some([n0, n1])) => {
                let c = gs.nearest(p);
                let r = ceil(tol_factor) as i64 + 1;
                let (c0, c1) = (c / n1, c % n1);
                let wraps = !matches!(gs.model, Model::Interval { .. });
                for a in -r..=r {
                    for b in -r..=r {
                        if n1 == 1 && b != 0 {
                            continue;
                        }
                        let i0 = c0 as i64 + a;
                        let i1 = c1 as i64 + b;
                        let (i0, i1) = if wraps {
                            (i0.rem_euclid(n0 as i64), i1.rem_euclid(n1 as i64))
                        } else if i0 < 0 || i0 >= n0 as i64 {
                            continue;
                        } else {
                            (i0, i1)
                        };
                        let idx = i0 as usize * n1 + i1 as usize;
                        if selected[idx] && gs.model.distance(p, gs.coords[idx]) <= reach {
                            return true;
                        }
                    }
                }
                false
            }
            _ => parent.iter().any(|&i| gs.model.distance(p, gs.coords[i]) <= reach),
        }
    };
    for (ai, &a) in parent.iter().enumerate() {
        for &b in &parent[ai + 1..] {
            let (ca, cb) = (gs.coords[a], gs.coords[b]);
            let len = gs.model.distance(ca, cb);
            let samples = ceil(2.0 * len / gs.h) as usize + 1;
            let stays = gs.model.displacements(ca, cb).into_iter().any(|disp| {
                (0..=samples).all(|k| {
                    let t = k as f64 / samples as f64;
                    near_selection(gs.model.advance(ca, disp, t))
                })
            });
            if !stays {
                return Err(SpaceError::NonConvex(a, b));
            }
        }
    }
    let base = gs.base.subspace(&parent)?;
    let coords = parent.iter().map(|&i| gs.coords[i]).collect();
    let lattice = if parent.len() == n { gs.lattice } else { None };
    Ok(Restriction { grid: GridSpace { base, model: gs.model, h: gs.h, coords, lattice }, parent })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_space_is_valid() {
        let s = MetricMeasureSpace::two_point(1.0, 0.5).unwrap();
        assert!(s.validate().pass);
        assert!(MetricMeasureSpace::two_point(0.0, 0.5).is_err());
        assert!(MetricMeasureSpace::two_point(1.0, 1.0).is_err());
    }

    #[test]
    fn broken_triangle_is_reported() {
        let d = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0]);
        let s = MetricMeasureSpace::from_parts(d, vec![1.0 / 3.0; 3]).unwrap();
        let v = s.validate();
        assert!(!v.pass);
        assert!((v.max_triangle_violation - 1.0).abs() < 1e-15);
        assert_eq!(v.worst_triple, Some((0, 1, 2)));
    }

    #[test]
    fn circle_grid_distances() {
        let g = build_circle_grid(1.0, 4).unwrap();
        assert_eq!(g.base().d(0, 1), 0.25);
        assert_eq!(g.base().d(0, 2), 0.5);
        assert_eq!(g.base().d(0, 3), 0.25);
        let g2 = build_circle_grid(1.0, 2).unwrap();
        assert_eq!(g2.base().d(0, 1), 0.5);
        assert!(build_circle_grid(1.0, 1).is_err());
    }

    #[test]
    fn interval_grid_spacing() {
        let g = build_interval_grid(1.0, 3).unwrap();
        assert_eq!(g.base().d(0, 1), 0.5);
        assert_eq!(g.base().d(0, 2), 1.0);
        let g = build_interval_grid(1.0, 101).unwrap();
        assert!((g.h() - 0.01).abs() < 1e-16);
        assert!(g.base().validate().pass);
    }

    #[test]
    fn refinement_embeds_exactly() {
        for &len in &[1.0, 2.0 * core::f64::consts::PI, 0.3] {
            let a = build_circle_grid(len, 32).unwrap();
            let b = build_circle_grid(len, 64).unwrap();
            for i in 0..32 {
                for j in 0..32 {
                    assert_eq!(a.base().d(i, j), b.base().d(2 * i, 2 * j));
                }
            }
        }
    }

    #[test]
    fn product_with_point_is_isometric() {
        let x = build_circle_grid(1.0, 5).unwrap();
        let (z, map) = product_space(x.base(), &MetricMeasureSpace::one_point(), 100).unwrap();
        assert_eq!(z.distances(), x.base().distances());
        assert_eq!(map.index(3, 0), 3);
    }

    #[test]
    fn product_cap_enforced() {
        let x = build_circle_grid(1.0, 10).unwrap();
        assert!(matches!(product_space(x.base(), x.base(), 50), Err(SpaceError::ProductTooLarge { n: 100, cap: 50 })));
    }

    #[test]
    fn antipodal_tie_prefers_positive_orientation() {
        let m = Model::Circle { length: 1.0 };
        let d = m.displacements([0.25, 0.0], [0.75, 0.0]);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0][0], 0.5);
        let d = m.displacements([0.9, 0.0], [0.1, 0.0]);
        assert_eq!(d.len(), 1);
        assert!((d[0][0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn nearest_on_lattice_matches_brute_force() {
        let g = build_circle_grid(2.0, 16).unwrap();
        for k in 0..200 {
            let p = [k as f64 * 0.0137, 0.0];
            let fast = g.nearest(p);
            let dist = g.model().distance(p, g.coord(fast));
            for i in 0..16 {
                assert!(dist <= g.model().distance(p, g.coord(i)) + 1e-15);
            }
        }
    }

    #[test]
    fn reweight_constant_is_identity() {
        let g = build_interval_grid(1.0, 5).unwrap();
        let r = g.base().reweight(&[3.0; 5]).unwrap();
        for (a, b) in r.m().iter().zip(g.base().m()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(g.base().reweight(&[f64::INFINITY; 5]), Err(SpaceError::NonFinitePotential(0))));
    }
}

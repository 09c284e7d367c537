//! Closed forms on the two-point space `{a, b}` with `d(a, b) = d`,
//! `m = (p, q)` and edge weight `w`. The only nonzero eigenvalue of the
//! generator is `λ = w (1/p + 1/q)`.

#![allow(dead_code)]

use ricci_lab_core::check::LabConfig;
use ricci_lab_core::dirichlet::{DirichletStructure, HeatOperator};
use ricci_lab_core::evi_lab::bakry_emery_check;

pub const TOL: f64 = 1e-9;

pub struct TwoPoint {
    pub d: f64,
    pub p: f64,
    pub w: f64,
}

impl TwoPoint {
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }
    pub fn lambda(&self) -> f64 {
        self.w * (1.0 / self.p + 1.0 / self.q())
    }
    pub fn structure(&self) -> (DirichletStructure, HeatOperator) {
        let ds = DirichletStructure::two_point(self.d, self.p, self.w).unwrap();
        let ho = HeatOperator::new(&ds, &LabConfig::default());
        (ds, ho)
    }
    pub fn heat(&self, f: [f64; 2], t: f64) -> [f64; 2] {
        let mean = self.p * f[0] + self.q() * f[1];
        let e = (-self.lambda() * t).exp();
        [mean + (f[0] - mean) * e, mean + (f[1] - mean) * e]
    }
    pub fn kernel(&self, t: f64) -> [[f64; 2]; 2] {
        let e = (-self.lambda() * t).exp();
        let (p, q) = (self.p, self.q());
        [[1.0 + e * q / p, 1.0 - e], [1.0 - e, 1.0 + e * p / q]]
    }
    pub fn gamma(&self, f: [f64; 2]) -> [f64; 2] {
        let g = (f[1] - f[0]).powi(2) * self.w;
        [g / (2.0 * self.p), g / (2.0 * self.q())]
    }
    pub fn entropy(&self, mu0: f64) -> f64 {
        let xlx = |a: f64, b: f64| if a > 0.0 { a * (a / b).ln() } else { 0.0 };
        xlx(mu0, self.p) + xlx(1.0 - mu0, self.q())
    }
    /// First-point mass of `H_t μ` for `μ = (mu0, 1 − mu0)`.
    pub fn evolve(&self, mu0: f64, t: f64) -> f64 {
        self.p + (mu0 - self.p) * (-self.lambda() * t).exp()
    }
    pub fn w2_squared(&self, a0: f64, b0: f64) -> f64 {
        self.d * self.d * (a0 - b0).abs()
    }
}

pub const CASES: [TwoPoint; 3] =
    [TwoPoint { d: 1.0, p: 0.5, w: 1.0 }, TwoPoint { d: 2.0, p: 0.3, w: 0.5 }, TwoPoint { d: 0.7, p: 0.8, w: 2.0 }];

/// Largest `K` accepted by the Bakry–Émery check, found by bisection.
pub fn bisect_bakry_emery(ho: &HeatOperator, f: &[f64]) -> f64 {
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if bakry_emery_check(ho, f, mid, &[0.01], 0.0).unwrap().pass {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `inf 2E(f,f)/Ent(f²)` on the symmetric two-point space, swept along
/// `f = (1 + a, 1 − a)` and extrapolated to `a → 0`, where it is attained.
pub fn log_sobolev_sweep() -> f64 {
    let ratio = |a: f64| {
        let norm = (1.0 + a * a).sqrt();
        let f = [(1.0 + a) / norm, (1.0 - a) / norm];
        let ent: f64 = f.iter().map(|v| 0.5 * v * v * (v * v).ln()).sum();
        2.0 * (f[1] - f[0]).powi(2) / ent
    };
    let mut best = f64::INFINITY;
    let mut a = 0.9;
    while a > 2e-3 {
        best = best.min(ratio(a));
        a *= 0.9;
    }
    let (r1, r2) = (ratio(2e-3), ratio(1e-3));
    let limit = (4.0 * r2 - r1) / 3.0;
    assert!(limit <= best + 1e-9);
    limit
}

//! Two-point space against its closed forms.
#![allow(clippy::needless_range_loop)]

use ricci_lab_core::check::{Budget, LabConfig};
use ricci_lab_core::dirichlet::DirichletStructure;
use ricci_lab_core::entropy_geo::{fisher_information, relative_entropy};
use ricci_lab_core::evi_lab::{bakry_emery_check, evi_check, ik, log_sobolev_check};
use ricci_lab_core::hopflax::{dplus_dminus, hopf_lax};
use ricci_lab_core::kernel_sim::heat_kernel;

#[path = "oracles/two_point.rs"]
mod oracle;
use oracle::{bisect_bakry_emery, log_sobolev_sweep, CASES, TOL};

#[test]
fn heat_flow_and_kernel() {
    for c in &CASES {
        let (_, ho) = c.structure();
        for t in [0.0, 1e-3, 0.1, 0.5, 2.0] {
            let f = [0.3, -1.7];
            let got = ho.apply(&f, t).unwrap();
            let want = c.heat(f, t);
            assert!((got[0] - want[0]).abs() < TOL && (got[1] - want[1]).abs() < TOL);
            let k = heat_kernel(&ho, t).unwrap();
            let want = c.kernel(t);
            for x in 0..2 {
                for y in 0..2 {
                    assert!((k.p[(x, y)] - want[x][y]).abs() < TOL, "p_{t}({x},{y})");
                }
            }
        }
    }
}

#[test]
fn carre_du_champ_energy_and_fisher() {
    for c in &CASES {
        let (ds, _) = c.structure();
        let f = [0.25, 1.5];
        let g = ds.gamma(&f);
        let want = c.gamma(f);
        assert!((g[0] - want[0]).abs() < TOL && (g[1] - want[1]).abs() < TOL);
        assert!((ds.energy(&f, &f) - c.w * 1.25f64.powi(2)).abs() < TOL);
        for p in [0.1, 0.5, 0.9] {
            let rho = [p / c.p, (1.0 - p) / c.q()];
            let want = 2.0 * c.w * (rho[1].sqrt() - rho[0].sqrt()).powi(2);
            assert!((fisher_information(&ds, &rho) - want).abs() < TOL);
        }
    }
    let unit = DirichletStructure::two_point(1.0, 0.5, 1.0).unwrap();
    assert_eq!(unit.energy(&[0.0, 1.0], &[0.0, 1.0]), 1.0);
    assert_eq!(unit.cheeger_energy(&[0.0, 1.0]), 0.5);
    assert_eq!(unit.gamma(&[0.0, 1.0]), vec![1.0, 1.0]);
}

#[test]
fn hopf_lax_direct_minimum() {
    for c in &CASES {
        let (ds, _) = c.structure();
        let g = [0.0, 1.0];
        for t in [0.1, 0.3, 0.75, 1.0, 4.0] {
            let s = hopf_lax(ds.space(), &g, t).unwrap();
            let cost = c.d * c.d / (2.0 * t);
            let want = [g[0].min(g[1] + cost), g[1].min(g[0] + cost)];
            assert!((s.value[0] - want[0]).abs() < TOL && (s.value[1] - want[1]).abs() < TOL);
        }
    }
    let unit = DirichletStructure::two_point(1.0, 0.5, 1.0).unwrap();
    let s = hopf_lax(unit.space(), &[0.0, 1.0], 1.0).unwrap();
    assert_eq!(s.argmin[1], vec![0]);
    let (dp, dm) = dplus_dminus(unit.space(), &s);
    assert_eq!((dp[1], dm[1]), (1.0, 1.0));
    for t in [0.6, 1.0, 3.0] {
        let s = hopf_lax(unit.space(), &[0.0, 1.0], t).unwrap();
        assert!((s.value[1] - 1.0 / (2.0 * t)).abs() < TOL);
    }
}

#[test]
fn evi_terms_match_closed_form() {
    let times = [0.0, 1e-3, 1e-2, 1e-1, 1.0];
    for c in &CASES {
        let (_, ho) = c.structure();
        let k = c.lambda() / 2.0;
        for (mu0, nu0) in [(0.9, c.p), (c.p + 0.05, c.p), (0.99, c.p)] {
            let mu = [mu0, 1.0 - mu0];
            let nu = [nu0, 1.0 - nu0];
            let r = evi_check(&ho, &mu, &nu, k, &times, Budget::Absolute(1e-9), &LabConfig::default()).unwrap();
            let ent_nu = c.entropy(nu0);
            let mut oracle = f64::NEG_INFINITY;
            for j in 0..times.len() {
                for i in 0..j {
                    let dt = times[j] - times[i];
                    let wj = c.w2_squared(c.evolve(mu0, times[j]), nu0);
                    let wi = c.w2_squared(c.evolve(mu0, times[i]), nu0);
                    let ent_t = c.entropy(c.evolve(mu0, times[j]));
                    let ik = if k == 0.0 { dt } else { (k * dt).exp_m1() / k };
                    oracle = oracle.max(0.5 * (k * dt).exp() * wj - 0.5 * wi - ik * (ent_nu - ent_t));
                }
            }
            let got = r.number("integral_slack").unwrap();
            assert!((got - oracle.max(0.0)).abs() < TOL, "integral slack {got:e} vs {oracle:e}");
            // (λ − K)/2 · d²|δ| ≥ Ent fails once δ = μ₀ − p grows large
            let deviation = mu0 - c.p;
            let holds = 0.25 * c.lambda() * c.d * c.d * deviation.abs() >= c.entropy(mu0);
            assert_eq!(r.pass, holds, "mu0 {mu0}: slack {:e}", r.measured_slack);
            let e = c.entropy(c.evolve(mu0, 0.3));
            assert!((relative_entropy(&[c.evolve(mu0, 0.3), 1.0 - c.evolve(mu0, 0.3)], &[c.p, c.q()]) - e).abs() < TOL);
        }
    }
    assert!((ik(2.0, 0.5) - (1f64.exp() - 1.0) / 2.0).abs() < 1e-15);
}

#[test]
fn bakry_emery_constant_is_the_spectral_gap_on_symmetric_points() {
    let c = &CASES[0];
    let (_, ho) = c.structure();
    let k = bisect_bakry_emery(&ho, &[0.0, 1.0]);
    assert!((k - c.lambda()).abs() < TOL, "bisection {k} vs λ = {}", c.lambda());
    let times = [0.01, 0.1, 1.0];
    assert!(bakry_emery_check(&ho, &[0.2, -0.7], c.lambda(), &times, 1e-10).unwrap().pass);
    assert!(!bakry_emery_check(&ho, &[0.2, -0.7], c.lambda() + 0.5, &times, 1e-10).unwrap().pass);
}

#[test]
fn log_sobolev_constant_matches_sweep() {
    let sweep = log_sobolev_sweep();
    assert!((sweep - 4.0).abs() < TOL, "sweep constant {sweep}");
    let (ds, _) = CASES[0].structure();
    let r = log_sobolev_check(&ds, sweep, 200, 7, 1e-10).unwrap();
    assert!(r.pass, "slack {:e}", r.measured_slack);
    let implied = r.number("implied_constant").unwrap();
    assert!((implied - sweep).abs() < TOL, "implied {implied} vs sweep {sweep}");
    assert!(!log_sobolev_check(&ds, 2.0 * sweep, 200, 7, 1e-10).unwrap().pass);
}

#[test]
fn entropy_dissipation_closed_form() {
    for c in &CASES {
        let (ds, ho) = c.structure();
        let rho0 = [1.8 * 0.5 / c.p, 0.2 * 0.5 / c.q()];
        let t = 0.2;
        let rho = ho.apply(&rho0, t).unwrap();
        let log: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
        let mu0 = |t: f64| c.evolve(rho0[0] * c.p, t);
        let h = 1e-4;
        let derivative = (c.entropy(mu0(t + h)) - c.entropy(mu0(t - h))) / (2.0 * h);
        let want = c.w * (rho[1] - rho[0]) * (log[1] - log[0]);
        assert!((ds.energy(&rho, &log) - want).abs() < TOL);
        assert!((-derivative - want).abs() < 1e-7 * want.abs().max(1.0));
    }
}

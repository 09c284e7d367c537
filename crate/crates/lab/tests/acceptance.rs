//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p ricci-lab --test acceptance`. The process exits
//! non-zero when a criterion fails that is not listed in `EXPECTED_FAILURES`.
#![allow(clippy::needless_range_loop)]

use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ricci_lab::config::{CheckKind, CheckSpec, ScenarioConfig, SpaceSpec};
use ricci_lab::parallel;
use ricci_lab::report::report_string;
use ricci_lab::scenario::{self, build, measure, run_scenario};
use ricci_lab_core::check::{Budget, CheckResult, LabConfig};
use ricci_lab_core::dirichlet::{
    energy_measure_check, leibnitz_check, parallelogram_check, tensorization_check, DirichletStructure, HeatOperator,
};
use ricci_lab_core::entropy_geo::{density, fisher_information};
use ricci_lab_core::evi_lab::{
    bakry_emery_check, evi_check, identification_check, lipschitz_regularization_check, log_sobolev_check,
};
use ricci_lab_core::hopflax::{hj_identity_check, hopf_lax, product_hj_check};
use ricci_lab_core::kernel_sim::{
    chapman_kolmogorov_check, empirical_vs_kernel_from_counts, heat_kernel, sample_brownian, symmetry_check,
};
use ricci_lab_core::mmdist::{d_upper_bound, d_upper_bound_restarts, nearest_point_map, Initialization};
use ricci_lab_core::mmspace::{build_circle_grid, product_space, MetricMeasureSpace};
use ricci_lab_core::rng::LabRng;
use ricci_lab_core::transport::solve_w2_exact;

#[path = "../../core/tests/oracles/vertex.rs"]
mod vertex;

#[path = "../../core/tests/oracles/two_point.rs"]
mod two_point;

/// Criteria known to be out of reach; they are still run and reported.
const EXPECTED_FAILURES: &[u8] = &[7];

type Outcome = Result<(bool, String), String>;
type Criterion = (u8, &'static str, fn() -> Outcome);

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn planar_space(rng: &mut LabRng, n: usize, grid: bool) -> MetricMeasureSpace {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            if grid {
                (rng.index(8) as f64 / 4.0, rng.index(8) as f64 / 4.0)
            } else {
                (rng.uniform_in(0.0, 2.0), rng.uniform_in(0.0, 2.0))
            }
        })
        .collect();
    let d = DMatrix::from_fn(n, n, |i, j| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt());
    MetricMeasureSpace::from_parts(d, vec![1.0 / n as f64; n]).expect("planar space")
}

fn rational_measure(rng: &mut LabRng, n: usize, den: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n];
    for _ in 0..den {
        counts[rng.index(n)] += 1;
    }
    counts.iter().map(|&c| c as f64 / den as f64).collect()
}

fn random_graph(rng: &mut LabRng, n: usize) -> DirichletStructure {
    let raw = rng.vector(n, 0.1, 1.0);
    let total: f64 = raw.iter().sum();
    let m: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || rng.uniform() < 0.3 {
                let v = rng.uniform_in(0.1, 2.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    DirichletStructure::new(MetricMeasureSpace::discrete(m).expect("measure"), w).expect("graph")
}

fn c1_transport_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = LabRng::new(1, 1);
    let (mut worst, mut gap) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let n = 2 + rng.index(4);
        let space = planar_space(&mut rng, n, true);
        let mu = rational_measure(&mut rng, n, 12);
        let nu = rational_measure(&mut rng, n, 12);
        let sol = solve_w2_exact(&space, &mu, &nu).map_err(err)?;
        let cost = DMatrix::from_fn(n, n, |i, j| space.d(i, j).powi(2));
        worst = worst.max((sol.plan.cost - vertex::vertex_oracle(&cost, &mu, &nu)).abs());
        gap = gap.max(sol.info.duality_gap.abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-10 && gap <= 1e-10 && secs < 10.0,
        format!("max |simplex − vertex oracle| {worst:.2e}, max duality gap {gap:.2e}, {secs:.2}s"),
    ))
}

fn c2_two_point_closed_forms() -> Outcome {
    use two_point::{bisect_bakry_emery, log_sobolev_sweep, CASES};
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut note = |v: f64| worst = worst.max(v.abs());
    for c in &CASES {
        let (ds, ho) = c.structure();
        for t in [1e-3, 0.1, 0.5, 2.0] {
            let f = [0.3, -1.7];
            let got = ho.apply(&f, t).map_err(err)?;
            let want = c.heat(f, t);
            note(got[0] - want[0]);
            note(got[1] - want[1]);
            let k = heat_kernel(&ho, t).map_err(err)?;
            let want = c.kernel(t);
            for x in 0..2 {
                for y in 0..2 {
                    note(k.p[(x, y)] - want[x][y]);
                }
            }
        }
        let f = [0.25, 1.5];
        let (g, want) = (ds.gamma(&f), c.gamma(f));
        note(g[0] - want[0]);
        note(g[1] - want[1]);
        let rho = [0.7 / c.p, 0.3 / c.q()];
        note(fisher_information(&ds, &rho) - 2.0 * c.w * (rho[1].sqrt() - rho[0].sqrt()).powi(2));
        for t in [0.1, 0.75, 4.0] {
            let s = hopf_lax(ds.space(), &[0.0, 1.0], t).map_err(err)?;
            let cost = c.d * c.d / (2.0 * t);
            note(s.value[0] - 0.0f64.min(1.0 + cost));
            note(s.value[1] - 1.0f64.min(cost));
        }
        let times = [0.0, 1e-2, 1e-1, 1.0];
        let k = c.lambda() / 2.0;
        let mu0 = 0.5 * (c.p + 1.0);
        let r =
            evi_check(&ho, &[mu0, 1.0 - mu0], &[c.p, c.q()], k, &times, Budget::Absolute(1e-9), &LabConfig::default())
                .map_err(err)?;
        let mut oracle = f64::NEG_INFINITY;
        for j in 0..times.len() {
            for i in 0..j {
                let dt = times[j] - times[i];
                let wj = c.w2_squared(c.evolve(mu0, times[j]), c.p);
                let wi = c.w2_squared(c.evolve(mu0, times[i]), c.p);
                let ik = (k * dt).exp_m1() / k;
                oracle = oracle.max(0.5 * (k * dt).exp() * wj - 0.5 * wi + ik * c.entropy(c.evolve(mu0, times[j])));
            }
        }
        note(r.number("integral_slack").unwrap_or(f64::NAN) - oracle.max(0.0));
    }
    let symmetric = &CASES[0];
    let (ds, ho) = symmetric.structure();
    let be = bisect_bakry_emery(&ho, &[0.0, 1.0]);
    note(be - symmetric.lambda());
    let sweep = log_sobolev_sweep();
    let implied =
        log_sobolev_check(&ds, sweep, 200, 7, 1e-10).map_err(err)?.number("implied_constant").unwrap_or(f64::NAN);
    note(implied - sweep);
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-9 && secs < 5.0,
        format!("max deviation {worst:.2e} (Bakry–Émery K {be:.12}, log-Sobolev K {implied:.12}), {secs:.2}s"),
    ))
}

fn c3_gamma_calculus() -> Outcome {
    let mut rng = LabRng::new(3, 1);
    let mut structures = vec![DirichletStructure::cycle(16).map_err(err)?];
    for n in [8, 16, 24, 32] {
        structures.push(random_graph(&mut rng, n));
    }
    let mut worst: f64 = 0.0;
    for ds in &structures {
        let n = ds.n();
        for _ in 0..100 {
            let (f, g, h) = (rng.vector(n, -1.0, 1.0), rng.vector(n, -1.0, 1.0), rng.vector(n, -1.0, 1.0));
            worst = worst
                .max(leibnitz_check(ds, &f, &g, &h, 1e-12).map_err(err)?.measured_slack)
                .max(parallelogram_check(ds, &f, &g, 1e-12).map_err(err)?.measured_slack)
                .max(energy_measure_check(ds, &f, &g, 1e-12).map_err(err)?.measured_slack);
        }
    }
    Ok((
        worst <= 1e-12,
        format!("max residual {worst:.2e} over cycle 16 and 4 random graphs (n ≤ 32), 100 functions each"),
    ))
}

fn c4_heat_kernel_identities() -> Outcome {
    let ds = DirichletStructure::cycle(64).map_err(err)?;
    let ho = HeatOperator::new(&ds, &LabConfig::default());
    let times = [0.01, 0.1, 1.0];
    let (mut sym, mut ck): (f64, f64) = (0.0, 0.0);
    for &t in &times {
        sym = sym.max(symmetry_check(&heat_kernel(&ho, t).map_err(err)?).measured_slack);
        for &s in &times {
            ck = ck.max(chapman_kolmogorov_check(&ho, t, s).map_err(err)?.measured_slack);
        }
    }
    Ok((sym <= 1e-10 && ck <= 1e-10, format!("symmetry {sym:.2e}, Chapman–Kolmogorov {ck:.2e} on cycle 64")))
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn gamma_form(ds: &DirichletStructure, f: &[f64], g: &[f64], x: usize) -> f64 {
    let s: Vec<f64> = f.iter().zip(g).map(|(a, b)| a + b).collect();
    let d: Vec<f64> = f.iter().zip(g).map(|(a, b)| a - b).collect();
    (ds.gamma(&s)[x] - ds.gamma(&d)[x]) / 4.0
}

/// Top eigenvector of `a` relative to the positive semidefinite form `b`,
/// taken on the range of `b`.
fn extremal(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let eb = SymmetricEigen::new(b.clone());
    let n = a.nrows();
    let mut root_inv = DMatrix::zeros(n, n);
    for k in 0..n {
        if eb.eigenvalues[k] > 1e-12 {
            let c = eb.eigenvectors.column(k);
            root_inv += (1.0 / eb.eigenvalues[k].sqrt()) * c * c.transpose();
        }
    }
    let e = SymmetricEigen::new(&root_inv * a * &root_inv);
    let top = e.eigenvalues.imax();
    (&root_inv * e.eigenvectors.column(top)).iter().copied().collect()
}

/// Functions that saturate the gradient bounds at vertex 0 and time `t`.
fn adversarial(ds: &DirichletStructure, ho: &HeatOperator, t: f64) -> Result<[Vec<f64>; 2], String> {
    let n = ds.n();
    let heat: Vec<Vec<f64>> = (0..n).map(|i| ho.apply(&unit(n, i), t)).collect::<Result<_, _>>().map_err(err)?;
    let a = DMatrix::from_fn(n, n, |i, j| gamma_form(ds, &heat[i], &heat[j], 0));
    let be = DMatrix::from_fn(n, n, |i, j| {
        let g: Vec<f64> = (0..n).map(|x| gamma_form(ds, &unit(n, i), &unit(n, j), x)).collect();
        ho.apply(&g, t).map(|v| v[0]).unwrap_or(f64::NAN)
    });
    let lip = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| heat[i][0]));
    Ok([extremal(&a, &be), extremal(&a, &lip)])
}

fn c5_bakry_emery() -> Outcome {
    let times = [0.01, 0.1, 1.0];
    let mut rng = LabRng::new(5, 1);
    let cases = [
        ("cycle 8", DirichletStructure::cycle(8).map_err(err)?, 0.0),
        ("two-point", DirichletStructure::two_point(1.0, 0.5, 1.0).map_err(err)?, 4.0),
    ];
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    let mut controls_fail = true;
    for (name, ds, k) in &cases {
        let ho = HeatOperator::new(ds, &LabConfig::default());
        for _ in 0..100 {
            let f = rng.vector(ds.n(), -1.0, 1.0);
            worst = worst
                .max(bakry_emery_check(&ho, &f, *k, &times, 1e-10).map_err(err)?.measured_slack)
                .max(lipschitz_regularization_check(&ho, &f, *k, &times, 1e-10).map_err(err)?.measured_slack);
        }
        let [f_be, f_lip] = adversarial(ds, &ho, times[0])?;
        for f in [&f_be, &f_lip] {
            worst = worst
                .max(bakry_emery_check(&ho, f, *k, &times, 1e-10).map_err(err)?.measured_slack)
                .max(lipschitz_regularization_check(&ho, f, *k, &times, 1e-10).map_err(err)?.measured_slack);
        }
        let be = bakry_emery_check(&ho, &f_be, k + 0.5, &times, 1e-10).map_err(err)?;
        let lip = lipschitz_regularization_check(&ho, &f_lip, k + 0.5, &times, 1e-10).map_err(err)?;
        controls_fail &= !be.pass && !lip.pass;
        detail.push(format!(
            "{name}: K+0.5 violation BE {:.2e}, Lipschitz {:.2e}",
            be.measured_slack, lip.measured_slack
        ));
    }
    Ok((worst <= 1e-10 && controls_fail, format!("max slack {worst:.2e}; {}", detail.join("; "))))
}

fn c6_tensorization() -> Outcome {
    let times = [0.01, 0.1, 1.0];
    let mut rng = LabRng::new(6, 1);
    let mut gamma: f64 = 0.0;
    let mut kernel: f64 = 0.0;
    for ds in [DirichletStructure::two_point(1.0, 0.5, 1.0).map_err(err)?, DirichletStructure::cycle(8).map_err(err)?] {
        let f = rng.vector(ds.n() * ds.n(), -1.0, 1.0);
        let r = tensorization_check(&ds, &ds, &f, &times, 4096).map_err(err)?;
        gamma = gamma.max(r.number("gamma_defect").unwrap_or(f64::NAN));
        kernel = kernel.max(r.number("kernel_defect").unwrap_or(f64::NAN));
    }
    Ok((gamma <= 1e-12 && kernel <= 1e-10, format!("Γ additivity {gamma:.2e}, kernel factorization {kernel:.2e}")))
}

fn c7_jko_identification() -> Outcome {
    let start = Instant::now();
    let config = ScenarioConfig::new(SpaceSpec::Circle { length: 1.0, n: 64 }).resolve().map_err(err)?;
    let built = build(&config).map_err(err)?;
    let mu = measure(config.measures.mu.as_ref().expect("resolved"), &built).map_err(err)?;
    let rho0 = density(&mu, built.space.m());
    let r = identification_check(&built.ho, &rho0, &[4e-3, 2e-3, 1e-3], 0.2).map_err(err)?;
    let errors: Vec<String> =
        (0..3).map(|i| format!("{:.3}", r.number(&format!("l1_error_{i}")).unwrap_or(f64::NAN))).collect();
    let secs = start.elapsed().as_secs_f64();
    Ok((
        r.pass && secs < 60.0,
        format!(
            "L¹ errors at τ = 4e-3, 2e-3, 1e-3: {}; worst halving ratio {:.3} (need ≤ 0.75), {secs:.1}s",
            errors.join(", "),
            r.measured_slack
        ),
    ))
}

fn circle_run(n: usize, k: Option<f64>) -> Result<Vec<CheckResult>, String> {
    let mut config = ScenarioConfig::new(SpaceSpec::Circle { length: 20.0, n });
    config.k = k;
    config.checks = Some(vec![CheckSpec::new(CheckKind::CdConvexity), CheckSpec::new(CheckKind::Evi)]);
    let run = run_scenario(&config).map_err(err)?;
    run.outcomes.into_iter().map(|o| o.result).collect()
}

fn c8_flat_circle_family() -> Outcome {
    let sizes = [32, 64, 128];
    let mut slacks = [vec![], vec![]];
    let mut within = true;
    for &n in &sizes {
        for (i, r) in circle_run(n, None)?.into_iter().enumerate() {
            within &= r.pass;
            slacks[i].push((r.measured_slack, r.tolerance));
        }
    }
    let monotone = slacks.iter().all(|s| s.windows(2).all(|w| w[1].0 <= w[0].0 + 1e-9));
    let control = circle_run(64, Some(10.0))?;
    let control_fails = control.iter().all(|r| !r.pass);
    let show = |s: &[(f64, f64)]| s.iter().map(|(a, b)| format!("{a:.2e}/{b:.2e}")).collect::<Vec<_>>().join(" ");
    Ok((
        within && monotone && control_fails,
        format!(
            "slack/budget cd [{}] evi [{}]; nonincreasing {monotone}; K=10 rejected by both {control_fails}",
            show(&slacks[0]),
            show(&slacks[1])
        ),
    ))
}

fn c9_hopf_lax() -> Outcome {
    let mut rng = LabRng::new(9, 1);
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_factor: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..20 {
        let n = 3 + rng.index(14);
        let space = planar_space(&mut rng, n, false);
        let g = rng.vector(n, -1.0, 1.0);
        let t = rng.uniform_in(0.2, 1.0);
        let coarse = hj_identity_check(&space, &g, t, 1e-3).map_err(err)?;
        let fine = hj_identity_check(&space, &g, t, 1e-4).map_err(err)?;
        ok &= coarse.pass && fine.pass;
        if coarse.measured_slack > 1e-9 {
            let ratio = fine.measured_slack / coarse.measured_slack;
            worst_ratio = worst_ratio.max(ratio);
            checked += 1;
        }
        let (nx, ny) = (2 + rng.index(3), 2 + rng.index(3));
        let (x, y) = (planar_space(&mut rng, nx, false), planar_space(&mut rng, ny, false));
        let (_, map) = product_space(&x, &y, 4096).map_err(err)?;
        let gz = rng.vector(map.len(), -1.0, 1.0);
        let r = product_hj_check(&x, &y, &map, &gz, t, 1e-4).map_err(err)?;
        worst_factor = worst_factor.max(r.number("factorization_defect").unwrap_or(f64::NAN));
    }
    Ok((
        ok && worst_ratio <= 0.2 && worst_factor <= 1e-14,
        format!(
            "residual ratio dt=1e-4 vs 1e-3 ≤ {worst_ratio:.3} over {checked} spaces; product factorization {worst_factor:.2e}"
        ),
    ))
}

fn c10_brownian() -> Outcome {
    let start = Instant::now();
    let ds = DirichletStructure::two_point(1.0, 0.5, 1.0).map_err(err)?;
    let ho = HeatOperator::new(&ds, &LabConfig::default());
    let paths = 100_000;
    let counts = parallel::install(|| scenario::brownian_counts(&ds, 0, 0.5, paths, 42)).map_err(err)?;
    let again = parallel::install(|| scenario::brownian_counts(&ds, 0, 0.5, paths, 42)).map_err(err)?;
    let r = empirical_vs_kernel_from_counts(&ho, 0, 0.5, &counts, 42, 3.0).map_err(err)?;
    let path_a = sample_brownian(&ds, 0, 0.5, 42, 17).map_err(err)?;
    let path_b = sample_brownian(&ds, 0, 0.5, 42, 17).map_err(err)?;
    let identical = counts == again
        && path_a.jump_times.iter().map(|t| t.to_bits()).eq(path_b.jump_times.iter().map(|t| t.to_bits()))
        && path_a.states == path_b.states;
    let secs = start.elapsed().as_secs_f64();
    let bound = 3.0 * (2.0f64 / paths as f64).sqrt();
    Ok((
        r.measured_slack <= bound && identical && secs < 10.0,
        format!("TV {:.4} (bound {bound:.4}); reruns identical {identical}; {secs:.2}s", r.measured_slack),
    ))
}

fn c11_distance_bound() -> Outcome {
    let monotone = |h: &[f64]| h.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let mut rng = LabRng::new(11, 1);
    let mut self_bound: f64 = 0.0;
    let mut history_ok = true;
    for space in [build_circle_grid(20.0, 16).map_err(err)?.into_base(), planar_space(&mut rng, 7, false)] {
        let b = d_upper_bound_restarts(&space, &space, 10, 2, 1).map_err(err)?;
        self_bound = self_bound.max(b.upper);
        history_ok &= monotone(&b.history);
    }
    let family: Vec<_> =
        [16, 32, 64].iter().map(|&n| build_circle_grid(20.0, n)).collect::<Result<_, _>>().map_err(err)?;
    let mut bounds = Vec::new();
    for w in family.windows(2) {
        let b = d_upper_bound(w[0].base(), w[1].base(), &Initialization::Map(nearest_point_map(&w[0], &w[1])), 10)
            .map_err(err)?;
        history_ok &= monotone(&b.history);
        bounds.push(b.upper);
    }
    let decreasing = bounds.windows(2).all(|w| w[1] < w[0]);
    Ok((
        self_bound <= 1e-9 && decreasing && history_ok,
        format!(
            "identical spaces {self_bound:.2e}; circle 16→32 {:.5}, 32→64 {:.5}; objective monotone {history_ok}",
            bounds[0], bounds[1]
        ),
    ))
}

fn c12_determinism() -> Outcome {
    let config = ScenarioConfig::new(SpaceSpec::Circle { length: 20.0, n: 32 });
    let a = report_string(&run_scenario(&config).map_err(err)?);
    let b = report_string(&run_scenario(&config).map_err(err)?);
    let dir = tempfile::tempdir().map_err(err)?;
    let bin = env!("CARGO_BIN_EXE_ricci-lab");
    let mut files = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("report{i}.json"));
        let status = Command::new(bin)
            .args(["verify", "battery", "--builder", "circle", "--length", "20", "--n", "32", "--out"])
            .arg(&out)
            .env(parallel::THREADS_VAR, threads)
            .stderr(std::process::Stdio::null())
            .status()
            .map_err(err)?;
        if status.code() == Some(2) {
            return Err(format!("battery run exited with {status}"));
        }
        files.push(std::fs::read(&out).map_err(err)?);
    }
    let same_process = a == b;
    let across_threads = files[0] == files[1];
    Ok((
        same_process && across_threads,
        format!("in-process reruns identical {same_process}; CLI with 1 and 4 threads identical {across_threads} ({} bytes)", files[0].len()),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "OT exactness", c1_transport_exactness),
        (2, "two-point closed forms", c2_two_point_closed_forms),
        (3, "Γ-calculus identities", c3_gamma_calculus),
        (4, "heat-kernel identities", c4_heat_kernel_identities),
        (5, "Bakry–Émery and Lipschitz regularization", c5_bakry_emery),
        (6, "tensorization", c6_tensorization),
        (7, "JKO identification", c7_jko_identification),
        (8, "CD/EVI on the flat circle family", c8_flat_circle_family),
        (9, "Hopf–Lax HJ identity", c9_hopf_lax),
        (10, "Brownian sampler", c10_brownian),
        (11, "𝔻 upper bound", c11_distance_bound),
        (12, "determinism", c12_determinism),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (id, title, run) in criteria {
        let (pass, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let expected = EXPECTED_FAILURES.contains(&id);
        let tag = match (pass, expected) {
            (true, _) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
        };
        println!("{tag} criterion {id:>2} {title}: {detail}");
        if pass {
            passed += 1;
        } else if !expected {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/12 criteria pass");
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}

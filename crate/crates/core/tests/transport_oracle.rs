//! Exact transport against brute-force vertex enumeration of the
//! transportation polytope, plus structural properties of the solver.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ricci_lab_core::mmspace::MetricMeasureSpace;
use ricci_lab_core::transport::{c_transform, check_cyclical_monotonicity, solve_w2_exact, w1};

#[path = "oracles/vertex.rs"]
mod vertex;
use vertex::vertex_oracle;

/// Random planar configuration with Euclidean distances.
fn planar_space(rng: &mut ChaCha8Rng, n: usize) -> MetricMeasureSpace {
    let pts: Vec<(f64, f64)> =
        (0..n).map(|_| (rng.random_range(0..8) as f64 / 4.0, rng.random_range(0..8) as f64 / 4.0)).collect();
    let d = DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (pts[i], pts[j]);
        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
    });
    MetricMeasureSpace::new(d, vec![1.0 / n as f64; n]).expect("planar points form a metric")
}

/// Probability vector with entries `k / den`, some of them zero.
fn rational_measure(rng: &mut ChaCha8Rng, n: usize, den: u32) -> Vec<f64> {
    let mut counts = vec![0u32; n];
    for _ in 0..den {
        counts[rng.random_range(0..n)] += 1;
    }
    counts.iter().map(|&c| c as f64 / den as f64).collect()
}

#[test]
fn fifty_random_instances_match_vertex_enumeration() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    for _ in 0..50 {
        let n = rng.random_range(2..=5);
        let space = planar_space(&mut rng, n);
        let mu = rational_measure(&mut rng, n, 12);
        let nu = rational_measure(&mut rng, n, 12);
        let sol = solve_w2_exact(&space, &mu, &nu).unwrap();
        let cost = DMatrix::from_fn(n, n, |i, j| space.d(i, j).powi(2));
        let oracle = vertex_oracle(&cost, &mu, &nu);
        assert!((sol.plan.cost - oracle).abs() <= 1e-10, "simplex {} vs oracle {}", sol.plan.cost, oracle);
        assert!(sol.info.duality_gap.abs() <= 1e-10, "duality gap {:e}", sol.info.duality_gap);
        assert!(sol.plan.marginal_violation() <= 1e-12);
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn forced_coupling_on_two_points() {
    let s = MetricMeasureSpace::two_point(1.0, 0.5).unwrap();
    let sol = solve_w2_exact(&s, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
    assert_eq!(sol.w2, 1.0);
    assert_eq!(sol.plan.gamma[(0, 1)], 1.0);
}

#[test]
fn hand_evaluated_c_transform() {
    let s = MetricMeasureSpace::two_point(1.0, 0.5).unwrap();
    assert_eq!(c_transform(&s, &[0.0, 1.0]), vec![-0.5, -1.0]);
}

fn instance() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<f64>, Vec<f64>)> {
    (2usize..7).prop_flat_map(|n| {
        (
            prop::collection::vec((0.0f64..3.0, 0.0f64..3.0), n),
            prop::collection::vec(0.01f64..1.0, n),
            prop::collection::vec(0.01f64..1.0, n),
        )
    })
}

fn build(pts: &[(f64, f64)]) -> MetricMeasureSpace {
    let n = pts.len();
    let d = DMatrix::from_fn(n, n, |i, j| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt());
    MetricMeasureSpace::from_parts(d, vec![1.0 / n as f64; n]).unwrap()
}

fn normalise(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_plans_are_cyclically_monotone((pts, a, b) in instance()) {
        let s = build(&pts);
        let sol = solve_w2_exact(&s, &normalise(&a), &normalise(&b)).unwrap();
        let r = check_cyclical_monotonicity(&s, &sol.plan, 4).unwrap();
        prop_assert!(r.pass, "slack {:e}", r.measured_slack);
    }

    #[test]
    fn w2_is_a_symmetric_distance_dominating_w1((pts, a, b) in instance()) {
        let s = build(&pts);
        let (mu, nu) = (normalise(&a), normalise(&b));
        let ab = solve_w2_exact(&s, &mu, &nu).unwrap().w2;
        let ba = solve_w2_exact(&s, &nu, &mu).unwrap().w2;
        prop_assert!((ab - ba).abs() <= 1e-10 * (1.0 + ab));
        prop_assert!(solve_w2_exact(&s, &mu, &mu).unwrap().w2 <= 1e-7);
        prop_assert!(w1(&s, &mu, &nu).unwrap() <= ab + 1e-10);
    }

    #[test]
    fn potentials_are_c_concave_and_feasible((pts, a, b) in instance()) {
        let s = build(&pts);
        let (mu, nu) = (normalise(&a), normalise(&b));
        let sol = solve_w2_exact(&s, &mu, &nu).unwrap();
        let p = &sol.potentials;
        prop_assert_eq!(p.phi[p.anchor], 0.0);
        for x in 0..s.n() {
            for y in 0..s.n() {
                prop_assert!(p.phi[x] + p.phi_c[y] <= 0.5 * s.d(x, y).powi(2) + 1e-10);
            }
        }
        let dual: f64 = mu.iter().zip(&p.phi).map(|(m, v)| m * v).sum::<f64>()
            + nu.iter().zip(&p.phi_c).map(|(m, v)| m * v).sum::<f64>();
        prop_assert!((dual - 0.5 * sol.plan.cost).abs() <= 1e-9);
    }
}

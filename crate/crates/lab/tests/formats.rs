//! Serialization round trips on randomly generated inputs.

use nalgebra::DMatrix;
use proptest::prelude::*;
use ricci_lab::formats::{plan_from_csv, plan_from_json, plan_to_csv, plan_to_json};
use ricci_lab::json::{fmt_f64, parse_f64};
use ricci_lab::spacefile::{space_from_str, space_to_string};
use ricci_lab_core::mmspace::MetricMeasureSpace;
use ricci_lab_core::transport::solve_w2_exact;

fn space() -> impl Strategy<Value = MetricMeasureSpace> {
    (2usize..8).prop_flat_map(|n| {
        (prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), n), prop::collection::vec(0.01f64..1.0, n)).prop_map(
            move |(pts, m)| {
                let d = DMatrix::from_fn(n, n, |i, j| {
                    ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()
                });
                let s: f64 = m.iter().sum();
                MetricMeasureSpace::from_parts(d, m.iter().map(|v| v / s).collect()).unwrap()
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn floats_survive_text(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(parse_f64(&fmt_f64(v)).unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn space_files_round_trip_bit_exactly(s in space()) {
        let text = space_to_string(&s, None);
        let back = space_from_str(&text).unwrap().space;
        prop_assert_eq!(back.n(), s.n());
        for i in 0..s.n() {
            prop_assert_eq!(back.m()[i].to_bits(), s.m()[i].to_bits());
            for j in 0..s.n() {
                prop_assert_eq!(back.d(i, j).to_bits(), s.d(i, j).to_bits());
            }
        }
        prop_assert_eq!(space_to_string(&back, None), text);
    }

    #[test]
    fn plans_round_trip_through_csv_and_json(s in space()) {
        let n = s.n();
        let mu = s.m().to_vec();
        let nu: Vec<f64> = mu.iter().rev().copied().collect();
        let sol = solve_w2_exact(&s, &mu, &nu).unwrap();
        let from_csv = plan_from_csv(&plan_to_csv(&sol.plan).unwrap(), n, n).unwrap();
        let from_json = plan_from_json(&plan_to_json(&sol.plan, Some(&sol.potentials))).unwrap();
        for x in 0..n {
            for y in 0..n {
                prop_assert_eq!(from_csv[(x, y)].to_bits(), sol.plan.gamma[(x, y)].to_bits());
                prop_assert_eq!(from_csv[(x, y)].to_bits(), from_json[(x, y)].to_bits());
            }
        }
    }
}

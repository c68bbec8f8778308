mod common;

use common::oracle_wilson;
use crowdcensus::stats::{leave_one_out_tests, normal, plan_sample, two_proportion_z, wilson_ci, PilotSummary, TestVariance};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn unit() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

#[test]
fn quantile_matches_statrs_across_range() {
    let n = unit();
    for i in 1..2000 {
        let p = i as f64 / 2000.0;
        assert!((normal::quantile(p) - n.inverse_cdf(p)).abs() < 1e-8, "{p}");
    }
    for p in [1e-10, 1e-6, 1e-3, 0.999, 1.0 - 1e-6] {
        assert!((normal::quantile(p) - n.inverse_cdf(p)).abs() < 1e-7, "{p}");
    }
}

#[test]
fn two_sided_p_against_high_precision() {
    // 64/200 vs 50/200, pooled; reference computed at 40 digits
    let z = two_proportion_z(64, 200, 50, 200, TestVariance::Pooled).unwrap();
    assert!((z - 1.550_681_440_828_102_6).abs() < 1e-14);
    assert!((normal::two_sided_p(z) - 0.120_978_044_298_469_6).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn wilson_matches_closed_form(n in 1u64..5000, frac in 0.0f64..=1.0, alpha in 0.001f64..0.3) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_ci(k, n, alpha).unwrap();
        let (olo, ohi) = oracle_wilson(k, n, alpha);
        prop_assert!((lo - olo.max(0.0)).abs() < 1e-9, "{} {}", lo, olo);
        prop_assert!((hi - ohi.min(1.0)).abs() < 1e-9, "{} {}", hi, ohi);
        let p = k as f64 / n as f64;
        prop_assert!(lo <= p && p <= hi);
    }

    #[test]
    fn wilson_narrows_with_alpha(k in 0u64..100, extra in 1u64..100) {
        let n = k + extra;
        let (a, b) = wilson_ci(k, n, 0.05).unwrap();
        let (c, d) = wilson_ci(k, n, 0.05 / 18.0).unwrap();
        prop_assert!(c <= a && b <= d);
    }

    #[test]
    fn z_test_matches_statrs_tail(k1 in 0u64..200, n1 in 200u64..400, k2 in 0u64..200, n2 in 200u64..400) {
        if let Some(z) = two_proportion_z(k1, n1, k2, n2, TestVariance::Pooled) {
            let p = 2.0 * unit().cdf(-z.abs());
            // statrs erfc carries ~1e-11 relative error
            prop_assert!((normal::two_sided_p(z) - p).abs() <= 1e-9 * p, "{} {}", normal::two_sided_p(z), p);
            let pool = (k1 + k2) as f64 / (n1 + n2) as f64;
            let se = (pool * (1.0 - pool) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
            prop_assert!((z - (k1 as f64 / n1 as f64 - k2 as f64 / n2 as f64) / se).abs() < 1e-9);
        }
    }

    #[test]
    fn bonferroni_never_lowers_p(groups in prop::collection::vec((0u64..50, 50u64..100), 2..20)) {
        let g: Vec<(String, u64, u64)> = groups.iter().enumerate().map(|(i, (k, n))| (format!("g{i}"), *k, *n)).collect();
        for v in [TestVariance::Pooled, TestVariance::Unpooled] {
            for r in leave_one_out_tests("women", &g, 0.05, v).unwrap() {
                prop_assert!(r.adjusted_p >= r.raw_p);
                prop_assert!(r.adjusted_p <= 1.0);
                prop_assert!((r.adjusted_p - (r.raw_p * g.len() as f64).min(1.0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn plan_is_smallest_sufficient_n(moe in 0.01f64..0.2, conf in 0.8f64..0.995, p in 0.05f64..0.95) {
        let pilot = PilotSummary::from_counts("g", 1, 1, Some(p)).unwrap();
        let plan = plan_sample(&pilot, moe, conf).unwrap();
        let z = unit().inverse_cdf(1.0 - (1.0 - conf) / 2.0);
        let half = |n: u64| z * (p * (1.0 - p) / n as f64).sqrt();
        prop_assert!(half(plan.required_iia) <= moe * (1.0 + 1e-9));
        if plan.required_iia > 1 {
            prop_assert!(half(plan.required_iia - 1) > moe * (1.0 - 1e-9));
        }
    }
}

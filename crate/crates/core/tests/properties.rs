use proptest::prelude::*;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tailq::central::{binomial_ranks, jw_corrected_quantile, jw_tau_star, Bandwidth, CentralConfig, CentralSample};
use tailq::ev_index::{hill, pwm};
use tailq::extreme::{extreme_ci, median_unbiased, ratio_statistic, subsample_critical_values_with, RatioConfig};
use tailq::intermediate::{intermediate_ci_normal, intermediate_ci_subsampled_with, IntermediateConfig};
use tailq::subsample::SubsampleScheme;
use tailq::{EstimateSample, Side};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn sets(n: usize, b: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| index::sample(&mut rng, n, b).into_vec()).collect()
}

/// Distinct values with gaps of at least 1e-3.
fn spread_sample(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(-100_000i64..100_000, len)
        .prop_map(|s| s.into_iter().map(|v| v as f64 * 1e-3).collect())
}

proptest! {
    #[test]
    fn ratio_is_affine_invariant(v in spread_sample(10..60), a in 0.01f64..100.0, b in -100f64..100.0, c in -50f64..50.0) {
        let s = EstimateSample::from_estimates(&v).unwrap();
        let t = s.affine(a, b).unwrap();
        let cfg = RatioConfig::new(2, 3, 2.5).unwrap();
        let x = ratio_statistic(&s, &cfg, c).unwrap();
        let y = ratio_statistic(&t, &cfg, a * c + b).unwrap();
        prop_assert!(close(x, y), "{x} vs {y}");
    }

    #[test]
    fn extreme_ci_is_equivariant_and_contains_median_unbiased(
        v in spread_sample(30..60), a in 0.01f64..100.0, b in -100f64..100.0,
        l in 0.0f64..4.0, alpha in 0.01f64..0.99, seed in any::<u64>(),
    ) {
        let s = EstimateSample::from_estimates(&v).unwrap();
        let t = s.affine(a, b).unwrap();
        let cfg = RatioConfig::new(l.floor() as usize, 2, l).unwrap();
        let sets = sets(s.n(), 10, 50, seed);
        let ts = subsample_critical_values_with(&s, &cfg, 10, SubsampleScheme::Explicit(&sets)).unwrap();
        let tt = subsample_critical_values_with(&t, &cfg, 10, SubsampleScheme::Explicit(&sets)).unwrap();
        let ci = extreme_ci(&s, &cfg, alpha, &ts).unwrap();
        let cj = extreme_ci(&t, &cfg, alpha, &tt).unwrap();
        prop_assert!(close(a * ci.lower + b, cj.lower));
        prop_assert!(close(a * ci.upper + b, cj.upper));
        let m = median_unbiased(&s, &cfg, &ts).unwrap();
        prop_assert!(ci.lower <= m && m <= ci.upper);
    }

    #[test]
    fn intermediate_cis_are_equivariant(
        v in spread_sample(50..80), a in 0.01f64..100.0, b in -100f64..100.0,
        alpha in 0.01f64..0.5, seed in any::<u64>(),
    ) {
        let s = EstimateSample::from_estimates(&v).unwrap();
        let t = s.affine(a, b).unwrap();
        let cfg = IntermediateConfig::new(20);
        let ci = intermediate_ci_normal(&s, &cfg, alpha).unwrap();
        let cj = intermediate_ci_normal(&t, &cfg, alpha).unwrap();
        prop_assert!(close(a * ci.lower + b, cj.lower) && close(a * ci.upper + b, cj.upper));

        let sets = sets(s.n(), 40, 60, seed);
        let ci = intermediate_ci_subsampled_with(&s, &cfg, alpha, 40, &sets).unwrap();
        let cj = intermediate_ci_subsampled_with(&t, &cfg, alpha, 40, &sets).unwrap();
        prop_assert!(close(a * ci.lower + b, cj.lower) && close(a * ci.upper + b, cj.upper));
    }

    #[test]
    fn hill_scale_and_pwm_location_scale(v in prop::collection::vec(0.5f64..1000.0, 20..80), a in 0.01f64..100.0, b in -100f64..100.0) {
        let s = EstimateSample::from_estimates(&v).unwrap();
        let scaled = s.affine(a, 0.0).unwrap();
        if let (Ok(x), Ok(y)) = (hill(&s, 8), hill(&scaled, 8)) {
            prop_assert!(close(x.gamma_hat, y.gamma_hat));
            prop_assert!(x.gamma_hat >= 0.0);
        }
        let moved = s.affine(a, b).unwrap();
        if let (Ok(x), Ok(y)) = (pwm(&s, 8), pwm(&moved, 8)) {
            prop_assert!((x.gamma_hat - y.gamma_hat).abs() <= 1e-9 * x.gamma_hat.abs().max(1.0));
        }
    }

    #[test]
    fn corrected_quantile_is_location_equivariant(
        v in prop::collection::vec(-1000i32..1000, 10..60), shift in -1000i32..1000,
        s2 in prop::collection::vec(0u8..4, 60), tau in 0.05f64..0.95,
    ) {
        let x: Vec<f64> = v.iter().map(|&a| f64::from(a)).collect();
        let y: Vec<f64> = x.iter().map(|a| a + f64::from(shift)).collect();
        let s2: Vec<f64> = s2[..x.len()].iter().map(|&a| f64::from(a)).collect();
        let cfg = CentralConfig { bandwidth: Bandwidth::Fixed(25.0), ..CentralConfig::new(tau).unwrap() };
        let a = CentralSample::new(&x, &s2, 10, Side::Right).unwrap();
        let b = CentralSample::new(&y, &s2, 10, Side::Right).unwrap();
        prop_assert_eq!(
            jw_corrected_quantile(&b, &cfg).unwrap(),
            jw_corrected_quantile(&a, &cfg).unwrap() + f64::from(shift)
        );
    }

    #[test]
    fn tau_star_is_scale_free(
        v in prop::collection::vec(-100f64..100.0, 10..60), s2 in prop::collection::vec(0f64..3.0, 60),
        k in -6i32..6, tau in 0.05f64..0.95,
    ) {
        let a = 2f64.powi(k);
        let s2 = &s2[..v.len()];
        let h = 7.5;
        let base = CentralSample::new(&v, s2, 10, Side::Right).unwrap();
        let va: Vec<f64> = v.iter().map(|x| a * x).collect();
        let s2a: Vec<f64> = s2.iter().map(|x| a * a * x).collect();
        let scaled = CentralSample::new(&va, &s2a, 10, Side::Right).unwrap();
        let c1 = CentralConfig { bandwidth: Bandwidth::Fixed(h), ..CentralConfig::new(tau).unwrap() };
        let c2 = CentralConfig { bandwidth: Bandwidth::Fixed(a * h), ..c1 };
        prop_assert_eq!(jw_tau_star(&base, &c1).unwrap().tau_star, jw_tau_star(&scaled, &c2).unwrap().tau_star);
    }

    #[test]
    fn zero_variances_leave_tau(v in prop::collection::vec(-100f64..100.0, 5..60), tau in 0.05f64..0.95) {
        let cs = CentralSample::new(&v, &vec![0.0; v.len()], 10, Side::Right).unwrap();
        let cfg = CentralConfig { bandwidth: Bandwidth::Fixed(1.0), ..CentralConfig::new(tau).unwrap() };
        let bound = 1.0 / v.len() as f64;
        prop_assert_eq!(jw_tau_star(&cs, &cfg).unwrap().tau_star, tau.clamp(bound, 1.0 - bound));
    }

    #[test]
    fn wider_alpha_never_widens_binomial_ranks(n in 20usize..400, tau in 0.1f64..0.9, a1 in 0.001f64..0.5, a2 in 0.001f64..0.5) {
        let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        if let (Ok(narrow), Ok(wide)) = (binomial_ranks(n, tau, hi), binomial_ranks(n, tau, lo)) {
            prop_assert!(narrow.0 >= wide.0 && narrow.1 <= wide.1);
        }
    }
}

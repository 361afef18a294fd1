//! Coverage and bias checks that need many replications.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use tailq::central::{binomial_ci, jw_bootstrap_ci, jw_corrected_quantile, CentralConfig};
use tailq::extreme::{extreme_ci, subsample_critical_values, RatioConfig};
use tailq::intermediate::{intermediate_ci_subsampled, IntermediateConfig};
use tailq::simulation::dgp::{frechet_like_quantile, generate_panel, DgpConfig};
use tailq::simulation::panel::unitwise_ols;
use tailq::subsample::SubsampleConfig;
use tailq::{EstimateSample, Side};

fn frechet_sample(n: usize, seed: u64) -> EstimateSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..n)
        .map(|_| frechet_like_quantile(4.0, rng.random::<f64>()).unwrap())
        .collect();
    EstimateSample::from_estimates(&v).unwrap()
}

#[test]
fn noiseless_extreme_coverage_band() {
    let (n, l) = (2000, 2.0);
    let truth = (n as f64 / l).powf(0.25) - 1.0;
    let cfg = RatioConfig::new(2, 2, l).unwrap();
    let covered: usize = (0..1000u64)
        .into_par_iter()
        .map(|rep| {
            let s = frechet_sample(n, 10_000 + rep);
            let table = subsample_critical_values(&s, &cfg, &SubsampleConfig::new(0.7, 1000, rep).unwrap()).unwrap();
            usize::from(extreme_ci(&s, &cfg, 0.05, &table).unwrap().contains(truth))
        })
        .sum();
    let rate = covered as f64 / 1000.0;
    assert!((0.92..=0.98).contains(&rate), "coverage {rate}");
}

#[test]
fn binomial_interval_keeps_nominal_coverage() {
    let covered: usize = (0..5000u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(rep);
            let v: Vec<f64> = (0..200).map(|_| rng.sample(StandardNormal)).collect();
            let s = EstimateSample::from_estimates(&v).unwrap();
            usize::from(binomial_ci(&s, 0.5, 0.05).unwrap().contains(0.0))
        })
        .sum();
    let rate = covered as f64 / 5000.0;
    assert!(rate >= 0.945, "coverage {rate}");
}

fn first_stage(n: usize, seed: u64) -> tailq::simulation::panel::FirstStage {
    let dgp = DgpConfig {
        n,
        seed,
        ..DgpConfig::default()
    };
    unitwise_ols(&generate_panel(&dgp).unwrap().panel).unwrap()
}

#[test]
fn corrected_quantile_reduces_bias() {
    let tau = 0.9;
    let truth = frechet_like_quantile(4.0, tau).unwrap();
    let reps = 300;
    let (raw, corrected): (f64, f64) = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let fs = first_stage(2000, rep);
            let cs = fs.central_sample(Side::Right).unwrap();
            let raw = cs.sample().empirical_quantile(tau).unwrap();
            let jw = jw_corrected_quantile(&cs, &CentralConfig::new(tau).unwrap()).unwrap();
            (raw - truth, jw - truth)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let (raw, corrected) = (raw / reps as f64, corrected / reps as f64);
    assert!(
        corrected.abs() < raw.abs(),
        "raw bias {raw}, corrected bias {corrected}"
    );
}

#[test]
fn bootstrap_interval_contains_point_estimate() {
    let reps = 100u64;
    let contained: usize = (0..reps)
        .map(|rep| {
            let cs = first_stage(2000, 500 + rep).central_sample(Side::Right).unwrap();
            let cfg = CentralConfig::new(0.5).unwrap();
            let point = jw_corrected_quantile(&cs, &cfg).unwrap();
            usize::from(jw_bootstrap_ci(&cs, &cfg, 0.05, rep).unwrap().contains(point))
        })
        .sum();
    assert!(contained as f64 >= 0.95 * reps as f64, "{contained} of {reps}");
}

#[test]
fn subsampled_intermediate_critical_values_near_normal() {
    let s = frechet_sample(100_000, 77);
    let cfg = IntermediateConfig::new(400);
    let ci = intermediate_ci_subsampled(&s, &cfg, 0.05, &SubsampleConfig::new(0.7, 1000, 3).unwrap()).unwrap();
    // Recover the critical values from the interval: lower = top(k) - c_hi D, upper = top(k) - c_lo D.
    let top = s.top(400).unwrap();
    let d = top - s.top(420).unwrap();
    let (c_lo, c_hi) = ((top - ci.upper) / d, (top - ci.lower) / d);
    assert!((c_lo + 1.96).abs() <= 0.15, "c_.025 = {c_lo}");
    assert!((c_hi - 1.96).abs() <= 0.15, "c_.975 = {c_hi}");
}

use statrs::distribution::{ContinuousCDF, Normal};

use tailq::simulation::dgp::{
    frechet_like_cdf, frechet_variance, generate_panel, noise_variance, sample_coefficients, sample_noise, DgpConfig,
};
use tailq::simulation::experiment::{
    run_coverage_experiment, ExperimentConfig, IntervalMethod, MethodSettings, SimMethod,
};
use tailq::simulation::panel::unitwise_ols;

/// Composite Simpson rule on [a, b] with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// E[X^j] for density k (1+x)^(-k-1) on x > 0, integrated in s = ln(1+x).
fn pareto_moment(k: f64, j: i32) -> f64 {
    simpson(|s| k * (s.exp() - 1.0).powi(j) * (-k * s).exp(), 0.0, 60.0, 200_000)
}

#[test]
fn closed_form_variances_match_numerical_integration() {
    let var_theta = pareto_moment(4.0, 2) - pareto_moment(4.0, 1).powi(2);
    assert!((frechet_variance(4.0) - var_theta).abs() < 1e-8, "{var_theta}");
    assert!((var_theta - 2.0 / 9.0).abs() < 1e-8);
    // The noise magnitude has the same form; symmetry kills the odd moments.
    let var_u = pareto_moment(8.0, 2);
    assert!((noise_variance(8.0) - var_u).abs() < 1e-8, "{var_u}");
    assert!((var_u - 1.0 / 21.0).abs() < 1e-8);
    let cfg = DgpConfig::default();
    assert!((cfg.noise_scale() - (14.0f64 / 3.0).sqrt()).abs() < 1e-12);
}

fn ks_distance(mut v: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

fn normal_score_correlations(c: &[[f64; 3]], kappa: f64) -> [f64; 3] {
    let std = Normal::standard();
    let z: Vec<[f64; 3]> = c
        .iter()
        .map(|u| u.map(|x| std.inverse_cdf(frechet_like_cdf(kappa, x))))
        .collect();
    let n = z.len() as f64;
    let corr = |a: usize, b: usize| {
        let (ma, mb) = (
            z.iter().map(|r| r[a]).sum::<f64>() / n,
            z.iter().map(|r| r[b]).sum::<f64>() / n,
        );
        let cov: f64 = z.iter().map(|r| (r[a] - ma) * (r[b] - mb)).sum();
        let va: f64 = z.iter().map(|r| (r[a] - ma).powi(2)).sum();
        let vb: f64 = z.iter().map(|r| (r[b] - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    };
    [corr(0, 1), corr(0, 2), corr(1, 2)]
}

#[test]
fn copula_margins_and_dependence() {
    for rho in [0.0, 0.3] {
        let cfg = DgpConfig {
            n: 100_000,
            rho,
            seed: 11,
            ..DgpConfig::default()
        };
        let c = sample_coefficients(&cfg).unwrap();
        for j in 0..3 {
            let d = ks_distance(c.iter().map(|u| u[j]).collect(), |x| frechet_like_cdf(4.0, x));
            assert!(d < 0.01, "rho {rho}, margin {j}: KS {d}");
        }
        for r in normal_score_correlations(&c, 4.0) {
            assert!((r - rho).abs() < 0.02, "rho {rho}: correlation {r}");
        }
    }
}

#[test]
fn noise_moments() {
    let count = 1_000_000;
    let u = sample_noise(8.0, count, 5).unwrap();
    let n = count as f64;
    let mut mag: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    mag.sort_by(f64::total_cmp);
    let median = 0.5 * (mag[count / 2 - 1] + mag[count / 2]);
    assert!((median - (2f64.powf(0.125) - 1.0)).abs() < 0.003, "median {median}");
    let mean = u.iter().sum::<f64>() / n;
    let var = u.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    assert!((var - 1.0 / 21.0).abs() < 0.002, "variance {var}");
    let sign = u.iter().map(|x| x.signum()).sum::<f64>() / n;
    assert!(sign.abs() < 3.0 / n.sqrt(), "sign mean {sign}");
}

#[test]
fn noise_skewness() {
    let u = sample_noise(8.0, 1_000_000, 5).unwrap();
    let n = u.len() as f64;
    let mean = u.iter().sum::<f64>() / n;
    let var = u.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let skew = u.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n / var.powf(1.5);
    assert!(skew.abs() < 0.05, "skewness {skew}");
}

#[test]
fn noiseless_panel_is_recovered_exactly() {
    let cfg = DgpConfig {
        n: 500,
        noiseless: true,
        seed: 3,
        ..DgpConfig::default()
    };
    let sim = generate_panel(&cfg).unwrap();
    let fs = unitwise_ols(&sim.panel).unwrap();
    assert!(fs.dropped.is_empty());
    for (est, c) in fs.estimates.iter().zip(&sim.coefficients) {
        assert!((est - c[2]).abs() <= 1e-9 * c[2].abs().max(1.0), "{est} vs {}", c[2]);
    }
    assert!(fs.sigma2.iter().all(|&s| s < 1e-12));
}

#[test]
fn experiment_is_deterministic() {
    let cfg = ExperimentConfig {
        dgp: DgpConfig {
            n: 200,
            seed: 42,
            ..DgpConfig::default()
        },
        n_reps: 40,
        alpha: 0.05,
        settings: MethodSettings {
            n_bootstrap: 100,
            ..MethodSettings::default()
        },
    };
    let configured: Vec<_> = SimMethod::ALL.iter().map(|m| m.with(cfg.settings)).collect();
    let methods: Vec<&dyn IntervalMethod> = configured.iter().map(|m| m as &dyn IntervalMethod).collect();
    let taus = [0.9, 0.99];
    let a = run_coverage_experiment(&cfg, &methods, &taus).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_coverage_experiment(&cfg, &methods, &taus).unwrap());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.rows.len(), SimMethod::ALL.len() * taus.len());
}

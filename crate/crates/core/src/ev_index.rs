//! Point estimates of the extreme-value index from the top of the sample.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};
use crate::sample::EstimateSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvIndexMethod {
    Hill,
    Pwm,
    Average,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvIndexEstimate {
    pub gamma_hat: f64,
    pub k: usize,
    pub method: EvIndexMethod,
    pub notes: Vec<String>,
}

/// Hill and PWM estimates further apart than this are flagged.
pub const DISAGREEMENT_NOTE_THRESHOLD: f64 = 0.1;

/// `floor(N^(3/5))`, the default number of tail statistics.
pub fn default_k(n: usize) -> usize {
    ((n as f64).powf(0.6) + 1e-9).floor() as usize
}

fn check_k(sample: &EstimateSample, k: usize) -> Result<()> {
    let n = sample.n();
    if k == 0 || k >= n {
        return Err(TailError::OutOfRange {
            what: "k",
            value: k,
            lo: 1,
            hi: n - 1,
        });
    }
    Ok(())
}

/// Hill estimator `k^-1 sum_{i<k} log X_(N-i) - log X_(N-k)`.
///
/// Needs the top `k + 1` statistics to be strictly positive. It estimates
/// `max(gamma, 0)`.
pub fn hill(sample: &EstimateSample, k: usize) -> Result<EvIndexEstimate> {
    check_k(sample, k)?;
    let threshold = sample.top(k)?;
    if threshold <= 0.0 {
        return Err(TailError::invalid(format!(
            "Hill estimator needs a positive tail; X_(N-{k}) = {threshold}"
        )));
    }
    let log_threshold = threshold.ln();
    let sum: f64 = (0..k)
        .map(|i| sample.top(i).map(|v| v.ln() - log_threshold))
        .sum::<Result<f64>>()?;
    Ok(EvIndexEstimate {
        gamma_hat: sum / k as f64,
        k,
        method: EvIndexMethod::Hill,
        notes: Vec::new(),
    })
}

/// Probability-weighted-moment estimator `(A - 4B) / (A - 2B)`.
pub fn pwm(sample: &EstimateSample, k: usize) -> Result<EvIndexEstimate> {
    check_k(sample, k)?;
    let threshold = sample.top(k)?;
    let (mut a, mut b) = (0.0, 0.0);
    for i in 0..k {
        let excess = sample.top(i)? - threshold;
        a += excess;
        b += i as f64 * excess;
    }
    let kf = k as f64;
    a /= kf;
    b /= kf * kf;
    if a == 0.0 && b == 0.0 {
        return Err(TailError::degenerate(
            "PWM estimator undefined: the top statistics are all tied",
        ));
    }
    let denom = a - 2.0 * b;
    if denom == 0.0 {
        return Err(TailError::degenerate("PWM estimator undefined: A - 2B = 0"));
    }
    Ok(EvIndexEstimate {
        gamma_hat: (a - 4.0 * b) / denom,
        k,
        method: EvIndexMethod::Pwm,
        notes: Vec::new(),
    })
}

/// Mean of the Hill and PWM estimates at `k` (default `floor(N^(3/5))`).
pub fn averaged(sample: &EstimateSample, k: Option<usize>) -> Result<EvIndexEstimate> {
    let k = k.unwrap_or_else(|| default_k(sample.n()));
    let h = hill(sample, k)?;
    let p = pwm(sample, k)?;
    let mut notes = Vec::new();
    let gap = (h.gamma_hat - p.gamma_hat).abs();
    if gap > DISAGREEMENT_NOTE_THRESHOLD {
        notes.push(format!(
            "Hill ({:.4}) and PWM ({:.4}) disagree by {gap:.4}",
            h.gamma_hat, p.gamma_hat
        ));
    }
    Ok(EvIndexEstimate {
        gamma_hat: 0.5 * (h.gamma_hat + p.gamma_hat),
        k,
        method: EvIndexMethod::Average,
        notes,
    })
}

/// Dispatches on `method`; `k = None` selects the default.
pub fn estimate(sample: &EstimateSample, method: EvIndexMethod, k: Option<usize>) -> Result<EvIndexEstimate> {
    let k_or_default = k.unwrap_or_else(|| default_k(sample.n()));
    match method {
        EvIndexMethod::Hill => hill(sample, k_or_default),
        EvIndexMethod::Pwm => pwm(sample, k_or_default),
        EvIndexMethod::Average => averaged(sample, Some(k_or_default)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(v: &[f64]) -> EstimateSample {
        EstimateSample::from_estimates(v).unwrap()
    }

    #[test]
    fn hill_hand_value() {
        let e = std::f64::consts::E;
        let s = sample(&[0.5, e, e * e, e * e * e]);
        assert_relative_eq!(hill(&s, 2).unwrap().gamma_hat, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn hill_ties_give_zero() {
        let s = sample(&[1.0, 4.0, 4.0, 4.0]);
        assert_eq!(hill(&s, 2).unwrap().gamma_hat, 0.0);
    }

    #[test]
    fn hill_rejects_non_positive_tail() {
        let s = sample(&[-1.0, 0.0, 2.0, 3.0]);
        assert!(hill(&s, 2).is_err());
        assert!(hill(&s, 4).is_err());
    }

    #[test]
    fn pwm_hand_value() {
        let s = sample(&[0.0, 1.0, 2.0, 3.0]);
        assert_relative_eq!(pwm(&s, 2).unwrap().gamma_hat, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn pwm_tied_tail_errors() {
        let s = sample(&[1.0, 2.0, 2.0, 2.0]);
        assert!(matches!(pwm(&s, 2), Err(TailError::DegenerateTail(_))));
    }

    #[test]
    fn pwm_affine_invariant_on_hand_sample() {
        let s = sample(&[0.0, 1.0, 2.0, 3.0]);
        let t = s.affine(3.5, -20.0).unwrap();
        assert_relative_eq!(pwm(&t, 2).unwrap().gamma_hat, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn average_is_mean_of_components() {
        let s = sample(&[1.0, 2.0, 3.5, 4.0, 7.0, 8.0, 20.0]);
        let h = hill(&s, 3).unwrap().gamma_hat;
        let p = pwm(&s, 3).unwrap().gamma_hat;
        let a = averaged(&s, Some(3)).unwrap();
        assert_relative_eq!(a.gamma_hat, 0.5 * (h + p), max_relative = 1e-15);
        assert_eq!(a.method, EvIndexMethod::Average);
    }

    #[test]
    fn default_k_wiring() {
        assert_eq!(default_k(100_000), 1000);
        assert_eq!(default_k(2000), 95);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let raw: Vec<f64> = (0..500).map(|_| 1.0 + rng.random::<f64>() * 9.0).collect();
        let s = sample(&raw);
        assert_eq!(averaged(&s, None).unwrap(), averaged(&s, Some(default_k(500))).unwrap());
    }

    #[test]
    fn averaged_on_pareto_sample() {
        // Pure Pareto with kappa = 4, gamma = 1/4.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let raw: Vec<f64> = (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-0.25)).collect();
        let est = averaged(&sample(&raw), None).unwrap();
        assert_eq!(est.k, 1000);
        assert!((est.gamma_hat - 0.25).abs() < 0.03, "gamma_hat = {}", est.gamma_hat);
    }

    proptest! {
        #[test]
        fn hill_scale_invariant(
            raw in prop::collection::vec(0.1f64..100.0, 10..60),
            c in 0.01f64..100.0,
            k in 1usize..9,
        ) {
            let s = sample(&raw);
            let t = s.affine(c, 0.0).unwrap();
            let a = hill(&s, k).unwrap().gamma_hat;
            let b = hill(&t, k).unwrap().gamma_hat;
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            prop_assert!(a >= 0.0);
        }

        #[test]
        fn pwm_location_scale_invariant(
            raw in prop::collection::vec(-50f64..50.0, 10..60),
            a in 0.01f64..100.0,
            b in -100f64..100.0,
            k in 2usize..9,
        ) {
            let s = sample(&raw);
            if let Ok(g) = pwm(&s, k) {
                let h = pwm(&s.affine(a, b).unwrap(), k).unwrap();
                prop_assert!((g.gamma_hat - h.gamma_hat).abs() <= 1e-9 * g.gamma_hat.abs().max(1.0));
            }
        }
    }
}

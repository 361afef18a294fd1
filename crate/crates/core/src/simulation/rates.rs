//! Finite-sample size of the rate conditions under which noisy estimates can
//! stand in for the latent values. Advisory only: the conditions are asymptotic.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};

/// Values below this are flagged small.
pub const SMALL_RATE: f64 = 0.5;
/// Values above this are flagged large.
pub const LARGE_RATE: f64 = 2.0;

/// Tail assumption on the first-stage noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseTail {
    /// Finite moments of order `beta`.
    Moments { beta: f64 },
    /// Sub-Gaussian noise.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Regime {
    Extreme,
    /// Rank `k = N^delta`.
    Intermediate {
        delta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateFlag {
    Small,
    Moderate,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateDiagnostic {
    pub value: f64,
    pub flag: RateFlag,
}

/// Evaluates the rate expression for the regime and noise assumption.
///
/// Extreme: `N^(1/beta - g) (ln T)^(1/beta) / T^p` or `N^(-g) sqrt(ln N) / T^p`.
/// Intermediate: `N^(delta/2 (1 + 1/beta) + (1 - delta)(1/beta - g)) / T^p` or
/// `N^(delta/2 - (1 - delta) g) sqrt(ln N) / T^p`.
pub fn rate_diagnostic(
    n: usize,
    t: u32,
    p: f64,
    noise: NoiseTail,
    gamma_prime: f64,
    regime: Regime,
) -> Result<RateDiagnostic> {
    if n < 2 || t < 2 {
        return Err(TailError::invalid("rate diagnostic needs N >= 2 and T >= 2"));
    }
    if !(p.is_finite() && p > 0.0) || !gamma_prime.is_finite() {
        return Err(TailError::invalid("p must be positive and gamma' finite"));
    }
    if let NoiseTail::Moments { beta } = noise {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(TailError::invalid("beta must be positive"));
        }
    }
    let (nf, tf) = (n as f64, f64::from(t));
    let g = gamma_prime;
    let value = match (regime, noise) {
        (Regime::Extreme, NoiseTail::Moments { beta }) => {
            nf.powf(1.0 / beta - g) * tf.ln().powf(1.0 / beta) / tf.powf(p)
        }
        (Regime::Extreme, NoiseTail::Normal) => nf.powf(-g) * nf.ln().sqrt() / tf.powf(p),
        (Regime::Intermediate { delta }, noise) => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(TailError::invalid(format!("delta must lie in (0, 1), got {delta}")));
            }
            match noise {
                NoiseTail::Moments { beta } => {
                    let e = delta / 2.0 * (1.0 + 1.0 / beta) + (1.0 - delta) * (1.0 / beta - g);
                    nf.powf(e) / tf.powf(p)
                }
                NoiseTail::Normal => nf.powf(delta / 2.0 - (1.0 - delta) * g) * nf.ln().sqrt() / tf.powf(p),
            }
        }
    };
    let flag = if value < SMALL_RATE {
        RateFlag::Small
    } else if value > LARGE_RATE {
        RateFlag::Large
    } else {
        RateFlag::Moderate
    };
    Ok(RateDiagnostic { value, flag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn extreme_moments_value() {
        let d = rate_diagnostic(200, 10, 0.5, NoiseTail::Moments { beta: 8.0 }, 0.0, Regime::Extreme).unwrap();
        let want = 200f64.powf(0.125) * 10f64.ln().powf(0.125) / 10f64.sqrt();
        assert_relative_eq!(d.value, want, max_relative = 1e-12);
        assert!((d.value - 0.681).abs() < 1e-3);
        assert_eq!(d.flag, RateFlag::Moderate);
    }

    #[test]
    fn decreasing_in_gamma_and_t() {
        let f = |g: f64, t: u32| {
            rate_diagnostic(200, t, 0.5, NoiseTail::Moments { beta: 8.0 }, g, Regime::Extreme)
                .unwrap()
                .value
        };
        assert!(f(1.0, 10) < f(0.0, 10));
        assert!(f(10.0, 10) < 1e-20);
        assert!(f(0.0, 1_000_000) < f(0.0, 10));
        assert_eq!(
            rate_diagnostic(200, 4_000_000_000, 0.5, NoiseTail::Normal, 0.0, Regime::Extreme)
                .unwrap()
                .flag,
            RateFlag::Small
        );
    }

    #[test]
    fn intermediate_needs_delta() {
        let r = rate_diagnostic(
            200,
            10,
            0.5,
            NoiseTail::Normal,
            0.0,
            Regime::Intermediate { delta: 1.0 },
        );
        assert!(r.is_err());
        let ok = rate_diagnostic(
            200,
            10,
            0.5,
            NoiseTail::Normal,
            0.0,
            Regime::Intermediate { delta: 0.5 },
        )
        .unwrap();
        assert_relative_eq!(
            ok.value,
            200f64.powf(0.25) * 200f64.ln().sqrt() / 10f64.sqrt(),
            max_relative = 1e-12
        );
    }
}

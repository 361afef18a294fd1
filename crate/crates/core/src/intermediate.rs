//! Intermediate-order inference with the self-normalized statistic
//!
//! ```text
//!     (X_(N-k) - F^{-1}(1 - k/N)) / (X_(N-k) - X_(N-k-s)),    s = floor(sqrt(k))
//! ```
//!
//! which is asymptotically standard normal.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, TailError};
use crate::limit_dist::TableMeta;
use crate::rng::tag;
use crate::sample::{check_probability, CiMethod, ConfidenceInterval, EstimateSample, TailTarget};
use crate::subsample::{self, round_half_up, SubsampleConfig, SubsampleScheme};

/// Gap sizes `floor(sqrt(k))` below this trigger an instability warning.
pub const DEFAULT_MIN_S: usize = 3;

/// Smallest admissible subsample rank for the subsampled interval.
pub const MIN_SUBSAMPLE_K: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntermediateConfig {
    pub k: usize,
    pub min_s: usize,
}

impl IntermediateConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            min_s: DEFAULT_MIN_S,
        }
    }

    /// `floor(sqrt(k))`.
    pub fn s(&self) -> usize {
        isqrt(self.k)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.s() == 0 {
            return Err(TailError::invalid("k must be at least 1: floor(sqrt(k)) = 0"));
        }
        if self.k + self.s() > n - 1 {
            return Err(TailError::OutOfRange {
                what: "k + floor(sqrt(k))",
                value: self.k + self.s(),
                lo: 2,
                hi: n - 1,
            });
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let s = self.s();
        if s < self.min_s {
            vec![format!(
                "floor(sqrt(k)) = {s} is below {}; the intermediate statistic is unstable",
                self.min_s
            )]
        } else {
            Vec::new()
        }
    }
}

pub(crate) fn isqrt(k: usize) -> usize {
    let mut s = (k as f64).sqrt() as usize;
    while s * s > k {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= k {
        s += 1;
    }
    s
}

/// A statistic value with warnings attached by its producer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub value: f64,
    pub warnings: Vec<String>,
}

/// `X_(N-k) - X_(N-k-s)`, non-negative by ordering.
fn gap(sample: &EstimateSample, cfg: &IntermediateConfig) -> Result<f64> {
    cfg.validate(sample.n())?;
    let d = sample.top(cfg.k)? - sample.top(cfg.k + cfg.s())?;
    if d == 0.0 {
        return Err(TailError::degenerate(format!(
            "X_(N-{}) ties with X_(N-{}); the denominator vanishes",
            cfg.k,
            cfg.k + cfg.s()
        )));
    }
    Ok(d)
}

pub fn ivt_statistic(sample: &EstimateSample, cfg: &IntermediateConfig, center: f64) -> Result<Statistic> {
    let d = gap(sample, cfg)?;
    Ok(Statistic {
        value: (sample.top(cfg.k)? - center) / d,
        warnings: cfg.warnings(),
    })
}

fn z(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

fn target(sample: &EstimateSample, cfg: &IntermediateConfig) -> Result<TailTarget> {
    TailTarget::tail(cfg.k as f64, sample.n())
}

/// `[X_(N-k) - z_{1-a/2} D, X_(N-k) - z_{a/2} D]`.
pub fn intermediate_ci_normal(
    sample: &EstimateSample,
    cfg: &IntermediateConfig,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    check_probability("alpha", alpha)?;
    let d = gap(sample, cfg)?;
    let anchor = sample.top(cfg.k)?;
    let mut ci = ConfidenceInterval::new(
        anchor - z(1.0 - alpha / 2.0) * d,
        anchor - z(alpha / 2.0) * d,
        1.0 - alpha,
        CiMethod::IntermediateNormal,
        target(sample, cfg)?,
    )?;
    ci.diagnostics = cfg.warnings();
    Ok(ci)
}

/// Subsample rank `max(1, floor(b^delta))` with `delta = ln k / ln N`.
pub fn subsample_rank(n: usize, k: usize, b: usize) -> usize {
    let delta = (k as f64).ln() / (n as f64).ln();
    (((b as f64).powf(delta) + 1e-9).floor() as usize).max(1)
}

/// Interval with critical values from subsampled self-normalized statistics.
///
/// Each subsample of size `b` evaluates the statistic at the rate-preserving
/// rank `k_b`, centred at the full-sample statistic of descending rank
/// `round(N k_b / b)`.
pub fn intermediate_ci_subsampled(
    sample: &EstimateSample,
    cfg: &IntermediateConfig,
    alpha: f64,
    scfg: &SubsampleConfig,
) -> Result<ConfidenceInterval> {
    check_probability("alpha", alpha)?;
    scfg.validate()?;
    let n = sample.n();
    cfg.validate(n)?;
    let b = scfg.subsample_size(n);
    let scheme = SubsampleScheme::Random {
        count: scfg.n_subsamples,
        seed: scfg.seed,
        tag: tag::INTERMEDIATE_SUBSAMPLE,
    };
    let kb = feasible_subsample_rank(n, cfg.k, b)?;
    let d = gap(sample, cfg)?;
    intermediate_ci_with(sample, cfg, alpha, b, kb, scheme, d)
}

fn feasible_subsample_rank(n: usize, k: usize, b: usize) -> Result<usize> {
    if b >= n || b < 2 {
        return Err(TailError::infeasible(format!(
            "subsample size b = {b} out of range for N = {n}"
        )));
    }
    let kb = subsample_rank(n, k, b);
    if kb < MIN_SUBSAMPLE_K {
        return Err(TailError::infeasible(format!(
            "subsample rank k_b = {kb} is below {MIN_SUBSAMPLE_K} (k = {k}, b = {b})"
        )));
    }
    if b < kb + isqrt(kb) + 1 {
        return Err(TailError::infeasible(format!(
            "subsample size b = {b} too small for k_b = {kb}"
        )));
    }
    Ok(kb)
}

/// Same as [`intermediate_ci_subsampled`] with explicit index sets.
pub fn intermediate_ci_subsampled_with(
    sample: &EstimateSample,
    cfg: &IntermediateConfig,
    alpha: f64,
    b: usize,
    sets: &[Vec<usize>],
) -> Result<ConfidenceInterval> {
    check_probability("alpha", alpha)?;
    let n = sample.n();
    cfg.validate(n)?;
    let kb = feasible_subsample_rank(n, cfg.k, b)?;
    let d = gap(sample, cfg)?;
    intermediate_ci_with(sample, cfg, alpha, b, kb, SubsampleScheme::Explicit(sets), d)
}

fn intermediate_ci_with(
    sample: &EstimateSample,
    cfg: &IntermediateConfig,
    alpha: f64,
    b: usize,
    kb: usize,
    scheme: SubsampleScheme<'_>,
    d: f64,
) -> Result<ConfidenceInterval> {
    let n = sample.n();
    let sb = isqrt(kb);
    let c_rank = round_half_up(n as f64 * kb as f64 / b as f64).min(n - 1);
    let center = sample.top(c_rank)?;
    let (stats, dropped) = subsample::evaluate(sample.values(), b, kb + sb + 1, scheme, |top| {
        let g = top[kb] - top[kb + sb];
        (g != 0.0).then(|| (top[kb] - center) / g)
    })?;
    let table = subsample::into_table(stats, dropped, TableMeta::default())?;
    let anchor = sample.top(cfg.k)?;
    let mut ci = ConfidenceInterval::new(
        anchor - table.quantile(1.0 - alpha / 2.0)? * d,
        anchor - table.quantile(alpha / 2.0)? * d,
        1.0 - alpha,
        CiMethod::IntermediateSubsampled,
        target(sample, cfg)?,
    )?;
    ci.diagnostics = cfg.warnings();
    ci.diagnostics.push(format!(
        "subsample rank mapping k_b = floor(b^(ln k / ln N)) = {kb}, b = {b}, centred at descending rank {c_rank} (heuristic construction)"
    ));
    if table.meta().unreliable {
        ci.diagnostics
            .push("subsampled critical values flagged unreliable".into());
    }
    ci.diagnostics.extend(table.meta().notes.iter().cloned());
    Ok(ci)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_with(k: usize, s: usize, at_k: f64, at_ks: f64) -> EstimateSample {
        // Descending ranks 0..k-1 above at_k, filler between, at_ks at rank k+s.
        let mut v = Vec::new();
        for i in 0..k {
            v.push(at_k + 1.0 + i as f64);
        }
        v.push(at_k);
        for i in 1..s {
            v.push(at_k - (at_k - at_ks) * i as f64 / s as f64);
        }
        v.push(at_ks);
        v.extend([at_ks - 10.0, at_ks - 11.0]);
        EstimateSample::from_estimates(&v).unwrap()
    }

    #[test]
    fn isqrt_exact() {
        assert_eq!(isqrt(0), 0);
        assert_eq!(isqrt(3), 1);
        assert_eq!(isqrt(16), 4);
        assert_eq!(isqrt(399), 19);
        assert_eq!(isqrt(400), 20);
    }

    #[test]
    fn statistic_hand_value() {
        let s = sample_with(16, 4, 5.0, 3.0);
        let cfg = IntermediateConfig::new(16);
        let st = ivt_statistic(&s, &cfg, 4.0).unwrap();
        assert_relative_eq!(st.value, 0.5, max_relative = 1e-12);
        assert!(st.warnings.is_empty());
        assert_eq!(ivt_statistic(&s, &cfg, 5.0).unwrap().value, 0.0);
    }

    #[test]
    fn small_k_warns() {
        let s = sample_with(3, 1, 5.0, 3.0);
        let st = ivt_statistic(&s, &IntermediateConfig::new(3), 4.0).unwrap();
        assert!(st.value.is_finite());
        assert_eq!(st.warnings.len(), 1);
    }

    #[test]
    fn zero_k_rejected() {
        let s = sample_with(3, 1, 5.0, 3.0);
        assert!(ivt_statistic(&s, &IntermediateConfig::new(0), 4.0).is_err());
    }

    #[test]
    fn normal_ci_hand_value() {
        let s = sample_with(16, 4, 5.0, 3.0);
        let ci = intermediate_ci_normal(&s, &IntermediateConfig::new(16), 0.05).unwrap();
        let z975 = 1.959_963_984_540_054;
        assert_relative_eq!(ci.lower, 5.0 - z975 * 2.0, max_relative = 1e-9);
        assert_relative_eq!(ci.upper, 5.0 + z975 * 2.0, max_relative = 1e-9);
        assert_relative_eq!(ci.length(), 2.0 * z975 * 2.0, max_relative = 1e-12);
    }

    #[test]
    fn normal_ci_collapses_as_alpha_tends_to_one() {
        let s = sample_with(16, 4, 5.0, 3.0);
        let ci = intermediate_ci_normal(&s, &IntermediateConfig::new(16), 1.0 - 1e-12).unwrap();
        assert!((ci.lower - 5.0).abs() < 1e-9 && (ci.upper - 5.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_subsample_rank_rejected_early() {
        let raw: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let s = EstimateSample::from_estimates(&raw).unwrap();
        let scfg = SubsampleConfig::default();
        // k = 2 maps to k_b = 1 at b = 40.
        let err = intermediate_ci_subsampled(&s, &IntermediateConfig::new(2), 0.05, &scfg).unwrap_err();
        assert!(matches!(err, TailError::Infeasible(_)));
    }

    #[test]
    fn rate_preserving_rank() {
        assert_eq!(subsample_rank(100_000, 400, 3162), 66);
        assert_eq!(subsample_rank(200, 20, 40), 8);
    }
}

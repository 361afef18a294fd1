//! Central-order intervals: raw binomial order-statistic intervals and the
//! bias-corrected quantile with a percentile bootstrap.
//!
//! The correction assumes the first-stage noise does not change with `T`.
//! Applying it to general first stages is an extension, not a guarantee.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use rand::Rng;

use crate::error::{Result, TailError};
use crate::rng::{substream, tag};
use crate::sample::{check_probability, floor_rank, CiMethod, ConfidenceInterval, EstimateSample, Side, TailTarget};

pub const DEFAULT_N_BOOTSTRAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// `1.06 sd N^(-1/5)`, population standard deviation.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Gaussian,
}

impl Kernel {
    /// Derivative of the kernel density.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Kernel::Gaussian => -x * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralConfig {
    pub tau: f64,
    pub bandwidth: Bandwidth,
    pub kernel: Kernel,
    pub n_bootstrap: usize,
}

impl CentralConfig {
    pub fn new(tau: f64) -> Result<Self> {
        check_probability("tau", tau)?;
        Ok(Self {
            tau,
            bandwidth: Bandwidth::Auto,
            kernel: Kernel::Gaussian,
            n_bootstrap: DEFAULT_N_BOOTSTRAP,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("tau", self.tau)?;
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return Err(TailError::invalid(format!("bandwidth must be positive, got {h}")));
            }
        }
        if self.n_bootstrap == 0 {
            return Err(TailError::invalid("n_bootstrap must be positive"));
        }
        Ok(())
    }
}

/// Estimates paired with their noise variances, sorted jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralSample {
    sample: EstimateSample,
    sigma2: Vec<f64>,
}

impl CentralSample {
    /// `sigma2[i]` belongs to `sample_raw[i]`; `t` is the number of periods.
    pub fn new(raw: &[f64], sigma2: &[f64], t: u32, side: Side) -> Result<Self> {
        if raw.len() != sigma2.len() {
            return Err(TailError::invalid(format!(
                "sigma2 has {} entries for {} estimates",
                sigma2.len(),
                raw.len()
            )));
        }
        if sigma2.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(TailError::invalid("sigma2 entries must be finite and non-negative"));
        }
        let sample = EstimateSample::new(raw, Some(t), Some(0.5), side)?;
        let sign = match side {
            Side::Right => 1.0,
            Side::Left => -1.0,
        };
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| (sign * raw[a]).total_cmp(&(sign * raw[b])));
        let sigma2 = order.iter().map(|&i| sigma2[i]).collect();
        Ok(Self { sample, sigma2 })
    }

    /// Pairs an existing sample with variances already in its sorted order.
    pub fn from_sorted(sample: EstimateSample, sigma2_sorted: Vec<f64>) -> Result<Self> {
        if sample.t().is_none() {
            return Err(TailError::MissingMetadata("t"));
        }
        if sigma2_sorted.len() != sample.n() {
            return Err(TailError::invalid("sigma2 length must equal N"));
        }
        if sigma2_sorted.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(TailError::invalid("sigma2 entries must be finite and non-negative"));
        }
        Ok(Self {
            sample,
            sigma2: sigma2_sorted,
        })
    }

    pub fn sample(&self) -> &EstimateSample {
        &self.sample
    }

    /// Variances aligned with `sample().values()`.
    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    fn t(&self) -> Result<f64> {
        self.sample.t().map(f64::from).ok_or(TailError::MissingMetadata("t"))
    }
}

fn binom_cdf(dist: &Binomial, x: usize) -> f64 {
    dist.cdf(x as u64)
}

/// Smallest `x` in `0..=n` where the monotone predicate turns false, or `n + 1`.
fn first_false(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Ranks `(L, U)` of the order-statistic interval for the `tau` quantile.
///
/// `L = 1 + max{x : P(X <= x) <= alpha/2}` and `U = 1 + min{x : P(X <= x) >= 1 - alpha/2}`
/// for `X ~ Binomial(N, tau)`. A lower rank below 1 is clamped to 1 only if
/// `(1 - tau)^N <= alpha`, an upper rank above `N` is clamped to `N` only if
/// `tau^N <= alpha`; otherwise the interval is infeasible.
pub fn binomial_ranks(n: usize, tau: f64, alpha: f64) -> Result<(usize, usize)> {
    check_probability("tau", tau)?;
    check_probability("alpha", alpha)?;
    let dist = Binomial::new(tau, n as u64).map_err(|e| TailError::invalid(e.to_string()))?;
    // First x with CDF(x) > alpha/2; the lower rank is that x (1 + (x - 1)).
    let first_above = first_false(n, |x| binom_cdf(&dist, x) <= alpha / 2.0);
    let lower = if first_above == 0 {
        if (1.0 - tau).powf(n as f64) <= alpha {
            1
        } else {
            return Err(TailError::infeasible(format!(
                "no feasible lower rank for tau = {tau} at N = {n}, alpha = {alpha}"
            )));
        }
    } else {
        first_above
    };
    let first_reach = first_false(n, |x| binom_cdf(&dist, x) < 1.0 - alpha / 2.0);
    let upper = first_reach + 1;
    let upper = if upper > n {
        if tau.powf(n as f64) <= alpha {
            n
        } else {
            return Err(TailError::infeasible(format!(
                "no feasible upper rank for tau = {tau} at N = {n}, alpha = {alpha}"
            )));
        }
    } else {
        upper
    };
    Ok((lower, upper))
}

/// `[X_(L), X_(U)]` with binomial ranks.
pub fn binomial_ci(sample: &EstimateSample, tau: f64, alpha: f64) -> Result<ConfidenceInterval> {
    let (l, u) = binomial_ranks(sample.n(), tau, alpha)?;
    let mut ci = ConfidenceInterval::new(
        sample.order_statistic(l)?,
        sample.order_statistic(u)?,
        1.0 - alpha,
        CiMethod::CentralBinomial,
        TailTarget::central(tau)?,
    )?;
    ci.diagnostics.push(format!("order-statistic ranks L = {l}, U = {u}"));
    Ok(ci)
}

/// Bandwidth rule applied to `values` with multiplicities `weights`.
fn bandwidth(cfg: &CentralConfig, values: &[f64], weights: Option<&[u32]>) -> Result<f64> {
    match cfg.bandwidth {
        Bandwidth::Fixed(h) => Ok(h),
        Bandwidth::Auto => {
            let w = |i: usize| weights.map_or(1.0, |w| f64::from(w[i]));
            let n: f64 = (0..values.len()).map(w).sum();
            let mean = values.iter().enumerate().map(|(i, v)| w(i) * v).sum::<f64>() / n;
            let var = values
                .iter()
                .enumerate()
                .map(|(i, v)| w(i) * (v - mean).powi(2))
                .sum::<f64>()
                / n;
            let h = 1.06 * var.sqrt() * n.powf(-0.2);
            if h > 0.0 && h.is_finite() {
                Ok(h)
            } else {
                Err(TailError::degenerate(
                    "automatic bandwidth is zero: the sample is constant",
                ))
            }
        }
    }
}

/// Corrected probability `tau + b_F / T` and the pieces behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauStar {
    pub tau_star: f64,
    pub bias: f64,
    pub bandwidth: f64,
    pub clamped: bool,
}

/// Computes `tau*` on a weighted sample. `weights = None` means unit weights.
fn tau_star_weighted(
    values: &[f64],
    sigma2: &[f64],
    weights: Option<&[u32]>,
    n: usize,
    t: f64,
    cfg: &CentralConfig,
) -> Result<TauStar> {
    let h = bandwidth(cfg, values, weights)?;
    let theta = weighted_order_statistic(values, weights, floor_rank(n, cfg.tau));
    let w = |i: usize| weights.map_or(1.0, |w| f64::from(w[i]));
    let sum: f64 = values
        .iter()
        .zip(sigma2)
        .enumerate()
        .filter(|(i, _)| w(*i) != 0.0)
        .map(|(i, (v, s2))| w(i) * s2 * cfg.kernel.derivative((v - theta) / h))
        .sum();
    let bias = -sum / (2.0 * n as f64 * h * h);
    let raw = cfg.tau + bias / t;
    let (lo, hi) = (1.0 / n as f64, 1.0 - 1.0 / n as f64);
    let tau_star = raw.clamp(lo, hi);
    Ok(TauStar {
        tau_star,
        bias,
        bandwidth: h,
        clamped: tau_star != raw,
    })
}

/// Value at ascending 1-based `rank` of the sample where value `i` appears `weights[i]` times.
fn weighted_order_statistic(values: &[f64], weights: Option<&[u32]>, rank: usize) -> f64 {
    match weights {
        None => values[rank - 1],
        Some(w) => {
            let mut seen = 0usize;
            for (v, c) in values.iter().zip(w) {
                seen += *c as usize;
                if seen >= rank {
                    return *v;
                }
            }
            values[values.len() - 1]
        }
    }
}

pub fn jw_tau_star(cs: &CentralSample, cfg: &CentralConfig) -> Result<TauStar> {
    cfg.validate()?;
    let s = cs.sample();
    tau_star_weighted(s.values(), cs.sigma2(), None, s.n(), cs.t()?, cfg)
}

/// Order statistic at ascending rank `floor(N tau*)`.
pub fn jw_corrected_quantile(cs: &CentralSample, cfg: &CentralConfig) -> Result<f64> {
    let ts = jw_tau_star(cs, cfg)?;
    cs.sample().order_statistic(floor_rank(cs.sample().n(), ts.tau_star))
}

fn corrected_on_counts(cs: &CentralSample, cfg: &CentralConfig, counts: &[u32], t: f64) -> Result<f64> {
    let values = cs.sample().values();
    let n = values.len();
    let ts = tau_star_weighted(values, cs.sigma2(), Some(counts), n, t, cfg)?;
    Ok(weighted_order_statistic(
        values,
        Some(counts),
        floor_rank(n, ts.tau_star),
    ))
}

/// Percentile point at rank `ceil(a m)` of sorted replicates.
fn percentile(sorted: &[f64], a: f64) -> f64 {
    let m = sorted.len();
    let rank = ((a * m as f64 - 1e-9).ceil() as usize).clamp(1, m);
    sorted[rank - 1]
}

/// Percentile-bootstrap interval for the corrected quantile.
///
/// Each resample draws `N` units with replacement (with their variances) and
/// recomputes the bandwidth, `tau*` and the corrected quantile. Resamples
/// whose automatic bandwidth vanishes are dropped.
pub fn jw_bootstrap_ci(cs: &CentralSample, cfg: &CentralConfig, alpha: f64, seed: u64) -> Result<ConfidenceInterval> {
    cfg.validate()?;
    check_probability("alpha", alpha)?;
    let t = cs.t()?;
    let values = cs.sample().values();
    let n = values.len();
    let target = TailTarget::central(cfg.tau)?;
    if values[0] == values[n - 1] {
        let mut ci = ConfidenceInterval::new(
            values[0],
            values[0],
            1.0 - alpha,
            CiMethod::CentralCorrectedBootstrap,
            target,
        )?;
        ci.diagnostics.push("constant sample: zero-width interval".into());
        return Ok(ci);
    }
    let point = jw_tau_star(cs, cfg)?;
    let results: Vec<Option<f64>> = (0..cfg.n_bootstrap)
        .into_par_iter()
        .map(|bi| {
            let mut rng = substream(seed, tag::BOOTSTRAP, bi as u64);
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            corrected_on_counts(cs, cfg, &counts, t).ok()
        })
        .collect();
    let mut reps: Vec<f64> = results.into_iter().flatten().collect();
    let dropped = cfg.n_bootstrap - reps.len();
    if reps.is_empty() {
        return Err(TailError::degenerate("every bootstrap resample was degenerate"));
    }
    reps.sort_by(f64::total_cmp);
    let mut ci = ConfidenceInterval::new(
        percentile(&reps, alpha / 2.0),
        percentile(&reps, 1.0 - alpha / 2.0),
        1.0 - alpha,
        CiMethod::CentralCorrectedBootstrap,
        target,
    )?;
    ci.diagnostics.push(format!(
        "tau* = {:.6}, bandwidth = {:.6}, {} bootstrap resamples",
        point.tau_star,
        point.bandwidth,
        reps.len()
    ));
    if point.clamped {
        ci.diagnostics.push("tau* clamped to [1/N, 1 - 1/N]".into());
    }
    if dropped > 0 {
        ci.diagnostics
            .push(format!("{dropped} degenerate bootstrap resamples dropped"));
    }
    Ok(ci)
}

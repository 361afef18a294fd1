//! Extreme-order inference built on the self-normalized ratio
//!
//! ```text
//!     (X_(N-r) - F^{-1}(1 - l/N)) / (X_(N-q) - X_(N))
//! ```
//!
//! whose limit law depends on the tail only through the extreme-value index.
//! Critical values come from subsampling or from the simulated limit law.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};
use crate::limit_dist::{simulate_table, CriticalValueTable, LimitLawSpec, TableMeta};
use crate::rng::tag;
use crate::sample::{check_probability, CiMethod, ConfidenceInterval, EstimateSample, TailTarget};
use crate::subsample::{self, round_half_up, SubsampleConfig, SubsampleScheme};

/// Recommended range for `q`.
pub const RECOMMENDED_Q: std::ops::RangeInclusive<usize> = 2..=10;

/// How `r` follows `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RPolicy {
    /// `r = floor(l)`: centred at the sample `(1 - l/N)` quantile.
    Mixed,
    /// `r = 0`: centred at the sample maximum.
    MaxOnly,
}

impl RPolicy {
    pub fn r_for(&self, l: f64) -> usize {
        match self {
            RPolicy::Mixed => (l + 1e-9).floor() as usize,
            RPolicy::MaxOnly => 0,
        }
    }
}

/// Tuning triple of the ratio statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioConfig {
    pub r: usize,
    pub q: usize,
    pub l: f64,
}

impl RatioConfig {
    pub fn new(r: usize, q: usize, l: f64) -> Result<Self> {
        if q == 0 {
            return Err(TailError::invalid("q must be at least 1"));
        }
        if !(l.is_finite() && l >= 0.0) {
            return Err(TailError::invalid(format!("l must be non-negative, got {l}")));
        }
        Ok(Self { r, q, l })
    }

    pub fn with_policy(policy: RPolicy, q: usize, l: f64) -> Result<Self> {
        Self::new(policy.r_for(l), q, l)
    }

    pub fn is_endpoint(&self) -> bool {
        self.l == 0.0
    }

    /// Checks ranks against a sample of size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.q > n - 1 {
            return Err(TailError::OutOfRange {
                what: "q",
                value: self.q,
                lo: 1,
                hi: n - 1,
            });
        }
        if self.r > n - 1 {
            return Err(TailError::OutOfRange {
                what: "r",
                value: self.r,
                lo: 0,
                hi: n - 1,
            });
        }
        if self.l > n as f64 {
            return Err(TailError::invalid(format!("l = {} exceeds N = {n}", self.l)));
        }
        Ok(())
    }

    /// Soft warnings about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !RECOMMENDED_Q.contains(&self.q) {
            w.push(format!("q = {} is outside the recommended range 2..=10", self.q));
        }
        if self.is_endpoint() {
            w.push("l = 0 targets the right endpoint; valid only when the tail is bounded (gamma < 0)".into());
        }
        w
    }

    fn target(&self, n: usize) -> Result<TailTarget> {
        TailTarget::tail(self.l, n)
    }
}

/// `X_(N-q) - X_(N)`, which is negative unless the top statistics tie.
fn spread(sample: &EstimateSample, q: usize) -> Result<f64> {
    let d = sample.top(q)? - sample.top(0)?;
    if d == 0.0 {
        return Err(TailError::degenerate(format!(
            "X_(N-{q}) equals the sample maximum; the ratio denominator vanishes"
        )));
    }
    Ok(d)
}

/// The ratio statistic with `center` in place of `F^{-1}(1 - l/N)`.
pub fn ratio_statistic(sample: &EstimateSample, cfg: &RatioConfig, center: f64) -> Result<f64> {
    cfg.validate(sample.n())?;
    let d = spread(sample, cfg.q)?;
    Ok((sample.top(cfg.r)? - center) / d)
}

/// Descending rank of the full-sample statistic that centres subsample statistics.
pub fn centering_rank(n: usize, l: f64, b: usize) -> usize {
    round_half_up(n as f64 * l / b as f64).min(n - 1)
}

/// Subsampled critical values for the ratio, using `scfg.n_subsamples` random subsamples.
pub fn subsample_critical_values(
    sample: &EstimateSample,
    rcfg: &RatioConfig,
    scfg: &SubsampleConfig,
) -> Result<CriticalValueTable> {
    scfg.validate()?;
    let b = scfg.subsample_size(sample.n());
    let scheme = SubsampleScheme::Random {
        count: scfg.n_subsamples,
        seed: scfg.seed,
        tag: tag::SUBSAMPLE,
    };
    let mut table = subsample_critical_values_with(sample, rcfg, b, scheme)?;
    table.push_note(format!(
        "b = {b}, m = {}, S = {}, seed = {}",
        scfg.m, scfg.n_subsamples, scfg.seed
    ));
    Ok(table)
}

/// Subsampled critical values for subsample size `b` and an arbitrary scheme.
pub fn subsample_critical_values_with(
    sample: &EstimateSample,
    rcfg: &RatioConfig,
    b: usize,
    scheme: SubsampleScheme<'_>,
) -> Result<CriticalValueTable> {
    let n = sample.n();
    rcfg.validate(n)?;
    let depth = rcfg.r.max(rcfg.q) + 1;
    if b < depth || b > n - 1 {
        return Err(TailError::infeasible(format!(
            "subsample size b = {b} must satisfy {depth} <= b <= {}",
            n - 1
        )));
    }
    if rcfg.l > b as f64 {
        return Err(TailError::infeasible(format!(
            "l = {} exceeds the subsample size b = {b}",
            rcfg.l
        )));
    }
    let center = sample.top(centering_rank(n, rcfg.l, b))?;
    let (r, q) = (rcfg.r, rcfg.q);
    let (stats, dropped) = subsample::evaluate(sample.values(), b, depth, scheme, |top| {
        let d = top[q] - top[0];
        (d != 0.0).then(|| (top[r] - center) / d)
    })?;
    let meta = TableMeta {
        ratio: Some((rcfg.r, rcfg.q, rcfg.l)),
        seed: match scheme {
            SubsampleScheme::Random { seed, .. } => Some(seed),
            SubsampleScheme::Explicit(_) => None,
        },
        ..TableMeta::default()
    };
    subsample::into_table(stats, dropped, meta)
}

/// Critical values simulated from the limit law with a plugged-in index `gamma`.
pub fn simulated_critical_values(
    rcfg: &RatioConfig,
    gamma: f64,
    n_draws: usize,
    seed: u64,
) -> Result<CriticalValueTable> {
    let spec = LimitLawSpec::new(gamma, rcfg.r, rcfg.q, rcfg.l)?;
    simulate_table(&spec, n_draws, seed)
}

fn check_table(table: &CriticalValueTable, rcfg: &RatioConfig) -> Result<()> {
    if let Some((r, q, l)) = table.meta().ratio {
        if r != rcfg.r || q != rcfg.q || (l - rcfg.l).abs() > 1e-12 * l.abs().max(1.0) {
            return Err(TailError::invalid(format!(
                "critical values were built for (r, q, l) = ({r}, {q}, {l}), not ({}, {}, {})",
                rcfg.r, rcfg.q, rcfg.l
            )));
        }
    }
    Ok(())
}

/// Equivariant interval `[X_(N-r) - c_{a/2} D, X_(N-r) - c_{1-a/2} D]`, `D = X_(N-q) - X_(N)`.
pub fn extreme_ci(
    sample: &EstimateSample,
    rcfg: &RatioConfig,
    alpha: f64,
    table: &CriticalValueTable,
) -> Result<ConfidenceInterval> {
    check_probability("alpha", alpha)?;
    rcfg.validate(sample.n())?;
    check_table(table, rcfg)?;
    let d = spread(sample, rcfg.q)?;
    let anchor = sample.top(rcfg.r)?;
    let lower = anchor - table.quantile(alpha / 2.0)? * d;
    let upper = anchor - table.quantile(1.0 - alpha / 2.0)? * d;
    let method = match table.source() {
        crate::limit_dist::TableSource::Simulated => CiMethod::ExtremeSimulated,
        _ => CiMethod::ExtremeSubsampled,
    };
    let mut ci = ConfidenceInterval::new(lower, upper, 1.0 - alpha, method, rcfg.target(sample.n())?)?;
    ci.diagnostics.extend(rcfg.warnings());
    if table.meta().unreliable {
        ci.diagnostics.push("critical-value table flagged unreliable".into());
    }
    ci.diagnostics.extend(table.meta().notes.iter().cloned());
    Ok(ci)
}

/// Median-unbiased estimator `X_(N-r) - c_{1/2} D`.
pub fn median_unbiased(sample: &EstimateSample, rcfg: &RatioConfig, table: &CriticalValueTable) -> Result<f64> {
    rcfg.validate(sample.n())?;
    check_table(table, rcfg)?;
    let d = spread(sample, rcfg.q)?;
    Ok(sample.top(rcfg.r)? - table.quantile(0.5)? * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestDecision {
    Reject,
    FailToReject,
}

/// One-sided test of `H0: F^{-1}(1) <= C` against `F^{-1}(1) > C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportTest {
    pub statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub decision: TestDecision,
}

/// Rejects when `(X_(N) - C) / (X_(N-q) - X_(N))` falls below the `alpha` quantile
/// of an endpoint (`l = 0`, `r = 0`) table.
pub fn support_test(
    sample: &EstimateSample,
    c: f64,
    q: usize,
    alpha: f64,
    table: &CriticalValueTable,
) -> Result<SupportTest> {
    check_probability("alpha", alpha)?;
    match table.meta().ratio {
        Some((0, tq, l)) if l == 0.0 && tq == q => {}
        Some((r, tq, l)) => {
            return Err(TailError::invalid(format!(
                "support test needs an endpoint table with r = 0, l = 0, q = {q}; got r = {r}, q = {tq}, l = {l}"
            )))
        }
        None => return Err(TailError::invalid("support test needs a table with recorded (r, q, l)")),
    }
    let rcfg = RatioConfig::new(0, q, 0.0)?;
    rcfg.validate(sample.n())?;
    let statistic = (sample.top(0)? - c) / spread(sample, q)?;
    let critical_value = table.quantile(alpha)?;
    let decision = if statistic < critical_value {
        TestDecision::Reject
    } else {
        TestDecision::FailToReject
    };
    Ok(SupportTest {
        statistic,
        critical_value,
        alpha,
        decision,
    })
}

//! Sorted samples of unit-level estimates and the interval type shared by
//! every inference routine.
//!
//! All procedures work on the right tail. A left-tail analysis stores the
//! negated estimates, so the same code applies unchanged and results are
//! mapped back with [`EstimateSample::to_original`].

use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};

/// Which tail of the original data is under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

/// Immutable, ascending collection of unit-level estimates with first-stage metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSample {
    values: Vec<f64>,
    t: Option<u32>,
    p: Option<f64>,
    side: Side,
}

impl EstimateSample {
    /// Builds a sample from raw estimates. A left-side sample stores `-raw`.
    pub fn new(raw: &[f64], t: Option<u32>, p: Option<f64>, side: Side) -> Result<Self> {
        if raw.is_empty() {
            return Err(TailError::invalid("sample is empty"));
        }
        if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
            return Err(TailError::invalid(format!("non-finite estimate at position {i}")));
        }
        if raw.len() < 2 {
            return Err(TailError::invalid("at least two units are required"));
        }
        if t == Some(0) {
            return Err(TailError::invalid("T must be positive"));
        }
        if let Some(p) = p {
            if !(p.is_finite() && p > 0.0) {
                return Err(TailError::invalid("rate exponent p must be positive"));
            }
        }
        let mut values: Vec<f64> = match side {
            Side::Right => raw.to_vec(),
            Side::Left => raw.iter().map(|v| -v).collect(),
        };
        values.sort_by(f64::total_cmp);
        Ok(Self { values, t, p, side })
    }

    /// Right-tail sample without first-stage metadata.
    pub fn from_estimates(raw: &[f64]) -> Result<Self> {
        Self::new(raw, None, None, Side::Right)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Stored (oriented) values in ascending order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t(&self) -> Option<u32> {
        self.t
    }

    pub fn p(&self) -> Option<f64> {
        self.p
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Value at descending rank `j`; `j = 0` is the maximum.
    pub fn top(&self, j: usize) -> Result<f64> {
        let n = self.n();
        if j >= n {
            return Err(TailError::OutOfRange {
                what: "descending rank",
                value: j,
                lo: 0,
                hi: n - 1,
            });
        }
        Ok(self.values[n - 1 - j])
    }

    /// Value at ascending 1-based rank.
    pub fn order_statistic(&self, rank: usize) -> Result<f64> {
        let n = self.n();
        if rank == 0 || rank > n {
            return Err(TailError::OutOfRange {
                what: "ascending rank",
                value: rank,
                lo: 1,
                hi: n,
            });
        }
        Ok(self.values[rank - 1])
    }

    /// Sample quantile at ascending rank `floor(N tau)`, clamped to `[1, N]`.
    pub fn empirical_quantile(&self, tau: f64) -> Result<f64> {
        check_probability("tau", tau)?;
        Ok(self.values[floor_rank(self.n(), tau) - 1])
    }

    /// Maps a value on the stored orientation back to the original scale.
    pub fn to_original(&self, x: f64) -> f64 {
        match self.side {
            Side::Right => x,
            Side::Left => -x,
        }
    }

    /// Maps an interval on the stored orientation back to the original scale.
    pub fn interval_to_original(&self, lower: f64, upper: f64) -> (f64, f64) {
        match self.side {
            Side::Right => (lower, upper),
            Side::Left => (-upper, -lower),
        }
    }

    /// Same metadata, values replaced by `a * v + b` (on the stored orientation).
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && b.is_finite()) {
            return Err(TailError::invalid("affine map needs a > 0 and finite b"));
        }
        let values = self.values.iter().map(|v| a * v + b).collect();
        Ok(Self { values, ..self.clone() })
    }

    /// Replaces the first-stage metadata.
    pub fn with_metadata(mut self, t: Option<u32>, p: Option<f64>) -> Self {
        self.t = t;
        self.p = p;
        self
    }
}

/// Offset `l = N (1 - tau)` of the right-tail quantile at probability `tau`.
///
/// Rounded to 1e-9 so that grid points such as `N = 200, tau = 0.99` give
/// `l = 2` exactly rather than a value a rounding error away.
pub fn tail_offset(n: usize, tau: f64) -> f64 {
    ((n as f64 * (1.0 - tau)) * 1e9).round() / 1e9
}

/// Ascending rank `floor(n * tau)` clamped to `[1, n]`.
pub(crate) fn floor_rank(n: usize, tau: f64) -> usize {
    let raw = (n as f64 * tau + 1e-9).floor();
    (raw.max(1.0) as usize).min(n)
}

pub(crate) fn check_probability(what: &str, p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(TailError::invalid(format!("{what} must lie in (0, 1), got {p}")))
    }
}

/// The population quantity an interval or estimator targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TailTarget {
    /// `F^{-1}(1 - l/N)`; `l = 0` is the right endpoint `F^{-1}(1)`.
    Tail { l: f64, n: usize },
    /// `F^{-1}(tau)` for fixed `tau`.
    Central { tau: f64 },
}

impl TailTarget {
    pub fn tail(l: f64, n: usize) -> Result<Self> {
        if !(l.is_finite() && l >= 0.0) {
            return Err(TailError::invalid(format!("l must be non-negative, got {l}")));
        }
        if l > n as f64 {
            return Err(TailError::invalid(format!("l = {l} exceeds N = {n}")));
        }
        Ok(TailTarget::Tail { l, n })
    }

    pub fn central(tau: f64) -> Result<Self> {
        check_probability("tau", tau)?;
        Ok(TailTarget::Central { tau })
    }

    /// Probability level of the targeted quantile.
    pub fn probability(&self) -> f64 {
        match *self {
            TailTarget::Tail { l, n } => 1.0 - l / n as f64,
            TailTarget::Central { tau } => tau,
        }
    }

    pub fn is_endpoint(&self) -> bool {
        matches!(*self, TailTarget::Tail { l, .. } if l == 0.0)
    }

    pub fn describe(&self) -> String {
        match *self {
            TailTarget::Tail { l: 0.0, .. } => "F^-1(1) (right endpoint)".to_string(),
            TailTarget::Tail { l, n } => format!(
                "F^-1(1 - {l}/{n}) = F^-1({:.6}); the targeted level shifts with N",
                1.0 - l / n as f64
            ),
            TailTarget::Central { tau } => format!("F^-1({tau})"),
        }
    }
}

/// Interval construction that produced a [`ConfidenceInterval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMethod {
    /// Feasible extreme-order ratio with subsampled critical values.
    ExtremeSubsampled,
    /// Feasible extreme-order ratio with critical values simulated from the limit law.
    ExtremeSimulated,
    /// Self-normalized intermediate statistic with normal critical values.
    IntermediateNormal,
    /// Self-normalized intermediate statistic with subsampled critical values.
    IntermediateSubsampled,
    /// Order-statistic interval with binomial ranks.
    CentralBinomial,
    /// Bias-corrected central quantile with percentile bootstrap.
    CentralCorrectedBootstrap,
}

impl CiMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CiMethod::ExtremeSubsampled => "extreme-subsampled",
            CiMethod::ExtremeSimulated => "extreme-simulated",
            CiMethod::IntermediateNormal => "intermediate-normal",
            CiMethod::IntermediateSubsampled => "intermediate-subsampled",
            CiMethod::CentralBinomial => "central-binomial",
            CiMethod::CentralCorrectedBootstrap => "central-corrected-bootstrap",
        }
    }
}

/// Two-sided interval with the warnings its producer attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: CiMethod,
    pub target: TailTarget,
    pub diagnostics: Vec<String>,
}

impl ConfidenceInterval {
    pub(crate) fn new(lower: f64, upper: f64, level: f64, method: CiMethod, target: TailTarget) -> Result<Self> {
        check_probability("level", level)?;
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(TailError::degenerate("interval endpoint is not finite"));
        }
        if lower > upper {
            return Err(TailError::invalid(format!(
                "interval endpoints out of order: [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            lower,
            upper,
            level,
            method,
            target,
            diagnostics: Vec::new(),
        })
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Re-expresses the interval on the original scale of `sample`.
    pub fn to_original(mut self, sample: &EstimateSample) -> Self {
        let (lo, hi) = sample.interval_to_original(self.lower, self.upper);
        self.lower = lo;
        self.upper = hi;
        self
    }
}

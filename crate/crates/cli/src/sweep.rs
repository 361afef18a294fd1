//! Interval and point estimates over a grid of quantiles.

use std::collections::HashMap;

use serde::Serialize;
use tailq::central::{binomial_ci, jw_bootstrap_ci, jw_corrected_quantile, Bandwidth, CentralConfig, CentralSample};
use tailq::ev_index::{default_k, pwm};
use tailq::extreme::{extreme_ci, median_unbiased, simulated_critical_values, subsample_critical_values, RatioConfig};
use tailq::intermediate::{intermediate_ci_normal, intermediate_ci_subsampled, IntermediateConfig};
use tailq::limit_dist::CriticalValueTable;
use tailq::sample::tail_offset;
use tailq::subsample::SubsampleConfig;
use tailq::{CiMethod, EstimateSample, Side, TailError};

use crate::args::{CiMethodArg, SweepArgs};

/// Below this many observations beyond the target the extreme procedures are suggested.
pub const EXTREME_HINT_THRESHOLD: f64 = 30.0;

/// Simulated critical values are not advised below this sample size.
const SIMULATED_MIN_N: usize = 1000;

/// Sample prepared for a sweep, in its original orientation.
#[derive(Debug, Clone)]
pub struct SweepData {
    pub values: Vec<f64>,
    /// Noise variances aligned with `values`.
    pub sigma2: Option<Vec<f64>>,
    pub t: Option<u32>,
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPoint {
    /// Quantile probability on the original scale (a left-tail probability for left-tail runs).
    Tau(f64),
    /// Offset from the end of the tail.
    L(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Target {
    pub tau: f64,
    pub l: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: &'static str,
    pub target: Target,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub estimate: Option<f64>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    #[serde(skip)]
    pub failure: Option<TailError>,
}

pub fn method_label(m: CiMethodArg) -> &'static str {
    match m {
        CiMethodArg::Extreme => CiMethod::ExtremeSubsampled.as_str(),
        CiMethodArg::ExtremeSimulated => CiMethod::ExtremeSimulated.as_str(),
        CiMethodArg::IntermediateNormal => CiMethod::IntermediateNormal.as_str(),
        CiMethodArg::IntermediateSubsampled => CiMethod::IntermediateSubsampled.as_str(),
        CiMethodArg::CentralBinomial => CiMethod::CentralBinomial.as_str(),
        CiMethodArg::CentralCorrected => CiMethod::CentralCorrectedBootstrap.as_str(),
    }
}

/// Resolves a grid point to `(tau, l)` on the original scale.
fn resolve(n: usize, side: Side, p: GridPoint) -> (f64, f64) {
    let nf = n as f64;
    match (p, side) {
        (GridPoint::Tau(tau), Side::Right) => (tau, tail_offset(n, tau)),
        (GridPoint::Tau(tau), Side::Left) => (tau, tail_offset(n, 1.0 - tau)),
        (GridPoint::L(l), Side::Right) => (1.0 - l / nf, l),
        (GridPoint::L(l), Side::Left) => (l / nf, l),
    }
}

/// Suggested family for a target with `l` observations beyond it.
pub fn method_hint(l: f64) -> &'static str {
    if l < EXTREME_HINT_THRESHOLD {
        "extreme"
    } else {
        "central"
    }
}

struct Outcome {
    lower: Option<f64>,
    upper: Option<f64>,
    estimate: f64,
    warnings: Vec<String>,
}

pub struct Sweep<'a> {
    data: &'a SweepData,
    args: &'a SweepArgs,
    seed: u64,
    /// Oriented sample for the tail procedures.
    oriented: EstimateSample,
    /// Original orientation for the central procedures.
    plain: EstimateSample,
    central: Option<CentralSample>,
    tables: HashMap<(usize, usize, u64), Result<CriticalValueTable, TailError>>,
    gamma: Option<(f64, String)>,
}

impl<'a> Sweep<'a> {
    pub fn new(data: &'a SweepData, args: &'a SweepArgs, seed: u64) -> Result<Self, TailError> {
        let oriented = EstimateSample::new(&data.values, data.t, data.t.map(|_| 0.5), data.side)?;
        let plain = EstimateSample::new(&data.values, data.t, data.t.map(|_| 0.5), Side::Right)?;
        let central = match (&data.sigma2, data.t) {
            (Some(s2), Some(t)) => Some(CentralSample::new(&data.values, s2, t, Side::Right)?),
            _ => None,
        };
        Ok(Self {
            data,
            args,
            seed,
            oriented,
            plain,
            central,
            tables: HashMap::new(),
            gamma: None,
        })
    }

    pub fn n(&self) -> usize {
        self.oriented.n()
    }

    fn subsample(&self) -> Result<SubsampleConfig, TailError> {
        SubsampleConfig::new(self.args.b_exponent, self.args.subsamples, self.seed)
    }

    fn gamma(&mut self) -> Result<(f64, String), TailError> {
        if let Some(g) = &self.gamma {
            return Ok(g.clone());
        }
        let g = match self.args.gamma {
            Some(g) => (g, format!("gamma = {g} (given)")),
            None => {
                let k = default_k(self.n());
                let est = pwm(&self.oriented, k)?;
                (est.gamma_hat, format!("gamma = {} (PWM, k = {k})", est.gamma_hat))
            }
        };
        self.gamma = Some(g.clone());
        Ok(g)
    }

    /// Critical values for `rcfg`, shared between grid points with the same `(r, q, l)`.
    fn table(&mut self, rcfg: &RatioConfig, simulated: bool) -> Result<CriticalValueTable, TailError> {
        let key = (rcfg.r, rcfg.q, rcfg.l.to_bits());
        if let Some(t) = self.tables.get(&key) {
            return t.clone();
        }
        let t = if simulated {
            self.gamma()
                .and_then(|(g, _)| simulated_critical_values(rcfg, g, self.args.draws, self.seed))
        } else {
            self.subsample()
                .and_then(|scfg| subsample_critical_values(&self.oriented, rcfg, &scfg))
        };
        self.tables.insert(key, t.clone());
        t
    }

    fn extreme(&mut self, l: f64, simulated: bool, point_only: bool) -> Result<Outcome, TailError> {
        let r = self.args.r.unwrap_or((l + 1e-9).floor() as usize);
        let rcfg = RatioConfig::new(r, self.args.q, l)?;
        let table = self.table(&rcfg, simulated)?;
        let mut warnings = Vec::new();
        if simulated {
            warnings.push(self.gamma()?.1);
            if self.n() < SIMULATED_MIN_N {
                warnings.push(format!(
                    "simulated critical values at N = {} < {SIMULATED_MIN_N}; subsampling is advised",
                    self.n()
                ));
            }
        }
        let s = &self.oriented;
        let estimate = s.to_original(median_unbiased(s, &rcfg, &table)?);
        if point_only {
            warnings.extend(rcfg.warnings());
            return Ok(Outcome {
                lower: None,
                upper: None,
                estimate,
                warnings,
            });
        }
        let ci = extreme_ci(s, &rcfg, self.args.alpha, &table)?.to_original(s);
        warnings.extend(ci.diagnostics);
        Ok(Outcome {
            lower: Some(ci.lower),
            upper: Some(ci.upper),
            estimate,
            warnings,
        })
    }

    fn intermediate(&self, k: usize, subsampled: bool, point_only: bool) -> Result<Outcome, TailError> {
        let s = &self.oriented;
        let icfg = IntermediateConfig::new(k);
        icfg.validate(s.n())?;
        let estimate = s.to_original(s.top(k)?);
        if point_only {
            return Ok(Outcome {
                lower: None,
                upper: None,
                estimate,
                warnings: icfg.warnings(),
            });
        }
        let ci = if subsampled {
            intermediate_ci_subsampled(s, &icfg, self.args.alpha, &self.subsample()?)?
        } else {
            intermediate_ci_normal(s, &icfg, self.args.alpha)?
        }
        .to_original(s);
        Ok(Outcome {
            lower: Some(ci.lower),
            upper: Some(ci.upper),
            estimate,
            warnings: ci.diagnostics,
        })
    }

    fn central_config(&self, tau: f64) -> Result<CentralConfig, TailError> {
        Ok(CentralConfig {
            bandwidth: self.args.bandwidth.map_or(Bandwidth::Auto, Bandwidth::Fixed),
            n_bootstrap: self.args.bootstrap,
            ..CentralConfig::new(tau)?
        })
    }

    fn central(&self, tau: f64, corrected: bool, point_only: bool) -> Result<Outcome, TailError> {
        if !corrected {
            let estimate = self.plain.empirical_quantile(tau)?;
            if point_only {
                return Ok(Outcome {
                    lower: None,
                    upper: None,
                    estimate,
                    warnings: Vec::new(),
                });
            }
            let ci = binomial_ci(&self.plain, tau, self.args.alpha)?;
            return Ok(Outcome {
                lower: Some(ci.lower),
                upper: Some(ci.upper),
                estimate,
                warnings: ci.diagnostics,
            });
        }
        let cs = match &self.central {
            Some(cs) => cs,
            None if self.data.t.is_none() => return Err(TailError::MissingMetadata("t")),
            None => return Err(TailError::MissingMetadata("sigma2")),
        };
        let ccfg = self.central_config(tau)?;
        let estimate = jw_corrected_quantile(cs, &ccfg)?;
        let mut warnings =
            vec!["bias correction assumes noise that does not vary with T; treat as approximate otherwise".to_string()];
        if point_only {
            return Ok(Outcome {
                lower: None,
                upper: None,
                estimate,
                warnings,
            });
        }
        let ci = jw_bootstrap_ci(cs, &ccfg, self.args.alpha, self.seed)?;
        warnings.extend(ci.diagnostics);
        Ok(Outcome {
            lower: Some(ci.lower),
            upper: Some(ci.upper),
            estimate,
            warnings,
        })
    }

    /// One row per grid point. Failures stay in their row.
    pub fn run(&mut self, grid: &[GridPoint], point_only: bool) -> Vec<SweepRow> {
        let n = self.n();
        let method = self.args.method;
        grid.iter()
            .map(|&p| {
                let (tau, l) = resolve(n, self.data.side, p);
                let k = matches!(
                    method,
                    CiMethodArg::IntermediateNormal | CiMethodArg::IntermediateSubsampled
                )
                .then(|| self.args.k.unwrap_or((l + 0.5).floor() as usize));
                let valid = match p {
                    GridPoint::Tau(t) => t > 0.0 && t < 1.0,
                    GridPoint::L(l) => l >= 0.0 && l <= n as f64,
                };
                let res = if !valid {
                    Err(TailError::InvalidInput(format!(
                        "grid point {p:?} is outside the sample range"
                    )))
                } else {
                    match method {
                        CiMethodArg::Extreme => self.extreme(l, false, point_only),
                        CiMethodArg::ExtremeSimulated => self.extreme(l, true, point_only),
                        CiMethodArg::IntermediateNormal => self.intermediate(k.unwrap_or(0), false, point_only),
                        CiMethodArg::IntermediateSubsampled => self.intermediate(k.unwrap_or(0), true, point_only),
                        CiMethodArg::CentralBinomial => self.central(tau, false, point_only),
                        CiMethodArg::CentralCorrected => self.central(tau, true, point_only),
                    }
                };
                let target = Target { tau, l, k };
                match res {
                    Ok(o) => SweepRow {
                        method: method_label(method),
                        target,
                        lower: o.lower,
                        upper: o.upper,
                        estimate: Some(o.estimate),
                        warnings: o.warnings,
                        error: None,
                        failure: None,
                    },
                    Err(e) => SweepRow {
                        method: method_label(method),
                        target,
                        lower: None,
                        upper: None,
                        estimate: None,
                        warnings: Vec::new(),
                        error: Some(e.to_string()),
                        failure: Some(e),
                    },
                }
            })
            .collect()
    }
}

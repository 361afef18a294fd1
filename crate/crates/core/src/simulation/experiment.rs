//! Monte Carlo coverage and length of the interval menu on simulated panels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::central::{binomial_ci, jw_bootstrap_ci, CentralConfig, CentralSample, DEFAULT_N_BOOTSTRAP};
use crate::error::{Result, TailError};
use crate::ev_index::{default_k, pwm};
use crate::extreme::{extreme_ci, simulated_critical_values, subsample_critical_values, RPolicy, RatioConfig};
use crate::intermediate::{intermediate_ci_normal, intermediate_ci_subsampled, IntermediateConfig};
use crate::rng::{derive_seed, tag};
use crate::sample::{tail_offset, EstimateSample, Side};
use crate::simulation::dgp::{frechet_like_quantile, generate_panel, DgpConfig};
use crate::simulation::panel::unitwise_ols;
use crate::subsample::{round_half_up, SubsampleConfig};

/// Data of one replication handed to each interval method.
#[derive(Debug, Clone)]
pub struct Replication {
    pub sample: EstimateSample,
    pub central: CentralSample,
    /// Seed for the method's own randomness.
    pub seed: u64,
}

/// An interval procedure evaluated by the harness.
pub trait IntervalMethod: Sync {
    fn name(&self) -> String;

    /// Probability of the population quantile targeted at grid point `tau`.
    fn target_probability(&self, _n: usize, tau: f64) -> f64 {
        tau
    }

    /// Tail offset `l` (or intermediate rank `k`) reported for grid point `tau`.
    fn l_or_k(&self, n: usize, tau: f64) -> f64 {
        tail_offset(n, tau)
    }

    fn interval(&self, rep: &Replication, tau: f64, alpha: f64) -> Result<(f64, f64)>;
}

/// Tuning shared by the built-in methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSettings {
    pub q: usize,
    pub subsample: SubsampleConfig,
    pub n_bootstrap: usize,
    /// Draws from the limit law for simulated critical values.
    pub limit_draws: usize,
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self {
            q: 2,
            subsample: SubsampleConfig::default(),
            n_bootstrap: DEFAULT_N_BOOTSTRAP,
            limit_draws: 20_000,
        }
    }
}

/// The interval menu of the coverage study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimMethod {
    /// Extreme, `r = floor(l)`, subsampled critical values.
    #[serde(rename = "1a")]
    Mixed,
    /// Extreme, `r = 0`, subsampled critical values.
    #[serde(rename = "1b")]
    MaxOnly,
    /// Extreme, `r = floor(l)`, critical values simulated with the PWM index.
    #[serde(rename = "1c")]
    MixedSimulated,
    #[serde(rename = "2a")]
    IntermediateNormal,
    #[serde(rename = "2b")]
    IntermediateSubsampled,
    /// Binomial interval on the raw estimates.
    #[serde(rename = "3a")]
    CentralRaw,
    /// Bias-corrected quantile, bootstrap interval.
    #[serde(rename = "3b")]
    CentralCorrected,
}

impl SimMethod {
    pub const ALL: [SimMethod; 7] = [
        SimMethod::Mixed,
        SimMethod::MaxOnly,
        SimMethod::MixedSimulated,
        SimMethod::IntermediateNormal,
        SimMethod::IntermediateSubsampled,
        SimMethod::CentralRaw,
        SimMethod::CentralCorrected,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            SimMethod::Mixed => "1a",
            SimMethod::MaxOnly => "1b",
            SimMethod::MixedSimulated => "1c",
            SimMethod::IntermediateNormal => "2a",
            SimMethod::IntermediateSubsampled => "2b",
            SimMethod::CentralRaw => "3a",
            SimMethod::CentralCorrected => "3b",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }

    pub fn with(self, settings: MethodSettings) -> ConfiguredMethod {
        ConfiguredMethod { method: self, settings }
    }
}

/// Intermediate rank for grid point `tau`.
fn intermediate_k(n: usize, tau: f64) -> usize {
    round_half_up(n as f64 * (1.0 - tau))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfiguredMethod {
    pub method: SimMethod,
    pub settings: MethodSettings,
}

impl IntervalMethod for ConfiguredMethod {
    fn name(&self) -> String {
        self.method.code().to_string()
    }

    fn target_probability(&self, n: usize, tau: f64) -> f64 {
        match self.method {
            SimMethod::IntermediateNormal | SimMethod::IntermediateSubsampled => {
                1.0 - intermediate_k(n, tau) as f64 / n as f64
            }
            _ => tau,
        }
    }

    fn l_or_k(&self, n: usize, tau: f64) -> f64 {
        match self.method {
            SimMethod::IntermediateNormal | SimMethod::IntermediateSubsampled => intermediate_k(n, tau) as f64,
            _ => tail_offset(n, tau),
        }
    }

    fn interval(&self, rep: &Replication, tau: f64, alpha: f64) -> Result<(f64, f64)> {
        let s = &rep.sample;
        let n = s.n();
        let st = &self.settings;
        let scfg = SubsampleConfig {
            seed: rep.seed,
            ..st.subsample
        };
        let ci = match self.method {
            SimMethod::Mixed | SimMethod::MaxOnly => {
                let policy = if self.method == SimMethod::Mixed {
                    RPolicy::Mixed
                } else {
                    RPolicy::MaxOnly
                };
                let rcfg = RatioConfig::with_policy(policy, st.q, tail_offset(n, tau))?;
                let table = subsample_critical_values(s, &rcfg, &scfg)?;
                extreme_ci(s, &rcfg, alpha, &table)?
            }
            SimMethod::MixedSimulated => {
                let rcfg = RatioConfig::with_policy(RPolicy::Mixed, st.q, tail_offset(n, tau))?;
                let gamma = pwm(s, default_k(n))?.gamma_hat;
                let table = simulated_critical_values(&rcfg, gamma, st.limit_draws, rep.seed)?;
                extreme_ci(s, &rcfg, alpha, &table)?
            }
            SimMethod::IntermediateNormal => {
                intermediate_ci_normal(s, &IntermediateConfig::new(intermediate_k(n, tau)), alpha)?
            }
            SimMethod::IntermediateSubsampled => {
                intermediate_ci_subsampled(s, &IntermediateConfig::new(intermediate_k(n, tau)), alpha, &scfg)?
            }
            SimMethod::CentralRaw => binomial_ci(s, tau, alpha)?,
            SimMethod::CentralCorrected => {
                let ccfg = CentralConfig {
                    n_bootstrap: st.n_bootstrap,
                    ..CentralConfig::new(tau)?
                };
                jw_bootstrap_ci(&rep.central, &ccfg, alpha, rep.seed)?
            }
        };
        Ok((ci.lower, ci.upper))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `dgp.seed` is the master seed of the experiment.
    pub dgp: DgpConfig,
    pub n_reps: usize,
    pub alpha: f64,
    pub settings: MethodSettings,
}

/// One method at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub target_tau: f64,
    pub l_or_k: f64,
    /// Share of all replications whose interval covered the truth.
    pub coverage: f64,
    /// Mean length over the replications that produced an interval.
    pub mean_length: Option<f64>,
    pub n_ok: usize,
    pub n_infeasible: usize,
    pub n_degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn row(&self, method: &str, tau: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.target_tau == tau)
    }
}

#[derive(Debug, Clone, Copy)]
enum Outcome {
    Interval { covered: bool, length: f64 },
    Infeasible,
    Degenerate,
}

fn classify(e: &TailError) -> Outcome {
    match e {
        TailError::DegenerateTail(_) => Outcome::Degenerate,
        _ => Outcome::Infeasible,
    }
}

fn replication_data(cfg: &ExperimentConfig, rep_seed: u64) -> Result<Replication> {
    let dgp = DgpConfig {
        seed: rep_seed,
        ..cfg.dgp
    };
    let panel = generate_panel(&dgp)?;
    let fs = unitwise_ols(&panel.panel)?;
    Ok(Replication {
        sample: fs.sample(Side::Right)?,
        central: fs.central_sample(Side::Right)?,
        seed: rep_seed,
    })
}

/// Runs `cfg.n_reps` replications and tabulates every method at every grid point.
///
/// Replications that cannot produce an interval count as not covering and
/// are tallied as infeasible or degenerate; they are left out of the length
/// average. Results depend only on the configuration, not on scheduling.
pub fn run_coverage_experiment(
    cfg: &ExperimentConfig,
    methods: &[&dyn IntervalMethod],
    taus: &[f64],
) -> Result<ExperimentReport> {
    cfg.dgp.validate()?;
    if cfg.n_reps == 0 {
        return Err(TailError::invalid("n_reps must be positive"));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(TailError::invalid("alpha must lie in (0, 1)"));
    }
    for &tau in taus {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(TailError::invalid(format!("grid point {tau} outside (0, 1)")));
        }
    }
    let n = cfg.dgp.n;
    let mut truths = Vec::with_capacity(methods.len() * taus.len());
    for m in methods {
        for &tau in taus {
            // A rank of zero targets the (infinite) endpoint; such methods fail per replication.
            let p = m.target_probability(n, tau);
            truths.push(if p >= 1.0 {
                f64::INFINITY
            } else {
                frechet_like_quantile(cfg.dgp.kappa, p)?
            });
        }
    }
    let outcomes: Vec<Vec<Outcome>> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(cfg.dgp.seed, tag::REPLICATION, r as u64);
            let data = match replication_data(cfg, rep_seed) {
                Ok(d) => d,
                Err(e) => return vec![classify(&e); truths.len()],
            };
            let mut cells = Vec::with_capacity(truths.len());
            for m in methods {
                for &tau in taus {
                    let truth = truths[cells.len()];
                    cells.push(match m.interval(&data, tau, cfg.alpha) {
                        Ok((lo, hi)) => Outcome::Interval {
                            covered: lo <= truth && truth <= hi,
                            length: hi - lo,
                        },
                        Err(e) => classify(&e),
                    });
                }
            }
            cells
        })
        .collect();

    let mut rows = Vec::with_capacity(truths.len());
    for (mi, m) in methods.iter().enumerate() {
        for (ti, &tau) in taus.iter().enumerate() {
            let cell = mi * taus.len() + ti;
            let (mut covered, mut n_ok, mut n_inf, mut n_deg, mut len_sum) = (0usize, 0usize, 0usize, 0usize, 0.0);
            for rep in &outcomes {
                match rep[cell] {
                    Outcome::Interval { covered: c, length } => {
                        n_ok += 1;
                        covered += usize::from(c);
                        len_sum += length;
                    }
                    Outcome::Infeasible => n_inf += 1,
                    Outcome::Degenerate => n_deg += 1,
                }
            }
            rows.push(ReportRow {
                method: m.name(),
                target_tau: tau,
                l_or_k: m.l_or_k(n, tau),
                coverage: covered as f64 / cfg.n_reps as f64,
                mean_length: (n_ok > 0).then(|| len_sum / n_ok as f64),
                n_ok,
                n_infeasible: n_inf,
                n_degenerate: n_deg,
            });
        }
    }
    Ok(ExperimentReport { config: *cfg, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Everything;
    impl IntervalMethod for Everything {
        fn name(&self) -> String {
            "everything".into()
        }
        fn interval(&self, _: &Replication, _: f64, _: f64) -> Result<(f64, f64)> {
            Ok((f64::NEG_INFINITY, f64::INFINITY))
        }
    }

    struct Empty;
    impl IntervalMethod for Empty {
        fn name(&self) -> String {
            "empty".into()
        }
        fn interval(&self, _: &Replication, _: f64, _: f64) -> Result<(f64, f64)> {
            Ok((1.0, 0.0))
        }
    }

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            dgp: DgpConfig {
                n: 60,
                seed: 3,
                ..Default::default()
            },
            n_reps: 8,
            alpha: 0.05,
            settings: MethodSettings {
                subsample: SubsampleConfig {
                    n_subsamples: 100,
                    ..Default::default()
                },
                n_bootstrap: 50,
                limit_draws: 2000,
                ..Default::default()
            },
        }
    }

    #[test]
    fn harness_sanity() {
        let r = run_coverage_experiment(&small(), &[&Everything, &Empty], &[0.9]).unwrap();
        assert_eq!(r.rows[0].coverage, 1.0);
        assert_eq!(r.rows[1].coverage, 0.0);
        assert_eq!(r.rows[0].n_ok, 8);
    }

    #[test]
    fn counts_add_up_and_infeasible_is_tallied() {
        let cfg = small();
        let methods: Vec<ConfiguredMethod> = SimMethod::ALL.iter().map(|m| m.with(cfg.settings)).collect();
        let refs: Vec<&dyn IntervalMethod> = methods.iter().map(|m| m as &dyn IntervalMethod).collect();
        let r = run_coverage_experiment(&cfg, &refs, &[0.9, 0.999]).unwrap();
        for row in &r.rows {
            assert_eq!(row.n_ok + row.n_infeasible + row.n_degenerate, cfg.n_reps);
            assert!((0.0..=1.0).contains(&row.coverage));
        }
        assert_eq!(r.row("3a", 0.999).unwrap().n_infeasible, cfg.n_reps);
        assert_eq!(r.row("2a", 0.9).unwrap().l_or_k, 6.0);
    }

    #[test]
    fn method_codes_round_trip() {
        for m in SimMethod::ALL {
            assert_eq!(SimMethod::from_code(m.code()), Some(m));
        }
    }
}

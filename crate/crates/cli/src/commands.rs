//! Command implementations.

use serde::Serialize;
use tailq::ev_index::{self, EvIndexMethod};
use tailq::extreme::{simulated_critical_values, subsample_critical_values, support_test, RatioConfig, TestDecision};
use tailq::simulation::dgp::DgpConfig;
use tailq::simulation::experiment::{
    run_coverage_experiment, ConfiguredMethod, ExperimentConfig, IntervalMethod, MethodSettings, ReportRow, SimMethod,
};
use tailq::simulation::panel::unitwise_ols;
use tailq::simulation::rates::{rate_diagnostic, NoiseTail, RateFlag, Regime};
use tailq::subsample::SubsampleConfig;
use tailq::{EstimateSample, Side};

use crate::args::{
    CiArgs, CommonArgs, DiagnoseArgs, EstimateArgs, EstimatorArg, GammaArgs, InputArgs, InputMode, RegimeArg,
    SimulateArgs, SupportArgs,
};
use crate::error::CliError;
use crate::ingest::{read_estimates, read_panel, standardize, write_estimates, Estimates, Standardization};
use crate::report::{fmt_opt, InputSummary, Meta, Report, StandardizationMeta, Tabular};
use crate::sweep::{method_hint, GridPoint, Sweep, SweepData, SweepRow};

/// A sample read from disk and prepared for analysis.
pub struct Loaded {
    pub data: SweepData,
    /// First-stage estimates as read, before standardization.
    pub estimates: Estimates,
    pub summary: InputSummary,
    pub standardization: Option<Standardization>,
}

pub fn load(input: &InputArgs) -> Result<Loaded, CliError> {
    let (estimates, t, rows, dropped) = match input.mode {
        InputMode::Estimates => {
            let e = read_estimates(&input.input)?;
            let rows = e.values.len();
            (e, input.t, rows, Vec::new())
        }
        InputMode::Panel => {
            let p = read_panel(&input.input)?;
            let fs = unitwise_ols(&p.panel)?;
            let mut dropped: Vec<String> = p.incomplete.iter().map(|u| format!("{u}: missing periods")).collect();
            dropped.extend(fs.dropped.iter().map(|(u, why)| format!("{u}: {why}")));
            let e = Estimates {
                ids: fs.ids.clone(),
                values: fs.estimates.clone(),
                sigma2: Some(fs.sigma2.clone()),
            };
            if let Some(t) = input.t.filter(|&t| t != fs.t) {
                return Err(CliError::Validation(format!(
                    "--t {t} disagrees with the {} periods in the panel",
                    fs.t
                )));
            }
            (e, Some(fs.t), p.rows, dropped)
        }
    };
    let (values, sigma2, standardization) = if input.standardize {
        let (v, st) = standardize(&estimates.values)?;
        let s2 = estimates
            .sigma2
            .as_ref()
            .map(|s| s.iter().map(|x| x / (st.sd * st.sd)).collect());
        (v, s2, Some(st))
    } else {
        (estimates.values.clone(), estimates.sigma2.clone(), None)
    };
    let summary = InputSummary {
        path: input.input.display().to_string(),
        mode: match input.mode {
            InputMode::Estimates => "estimates",
            InputMode::Panel => "panel",
        }
        .into(),
        rows,
        units: values.len(),
        dropped,
    };
    let side = if input.left_tail { Side::Left } else { Side::Right };
    Ok(Loaded {
        data: SweepData {
            values,
            sigma2,
            t,
            side,
        },
        estimates,
        summary,
        standardization,
    })
}

fn config_json<T: Serialize>(args: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(args).map_err(|e| CliError::Validation(e.to_string()))
}

fn meta<T: Serialize>(
    command: &'static str,
    args: &T,
    common: &CommonArgs,
    loaded: Option<&Loaded>,
    notes: Vec<String>,
) -> Result<Meta, CliError> {
    let mut notes = notes;
    if let Some(l) = loaded {
        if !l.summary.dropped.is_empty() {
            notes.push(format!("{} units dropped", l.summary.dropped.len()));
        }
        if l.standardization.is_some() {
            notes.push("results are on the standardized scale; x = mean + sd * z maps back".into());
        }
    }
    Ok(Meta {
        version: tailq::VERSION,
        command,
        seed: common.seed,
        config: config_json(args)?,
        input: loaded.map(|l| l.summary.clone()),
        standardization: loaded
            .and_then(|l| l.standardization)
            .map(|params| StandardizationMeta {
                params,
                convention: "population",
            }),
        notes,
    })
}

impl Tabular for SweepRow {
    fn header() -> Vec<&'static str> {
        vec![
            "method", "tau", "l", "k", "lower", "upper", "estimate", "warnings", "error",
        ]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.method.to_string(),
            self.target.tau.to_string(),
            self.target.l.to_string(),
            self.target.k.map_or_else(String::new, |k| k.to_string()),
            fmt_opt(self.lower),
            fmt_opt(self.upper),
            fmt_opt(self.estimate),
            self.warnings.join("; "),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

fn grid(quantile: &[f64], l: &[f64]) -> Result<Vec<GridPoint>, CliError> {
    if !quantile.is_empty() {
        Ok(quantile.iter().map(|&t| GridPoint::Tau(t)).collect())
    } else if !l.is_empty() {
        Ok(l.iter().map(|&l| GridPoint::L(l)).collect())
    } else {
        Err(CliError::Validation("one of --quantile or --l is required".into()))
    }
}

/// Prints the family suggestion for grid points where it differs from the chosen one.
fn print_hints(rows: &[SweepRow], method: &str) {
    for r in rows {
        let hint = method_hint(r.target.l);
        let chosen = if method.starts_with("extreme") {
            "extreme"
        } else if method.starts_with("central") {
            "central"
        } else {
            continue;
        };
        if hint != chosen {
            eprintln!(
                "hint: {} observations beyond the target at tau = {}; {hint} procedures are usually preferable",
                r.target.l, r.target.tau
            );
        }
    }
}

/// Turns an all-failed sweep into an error after the report is written.
fn sweep_status(rows: &[SweepRow]) -> Result<(), CliError> {
    if !rows.is_empty() && rows.iter().all(|r| r.failure.is_some()) {
        let e = rows[0].failure.clone().expect("checked above");
        return Err(e.into());
    }
    Ok(())
}

pub fn ci(args: &CiArgs) -> Result<(), CliError> {
    let loaded = load(&args.input)?;
    let grid = grid(&args.sweep.quantile, &args.sweep.l)?;
    let mut sweep = Sweep::new(&loaded.data, &args.sweep, args.common.seed)?;
    let rows = sweep.run(&grid, false);
    print_hints(&rows, rows.first().map_or("", |r| r.method));
    let report = Report {
        meta: meta("ci", args, &args.common, Some(&loaded), Vec::new())?,
        rows,
    };
    report.emit(args.common.output.as_deref(), args.common.format)?;
    sweep_status(&report.rows)
}

pub fn estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let loaded = load(&args.input)?;
    if let Some(path) = &args.estimates_out {
        write_estimates(path, &loaded.estimates)?;
    }
    let grid = grid(&args.sweep.quantile, &args.sweep.l)?;
    let mut sweep = Sweep::new(&loaded.data, &args.sweep, args.common.seed)?;
    let rows = sweep.run(&grid, true);
    let report = Report {
        meta: meta("estimate", args, &args.common, Some(&loaded), Vec::new())?,
        rows,
    };
    report.emit(args.common.output.as_deref(), args.common.format)?;
    sweep_status(&report.rows)
}

fn oriented(loaded: &Loaded) -> Result<EstimateSample, CliError> {
    let d = &loaded.data;
    Ok(EstimateSample::new(&d.values, d.t, d.t.map(|_| 0.5), d.side)?)
}

#[derive(Debug, Serialize)]
pub struct GammaRow {
    pub estimator: EvIndexMethod,
    pub gamma_hat: f64,
    pub k: usize,
    pub notes: Vec<String>,
}

impl Tabular for GammaRow {
    fn header() -> Vec<&'static str> {
        vec!["estimator", "gamma_hat", "k", "notes"]
    }

    fn record(&self) -> Vec<String> {
        let name = match self.estimator {
            EvIndexMethod::Hill => "hill",
            EvIndexMethod::Pwm => "pwm",
            EvIndexMethod::Average => "average",
        };
        vec![
            name.into(),
            self.gamma_hat.to_string(),
            self.k.to_string(),
            self.notes.join("; "),
        ]
    }
}

pub fn gamma(args: &GammaArgs) -> Result<(), CliError> {
    let loaded = load(&args.input)?;
    let s = oriented(&loaded)?;
    let method = match args.estimator {
        EstimatorArg::Hill => EvIndexMethod::Hill,
        EstimatorArg::Pwm => EvIndexMethod::Pwm,
        EstimatorArg::Average => EvIndexMethod::Average,
    };
    let est = ev_index::estimate(&s, method, args.k)?;
    let mut notes = Vec::new();
    if method != EvIndexMethod::Pwm {
        notes.push("Hill needs a tail bounded away from zero after orientation; prefer PWM for signed data".into());
    }
    let report = Report {
        meta: meta("gamma", args, &args.common, Some(&loaded), notes)?,
        rows: vec![GammaRow {
            estimator: est.method,
            gamma_hat: est.gamma_hat,
            k: est.k,
            notes: est.notes,
        }],
    };
    report.emit(args.common.output.as_deref(), args.common.format)
}

#[derive(Debug, Serialize)]
pub struct SupportRow {
    pub c: f64,
    pub statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub decision: TestDecision,
}

impl Tabular for SupportRow {
    fn header() -> Vec<&'static str> {
        vec!["c", "statistic", "critical_value", "alpha", "decision"]
    }

    fn record(&self) -> Vec<String> {
        let d = match self.decision {
            TestDecision::Reject => "reject",
            TestDecision::FailToReject => "fail-to-reject",
        };
        vec![
            self.c.to_string(),
            self.statistic.to_string(),
            self.critical_value.to_string(),
            self.alpha.to_string(),
            d.into(),
        ]
    }
}

pub fn test_support(args: &SupportArgs) -> Result<(), CliError> {
    let loaded = load(&args.input)?;
    let s = oriented(&loaded)?;
    // The bound on the working scale and orientation.
    let c = loaded.standardization.map_or(args.c, |st| st.apply(args.c));
    let c = s.to_original(c);
    let rcfg = RatioConfig::new(0, args.q, 0.0)?;
    let table = match args.gamma {
        Some(g) => simulated_critical_values(&rcfg, g, args.draws, args.common.seed)?,
        None => {
            let scfg = SubsampleConfig::new(args.b_exponent, args.subsamples, args.common.seed)?;
            subsample_critical_values(&s, &rcfg, &scfg)?
        }
    };
    let t = support_test(&s, c, args.q, args.alpha, &table)?;
    let mut notes = table.meta().notes.clone();
    if loaded.data.side == Side::Left {
        notes.push("left tail: the null is that the support is bounded below by c".into());
    }
    let report = Report {
        meta: meta("test-support", args, &args.common, Some(&loaded), notes)?,
        rows: vec![SupportRow {
            c: args.c,
            statistic: t.statistic,
            critical_value: t.critical_value,
            alpha: t.alpha,
            decision: t.decision,
        }],
    };
    report.emit(args.common.output.as_deref(), args.common.format)
}

impl Tabular for ReportRow {
    fn header() -> Vec<&'static str> {
        vec![
            "method",
            "target_tau",
            "l_or_k",
            "coverage",
            "mean_length",
            "n_ok",
            "n_infeasible",
            "n_degenerate",
        ]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.target_tau.to_string(),
            self.l_or_k.to_string(),
            self.coverage.to_string(),
            fmt_opt(self.mean_length),
            self.n_ok.to_string(),
            self.n_infeasible.to_string(),
            self.n_degenerate.to_string(),
        ]
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let methods: Vec<SimMethod> = if args.methods.is_empty() {
        SimMethod::ALL.to_vec()
    } else {
        args.methods
            .iter()
            .map(|c| SimMethod::from_code(c).ok_or_else(|| CliError::Validation(format!("unknown method code `{c}`"))))
            .collect::<Result<_, _>>()?
    };
    let settings = MethodSettings {
        q: args.q,
        subsample: SubsampleConfig::new(args.b_exponent, args.subsamples, 0)?,
        n_bootstrap: args.bootstrap,
        limit_draws: args.draws,
    };
    let cfg = ExperimentConfig {
        dgp: DgpConfig {
            n: args.n,
            t: args.t,
            kappa: args.kappa,
            beta: args.beta,
            rho: args.rho,
            sigma_x: args.sigma_x,
            seed: args.common.seed,
            noiseless: args.noiseless,
        },
        n_reps: args.reps,
        alpha: args.alpha,
        settings,
    };
    let configured: Vec<ConfiguredMethod> = methods.iter().map(|m| m.with(settings)).collect();
    let refs: Vec<&dyn IntervalMethod> = configured.iter().map(|m| m as &dyn IntervalMethod).collect();
    let exp = run_coverage_experiment(&cfg, &refs, &args.quantile)?;
    let notes = vec![
        "coverage counts infeasible and degenerate replications as misses; mean length uses feasible ones only".into(),
        format!(
            "subsample size exponent m = {}, S = {}",
            args.b_exponent, args.subsamples
        ),
    ];
    let report = Report {
        meta: meta("simulate", args, &args.common, None, notes)?,
        rows: exp.rows,
    };
    report.emit(args.common.output.as_deref(), args.common.format)
}

#[derive(Debug, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub t: u32,
    pub value: f64,
    pub flag: RateFlag,
}

impl Tabular for RateRow {
    fn header() -> Vec<&'static str> {
        vec!["n", "t", "value", "flag"]
    }

    fn record(&self) -> Vec<String> {
        let f = match self.flag {
            RateFlag::Small => "small",
            RateFlag::Moderate => "moderate",
            RateFlag::Large => "large",
        };
        vec![self.n.to_string(), self.t.to_string(), self.value.to_string(), f.into()]
    }
}

pub fn diagnose(args: &DiagnoseArgs) -> Result<(), CliError> {
    let n = match (args.n, &args.input) {
        (Some(n), _) => n,
        (None, Some(path)) => read_estimates(path)?.values.len(),
        (None, None) => return Err(CliError::Validation("one of --n or --input is required".into())),
    };
    let noise = args.beta.map_or(NoiseTail::Normal, |beta| NoiseTail::Moments { beta });
    let regime = match args.regime {
        RegimeArg::Extreme => Regime::Extreme,
        RegimeArg::Intermediate => Regime::Intermediate {
            delta: args
                .delta
                .ok_or_else(|| CliError::Validation("--delta is required for the intermediate regime".into()))?,
        },
    };
    let d = rate_diagnostic(n, args.t, args.p, noise, args.gamma_prime, regime)?;
    let report = Report {
        meta: meta(
            "diagnose",
            args,
            &args.common,
            None,
            vec!["advisory: the rate conditions are asymptotic".into()],
        )?,
        rows: vec![RateRow {
            n,
            t: args.t,
            value: d.value,
            flag: d.flag,
        }],
    };
    report.emit(args.common.output.as_deref(), args.common.format)
}

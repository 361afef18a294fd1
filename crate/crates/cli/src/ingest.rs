//! CSV input and output of samples.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::Serialize;
use tailq::simulation::panel::{Panel, PanelUnit};

use crate::error::CliError;

/// Estimates-mode data in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub ids: Vec<String>,
    pub values: Vec<f64>,
    pub sigma2: Option<Vec<f64>>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        io_err(path, e)
    } else {
        CliError::Validation(format!("{}: {e}", path.display()))
    }
}

fn parse_cell(path: &Path, row: usize, col: &str, cell: &str) -> Result<f64, CliError> {
    let v: f64 = cell.trim().parse().map_err(|_| {
        CliError::Validation(format!(
            "{}: row {row}, column `{col}`: `{cell}` is not a number",
            path.display()
        ))
    })?;
    if !v.is_finite() {
        return Err(CliError::Validation(format!(
            "{}: row {row}, column `{col}`: value is not finite",
            path.display()
        )));
    }
    Ok(v)
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn column(headers: &csv::StringRecord, path: &Path, name: &str) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Validation(format!("{}: missing required column `{name}`", path.display())))
}

/// Reads `theta_hat` with optional `unit_id` and `sigma2` columns.
pub fn read_estimates(path: &Path) -> Result<Estimates, CliError> {
    let mut rdr = open(path)?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let value_col = column(&headers, path, "theta_hat")?;
    let id_col = headers.iter().position(|h| h == "unit_id");
    let s2_col = headers.iter().position(|h| h == "sigma2");
    let mut out = Estimates {
        ids: Vec::new(),
        values: Vec::new(),
        sigma2: s2_col.map(|_| Vec::new()),
    };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = i + 1;
        out.values.push(parse_cell(path, row, "theta_hat", &rec[value_col])?);
        out.ids
            .push(id_col.map_or_else(|| row.to_string(), |c| rec[c].to_string()));
        if let (Some(c), Some(s2)) = (s2_col, out.sigma2.as_mut()) {
            s2.push(parse_cell(path, row, "sigma2", &rec[c])?);
        }
    }
    if out.values.len() < 2 {
        return Err(CliError::Validation(format!(
            "{}: need at least 2 units, found {}",
            path.display(),
            out.values.len()
        )));
    }
    Ok(out)
}

#[derive(Serialize)]
struct EstimateRecord<'a> {
    unit_id: &'a str,
    theta_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma2: Option<f64>,
}

/// Writes estimates in the estimates-mode schema. Floats use the shortest
/// representation that reads back to the same value.
pub fn write_estimates(path: &Path, est: &Estimates) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for (i, (id, v)) in est.ids.iter().zip(&est.values).enumerate() {
        w.serialize(EstimateRecord {
            unit_id: id,
            theta_hat: *v,
            sigma2: est.sigma2.as_ref().map(|s| s[i]),
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Panel plus what was left out while reading it.
#[derive(Debug, Clone)]
pub struct PanelInput {
    pub panel: Panel,
    pub rows: usize,
    /// Units without an observation in every period.
    pub incomplete: Vec<String>,
}

/// Reads a long panel with columns `unit,time,y,z` and optional `x1..xk`.
pub fn read_panel(path: &Path) -> Result<PanelInput, CliError> {
    let mut rdr = open(path)?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let unit_col = column(&headers, path, "unit")?;
    let time_col = column(&headers, path, "time")?;
    let y_col = column(&headers, path, "y")?;
    let z_col = column(&headers, path, "z")?;
    let mut x_cols = Vec::new();
    for j in 1.. {
        match headers.iter().position(|h| h == format!("x{j}")) {
            Some(c) => x_cols.push(c),
            None => break,
        }
    }
    struct Obs {
        y: f64,
        z: f64,
        x: Vec<f64>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut units: HashMap<String, Vec<(String, Obs)>> = HashMap::new();
    let mut times = BTreeSet::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = i + 1;
        rows += 1;
        let unit = rec[unit_col].to_string();
        let time = rec[time_col].to_string();
        let obs = Obs {
            y: parse_cell(path, row, "y", &rec[y_col])?,
            z: parse_cell(path, row, "z", &rec[z_col])?,
            x: x_cols
                .iter()
                .enumerate()
                .map(|(j, &c)| parse_cell(path, row, &format!("x{}", j + 1), &rec[c]))
                .collect::<Result<_, _>>()?,
        };
        let entry = units.entry(unit.clone()).or_insert_with(|| {
            order.push(unit.clone());
            Vec::new()
        });
        if entry.iter().any(|(t, _)| *t == time) {
            return Err(CliError::Validation(format!(
                "{}: row {row}: unit `{unit}` has period `{time}` twice",
                path.display()
            )));
        }
        entry.push((time.clone(), obs));
        times.insert(time);
    }
    let mut panel_units = Vec::new();
    let mut incomplete = Vec::new();
    for id in order {
        let mut obs = units.remove(&id).unwrap_or_default();
        if obs.len() != times.len() {
            incomplete.push(id);
            continue;
        }
        obs.sort_by(|a, b| time_order(&a.0, &b.0));
        panel_units.push(PanelUnit {
            id,
            y: obs.iter().map(|(_, o)| o.y).collect(),
            z: obs.iter().map(|(_, o)| o.z).collect(),
            controls: (0..x_cols.len())
                .map(|j| obs.iter().map(|(_, o)| o.x[j]).collect())
                .collect(),
        });
    }
    if panel_units.len() < 2 {
        return Err(CliError::Validation(format!(
            "{}: need at least 2 complete units, found {}",
            path.display(),
            panel_units.len()
        )));
    }
    Ok(PanelInput {
        panel: Panel::new(panel_units)?,
        rows,
        incomplete,
    })
}

/// Numeric order when both labels are numbers, text order otherwise.
fn time_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

/// Location and scale removed by standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Standardization {
    pub mean: f64,
    /// Population standard deviation (divides by N).
    pub sd: f64,
}

impl Standardization {
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }

    pub fn invert(&self, x: f64) -> f64 {
        x * self.sd + self.mean
    }
}

pub fn standardize(values: &[f64]) -> Result<(Vec<f64>, Standardization), CliError> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var.is_nan() || var <= 0.0 {
        return Err(CliError::Validation(
            "cannot standardize a sample with zero variance".into(),
        ));
    }
    let st = Standardization { mean, sd: var.sqrt() };
    Ok((values.iter().map(|&v| st.apply(v)).collect(), st))
}

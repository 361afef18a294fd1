//! Report emission. JSON reports are `{meta, rows}`; CSV reports carry the
//! meta block as leading `#` comment lines.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::args::OutputFormat;
use crate::error::CliError;
use crate::ingest::Standardization;

#[derive(Debug, Clone, Serialize)]
pub struct InputSummary {
    pub path: String,
    pub mode: String,
    pub rows: usize,
    pub units: usize,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StandardizationMeta {
    #[serde(flatten)]
    pub params: Standardization,
    pub convention: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    /// Resolved options; can be passed back through `--config`.
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standardization: Option<StandardizationMeta>,
    pub notes: Vec<String>,
}

/// Row types that flatten to CSV.
pub trait Tabular {
    fn header() -> Vec<&'static str>;
    fn record(&self) -> Vec<String>;
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<R> {
    pub meta: Meta,
    pub rows: Vec<R>,
}

fn format_for(path: Option<&Path>, explicit: Option<OutputFormat>) -> OutputFormat {
    explicit.unwrap_or_else(|| match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => OutputFormat::Csv,
        _ => OutputFormat::Json,
    })
}

impl<R: Serialize + Tabular> Report<R> {
    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Validation(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut out = Vec::new();
        let meta = serde_json::to_string(&self.meta).map_err(|e| CliError::Validation(e.to_string()))?;
        writeln!(out, "# meta: {meta}")?;
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let wr = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(R::header()).map_err(wr)?;
            for r in &self.rows {
                w.write_record(r.record()).map_err(wr)?;
            }
            w.flush()?;
        }
        String::from_utf8(out).map_err(|e| CliError::Io(e.to_string()))
    }

    /// Writes to `path`, or JSON/CSV to stdout when no path is given.
    pub fn emit(&self, path: Option<&Path>, format: Option<OutputFormat>) -> Result<(), CliError> {
        let text = match format_for(path, format) {
            OutputFormat::Json => self.to_json()?,
            OutputFormat::Csv => self.to_csv()?,
        };
        match path {
            Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

//! The limit law of the feasible extreme-order ratio and empirical
//! critical-value tables.
//!
//! With `S_j = E_1 + ... + E_j` for iid standard exponentials, the limit of the
//! ratio statistic is
//!
//! ```text
//!     (S_{r+1}^{-g} - l^{-g}) / (S_{q+1}^{-g} - S_1^{-g})          g != 0
//!     (log S_{r+1} - log l) / (log S_{q+1} - log S_1)               g == 0
//! ```
//!
//! Draws are generated in fixed-size chunks, each chunk on its own stream, so
//! a table depends only on the spec, the number of draws and the seed.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};
use crate::rng::{substream, tag};
use crate::sample::check_probability;

/// Draws generated per random stream.
const CHUNK: usize = 4096;

/// Default table size for critical-value use.
pub const DEFAULT_DRAWS: usize = 100_000;

/// Parameters of the limit law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLawSpec {
    pub gamma: f64,
    pub r: usize,
    pub q: usize,
    pub l: f64,
}

impl LimitLawSpec {
    pub fn new(gamma: f64, r: usize, q: usize, l: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(TailError::invalid("gamma must be finite"));
        }
        if q == 0 {
            return Err(TailError::invalid("q must be at least 1"));
        }
        if !(l.is_finite() && l >= 0.0) {
            return Err(TailError::invalid(format!("l must be non-negative, got {l}")));
        }
        if l == 0.0 && gamma >= 0.0 {
            return Err(TailError::invalid(
                "l = 0 targets a finite endpoint and requires gamma < 0",
            ));
        }
        Ok(Self { gamma, r, q, l })
    }

    /// Number of exponential partial sums one draw needs.
    pub fn depth(&self) -> usize {
        self.r.max(self.q) + 1
    }

    /// Evaluates the ratio on partial sums `sums[j] = E_1 + ... + E_{j+1}`.
    pub fn ratio(&self, sums: &[f64]) -> f64 {
        let s1 = sums[0];
        let sr = sums[self.r];
        let sq = sums[self.q];
        if self.gamma == 0.0 {
            (sr.ln() - self.l.ln()) / (sq.ln() - s1.ln())
        } else {
            let g = -self.gamma;
            let centre = if self.l == 0.0 { 0.0 } else { self.l.powf(g) };
            (sr.powf(g) - centre) / (sq.powf(g) - s1.powf(g))
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R, sums: &mut [f64]) -> f64 {
        let mut acc = 0.0;
        for s in sums.iter_mut() {
            let e: f64 = rng.sample(Exp1);
            acc += e;
            *s = acc;
        }
        self.ratio(sums)
    }

    /// Unsorted draws in generation order.
    pub fn draws(&self, n_draws: usize, seed: u64) -> Result<Vec<f64>> {
        if n_draws == 0 {
            return Err(TailError::invalid("n_draws must be positive"));
        }
        let n_chunks = n_draws.div_ceil(CHUNK);
        let chunks: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(n_draws - c * CHUNK);
                let mut rng = substream(seed, tag::LIMIT_LAW, c as u64);
                let mut sums = vec![0.0; self.depth()];
                (0..len).map(|_| self.draw(&mut rng, &mut sums)).collect()
            })
            .collect();
        Ok(chunks.concat())
    }

    pub fn describe(&self) -> String {
        format!("gamma={} r={} q={} l={}", self.gamma, self.r, self.q, self.l)
    }
}

/// Where the draws of a [`CriticalValueTable`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableSource {
    Simulated,
    Subsampled,
    Explicit,
}

/// Generation settings recorded alongside a table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    /// `(r, q, l)` of the ratio whose distribution the table approximates.
    pub ratio: Option<(usize, usize, f64)>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub requested: usize,
    pub dropped: usize,
    pub unreliable: bool,
    pub notes: Vec<String>,
}

/// Sorted empirical distribution of a pivot with quantile lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueTable {
    draws: Vec<f64>,
    source: TableSource,
    meta: TableMeta,
}

impl CriticalValueTable {
    /// Sorts `draws`. Non-finite values are rejected.
    pub fn from_draws(mut draws: Vec<f64>, source: TableSource, meta: TableMeta) -> Result<Self> {
        if draws.is_empty() {
            return Err(TailError::invalid("critical-value table is empty"));
        }
        if draws.iter().any(|d| !d.is_finite()) {
            return Err(TailError::degenerate("critical-value table has non-finite draws"));
        }
        draws.sort_by(f64::total_cmp);
        Ok(Self { draws, source, meta })
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn source(&self) -> TableSource {
        self.source
    }

    pub fn meta(&self) -> &TableMeta {
        &self.meta
    }

    pub(crate) fn push_note(&mut self, note: String) {
        self.meta.notes.push(note);
    }

    /// Inverse-ECDF quantile: the draw at rank `ceil(alpha * m)`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        check_probability("alpha", alpha)?;
        let m = self.draws.len();
        let rank = ((alpha * m as f64) - 1e-9).ceil().max(1.0) as usize;
        Ok(self.draws[rank.min(m) - 1])
    }

    /// Fraction of draws `<= x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.draws.partition_point(|d| *d <= x) as f64 / self.draws.len() as f64
    }

    /// Writes the table as CSV: a `# key` comment line, then one draw per line.
    pub fn write_csv(&self, path: &Path, key: &str) -> std::io::Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(w, "# {key}")?;
        writeln!(w, "draw")?;
        for d in &self.draws {
            writeln!(w, "{d}")?;
        }
        w.flush()
    }

    /// Reads a table written by [`Self::write_csv`]; returns `None` on a key mismatch.
    pub fn read_csv(path: &Path, key: &str, source: TableSource, meta: TableMeta) -> Option<Self> {
        let file = fs::File::open(path).ok()?;
        let mut lines = BufReader::new(file).lines();
        if lines.next()?.ok()?.trim_start_matches("# ") != key {
            return None;
        }
        if lines.next()?.ok()? != "draw" {
            return None;
        }
        let draws: Option<Vec<f64>> = lines.map(|l| l.ok()?.trim().parse().ok()).collect();
        Self::from_draws(draws?, source, meta).ok()
    }
}

/// Cache key for a simulated table.
pub fn cache_key(spec: &LimitLawSpec, n_draws: usize, seed: u64) -> String {
    format!(
        "limit-law gamma={:e} r={} q={} l={:e} n={} seed={}",
        spec.gamma, spec.r, spec.q, spec.l, n_draws, seed
    )
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    // Short deterministic file name derived from the key.
    let h = key.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    });
    dir.join(format!("limit-{h:016x}.csv"))
}

/// Simulates a table of `n_draws` limit-law realizations.
pub fn simulate_table(spec: &LimitLawSpec, n_draws: usize, seed: u64) -> Result<CriticalValueTable> {
    let draws = spec.draws(n_draws, seed)?;
    CriticalValueTable::from_draws(draws, TableSource::Simulated, simulated_meta(spec, n_draws, seed))
}

fn simulated_meta(spec: &LimitLawSpec, n_draws: usize, seed: u64) -> TableMeta {
    TableMeta {
        ratio: Some((spec.r, spec.q, spec.l)),
        gamma: Some(spec.gamma),
        seed: Some(seed),
        requested: n_draws,
        ..TableMeta::default()
    }
}

/// Like [`simulate_table`], reusing a cached CSV in `cache_dir` when present.
pub fn simulate_table_cached(
    spec: &LimitLawSpec,
    n_draws: usize,
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<CriticalValueTable> {
    let Some(dir) = cache_dir else {
        return simulate_table(spec, n_draws, seed);
    };
    let key = cache_key(spec, n_draws, seed);
    let path = cache_path(dir, &key);
    let meta = simulated_meta(spec, n_draws, seed);
    if let Some(t) = CriticalValueTable::read_csv(&path, &key, TableSource::Simulated, meta) {
        return Ok(t);
    }
    let table = simulate_table(spec, n_draws, seed)?;
    // A failed cache write is not fatal; the table is still valid.
    let _ = fs::create_dir_all(dir).and_then(|_| table.write_csv(&path, &key));
    Ok(table)
}

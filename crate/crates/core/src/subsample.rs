//! Subsample evaluation shared by the extreme and intermediate procedures.
//!
//! Subsamples are sets of positions into the ascending sample. Because an
//! increasing affine map preserves the ordering, the same index sets give the
//! same subsamples after rescaling the data.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TailError};
use crate::limit_dist::{CriticalValueTable, TableMeta, TableSource};
use crate::rng::substream;

/// Tables with more than this share of dropped subsamples are flagged unreliable.
pub const UNRELIABLE_DROP_SHARE: f64 = 0.10;

/// Subsample size exponent and count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleConfig {
    /// `b = floor(N^m)`, `m` in (0, 1).
    pub m: f64,
    pub n_subsamples: usize,
    pub seed: u64,
}

impl Default for SubsampleConfig {
    fn default() -> Self {
        Self {
            m: 0.7,
            n_subsamples: 1000,
            seed: 0,
        }
    }
}

impl SubsampleConfig {
    pub fn new(m: f64, n_subsamples: usize, seed: u64) -> Result<Self> {
        let cfg = Self { m, n_subsamples, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(TailError::invalid(format!(
                "subsample exponent m must lie in (0, 1), got {}",
                self.m
            )));
        }
        if self.n_subsamples == 0 {
            return Err(TailError::invalid("number of subsamples must be positive"));
        }
        Ok(())
    }

    /// Subsample size for a sample of `n` units.
    pub fn subsample_size(&self, n: usize) -> usize {
        ((n as f64).powf(self.m) + 1e-9).floor() as usize
    }
}

/// Which subsamples to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum SubsampleScheme<'a> {
    /// `count` subsamples drawn uniformly without replacement, each on its own stream.
    Random { count: usize, seed: u64, tag: u64 },
    /// Caller-supplied index sets (0-based positions in the ascending sample).
    Explicit(&'a [Vec<usize>]),
}

/// Nearest-integer rounding with halves rounded up.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Evaluates `stat` on the top `depth` statistics (descending) of every subsample.
///
/// `stat` returns `None` for a degenerate subsample, which is dropped and
/// counted. Returns the statistics in subsample order and the drop count.
pub(crate) fn evaluate<F>(
    sorted: &[f64],
    b: usize,
    depth: usize,
    scheme: SubsampleScheme<'_>,
    stat: F,
) -> Result<(Vec<f64>, usize)>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let n = sorted.len();
    debug_assert!(depth <= b && b <= n);
    let eval_indices = |mut idx: Vec<usize>| -> Option<f64> {
        if depth < idx.len() {
            idx.select_nth_unstable_by(depth - 1, |a, b| b.cmp(a));
        }
        idx.truncate(depth);
        idx.sort_unstable_by(|a, b| b.cmp(a));
        let top: Vec<f64> = idx.iter().map(|&i| sorted[i]).collect();
        stat(&top)
    };
    let results: Vec<Option<f64>> = match scheme {
        SubsampleScheme::Random { count, seed, tag } => (0..count)
            .into_par_iter()
            .map(|s| {
                let mut rng = substream(seed, tag, s as u64);
                eval_indices(index::sample(&mut rng, n, b).into_vec())
            })
            .collect(),
        SubsampleScheme::Explicit(sets) => {
            for set in sets {
                if set.len() != b || set.iter().any(|&i| i >= n) {
                    return Err(TailError::invalid(format!(
                        "explicit subsample must hold {b} distinct positions below {n}"
                    )));
                }
            }
            sets.par_iter().map(|set| eval_indices(set.clone())).collect()
        }
    };
    let requested = results.len();
    let stats: Vec<f64> = results.into_iter().flatten().collect();
    let dropped = requested - stats.len();
    Ok((stats, dropped))
}

/// Packs subsample statistics into a table, applying the drop policy.
pub(crate) fn into_table(stats: Vec<f64>, dropped: usize, mut meta: TableMeta) -> Result<CriticalValueTable> {
    let requested = stats.len() + dropped;
    if stats.is_empty() {
        return Err(TailError::degenerate(format!(
            "all {requested} subsamples had tied order statistics"
        )));
    }
    meta.requested = requested;
    meta.dropped = dropped;
    if dropped > 0 {
        meta.notes
            .push(format!("{dropped} of {requested} subsamples dropped for ties"));
    }
    if dropped as f64 > UNRELIABLE_DROP_SHARE * requested as f64 {
        meta.unreliable = true;
        meta.notes
            .push("more than 10% of subsamples were degenerate; table unreliable".into());
    }
    CriticalValueTable::from_draws(stats, TableSource::Subsampled, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsample_size_floor() {
        let cfg = SubsampleConfig::default();
        assert_eq!(cfg.subsample_size(200), 40);
        assert_eq!(cfg.subsample_size(2000), 204);
        assert!(SubsampleConfig::new(1.0, 10, 0).is_err());
        assert!(SubsampleConfig::new(0.5, 0, 0).is_err());
    }

    #[test]
    fn explicit_sets_see_sorted_tops() {
        let sorted = [1.0, 2.0, 3.0, 4.0, 5.0];
        let sets = vec![vec![0, 3, 1], vec![4, 2, 0]];
        let (stats, dropped) = evaluate(&sorted, 3, 2, SubsampleScheme::Explicit(&sets), |top| {
            Some(top[0] * 10.0 + top[1])
        })
        .unwrap();
        assert_eq!(stats, vec![42.0, 53.0]);
        assert_eq!(dropped, 0);
    }

    #[test]
    fn drops_are_counted_and_flagged() {
        let (stats, dropped) = (vec![1.0; 8], 2);
        let t = into_table(stats, dropped, TableMeta::default()).unwrap();
        assert!(t.meta().unreliable);
        assert_eq!(t.meta().dropped, 2);
        assert!(into_table(vec![], 5, TableMeta::default()).is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(round_half_up(2.5), 3);
        assert_eq!(round_half_up(2.49), 2);
    }
}

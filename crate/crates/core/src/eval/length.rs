use super::asr::UtteranceScore;
use super::report::BucketRow;
use super::stats::{ls_slope, spearman};
use crate::error::{invalid, Result};

/// `k` contiguous frame-count ranges holding roughly equal numbers of
/// utterances; together they cover every length in `lengths`.
pub fn quantile_buckets(lengths: &[usize], k: usize) -> Result<Vec<(usize, usize)>> {
    if lengths.is_empty() || k == 0 {
        return Err(invalid("quantile buckets need lengths and k >= 1"));
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    let mut edges = vec![sorted[0]];
    for b in 1..k {
        let e = sorted[b * sorted.len() / k];
        if e > *edges.last().expect("nonempty") {
            edges.push(e);
        }
    }
    edges.push(sorted[sorted.len() - 1] + 1);
    Ok(edges.windows(2).map(|w| (w[0], w[1])).collect())
}

/// PER per `[lo, hi)` frame range. Empty buckets are dropped with a warning.
pub fn length_bucket_analysis(scores: &[UtteranceScore], buckets: &[(usize, usize)]) -> Result<Vec<BucketRow>> {
    for w in buckets.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(invalid("buckets must be ordered and non-overlapping"));
        }
    }
    let mut rows = Vec::new();
    for &(lo, hi) in buckets {
        if lo >= hi {
            return Err(invalid(format!("bucket [{lo}, {hi}) is empty")));
        }
        let inside: Vec<&UtteranceScore> = scores.iter().filter(|s| s.num_frames >= lo && s.num_frames < hi).collect();
        if inside.is_empty() {
            log::warn!("length bucket [{lo}, {hi}) has no utterances; omitted");
            continue;
        }
        let d: usize = inside.iter().map(|s| s.phoneme_edits.distance).sum();
        let n: usize = inside.iter().map(|s| s.phoneme_ref_len).sum();
        rows.push(BucketRow {
            lo,
            hi,
            n: inside.len(),
            per: d as f64 / n.max(1) as f64,
        });
    }
    if rows.is_empty() {
        return Err(invalid("no length bucket holds any utterance"));
    }
    Ok(rows)
}

/// Spearman ρ and least-squares slope of PER against bucket order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BucketTrend {
    pub spearman: f64,
    pub slope: f64,
}

pub fn bucket_trend(rows: &[BucketRow]) -> Result<BucketTrend> {
    if rows.len() < 2 {
        return Err(invalid("a trend needs at least two nonempty buckets"));
    }
    let x: Vec<f64> = (0..rows.len()).map(|i| i as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.per).collect();
    Ok(BucketTrend {
        spearman: spearman(&x, &y)?,
        slope: ls_slope(&x, &y)?,
    })
}

//! Evaluation: summaries, mean local ID deviation, histograms, k1 sweeps,
//! method comparisons, HTML reports and named experiment recipes.

mod compare;
pub mod recipes;
mod report;
mod sweep;

pub use compare::{compare, Comparison, ResidualSummary};
pub use report::{HtmlReport, Series};
pub use sweep::{k1_sweep, SweepResult, SweepRow};

use crate::error::{MessError, Result};
use crate::estimate::IdEstimate;
use crate::neighbors::NeighborIndex;

/// Type-7 quantile (linear interpolation between order statistics) of
/// sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
    pub std: f64,
    /// Non-finite values, excluded from everything above.
    pub degenerate: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        finite.sort_by(f64::total_cmp);
        let n = finite.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            finite.iter().sum::<f64>() / n as f64
        };
        Self {
            count: n,
            median: quantile_sorted(&finite, 0.5),
            q1: quantile_sorted(&finite, 0.25),
            q3: quantile_sorted(&finite, 0.75),
            mean,
            std: std_dev(&finite),
            degenerate: values.len() - n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDeviation {
    pub mean: f64,
    /// Points left out because their own estimate, or all of their
    /// neighbors' estimates, were degenerate.
    pub skipped: usize,
}

/// Mean over points of the (population) std of the estimates of their `k`
/// nearest neighbors divided by their own estimate. `index` must be built
/// over the points the estimates belong to, in the same order.
pub fn mean_local_deviation(
    values: &[f64],
    index: &NeighborIndex<'_>,
    k: usize,
) -> Result<LocalDeviation> {
    let points = index.points();
    if values.len() != points.len() {
        return Err(MessError::DimensionMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    if k == 0 {
        return Err(MessError::invalid("k1", "must be at least 1"));
    }
    let per_point = crate::par::try_map_indexed(points.len(), |i| {
        let own = values[i];
        if !(own.is_finite() && own > 0.0) {
            return Ok(None);
        }
        let nl = index.query(points.row(i), k, Some(i))?;
        let neigh: Vec<f64> = nl
            .ids
            .iter()
            .map(|&j| values[j])
            .filter(|v| v.is_finite())
            .collect();
        if neigh.is_empty() {
            return Ok(None);
        }
        Ok(Some(std_dev(&neigh) / own))
    })?;
    let used: Vec<f64> = per_point.iter().flatten().copied().collect();
    let mean = if used.is_empty() {
        f64::NAN
    } else {
        used.iter().sum::<f64>() / used.len() as f64
    };
    Ok(LocalDeviation {
        mean,
        skipped: per_point.len() - used.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdReport {
    pub estimates: Vec<IdEstimate>,
    pub summary: Summary,
    pub deviation: LocalDeviation,
}

impl IdReport {
    /// Summarizes `estimates`; the local deviation uses the `k` nearest
    /// neighbors in `index`, which must cover the estimated points.
    pub fn new(estimates: Vec<IdEstimate>, index: &NeighborIndex<'_>, k: usize) -> Result<Self> {
        let values = Self::values_of(&estimates);
        let summary = Summary::of(&values);
        let deviation = mean_local_deviation(&values, index, k)?;
        Ok(Self {
            estimates,
            summary,
            deviation,
        })
    }

    fn values_of(estimates: &[IdEstimate]) -> Vec<f64> {
        estimates.iter().map(|e| e.value).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        Self::values_of(&self.estimates)
    }

    pub fn mean_local_deviation(&self) -> f64 {
        self.deviation.mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Binning {
    Width(f64),
    Count(usize),
}

/// `(left edge, count)` per bin over the finite values; bins are half-open
/// except the last one. Identical values produce a single bin.
pub fn histogram(values: &[f64], binning: Binning) -> Result<Vec<(f64, usize)>> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Ok(Vec::new());
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (start, width, bins) = match binning {
        Binning::Width(w) => {
            if !(w > 0.0 && w.is_finite()) {
                return Err(MessError::invalid("bin width", "must be positive"));
            }
            let start = (lo / w).floor() * w;
            let bins = (((hi - start) / w).floor() as usize + 1).max(1);
            (start, w, bins)
        }
        Binning::Count(c) => {
            if c == 0 {
                return Err(MessError::invalid("bins", "must be at least 1"));
            }
            if hi == lo {
                (lo, 1.0, 1)
            } else {
                (lo, (hi - lo) / c as f64, c)
            }
        }
    };
    let mut counts = vec![0usize; bins];
    for v in finite {
        let b = (((v - start) / width).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (start + b as f64 * width, c))
        .collect())
}

/// Histogram rows as CSV with header `bin_left,count`.
pub fn histogram_csv(rows: &[(f64, usize)]) -> String {
    let mut out = String::from("bin_left,count\n");
    for (left, count) in rows {
        out.push_str(&format!("{left},{count}\n"));
    }
    out
}

use std::io::Write;
use std::time::Duration;

use crate::clock::Stopwatch;
use crate::error::{MessError, Result};
use crate::estimate::Estimator;
use crate::neighbors::NeighborIndex;
use crate::pipeline::{estimate_against, supersample, MessParams};
use crate::points::PointSet;

use super::IdReport;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k1: usize,
    pub estimator: Estimator,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean_local_deviation: f64,
    /// Supersampling time (shared by all estimators of a `k1`) plus this
    /// estimator's estimation time.
    pub runtime: Duration,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Full reports, parallel to `rows`.
    pub reports: Vec<IdReport>,
}

impl SweepResult {
    /// Row index with the smallest mean local deviation for `estimator`;
    /// ties go to the smaller `k1`.
    pub fn best(&self, estimator: Estimator) -> Option<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.estimator == estimator && r.mean_local_deviation.is_finite())
            .min_by(|(_, a), (_, b)| {
                a.mean_local_deviation
                    .total_cmp(&b.mean_local_deviation)
                    .then(a.k1.cmp(&b.k1))
            })
            .map(|(i, _)| i)
    }

    /// Columns `k1,estimator,median,q1,q3,mean_local_deviation,runtime_ms`.
    /// With `timings == false` the runtime column is written as 0 so that
    /// output depends only on the inputs.
    pub fn write_csv<W: Write>(&self, writer: W, timings: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "k1",
            "estimator",
            "median",
            "q1",
            "q3",
            "mean_local_deviation",
            "runtime_ms",
        ])?;
        for r in &self.rows {
            let ms = if timings { r.runtime.as_millis() } else { 0 };
            w.write_record([
                r.k1.to_string(),
                r.estimator.to_string(),
                r.median.to_string(),
                r.q1.to_string(),
                r.q3.to_string(),
                r.mean_local_deviation.to_string(),
                ms.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the pipeline once per `k1` in `grid`, estimating with every entry of
/// `estimators` against the same corrected set. `base.k2`/`base.k3` are
/// reset so they follow each `k1`. The deviation is computed on the MESS
/// estimates being swept.
pub fn k1_sweep(
    points: &PointSet,
    grid: &[usize],
    base: &MessParams,
    estimators: &[Estimator],
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(MessError::invalid("k1 grid", "must not be empty"));
    }
    if estimators.is_empty() {
        return Err(MessError::invalid("estimator", "at least one is required"));
    }
    let index = NeighborIndex::build(points)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &k1 in grid {
        let params = MessParams {
            k1,
            k2: None,
            k3: None,
            ..base.clone()
        };
        let samples = supersample(points, &params)?;
        let shared = samples.timings.total();
        for &estimator in estimators {
            let mut clock = Stopwatch::start();
            let report = estimate_against(points, &index, &samples, &params, estimator)?;
            let runtime = shared + clock.lap();
            rows.push(SweepRow {
                k1,
                estimator,
                median: report.summary.median,
                q1: report.summary.q1,
                q3: report.summary.q3,
                mean_local_deviation: report.deviation.mean,
                runtime,
            });
            reports.push(report);
        }
    }
    Ok(SweepResult { rows, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, DatasetSpec, Generator};

    fn disc() -> PointSet {
        generate(&DatasetSpec::new(Generator::LinearSubspace, 150, 2)).unwrap().points
    }

    #[test]
    fn single_row_grid() {
        let x = disc();
        let r = k1_sweep(&x, &[8], &MessParams::new(1, 4), &[Estimator::Hill]).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.best(Estimator::Hill), Some(0));
        assert_eq!(r.best(Estimator::Abid), None);
    }

    #[test]
    fn rows_per_grid_point_and_estimator() {
        let x = disc();
        let r = k1_sweep(&x, &[5, 10], &MessParams::new(1, 3), &[Estimator::Hill, Estimator::Abid])
            .unwrap();
        let keys: Vec<(usize, Estimator)> = r.rows.iter().map(|r| (r.k1, r.estimator)).collect();
        assert_eq!(
            keys,
            vec![
                (5, Estimator::Hill),
                (5, Estimator::Abid),
                (10, Estimator::Hill),
                (10, Estimator::Abid)
            ]
        );
        assert_eq!(r.reports[3].estimates[0].k, 30);
        let best = r.best(Estimator::Abid).unwrap();
        for row in r.rows.iter().filter(|row| row.estimator == Estimator::Abid) {
            assert!(r.rows[best].mean_local_deviation <= row.mean_local_deviation);
        }
    }

    #[test]
    fn csv_without_timings_is_reproducible() {
        let x = disc();
        let params = MessParams { seed: 5, ..MessParams::new(1, 3) };
        let run = || {
            let r = k1_sweep(&x, &[6, 9], &params, &[Estimator::Abid]).unwrap();
            let mut buf = Vec::new();
            r.write_csv(&mut buf, false).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert!(a.starts_with("k1,estimator,median,q1,q3,mean_local_deviation,runtime_ms\n6,abid,"));
        assert!(a.lines().skip(1).all(|l| l.ends_with(",0")));
    }

    #[test]
    fn empty_inputs_rejected() {
        let x = disc();
        assert!(k1_sweep(&x, &[], &MessParams::new(1, 3), &[Estimator::Abid]).is_err());
        assert!(k1_sweep(&x, &[5], &MessParams::new(1, 3), &[]).is_err());
    }
}

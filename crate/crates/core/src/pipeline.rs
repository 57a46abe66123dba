//! End-to-end run: local models, raw supersamples, correction, and ID
//! estimation of the original points against the corrected set.

use std::time::Duration;

use crate::clock::Stopwatch;
use crate::correct::{CorrectionRule, Corrector};
use crate::error::{MessError, Result};
use crate::estimate::{estimate_set, Estimator, Exclusion};
use crate::generate::{generate_all, GenerationRule};
use crate::harness::IdReport;
use crate::localmodel::{fit_local_models, Jitter};
use crate::neighbors::NeighborIndex;
use crate::points::PointSet;

/// Source of the per-point ID estimates used by δ-ball generation and
/// ID-powered weights.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialId {
    /// ABID on the original set with `k1` neighbors.
    #[default]
    Abid,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessParams {
    pub k1: usize,
    /// Defaults to `k1`.
    pub k2: Option<usize>,
    /// Defaults to `k1 * ext`.
    pub k3: Option<usize>,
    pub ext: usize,
    pub generation: GenerationRule,
    /// `None` skips correction, so estimation runs against the raw samples.
    pub correction: Option<CorrectionRule>,
    pub jitter: Jitter,
    pub estimator: Estimator,
    pub initial_id: InitialId,
    pub seed: u64,
    /// Keep a point's own supersamples out of its estimation neighborhood.
    pub exclude_own_samples: bool,
}

impl MessParams {
    pub fn new(k1: usize, ext: usize) -> Self {
        Self {
            k1,
            k2: None,
            k3: None,
            ext,
            generation: GenerationRule::default(),
            correction: Some(CorrectionRule::default()),
            jitter: Jitter::Auto,
            estimator: Estimator::default(),
            initial_id: InitialId::default(),
            seed: 0,
            exclude_own_samples: false,
        }
    }

    pub fn k2(&self) -> usize {
        self.k2.unwrap_or(self.k1)
    }

    pub fn k3(&self) -> usize {
        self.k3.unwrap_or(self.k1 * self.ext)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.ext == 0 {
            return Err(MessError::invalid("ext", "must be at least 1"));
        }
        if self.k1 == 0 {
            return Err(MessError::invalid("k1", "must be at least 1"));
        }
        if self.k1 >= n {
            return Err(MessError::InsufficientPoints {
                param: "k1",
                requested: self.k1,
                available: n.saturating_sub(1),
            });
        }
        if self.k2() == 0 {
            return Err(MessError::invalid("k2", "must be at least 1"));
        }
        if self.k2() > n {
            return Err(MessError::InsufficientPoints {
                param: "k2",
                requested: self.k2(),
                available: n,
            });
        }
        let available = if self.exclude_own_samples {
            (n - 1) * self.ext
        } else {
            n * self.ext
        };
        if self.k3() < 2 {
            return Err(MessError::invalid("k3", "estimators need at least 2 neighbors"));
        }
        if self.k3() > available {
            return Err(MessError::InsufficientPoints {
                param: "k3",
                requested: self.k3(),
                available,
            });
        }
        if let InitialId::Constant(v) = self.initial_id {
            if !(v.is_finite() && v > 0.0) {
                return Err(MessError::invalid("initial_id", "constant must be positive"));
            }
        }
        self.generation.validate()?;
        if let Some(c) = &self.correction {
            c.validate()?;
        }
        Ok(())
    }

    fn needs_initial_ids(&self) -> bool {
        self.generation.needs_initial_ids()
            || self.correction.as_ref().is_some_and(|c| c.needs_initial_ids())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub fit: Duration,
    pub generate: Duration,
    pub correct: Duration,
    pub estimate: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.fit + self.generate + self.correct + self.estimate
    }
}

/// Raw and corrected supersamples of one point set.
#[derive(Debug, Clone)]
pub struct Supersampled {
    pub ext: usize,
    pub raw: PointSet,
    /// Equal to `raw` when correction is disabled.
    pub corrected: PointSet,
    pub initial_ids: Option<Vec<f64>>,
    pub timings: StageTimings,
}

impl Supersampled {
    /// Parent (original point) of supersample row `j`.
    pub fn parent(&self, j: usize) -> usize {
        j / self.ext
    }
}

#[derive(Debug, Clone)]
pub struct MessRun {
    pub params: MessParams,
    pub samples: Supersampled,
    pub report: IdReport,
}

impl MessRun {
    pub fn raw(&self) -> &PointSet {
        &self.samples.raw
    }

    pub fn corrected(&self) -> &PointSet {
        &self.samples.corrected
    }

    pub fn timings(&self) -> StageTimings {
        self.samples.timings
    }
}

/// ABID at `k` on the original set, or the configured constant.
pub fn initial_id_estimates(points: &PointSet, k: usize, source: InitialId) -> Result<Vec<f64>> {
    match source {
        InitialId::Constant(v) => Ok(vec![v; points.len()]),
        InitialId::Abid => {
            let index = NeighborIndex::build(points)?;
            initial_ids_with(points, &index, k)
        }
    }
}

fn initial_ids_with(points: &PointSet, index: &NeighborIndex<'_>, k: usize) -> Result<Vec<f64>> {
    Ok(estimate_set(points, index, k.max(2), Estimator::Abid, Exclusion::SameIndex)?
        .into_iter()
        .map(|e| e.value)
        .collect())
}

/// Generation and correction stages only.
pub fn supersample(points: &PointSet, params: &MessParams) -> Result<Supersampled> {
    let index = NeighborIndex::build(points)?;
    supersample_with(points, &index, params)
}

fn supersample_with(
    points: &PointSet,
    index: &NeighborIndex<'_>,
    params: &MessParams,
) -> Result<Supersampled> {
    params.validate(points.len())?;
    let mut clock = Stopwatch::start();
    let mut timings = StageTimings::default();

    let models = fit_local_models(
        points,
        index,
        params.k1,
        params.jitter,
        !params.generation.needs_eigen(),
    )?;
    let initial_ids = if params.needs_initial_ids() {
        Some(match params.initial_id {
            InitialId::Constant(v) => vec![v; points.len()],
            InitialId::Abid => initial_ids_with(points, index, params.k1)?,
        })
    } else {
        None
    };
    timings.fit = clock.lap();

    let raw = generate_all(
        points,
        &models,
        &params.generation,
        params.ext,
        params.seed,
        initial_ids.as_deref(),
    )?;
    timings.generate = clock.lap();

    let corrected = match &params.correction {
        Some(rule) => {
            let mut corrector = Corrector::new(points, index, &models, *rule, params.k2())?;
            corrector.jitter = params.jitter;
            corrector.initial_ids = initial_ids.as_deref();
            corrector.correct_all(&raw)?
        }
        None => raw.clone(),
    };
    timings.correct = clock.lap();

    Ok(Supersampled {
        ext: params.ext,
        raw,
        corrected,
        initial_ids,
        timings,
    })
}

/// Estimates the original points against `samples.corrected` with `k3`
/// neighbors using `estimator`.
pub fn estimate_against(
    points: &PointSet,
    index: &NeighborIndex<'_>,
    samples: &Supersampled,
    params: &MessParams,
    estimator: Estimator,
) -> Result<IdReport> {
    let reference = NeighborIndex::build(&samples.corrected)?;
    let exclusion = if params.exclude_own_samples {
        Exclusion::OwnSamples { ext: samples.ext }
    } else {
        Exclusion::None
    };
    let estimates = estimate_set(points, &reference, params.k3(), estimator, exclusion)?;
    IdReport::new(estimates, index, params.k1)
}

/// The full pipeline. Deterministic in `(points, params)` regardless of the
/// number of worker threads.
pub fn run_mess(points: &PointSet, params: &MessParams) -> Result<MessRun> {
    let index = NeighborIndex::build(points)?;
    let mut samples = supersample_with(points, &index, params)?;
    let mut clock = Stopwatch::start();
    let report = estimate_against(points, &index, &samples, params, params.estimator)?;
    samples.timings.estimate = clock.lap();
    Ok(MessRun {
        params: params.clone(),
        samples,
        report,
    })
}

/// Estimates on the original set alone; local deviation uses the same `k`.
pub fn run_baseline(points: &PointSet, k: usize, estimator: Estimator) -> Result<IdReport> {
    let index = NeighborIndex::build(points)?;
    let estimates = estimate_set(points, &index, k, estimator, Exclusion::SameIndex)?;
    IdReport::new(estimates, &index, k)
}

/// Baseline with a separate neighborhood size for the local deviation.
pub fn run_baseline_with_deviation(
    points: &PointSet,
    k: usize,
    deviation_k: usize,
    estimator: Estimator,
) -> Result<IdReport> {
    let index = NeighborIndex::build(points)?;
    let estimates = estimate_set(points, &index, k, estimator, Exclusion::SameIndex)?;
    IdReport::new(estimates, &index, deviation_k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correct::{CandidateMap, Weighting};
    use crate::data::{generate, DatasetSpec, Generator};
    use crate::generate::DeltaBall;

    fn disc(n: usize, seed: u64) -> PointSet {
        generate(&DatasetSpec::new(Generator::LinearSubspace, n, seed)).unwrap().points
    }

    #[test]
    fn defaults_follow_k1_and_ext() {
        let p = MessParams::new(12, 25);
        assert_eq!((p.k2(), p.k3()), (12, 300));
        let p = MessParams { ext: 50, ..p };
        assert_eq!(p.k3(), 600);
    }

    #[test]
    fn errors_name_the_parameter() {
        let x = disc(30, 1);
        let check = |params: MessParams, name: &str| {
            let err = run_mess(&x, &params).unwrap_err();
            let text = err.to_string();
            assert!(text.contains(name), "{text}");
        };
        check(MessParams::new(30, 2), "k1");
        check(MessParams { k2: Some(31), ..MessParams::new(5, 2) }, "k2");
        check(MessParams { k3: Some(61), ..MessParams::new(5, 2) }, "k3");
        check(MessParams::new(5, 0), "ext");
        check(
            MessParams { k3: Some(60), exclude_own_samples: true, ..MessParams::new(5, 2) },
            "k3",
        );
    }

    #[test]
    fn sizes_and_provenance() {
        let x = disc(200, 2);
        let run = run_mess(&x, &MessParams::new(10, 7)).unwrap();
        assert_eq!(run.raw().len(), 1400);
        assert_eq!(run.corrected().len(), 1400);
        assert_eq!(run.samples.parent(13), 1);
        assert_eq!(run.report.estimates.len(), 200);
        assert!(run.report.estimates.iter().all(|e| e.k == 70));
    }

    #[test]
    fn disc_abid_median() {
        let x = disc(1000, 3);
        let run = run_mess(&x, &MessParams::new(10, 25)).unwrap();
        let m = run.report.summary.median;
        assert!((1.6..=2.2).contains(&m), "median {m}");
    }

    #[test]
    fn collapse_case_matches_baseline() {
        // every point duplicated: k1 = 1 sees only its twin, Σ = 0 plus jitter
        let base = disc(150, 4);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for r in base.rows() {
            rows.push(r.to_vec());
            rows.push(r.to_vec());
        }
        let x = PointSet::from_rows(&rows).unwrap();
        let params = MessParams { k3: Some(20), ..MessParams::new(1, 1) };
        let run = run_mess(&x, &params).unwrap();
        let max_shift = (0..x.len())
            .map(|i| crate::points::norm(&crate::points::sub(run.corrected().row(i), x.row(i))))
            .fold(0.0, f64::max);
        assert!(max_shift < 1e-3, "{max_shift}");
        // the supersample contains each original twice, once per twin; the
        // baseline on X with k = 20 sees the same geometry
        let base_report = run_baseline(&x, 20, Estimator::Abid).unwrap();
        let a = run.report.summary.median;
        let b = base_report.summary.median;
        assert!((a - b).abs() / b < 0.1, "{a} vs {b}");
    }

    #[test]
    fn bypass_estimates_against_raw() {
        let x = disc(150, 5);
        let params = MessParams { correction: None, ..MessParams::new(8, 4) };
        let run = run_mess(&x, &params).unwrap();
        assert_eq!(run.raw(), run.corrected());
        let reference = NeighborIndex::build(run.raw()).unwrap();
        let direct = estimate_set(&x, &reference, 32, Estimator::Abid, Exclusion::None).unwrap();
        assert_eq!(direct, run.report.estimates);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let x = disc(120, 6);
        let rule = GenerationRule::DeltaBall(DeltaBall::default());
        let params = MessParams {
            generation: rule,
            correction: Some(
                CorrectionRule::new(CandidateMap::Covariance, Weighting::MahalanobisAtNeighbor)
                    .with_power(2.0),
            ),
            seed: 99,
            ..MessParams::new(8, 5)
        };
        let a = run_mess(&x, &params).unwrap();
        let b = run_mess(&x, &params).unwrap();
        assert_eq!(a.corrected(), b.corrected());
        assert_eq!(a.report.estimates, b.report.estimates);
        let c = run_mess(&x, &MessParams { seed: 100, ..params }).unwrap();
        assert_ne!(a.raw(), c.raw());
    }

    #[test]
    fn initial_ids() {
        let sub = generate(&DatasetSpec::new(Generator::LinearSubspace, 2000, 7).dims(8, 4)).unwrap();
        let ids = initial_id_estimates(&sub.points, 40, InitialId::Abid).unwrap();
        let mut s = ids.clone();
        s.sort_by(f64::total_cmp);
        let med = s[s.len() / 2];
        assert!((med - 4.0).abs() < 0.6, "{med}");

        let line: Vec<[f64; 3]> = (0..20).map(|i| [i as f64, 2.0 * i as f64, -(i as f64)]).collect();
        let line = PointSet::from_rows(&line).unwrap();
        for v in initial_id_estimates(&line, 5, InitialId::Abid).unwrap() {
            assert!((v - 1.0).abs() < 1e-9);
        }
        assert_eq!(initial_id_estimates(&line, 5, InitialId::Constant(3.5)).unwrap(), vec![3.5; 20]);
    }

    #[test]
    fn exclusion_flag_changes_reference() {
        let x = disc(100, 8);
        let params = MessParams { exclude_own_samples: true, ..MessParams::new(6, 4) };
        let run = run_mess(&x, &params).unwrap();
        assert_eq!(run.report.estimates.len(), 100);
        let plain = run_mess(&x, &MessParams::new(6, 4)).unwrap();
        assert_ne!(run.report.estimates, plain.report.estimates);
    }
}

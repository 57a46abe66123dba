//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported operation has a plain Rust counterpart (`*_impl`) so the
//! logic can be tested natively; the exports only translate errors.

use wasm_bindgen::prelude::*;

use mess::correct::{CandidateMap, CorrectionRule, Weighting};
use mess::data::{generate, DatasetSpec, Generator, LabeledPointSet};
use mess::estimate::Estimator;
use mess::harness::{k1_sweep, Summary};
use mess::pipeline::{run_baseline, run_mess, supersample, MessParams};

fn dataset(name: &str, n: usize, noise: f64, seed: u64) -> mess::Result<LabeledPointSet> {
    let generator: Generator = name.parse()?;
    generate(&DatasetSpec::new(generator, n, seed).noise(noise, 0))
}

fn correction(name: &str) -> mess::Result<Option<CorrectionRule>> {
    let candidate = match name {
        "c1" => CandidateMap::Covariance,
        "c2" => CandidateMap::Cholesky,
        "none" => return Ok(None),
        other => {
            return Err(mess::MessError::InvalidParameter {
                param: "correction",
                reason: format!("expected c1, c2 or none, got `{other}`"),
            })
        }
    };
    Ok(Some(CorrectionRule::new(candidate, Weighting::MahalanobisAtSample)))
}

/// Flattened point sets of one supersampling run.
#[wasm_bindgen]
pub struct SupersampleView {
    dim: usize,
    original: Vec<f64>,
    raw: Vec<f64>,
    corrected: Vec<f64>,
    residual_raw: f64,
    residual_corrected: f64,
}

#[wasm_bindgen]
impl SupersampleView {
    #[wasm_bindgen(getter)]
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn original(&self) -> Vec<f64> {
        self.original.clone()
    }
    pub fn raw(&self) -> Vec<f64> {
        self.raw.clone()
    }
    pub fn corrected(&self) -> Vec<f64> {
        self.corrected.clone()
    }
    /// Mean distance of the raw samples to the true manifold (NaN if unknown).
    #[wasm_bindgen(getter, js_name = residualRaw)]
    pub fn residual_raw(&self) -> f64 {
        self.residual_raw
    }
    #[wasm_bindgen(getter, js_name = residualCorrected)]
    pub fn residual_corrected(&self) -> f64 {
        self.residual_corrected
    }
}

pub fn supersample_impl(
    name: &str,
    n: usize,
    noise: f64,
    k1: usize,
    ext: usize,
    corr: &str,
    seed: u64,
) -> mess::Result<SupersampleView> {
    let set = dataset(name, n, noise, seed)?;
    let params = MessParams {
        correction: correction(corr)?,
        seed,
        ..MessParams::new(k1, ext)
    };
    let s = supersample(&set.points, &params)?;
    let (residual_raw, residual_corrected) = match &set.residual {
        Some(o) => (o.mean_distance(&s.raw), o.mean_distance(&s.corrected)),
        None => (f64::NAN, f64::NAN),
    };
    Ok(SupersampleView {
        dim: set.points.dim(),
        original: set.points.as_flat().to_vec(),
        raw: s.raw.as_flat().to_vec(),
        corrected: s.corrected.as_flat().to_vec(),
        residual_raw,
        residual_corrected,
    })
}

#[wasm_bindgen]
pub fn supersample_dataset(
    name: &str,
    n: usize,
    noise: f64,
    k1: usize,
    ext: usize,
    corr: &str,
    seed: u32,
) -> Result<SupersampleView, JsError> {
    supersample_impl(name, n, noise, k1, ext, corr, seed.into()).map_err(|e| JsError::new(&e.to_string()))
}

/// Per-point estimates without and with supersampling.
#[wasm_bindgen]
pub struct EstimateView {
    dim: usize,
    points: Vec<f64>,
    without: Vec<f64>,
    with: Vec<f64>,
}

#[wasm_bindgen]
impl EstimateView {
    #[wasm_bindgen(getter)]
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }
    pub fn without(&self) -> Vec<f64> {
        self.without.clone()
    }
    pub fn with(&self) -> Vec<f64> {
        self.with.clone()
    }
    #[wasm_bindgen(getter, js_name = medianWithout)]
    pub fn median_without(&self) -> f64 {
        Summary::of(&self.without).median
    }
    #[wasm_bindgen(getter, js_name = medianWith)]
    pub fn median_with(&self) -> f64 {
        Summary::of(&self.with).median
    }
}

pub fn estimate_impl(
    name: &str,
    n: usize,
    noise: f64,
    k1: usize,
    ext: usize,
    estimator: &str,
    seed: u64,
) -> mess::Result<EstimateView> {
    let set = dataset(name, n, noise, seed)?;
    let estimator: Estimator = estimator.parse()?;
    let params = MessParams {
        estimator,
        seed,
        ..MessParams::new(k1, ext)
    };
    let without = run_baseline(&set.points, k1.max(2), estimator)?.values();
    let with = run_mess(&set.points, &params)?.report.values();
    Ok(EstimateView {
        dim: set.points.dim(),
        points: set.points.as_flat().to_vec(),
        without,
        with,
    })
}

#[wasm_bindgen]
pub fn estimate_ids(
    name: &str,
    n: usize,
    noise: f64,
    k1: usize,
    ext: usize,
    estimator: &str,
    seed: u32,
) -> Result<EstimateView, JsError> {
    estimate_impl(name, n, noise, k1, ext, estimator, seed.into()).map_err(|e| JsError::new(&e.to_string()))
}

/// One row per grid value, in grid order.
#[wasm_bindgen]
pub struct SweepView {
    k1: Vec<usize>,
    median: Vec<f64>,
    deviation: Vec<f64>,
    best: usize,
}

#[wasm_bindgen]
impl SweepView {
    pub fn k1(&self) -> Vec<usize> {
        self.k1.clone()
    }
    pub fn median(&self) -> Vec<f64> {
        self.median.clone()
    }
    pub fn deviation(&self) -> Vec<f64> {
        self.deviation.clone()
    }
    /// Index of the k1 with the lowest mean local deviation.
    #[wasm_bindgen(getter)]
    pub fn best(&self) -> usize {
        self.best
    }
}

pub fn sweep_impl(
    name: &str,
    n: usize,
    noise: f64,
    grid: &[usize],
    ext: usize,
    estimator: &str,
    seed: u64,
) -> mess::Result<SweepView> {
    let set = dataset(name, n, noise, seed)?;
    let estimator: Estimator = estimator.parse()?;
    let base = MessParams {
        seed,
        ..MessParams::new(grid.first().copied().unwrap_or(1), ext)
    };
    let result = k1_sweep(&set.points, grid, &base, &[estimator])?;
    let best = result.best(estimator).unwrap_or(0);
    Ok(SweepView {
        k1: result.rows.iter().map(|r| r.k1).collect(),
        median: result.rows.iter().map(|r| r.median).collect(),
        deviation: result.rows.iter().map(|r| r.mean_local_deviation).collect(),
        best,
    })
}

#[wasm_bindgen]
pub fn sweep_k1(
    name: &str,
    n: usize,
    noise: f64,
    grid: &[usize],
    ext: usize,
    estimator: &str,
    seed: u32,
) -> Result<SweepView, JsError> {
    sweep_impl(name, n, noise, grid, ext, estimator, seed.into()).map_err(|e| JsError::new(&e.to_string()))
}

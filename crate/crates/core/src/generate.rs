//! Raw supersample generation.
//!
//! All three rules sample in the (hypothesized) parameter space of the local
//! linear model and map the draw to feature space with a factor of the local
//! covariance:
//!
//! * [`GenerationRule::Covariance`]: `x + L z`, `z ~ N(0, I)`.
//! * [`GenerationRule::CholeskyBall`]: `x + L u`, `u` uniform in the unit
//!   d-ball, i.e. uniform within one standard deviation (Mahalanobis) of `x`.
//! * [`GenerationRule::DeltaBall`]: direction from a unit-ball draw scaled by
//!   `Λ^{1/2}` and normalized, radius following the expansion law of a
//!   δ'-ball, mapped back with `V Λ^{1/2}`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{MessError, Result};
use crate::localmodel::LocalModel;
use crate::par;
use crate::points::PointSet;
use crate::rng::{self, Purpose};

pub fn sample_std_normal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform direction on the unit sphere in `R^d` (normalized Gaussian).
pub fn sample_unit_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v = sample_std_normal(d, rng);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

/// Uniform point in the unit d-ball: a sphere point scaled by `U^{1/d}`.
pub fn sample_unit_ball<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut v = sample_unit_sphere(d, rng);
    let r = rng.random::<f64>().powf(1.0 / d as f64);
    v.iter_mut().for_each(|x| *x *= r);
    v
}

/// How the δ-ball radius is drawn from `r ~ U[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusLaw {
    /// `r^(1/δ')`: the volume of the drawn ball grows like `radius^δ'`.
    #[default]
    InverseDelta,
    /// `r^δ'`, kept for comparison with the literal printed rule.
    LiteralPower,
}

/// Where δ' comes from for [`GenerationRule::DeltaBall`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSource {
    Fixed(f64),
    /// Per-point initial ID estimates supplied by the pipeline.
    PerPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaBall {
    pub delta: DeltaSource,
    /// Radius in standard deviations.
    pub radius_scale: f64,
    pub radius_law: RadiusLaw,
}

impl Default for DeltaBall {
    fn default() -> Self {
        Self {
            delta: DeltaSource::PerPoint,
            radius_scale: 1.0,
            radius_law: RadiusLaw::InverseDelta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GenerationRule {
    #[default]
    Covariance,
    CholeskyBall,
    DeltaBall(DeltaBall),
}

impl GenerationRule {
    pub fn validate(&self) -> Result<()> {
        if let GenerationRule::DeltaBall(cfg) = self {
            if let DeltaSource::Fixed(v) = cfg.delta {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(MessError::invalid("delta_prime", "must be positive"));
                }
            }
            if !(cfg.radius_scale > 0.0 && cfg.radius_scale.is_finite()) {
                return Err(MessError::invalid("radius_scale", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn needs_eigen(&self) -> bool {
        matches!(self, GenerationRule::DeltaBall(_))
    }

    pub fn needs_initial_ids(&self) -> bool {
        matches!(
            self,
            GenerationRule::DeltaBall(DeltaBall {
                delta: DeltaSource::PerPoint,
                ..
            })
        )
    }
}

/// One generated sample before correction.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSupersample {
    pub position: Vec<f64>,
    pub parent: usize,
    pub sample: usize,
}

fn offset_by(anchor: &[f64], offset: &[f64]) -> Vec<f64> {
    anchor.iter().zip(offset).map(|(a, o)| a + o).collect()
}

/// `anchor + L z`, `z ~ N(0, I)`.
pub fn draw_covariance<R: Rng + ?Sized>(anchor: &[f64], model: &LocalModel, rng: &mut R) -> Vec<f64> {
    let z = sample_std_normal(anchor.len(), rng);
    offset_by(anchor, &model.chol.mul_vec(&z))
}

/// `anchor + L u`, `u` uniform in the unit ball.
pub fn draw_cholesky_ball<R: Rng + ?Sized>(
    anchor: &[f64],
    model: &LocalModel,
    rng: &mut R,
) -> Vec<f64> {
    let u = sample_unit_ball(anchor.len(), rng);
    offset_by(anchor, &model.chol.mul_vec(&u))
}

/// δ-ball draw around `anchor`; see the module docs.
pub fn draw_delta_ball<R: Rng + ?Sized>(
    anchor: &[f64],
    model: &LocalModel,
    delta_prime: f64,
    radius_scale: f64,
    law: RadiusLaw,
    rng: &mut R,
) -> Vec<f64> {
    let d = anchor.len();
    let eig = model.eigen();
    // eigenvalues of the unregularized covariance, clamped at zero
    let sqrt_lambda: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| (l - model.jitter).max(0.0).sqrt())
        .collect();
    let u = sample_unit_ball(d, rng);
    let mut dir: Vec<f64> = u.iter().zip(&sqrt_lambda).map(|(a, s)| a * s).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r: f64 = rng.random();
    if norm == 0.0 {
        return anchor.to_vec();
    }
    let radius = match law {
        RadiusLaw::InverseDelta => r.powf(1.0 / delta_prime),
        RadiusLaw::LiteralPower => r.powf(delta_prime),
    } * radius_scale;
    for (x, s) in dir.iter_mut().zip(&sqrt_lambda) {
        *x = *x / norm * radius * s;
    }
    offset_by(anchor, &eig.to_ambient(&dir))
}

fn collect<R: Rng + ?Sized>(
    parent: usize,
    count: usize,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> Vec<f64>,
) -> Vec<RawSupersample> {
    (0..count)
        .map(|sample| RawSupersample {
            position: draw(rng),
            parent,
            sample,
        })
        .collect()
}

pub fn gen_covariance<R: Rng + ?Sized>(
    anchor: &[f64],
    model: &LocalModel,
    count: usize,
    rng: &mut R,
) -> Vec<RawSupersample> {
    collect(model.anchor, count, rng, |r| draw_covariance(anchor, model, r))
}

pub fn gen_cholesky_ball<R: Rng + ?Sized>(
    anchor: &[f64],
    model: &LocalModel,
    count: usize,
    rng: &mut R,
) -> Vec<RawSupersample> {
    collect(model.anchor, count, rng, |r| draw_cholesky_ball(anchor, model, r))
}

pub fn gen_delta_ball<R: Rng + ?Sized>(
    anchor: &[f64],
    model: &LocalModel,
    delta_prime: f64,
    radius_scale: f64,
    law: RadiusLaw,
    count: usize,
    rng: &mut R,
) -> Vec<RawSupersample> {
    collect(model.anchor, count, rng, |r| {
        draw_delta_ball(anchor, model, delta_prime, radius_scale, law, r)
    })
}

/// `ext` raw samples per point, row `i * ext + s` being sample `s` of parent
/// `i`. Each sample has its own random stream keyed by `(seed, i, s)`.
pub fn generate_all(
    points: &PointSet,
    models: &[LocalModel],
    rule: &GenerationRule,
    ext: usize,
    seed: u64,
    initial_ids: Option<&[f64]>,
) -> Result<PointSet> {
    rule.validate()?;
    if ext == 0 {
        return Err(MessError::invalid("ext", "must be at least 1"));
    }
    if models.len() != points.len() {
        return Err(MessError::DimensionMismatch {
            expected: points.len(),
            got: models.len(),
        });
    }
    if rule.needs_initial_ids() && initial_ids.map(|v| v.len()) != Some(points.len()) {
        return Err(MessError::invalid(
            "initial_ids",
            "δ-ball generation needs one initial ID estimate per point",
        ));
    }
    let d = points.dim();
    let rows = par::map_indexed(points.len() * ext, |idx| {
        let (parent, sample) = (idx / ext, idx % ext);
        let anchor = points.row(parent);
        let model = &models[parent];
        let mut rng = rng::stream(seed, Purpose::Generation, parent as u64, sample as u64);
        match rule {
            GenerationRule::Covariance => draw_covariance(anchor, model, &mut rng),
            GenerationRule::CholeskyBall => draw_cholesky_ball(anchor, model, &mut rng),
            GenerationRule::DeltaBall(cfg) => {
                let delta = match cfg.delta {
                    DeltaSource::Fixed(v) => v,
                    // degenerate estimates fall back to the ambient dimension
                    DeltaSource::PerPoint => {
                        let v = initial_ids.map_or(d as f64, |ids| ids[parent]);
                        if v.is_finite() && v > 0.0 {
                            v
                        } else {
                            d as f64
                        }
                    }
                };
                draw_delta_ball(anchor, model, delta, cfg.radius_scale, cfg.radius_law, &mut rng)
            }
        }
    });
    let mut flat = Vec::with_capacity(points.len() * ext * d);
    for r in rows {
        flat.extend_from_slice(&r);
    }
    PointSet::from_flat(d, flat)
}

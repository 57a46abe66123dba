//! Synthetic manifolds with known intrinsic dimension, CSV I/O and the
//! SMOTE baseline.
//!
//! The generators are stand-ins for the usual benchmark beds: a swiss roll,
//! a Möbius-type strip (2-d in 3-d), a nonlinear 4-d manifold in 8-d, a
//! hypercube embedded one dimension up, and linear balls/spheres for
//! calibration. All of them are deterministic functions of the seed.

mod csv_io;
mod smote;

pub use csv_io::{
    load_csv, read_csv, save_estimates_csv, save_points_csv, write_estimates_csv, write_points_csv,
};
pub use smote::{smote_point, smote_supersample};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{MessError, Result};
use crate::generate::{sample_unit_ball, sample_unit_sphere};
use crate::points::PointSet;
use crate::rng::{self, Purpose};

/// Swiss-roll angle range and height.
pub const SWISS_T_MIN: f64 = 1.5 * PI;
pub const SWISS_T_MAX: f64 = 4.5 * PI;
pub const SWISS_HEIGHT: f64 = 21.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    SwissRoll,
    Hypercube,
    /// Uniform δ-ball in a random δ-dim linear subspace.
    LinearSubspace,
    /// Uniform δ-sphere (surface of the (δ+1)-ball) in a random subspace.
    Sphere,
    Moebius,
    NonlinearM4,
}

impl Generator {
    pub const ALL: [Generator; 6] = [
        Generator::SwissRoll,
        Generator::Hypercube,
        Generator::LinearSubspace,
        Generator::Sphere,
        Generator::Moebius,
        Generator::NonlinearM4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::SwissRoll => "swiss-roll",
            Generator::Hypercube => "hypercube",
            Generator::LinearSubspace => "ball",
            Generator::Sphere => "sphere",
            Generator::Moebius => "moebius",
            Generator::NonlinearM4 => "m4",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = MessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "swiss-roll" | "swissroll" => Ok(Generator::SwissRoll),
            "hypercube" | "cube" | "m10c" => Ok(Generator::Hypercube),
            "ball" | "linear-subspace" | "subspace" | "disc" => Ok(Generator::LinearSubspace),
            "sphere" => Ok(Generator::Sphere),
            "moebius" | "mobius" | "m11" => Ok(Generator::Moebius),
            "m4" | "nonlinear-m4" => Ok(Generator::NonlinearM4),
            other => Err(MessError::invalid("dataset", format!("unknown dataset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub generator: Generator,
    /// Points on the manifold (uniform noise points come on top).
    pub n: usize,
    pub d: usize,
    pub delta: usize,
    /// Isotropic Gaussian feature-space noise.
    pub noise_sigma: f64,
    /// Extra points uniform in the bounding box, appended after the `n`
    /// manifold points.
    pub uniform_noise: usize,
    pub seed: u64,
}

impl DatasetSpec {
    /// Spec with the generator's natural dimensions and no noise.
    pub fn new(generator: Generator, n: usize, seed: u64) -> Self {
        let (d, delta) = match generator {
            Generator::SwissRoll | Generator::Moebius => (3, 2),
            Generator::Hypercube => (25, 24),
            Generator::LinearSubspace => (2, 2),
            Generator::Sphere => (3, 2),
            Generator::NonlinearM4 => (8, 4),
        };
        Self {
            generator,
            n,
            d,
            delta,
            noise_sigma: 0.0,
            uniform_noise: 0,
            seed,
        }
    }

    pub fn dims(mut self, d: usize, delta: usize) -> Self {
        self.d = d;
        self.delta = delta;
        self
    }

    pub fn noise(mut self, sigma: f64, uniform: usize) -> Self {
        self.noise_sigma = sigma;
        self.uniform_noise = uniform;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(MessError::invalid("n", "must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(MessError::invalid("noise", "sigma must be >= 0"));
        }
        if self.delta == 0 || self.delta > self.d {
            return Err(MessError::invalid("delta", "need 1 <= delta <= d"));
        }
        match self.generator {
            Generator::SwissRoll | Generator::Moebius if (self.d, self.delta) != (3, 2) => Err(
                MessError::invalid("d", format!("{} requires d = 3, delta = 2", self.generator)),
            ),
            Generator::NonlinearM4 if (self.d, self.delta) != (8, 4) => Err(MessError::invalid(
                "d",
                "m4 requires d = 8, delta = 4",
            )),
            Generator::Sphere if self.delta + 1 > self.d => {
                Err(MessError::invalid("delta", "sphere needs delta + 1 <= d"))
            }
            _ => Ok(()),
        }
    }
}

/// Distance from a point to the noiseless manifold of a generator.
#[derive(Debug, Clone, PartialEq)]
pub enum ResidualOracle {
    SwissRoll,
    Moebius,
    /// Unit sphere of dimension `delta` living in the first `delta + 1`
    /// coordinates after undoing `rotation`.
    Sphere { delta: usize, rotation: Rotation },
    /// Linear subspace spanned by the first `delta` rotated axes.
    Subspace { delta: usize, rotation: Rotation },
}

impl ResidualOracle {
    pub fn distance(&self, p: &[f64]) -> f64 {
        match self {
            ResidualOracle::SwissRoll => swiss_roll_residual(p),
            ResidualOracle::Moebius => moebius_residual(p),
            ResidualOracle::Sphere { delta, rotation } => {
                let q = rotation.inverse_apply(p);
                let (inside, outside) = q.split_at(delta + 1);
                let r = inside.iter().map(|x| x * x).sum::<f64>().sqrt();
                let o: f64 = outside.iter().map(|x| x * x).sum();
                ((r - 1.0).powi(2) + o).sqrt()
            }
            ResidualOracle::Subspace { delta, rotation } => {
                let q = rotation.inverse_apply(p);
                q[*delta..].iter().map(|x| x * x).sum::<f64>().sqrt()
            }
        }
    }

    pub fn mean_distance(&self, points: &PointSet) -> f64 {
        let n = points.len().max(1) as f64;
        crate::par::map_indexed(points.len(), |i| self.distance(points.row(i)))
            .into_iter()
            .sum::<f64>()
            / n
    }
}

/// Orthogonal `d x d` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    dim: usize,
    q: Vec<f64>,
}

impl Rotation {
    pub fn identity(dim: usize) -> Self {
        let mut q = vec![0.0; dim * dim];
        for i in 0..dim {
            q[i * dim + i] = 1.0;
        }
        Self { dim, q }
    }

    /// Haar-ish random rotation: Gram–Schmidt on a Gaussian matrix.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let mut cols: Vec<Vec<f64>> = (0..dim)
                .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            let mut ok = true;
            for j in 0..dim {
                for i in 0..j {
                    let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                    let ci = cols[i].clone();
                    for (x, y) in cols[j].iter_mut().zip(&ci) {
                        *x -= dot * y;
                    }
                }
                let n = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
                if n < 1e-8 {
                    ok = false;
                    break;
                }
                cols[j].iter_mut().for_each(|x| *x /= n);
            }
            if ok {
                let mut q = vec![0.0; dim * dim];
                for (j, c) in cols.iter().enumerate() {
                    for (i, v) in c.iter().enumerate() {
                        q[i * dim + j] = *v;
                    }
                }
                return Self { dim, q };
            }
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| self.q[i * d..(i + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn inverse_apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.q[i * d + j] * v[i];
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LabeledPointSet {
    pub points: PointSet,
    /// Ground-truth intrinsic dimension.
    pub delta: f64,
    pub residual: Option<ResidualOracle>,
    /// Number of leading rows that were sampled from the manifold; the rest
    /// are uniform noise points.
    pub manifold_points: usize,
}

pub fn swiss_roll_point(t: f64, y: f64) -> [f64; 3] {
    [t * t.cos(), y, t * t.sin()]
}

pub fn moebius_point(u: f64, v: f64) -> [f64; 3] {
    let (c, s) = ((1.5 * u).cos(), (1.5 * u).sin());
    let r = 1.0 + 0.5 * v * c;
    [r * u.cos(), r * u.sin(), 0.5 * v * s]
}

/// The 4-d manifold in 8 dimensions, before rotation.
pub fn m4_point(u: [f64; 4]) -> [f64; 8] {
    [
        u[0],
        u[1],
        u[2],
        u[3],
        (2.0 * PI * u[0]).sin(),
        (2.0 * PI * u[1]).cos(),
        u[2] * u[2],
        u[0] * u[3],
    ]
}

/// Minimizes a continuous function on `[lo, hi]` by a grid scan followed by
/// golden-section refinement around the best grid point.
fn minimize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> f64 {
    let step = (hi - lo) / grid as f64;
    let (mut best_i, mut best) = (0usize, f64::INFINITY);
    for i in 0..=grid {
        let v = f(lo + i as f64 * step);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut a = (lo + (best_i as f64 - 1.0) * step).max(lo);
    let mut b = (lo + (best_i as f64 + 1.0) * step).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    best.min(fc).min(fd)
}

fn swiss_roll_residual(p: &[f64]) -> f64 {
    let dy = if p[1] < 0.0 {
        -p[1]
    } else if p[1] > SWISS_HEIGHT {
        p[1] - SWISS_HEIGHT
    } else {
        0.0
    };
    let f = |t: f64| (p[0] - t * t.cos()).powi(2) + (p[2] - t * t.sin()).powi(2);
    (minimize_1d(f, SWISS_T_MIN, SWISS_T_MAX, 4096) + dy * dy).sqrt()
}

fn moebius_residual(p: &[f64]) -> f64 {
    let f = |u: f64| {
        let c = [u.cos(), u.sin(), 0.0];
        let w = [
            0.5 * (1.5 * u).cos() * u.cos(),
            0.5 * (1.5 * u).cos() * u.sin(),
            0.5 * (1.5 * u).sin(),
        ];
        let r = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
        // |w|^2 = 1/4
        let v = ((r[0] * w[0] + r[1] * w[1] + r[2] * w[2]) * 4.0).clamp(-1.0, 1.0);
        (0..3).map(|i| (r[i] - v * w[i]).powi(2)).sum::<f64>()
    };
    minimize_1d(f, 0.0, 2.0 * PI, 4096).sqrt()
}

/// Draws the dataset described by `spec`.
pub fn generate(spec: &DatasetSpec) -> Result<LabeledPointSet> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, Purpose::Dataset, 0, 0);
    let (d, delta) = (spec.d, spec.delta);
    let rotation = if matches!(spec.generator, Generator::SwissRoll | Generator::Moebius) {
        None
    } else {
        Some(Rotation::random(d, &mut rng::stream(spec.seed, Purpose::Rotation, 0, 0)))
    };
    let embed = |mut v: Vec<f64>| -> Vec<f64> {
        v.resize(d, 0.0);
        match &rotation {
            Some(r) => r.apply(&v),
            None => v,
        }
    };
    let mut clean = Vec::with_capacity(spec.n * d);
    for _ in 0..spec.n {
        let row: Vec<f64> = match spec.generator {
            Generator::SwissRoll => {
                let t = rng.random_range(SWISS_T_MIN..SWISS_T_MAX);
                let y = rng.random_range(0.0..SWISS_HEIGHT);
                swiss_roll_point(t, y).to_vec()
            }
            Generator::Moebius => {
                let u = rng.random_range(0.0..2.0 * PI);
                let v = rng.random_range(-1.0..1.0);
                moebius_point(u, v).to_vec()
            }
            Generator::Hypercube => embed((0..delta).map(|_| rng.random::<f64>()).collect()),
            Generator::LinearSubspace => embed(sample_unit_ball(delta, &mut rng)),
            Generator::Sphere => embed(sample_unit_sphere(delta + 1, &mut rng)),
            Generator::NonlinearM4 => {
                let u: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
                embed(m4_point(u).to_vec())
            }
        };
        clean.extend_from_slice(&row);
    }
    let clean = PointSet::from_flat(d, clean)?;
    let (lo, hi) = clean.bounds();

    let mut noise_rng = rng::stream(spec.seed, Purpose::Noise, 0, 0);
    let mut data = clean.into_flat();
    if spec.noise_sigma > 0.0 {
        for v in data.iter_mut() {
            *v += spec.noise_sigma * noise_rng.sample::<f64, _>(StandardNormal);
        }
    }
    for _ in 0..spec.uniform_noise {
        for j in 0..d {
            let v = if hi[j] > lo[j] {
                noise_rng.random_range(lo[j]..hi[j])
            } else {
                lo[j]
            };
            data.push(v);
        }
    }

    let residual = match spec.generator {
        Generator::SwissRoll => Some(ResidualOracle::SwissRoll),
        Generator::Moebius => Some(ResidualOracle::Moebius),
        Generator::Sphere => Some(ResidualOracle::Sphere {
            delta,
            rotation: rotation.clone().expect("rotated"),
        }),
        Generator::LinearSubspace | Generator::Hypercube => Some(ResidualOracle::Subspace {
            delta,
            rotation: rotation.clone().expect("rotated"),
        }),
        Generator::NonlinearM4 => None,
    };
    Ok(LabeledPointSet {
        points: PointSet::from_flat(d, data)?,
        delta: delta as f64,
        residual,
        manifold_points: spec.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localmodel::{fit_local_models, Jitter};
    use crate::neighbors::NeighborIndex;

    #[test]
    fn noiseless_residuals_vanish() {
        for g in [Generator::SwissRoll, Generator::Moebius, Generator::Sphere, Generator::LinearSubspace] {
            let spec = DatasetSpec::new(g, 500, 3);
            let spec = if g == Generator::LinearSubspace { spec.dims(6, 3) } else { spec };
            let set = generate(&spec).unwrap();
            let oracle = set.residual.as_ref().unwrap();
            assert_eq!(set.points.len(), 500);
            for r in set.points.rows() {
                assert!(oracle.distance(r) < 1e-6, "{g}: {}", oracle.distance(r));
            }
        }
    }

    #[test]
    fn swiss_roll_residual_of_known_offsets() {
        // along the outward normal of the spiral at t, within one winding gap
        let t = 3.0 * PI;
        let base = swiss_roll_point(t, 5.0);
        let tangent = [t.cos() - t * t.sin(), 0.0, t.sin() + t * t.cos()];
        let tn = (tangent[0].powi(2) + tangent[2].powi(2)).sqrt();
        let normal = [tangent[2] / tn, 0.0, -tangent[0] / tn];
        let p = [base[0] + 0.3 * normal[0], 5.0, base[2] + 0.3 * normal[2]];
        assert!((ResidualOracle::SwissRoll.distance(&p) - 0.3).abs() < 1e-9);
        let above = [base[0], SWISS_HEIGHT + 2.0, base[2]];
        assert!((ResidualOracle::SwissRoll.distance(&above) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn swiss_roll_noise_residual_close_to_half_normal() {
        // σ is small against the curvature radius, so only the normal
        // component survives: residual ≈ |N(0, σ²)|
        let sigma = 0.15;
        let set = generate(&DatasetSpec::new(Generator::SwissRoll, 4000, 9).noise(sigma, 0)).unwrap();
        let oracle = set.residual.unwrap();
        let mean = oracle.mean_distance(&set.points);
        let half_normal = sigma * (2.0 / PI).sqrt();
        assert!((mean - half_normal).abs() / half_normal < 0.1, "{mean} vs {half_normal}");
    }

    #[test]
    fn uniform_noise_and_counts() {
        let set = generate(&DatasetSpec::new(Generator::SwissRoll, 300, 1).noise(0.0, 15)).unwrap();
        assert_eq!(set.points.len(), 315);
        assert_eq!(set.manifold_points, 300);
        let set = generate(&DatasetSpec::new(Generator::SwissRoll, 300, 1)).unwrap();
        assert_eq!(set.points.len(), 300);
    }

    #[test]
    fn deterministic_under_seed() {
        for g in Generator::ALL {
            let spec = DatasetSpec::new(g, 50, 77).noise(0.01, 3);
            let spec = if g == Generator::Hypercube { spec.dims(5, 4) } else { spec };
            assert_eq!(generate(&spec).unwrap().points, generate(&spec).unwrap().points);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&DatasetSpec::new(Generator::SwissRoll, 10, 0).dims(4, 2)).is_err());
        assert!(generate(&DatasetSpec::new(Generator::Hypercube, 10, 0).dims(3, 4)).is_err());
        assert!(generate(&DatasetSpec::new(Generator::Sphere, 10, 0).dims(3, 3)).is_err());
        assert!(generate(&DatasetSpec::new(Generator::Moebius, 0, 0)).is_err());
        assert!(generate(&DatasetSpec::new(Generator::Moebius, 10, 0).noise(-1.0, 0)).is_err());
    }

    #[test]
    fn hypercube_shapes() {
        let m10c = generate(&DatasetSpec::new(Generator::Hypercube, 10_000, 1)).unwrap();
        assert_eq!((m10c.points.len(), m10c.points.dim(), m10c.delta), (10_000, 25, 24.0));

        let full = generate(&DatasetSpec::new(Generator::Hypercube, 200, 1).dims(3, 3)).unwrap();
        assert!(full.residual.unwrap().distance(full.points.row(0)) < 1e-12);

        let seg = generate(&DatasetSpec::new(Generator::Hypercube, 200, 2).dims(2, 1)).unwrap();
        let idx = NeighborIndex::build(&seg.points).unwrap();
        let models = fit_local_models(&seg.points, &idx, 5, Jitter::Auto, true).unwrap();
        for m in &models {
            assert!(m.eigen().values[1] <= m.jitter + 1e-9);
        }
    }

    #[test]
    fn m4_local_rank_is_four() {
        let set = generate(&DatasetSpec::new(Generator::NonlinearM4, 300, 5)).unwrap();
        assert_eq!((set.points.len(), set.points.dim(), set.delta), (300, 8, 4.0));
        // a small patch around u0: curvature enters at second order only
        let mut rng = rng::stream(5, Purpose::Dataset, 1, 0);
        let u0 = [0.3, 0.6, 0.4, 0.7];
        let eps = 1e-3;
        let rows: Vec<[f64; 8]> = (0..200)
            .map(|_| m4_point(std::array::from_fn(|j| u0[j] + eps * rng.random_range(-1.0..1.0))))
            .collect();
        let patch = PointSet::from_rows(&rows).unwrap();
        let center = m4_point(u0);
        let sigma = crate::linalg::covariance_centered(patch.rows(), &center).unwrap();
        let e = crate::linalg::sym_eigen(&sigma, 0.0).unwrap();
        assert!(e.values[4] < 1e-4 * e.values[3], "{:?}", e.values);
        assert!(e.values[3] > 0.0);
    }

    #[test]
    fn linear_subspace_trailing_eigenvalues() {
        let set = generate(&DatasetSpec::new(Generator::LinearSubspace, 400, 5).dims(7, 3)).unwrap();
        let idx = NeighborIndex::build(&set.points).unwrap();
        let models = fit_local_models(&set.points, &idx, 10, Jitter::Auto, true).unwrap();
        for m in &models {
            for &l in &m.eigen().values[3..] {
                assert!(l <= m.jitter + 1e-9);
            }
        }
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut rng = rng::stream(1, Purpose::Rotation, 0, 0);
        let r = Rotation::random(6, &mut rng);
        let v = [1.0, -2.0, 0.5, 3.0, 0.0, 1.5];
        let back = r.inverse_apply(&r.apply(&v));
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
        let n0: f64 = v.iter().map(|x| x * x).sum();
        let n1: f64 = r.apply(&v).iter().map(|x| x * x).sum();
        assert!((n0 - n1).abs() < 1e-12);
    }

    #[test]
    fn generator_names_parse() {
        for g in Generator::ALL {
            assert_eq!(g.name().parse::<Generator>().unwrap(), g);
        }
        assert!("mnist".parse::<Generator>().is_err());
    }
}

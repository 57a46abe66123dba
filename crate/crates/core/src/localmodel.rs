//! Per-point local covariance models.
//!
//! The covariance of a point's k-nearest neighbors, centered at the point
//! itself, stands in for the (unknown) local Jacobian of the embedding that
//! generated the data. Its Cholesky factor drives sampling and the `C2`
//! correction; the eigendecomposition is only needed by the δ-ball rule and
//! is computed on first use.

use std::sync::OnceLock;

use crate::error::{MessError, Result};
use crate::linalg::{self, CholeskyFactor, EigenDecomp, SymMatrix};
use crate::neighbors::NeighborIndex;
use crate::par;
use crate::points::PointSet;

/// Diagonal regularization policy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Jitter {
    /// `1e-9 * (1 + trace(Σ)/d)` per matrix.
    #[default]
    Auto,
    Fixed(f64),
}

impl Jitter {
    pub fn resolve(self, sigma: &SymMatrix) -> f64 {
        match self {
            Jitter::Auto => linalg::default_jitter(sigma),
            Jitter::Fixed(j) => j.max(linalg::MIN_JITTER),
        }
    }
}

#[derive(Debug)]
pub struct LocalModel {
    pub anchor: usize,
    /// Number of neighbors the covariance was built from.
    pub k: usize,
    pub sigma: SymMatrix,
    pub chol: CholeskyFactor,
    /// Regularization applied to both factorizations.
    pub jitter: f64,
    eigen: OnceLock<EigenDecomp>,
}

impl Clone for LocalModel {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        Self {
            anchor: self.anchor,
            k: self.k,
            sigma: self.sigma.clone(),
            chol: self.chol.clone(),
            jitter: self.jitter,
            eigen,
        }
    }
}

impl LocalModel {
    /// Builds a model from a covariance that is already assembled.
    pub fn from_sigma(anchor: usize, k: usize, sigma: SymMatrix, jitter: Jitter) -> Result<Self> {
        if !sigma.is_finite() {
            return Err(MessError::Numerical(format!(
                "non-finite covariance at point {anchor}"
            )));
        }
        let jitter = jitter.resolve(&sigma);
        let chol = linalg::cholesky(&sigma, jitter)?;
        Ok(Self {
            anchor,
            k,
            sigma,
            chol,
            jitter,
            eigen: OnceLock::new(),
        })
    }

    /// Model centered at `center` from the given neighbor rows.
    pub fn from_neighbors<'a, I>(anchor: usize, center: &[f64], rows: I, jitter: Jitter) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
        I::IntoIter: ExactSizeIterator,
    {
        let rows = rows.into_iter();
        let k = rows.len();
        let sigma = linalg::covariance_centered(rows, center)?;
        Self::from_sigma(anchor, k, sigma, jitter)
    }

    /// Eigendecomposition of `sigma + jitter I`, computed on first call.
    pub fn eigen(&self) -> &EigenDecomp {
        self.eigen.get_or_init(|| {
            linalg::sym_eigen(&self.sigma, self.jitter)
                .expect("covariance was checked finite at construction")
        })
    }

    pub fn has_eigen(&self) -> bool {
        self.eigen.get().is_some()
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }
}

/// One model per point of `points`, each from its `k` nearest neighbors
/// (excluding the point itself) centered at the point.
pub fn fit_local_models(
    points: &PointSet,
    index: &NeighborIndex<'_>,
    k: usize,
    jitter: Jitter,
    lazy_eigen: bool,
) -> Result<Vec<LocalModel>> {
    let n = points.len();
    if k == 0 {
        return Err(MessError::invalid("k1", "must be at least 1"));
    }
    if k + 1 > n {
        return Err(MessError::InsufficientPoints {
            param: "k1",
            requested: k,
            available: n.saturating_sub(1),
        });
    }
    par::try_map_indexed(n, |i| {
        let x = points.row(i);
        let nl = index.query(x, k, Some(i))?;
        let rows = nl.ids.iter().map(|&j| index.points().row(j));
        let model = LocalModel::from_neighbors(i, x, rows, jitter)?;
        if !lazy_eigen {
            model.eigen();
        }
        Ok(model)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fit(points: &PointSet, k: usize, jitter: Jitter) -> Vec<LocalModel> {
        let idx = NeighborIndex::build(points).unwrap();
        fit_local_models(points, &idx, k, jitter, true).unwrap()
    }

    #[test]
    fn line_through_origin_is_rank_one() {
        let p = PointSet::from_rows(&[[0.0, 0.0], [1.0, 2.0], [-2.0, -4.0]]).unwrap();
        let models = fit(&p, 2, Jitter::Fixed(1e-9));
        let m = &models[0];
        // (1/2)[(1,2)(1,2)^T + (-2,-4)(-2,-4)^T] = 2.5 * [[1,2],[2,4]]
        assert_eq!(m.sigma.as_slice(), &[2.5, 5.0, 5.0, 10.0]);
        let e = m.eigen();
        // eigenvalues are of sigma + jitter
        assert!((e.values[0] - (12.5 + 1e-9)).abs() < 1e-9);
        assert!(e.values[1] < 1e-8);
        let v = e.vector(0);
        let s5 = 5f64.sqrt();
        assert!((v[0] - 1.0 / s5).abs() < 1e-9 && (v[1] - 2.0 / s5).abs() < 1e-9);
    }

    #[test]
    fn zero_spread_gives_sqrt_jitter() {
        let p = PointSet::from_rows(&[[1.0, 1.0, 1.0]; 4]).unwrap();
        let models = fit(&p, 3, Jitter::Fixed(1e-6));
        for m in &models {
            assert!(m.sigma.as_slice().iter().all(|&v| v == 0.0));
            for i in 0..3 {
                assert!((m.chol.get(i, i) - 1e-3).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn k_too_large() {
        let p = PointSet::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let idx = NeighborIndex::build(&p).unwrap();
        assert!(matches!(
            fit_local_models(&p, &idx, 3, Jitter::Auto, true),
            Err(MessError::InsufficientPoints { param: "k1", .. })
        ));
    }

    #[test]
    fn centered_at_anchor_not_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rows: Vec<[f64; 3]> = (0..40)
            .map(|_| [rng.random_range(4.0..5.0), rng.random_range(-1.0..1.0), 0.0])
            .collect();
        // anchor far from its neighbors' centroid
        rows.push([0.0, 0.0, 0.0]);
        let p = PointSet::from_rows(&rows).unwrap();
        let k = 10;
        let models = fit(&p, k, Jitter::Auto);
        let idx = NeighborIndex::build(&p).unwrap();
        for (i, m) in models.iter().enumerate() {
            let nl = idx.query(p.row(i), k, Some(i)).unwrap();
            let x = p.row(i);
            for a in 0..3 {
                for b in 0..3 {
                    let want: f64 = nl
                        .ids
                        .iter()
                        .map(|&j| (p.row(j)[a] - x[a]) * (p.row(j)[b] - x[b]))
                        .sum::<f64>()
                        / k as f64;
                    assert!((m.sigma.get(a, b) - want).abs() < 1e-12);
                }
            }
        }
        let far = &models[40];
        let nl = idx.query(p.row(40), k, Some(40)).unwrap();
        let mean0: f64 = nl.ids.iter().map(|&j| p.row(j)[0]).sum::<f64>() / k as f64;
        let var_mean_centered: f64 =
            nl.ids.iter().map(|&j| (p.row(j)[0] - mean0).powi(2)).sum::<f64>() / k as f64;
        assert!(far.sigma.get(0, 0) > 10.0 * var_mean_centered);
    }

    #[test]
    fn linear_subspace_trailing_eigenvalues_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (delta, d) = (2, 5);
        // basis: two orthonormal vectors in R^5
        let b1 = [0.6, 0.8, 0.0, 0.0, 0.0];
        let b2 = [0.0, 0.0, 0.0, 0.8, -0.6];
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| {
                let (u, v): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (0..d).map(|j| u * b1[j] + v * b2[j]).collect()
            })
            .collect();
        let p = PointSet::from_rows(&rows).unwrap();
        let models = fit(&p, 12, Jitter::Auto);
        for m in &models {
            let e = m.eigen();
            for &lam in &e.values[delta..] {
                assert!(lam <= m.jitter + 1e-9, "{lam} vs jitter {}", m.jitter);
            }
        }
    }

    #[test]
    fn scaling_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data: Vec<f64> = (0..200 * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = PointSet::from_flat(3, data.clone()).unwrap();
        let s = 3.5;
        let q = PointSet::from_flat(3, data.iter().map(|v| v * s).collect()).unwrap();
        let a = fit(&p, 8, Jitter::Fixed(0.0));
        let b = fit(&q, 8, Jitter::Fixed(0.0));
        for (ma, mb) in a.iter().zip(&b) {
            let scaled = ma.sigma.scaled(s * s);
            assert!(scaled.frobenius_diff(&mb.sigma) <= 1e-12 * mb.sigma.frobenius().max(1.0));
        }
    }

    #[test]
    fn eager_eigen_is_computed() {
        let p = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let idx = NeighborIndex::build(&p).unwrap();
        let lazy = fit_local_models(&p, &idx, 2, Jitter::Auto, true).unwrap();
        assert!(!lazy[0].has_eigen());
        let eager = fit_local_models(&p, &idx, 2, Jitter::Auto, false).unwrap();
        assert!(eager.iter().all(|m| m.has_eigen()));
    }
}

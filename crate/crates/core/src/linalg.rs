//! Small dense symmetric linear algebra.
//!
//! Matrices here are at most a few hundred rows (the ambient dimension of the
//! data), so everything is stored densely in row-major `Vec<f64>`s and
//! factorized with textbook algorithms: Cholesky–Banachiewicz for the lower
//! factor and cyclic Jacobi rotations for the eigendecomposition.

use crate::error::{MessError, Result};

/// Smallest diagonal regularization ever applied before a Cholesky factor.
pub const MIN_JITTER: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric `d x d` matrix with full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = v;
        }
        m
    }

    /// Builds from a full row-major buffer, checking symmetry.
    pub fn from_full(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(MessError::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (data[i * dim + j], data[j * dim + i]);
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(MessError::Numerical(format!(
                        "matrix not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(MessError::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_full(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> SymMatrix {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.data[i * self.dim + i] += shift;
        }
        out
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `S v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `out = S v` without allocating.
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.dim)) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Scale-aware default regularization, `1e-9 * (1 + trace(S) / d)`.
pub fn default_jitter(s: &SymMatrix) -> f64 {
    if s.dim == 0 {
        return MIN_JITTER;
    }
    1e-9 * (1.0 + s.trace().max(0.0) / s.dim as f64)
}

/// Second moment of `rows` about `center`: `(1/k) * sum (r - c)(r - c)^T`.
///
/// This is the biased covariance with the query point placed at the center of
/// the distribution, not the neighbor mean.
pub fn covariance_centered<'a, I>(rows: I, center: &[f64]) -> Result<SymMatrix>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let d = center.len();
    let mut acc = vec![0.0; d * d];
    let mut diff = vec![0.0; d];
    let mut k = 0usize;
    for row in rows {
        if row.len() != d {
            return Err(MessError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        for ((o, r), c) in diff.iter_mut().zip(row).zip(center) {
            *o = r - c;
        }
        for i in 0..d {
            let di = diff[i];
            if di == 0.0 {
                continue;
            }
            let acc_row = &mut acc[i * d..(i + 1) * d];
            for j in i..d {
                acc_row[j] += di * diff[j];
            }
        }
        k += 1;
    }
    if k == 0 {
        return Err(MessError::DegenerateNeighborhood(
            "no rows to build a covariance from".into(),
        ));
    }
    let inv = 1.0 / k as f64;
    for i in 0..d {
        for j in i..d {
            let v = acc[i * d + j] * inv;
            acc[i * d + j] = v;
            acc[j * d + i] = v;
        }
    }
    Ok(SymMatrix { dim: d, data: acc })
}

/// Lower-triangular `L` with `L L^T = S + jitter I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    /// Row-major, upper triangle zero.
    data: Vec<f64>,
}

impl CholeskyFactor {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// `L v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| {
                self.data[i * d..i * d + i + 1]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `out = L v` without allocating.
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate().take(d) {
            *o = self.data[i * d..i * d + i + 1]
                .iter()
                .zip(v)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    /// Solves `L y = v` by forward substitution.
    pub fn solve_lower(&self, v: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.solve_lower_into(v, &mut y);
        y
    }

    pub fn solve_lower_into(&self, v: &[f64], y: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.data[i * d..i * d + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (v[i] - s) / self.data[i * d + i];
        }
    }

    /// `L L^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        let d = self.dim;
        let mut out = SymMatrix::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| self.get(i, k) * self.get(j, k)).sum();
                out.data[i * d + j] = s;
                out.data[j * d + i] = s;
            }
        }
        out
    }
}

fn factor(s: &SymMatrix, shift: f64) -> Result<CholeskyFactor> {
    let d = s.dim;
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            if i == j {
                let pivot = s.get(i, i) + shift - dot;
                if !(pivot > 0.0) || !pivot.is_finite() {
                    return Err(MessError::Numerical(format!(
                        "Cholesky pivot {i} is not positive ({pivot})"
                    )));
                }
                l[i * d + i] = pivot.sqrt();
            } else {
                l[i * d + j] = (s.get(i, j) - dot) / l[j * d + j];
            }
        }
    }
    Ok(CholeskyFactor { dim: d, data: l })
}

/// Cholesky factor of `S + jitter I`; `jitter` is floored at [`MIN_JITTER`].
pub fn cholesky(s: &SymMatrix, jitter: f64) -> Result<CholeskyFactor> {
    if !s.is_finite() {
        return Err(MessError::Numerical("non-finite covariance entry".into()));
    }
    factor(s, jitter.max(MIN_JITTER))
}

/// Eigendecomposition `V diag(values) V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    dim: usize,
    /// Descending, clamped at zero.
    pub values: Vec<f64>,
    /// Row-major `d x d`; column `j` is the eigenvector of `values[j]`.
    vectors: Vec<f64>,
}

impl EigenDecomp {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Component `i` of eigenvector `j`.
    #[inline]
    pub fn vector_entry(&self, i: usize, j: usize) -> f64 {
        self.vectors[i * self.dim + j]
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.vector_entry(i, j)).collect()
    }

    /// `V y` for coordinates `y` in the eigenbasis.
    pub fn to_ambient(&self, y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| {
                self.vectors[i * d..(i + 1) * d]
                    .iter()
                    .zip(y)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `V^T x`.
    pub fn to_eigenbasis(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            let xi = x[i];
            for (o, v) in out.iter_mut().zip(&self.vectors[i * d..(i + 1) * d]) {
                *o += v * xi;
            }
        }
        out
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        let d = self.dim;
        let mut out = SymMatrix::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                let s: f64 = (0..d)
                    .map(|k| self.vector_entry(i, k) * self.values[k] * self.vector_entry(j, k))
                    .sum();
                out.data[i * d + j] = s;
                out.data[j * d + i] = s;
            }
        }
        out
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition of `S + jitter I` by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted descending and clamped at zero from below. Each
/// eigenvector is signed so that its largest-magnitude component (first one
/// on ties) is positive.
pub fn sym_eigen(s: &SymMatrix, jitter: f64) -> Result<EigenDecomp> {
    if !s.is_finite() || !jitter.is_finite() {
        return Err(MessError::Numerical("non-finite covariance entry".into()));
    }
    let d = s.dim;
    let mut a = s.shifted(jitter.max(0.0)).data;
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }

    let total: f64 = a.iter().map(|x| x * x).sum();
    let tol = total * 1e-32;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[p * d + q] * a[p * d + q];
            }
        }
        if off <= tol || off == 0.0 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..d {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    let nkp = c * akp - sn * akq;
                    let nkq = sn * akp + c * akq;
                    a[k * d + p] = nkp;
                    a[p * d + k] = nkp;
                    a[k * d + q] = nkq;
                    a[q * d + k] = nkq;
                }
                a[p * d + p] = app - t * apq;
                a[q * d + q] = aqq + t * apq;
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - sn * vkq;
                    v[k * d + q] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j * d + j].total_cmp(&a[i * d + i]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a[i * d + i].max(0.0)).collect();
    let mut vectors = vec![0.0; d * d];
    for (col, &src) in order.iter().enumerate() {
        let mut best = 0usize;
        for i in 1..d {
            if v[i * d + src].abs() > v[best * d + src].abs() {
                best = i;
            }
        }
        let sign = if v[best * d + src] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            vectors[i * d + col] = sign * v[i * d + src];
        }
    }
    Ok(EigenDecomp {
        dim: d,
        values,
        vectors,
    })
}

/// `v^T S^{-1} v` via a triangular solve against the Cholesky factor of `S`.
pub fn mahalanobis_sq(v: &[f64], chol: &CholeskyFactor) -> f64 {
    let y = chol.solve_lower(v);
    y.iter().map(|x| x * x).sum()
}

/// [`mahalanobis_sq`] reusing a caller-provided buffer of length `d`.
pub fn mahalanobis_sq_with(v: &[f64], chol: &CholeskyFactor, scratch: &mut [f64]) -> f64 {
    chol.solve_lower_into(v, scratch);
    scratch.iter().map(|x| x * x).sum()
}

/// `v^T S^{-1} v` for an unregularized `S`; fails if `S` is not positive
/// definite.
pub fn mahalanobis_sq_sym(v: &[f64], s: &SymMatrix) -> Result<f64> {
    if !s.is_finite() {
        return Err(MessError::Numerical("non-finite covariance entry".into()));
    }
    let l = factor(s, 0.0)?;
    Ok(mahalanobis_sq(v, &l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn covariance_examples() {
        let rows = [[1.0, 0.0], [0.0, 1.0]];
        let s = covariance_centered(rows.iter().map(|r| &r[..]), &[0.0, 0.0]).unwrap();
        assert_eq!(s.as_slice(), &[0.5, 0.0, 0.0, 0.5]);

        let c = [1.5, -2.0, 0.25];
        let s = covariance_centered([&c[..], &c[..], &c[..]], &c).unwrap();
        assert!(s.as_slice().iter().all(|&v| v == 0.0));

        let s = covariance_centered([&[2.0, 0.0][..]], &[1.0, 0.0]).unwrap();
        assert_eq!(s.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn covariance_empty_is_degenerate() {
        let err = covariance_centered(std::iter::empty(), &[0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("degenerate neighborhood"));
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&SymMatrix::identity(2), 0.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(close(l.get(i, j), want, 1e-8));
            }
        }

        let l = cholesky(&SymMatrix::from_diag(&[4.0, 1.0]), 1e-9).unwrap();
        assert!(close(l.get(0, 0), 2.0, 1e-8));
        assert!(close(l.get(1, 1), 1.0, 1e-8));
        assert_eq!(l.get(1, 0), 0.0);

        let l = cholesky(&SymMatrix::zeros(3), 1e-6).unwrap();
        for i in 0..3 {
            assert!(close(l.get(i, i), 1e-3, 1e-12));
        }
    }

    #[test]
    fn cholesky_rejects_non_finite() {
        let s = SymMatrix::from_diag(&[f64::NAN, 1.0]);
        assert!(cholesky(&s, 1e-6).is_err());
        assert!(sym_eigen(&s, 0.0).is_err());
    }

    #[test]
    fn eigen_examples() {
        let e = sym_eigen(&SymMatrix::from_diag(&[3.0, 1.0]), 0.0).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vector(0), vec![1.0, 0.0]);
        assert_eq!(e.vector(1), vec![0.0, 1.0]);

        let s = SymMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = sym_eigen(&s, 0.0).unwrap();
        assert!(close(e.values[0], 3.0, 1e-12) && close(e.values[1], 1.0, 1e-12));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!(close(v0[0], h, 1e-12) && close(v0[1], h, 1e-12));
        // (1, -1)/sqrt2 up to sign; first component wins the tie and is positive
        assert!(close(v1[0], h, 1e-12) && close(v1[1], -h, 1e-12));

        let e = sym_eigen(&SymMatrix::zeros(2), 1e-6).unwrap();
        assert!(e.values.iter().all(|&v| close(v, 1e-6, 1e-12)));
    }

    #[test]
    fn mahalanobis_examples() {
        let l = cholesky(&SymMatrix::from_diag(&[4.0, 1.0]), 0.0).unwrap();
        assert_eq!(mahalanobis_sq(&[0.0, 0.0], &l), 0.0);
        assert!(close(mahalanobis_sq(&[2.0, 1.0], &l), 2.0, 1e-8));
        let s = SymMatrix::from_diag(&[4.0, 1.0]);
        assert!(close(mahalanobis_sq_sym(&[2.0, 1.0], &s).unwrap(), 2.0, 1e-14));
        assert_eq!(
            mahalanobis_sq_sym(&[1.0, 0.0], &SymMatrix::identity(2)).unwrap(),
            1.0
        );
    }

    #[test]
    fn mahalanobis_singular_without_jitter_fails() {
        assert!(mahalanobis_sq_sym(&[1.0, 0.0], &SymMatrix::from_diag(&[1.0, 0.0])).is_err());
    }

    fn brute_covariance(rows: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
        let d = c.len();
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for r in rows {
                    s += (r[i] - c[i]) * (r[j] - c[j]);
                }
                out[i * d + j] = s / rows.len() as f64;
            }
        }
        out
    }

    fn random_spd(d: usize, entries: &[f64]) -> SymMatrix {
        // A A^T from a d x d block of entries
        let mut s = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                s[i * d + j] = (0..d).map(|k| entries[i * d + k] * entries[j * d + k]).sum();
            }
        }
        SymMatrix::from_full(d, s).unwrap()
    }

    fn random_sym(d: usize, entries: &[f64]) -> SymMatrix {
        let mut s = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = entries[i * d + j];
                s[i * d + j] = v;
                s[j * d + i] = v;
            }
        }
        SymMatrix::from_full(d, s).unwrap()
    }

    proptest! {
        #[test]
        fn covariance_matches_double_loop(
            d in 1usize..6,
            k in 1usize..12,
            seed in proptest::collection::vec(-10.0f64..10.0, 80),
        ) {
            let rows: Vec<Vec<f64>> = (0..k).map(|r| (0..d).map(|j| seed[(r * d + j) % 73]).collect()).collect();
            let c: Vec<f64> = (0..d).map(|j| seed[75 + j % 5]).collect();
            let s = covariance_centered(rows.iter().map(|r| r.as_slice()), &c).unwrap();
            let want = brute_covariance(&rows, &c);
            for (a, b) in s.as_slice().iter().zip(&want) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn cholesky_reconstructs(
            d in 1usize..=16,
            entries in proptest::collection::vec(-3.0f64..3.0, 256),
        ) {
            let s = random_spd(d, &entries);
            let jitter = default_jitter(&s);
            let l = cholesky(&s, jitter).unwrap();
            for i in 0..d {
                prop_assert!(l.get(i, i) > 0.0);
            }
            let err = l.reconstruct().frobenius_diff(&s.shifted(jitter.max(MIN_JITTER)));
            prop_assert!(err / s.frobenius().max(1e-300) < 1e-8);
        }

        #[test]
        fn eigen_reconstructs_and_is_orthonormal(
            d in 1usize..=16,
            entries in proptest::collection::vec(-5.0f64..5.0, 256),
        ) {
            let s = random_sym(d, &entries);
            let e = sym_eigen(&s, 0.0).unwrap();
            for w in e.values.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            for i in 0..d {
                for j in 0..d {
                    let dot: f64 = (0..d).map(|k| e.vector_entry(k, i) * e.vector_entry(k, j)).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() < 1e-8);
                }
            }
            // clamping only affects negative eigenvalues, so compare against a PSD input
            let spd = random_spd(d, &entries);
            let e = sym_eigen(&spd, 0.0).unwrap();
            let err = e.reconstruct().frobenius_diff(&spd);
            prop_assert!(err / spd.frobenius().max(1e-300) < 1e-8);
        }

        #[test]
        fn mahalanobis_of_cholesky_image_is_euclidean(
            d in 1usize..=8,
            entries in proptest::collection::vec(-3.0f64..3.0, 64),
            u in proptest::collection::vec(-4.0f64..4.0, 8),
        ) {
            let s = random_spd(d, &entries).shifted(0.1);
            let l = cholesky(&s, MIN_JITTER).unwrap();
            let u = &u[..d];
            let lu = l.mul_vec(u);
            let lhs = mahalanobis_sq(&lu, &l);
            let rhs: f64 = u.iter().map(|x| x * x).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.max(1e-12));
        }
    }
}

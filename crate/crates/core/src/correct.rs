//! Correction of raw supersamples onto the manifold.
//!
//! For a raw sample `p` with nearest original points `x_1..x_k`, every `x_i`
//! proposes a candidate `c_i` at the same distance `|p - x_i|` but rotated
//! towards the dominant directions of its local covariance, and the corrected
//! sample is the inverse-distance-weighted mean of the candidates.
//!
//! Candidate maps:
//!
//! * `C1`: `x + Σ_x (p - x) * |p - x| / |Σ_x (p - x)|`
//! * `C2`: `x + L_x (p - x) * |p - x| / |L_x (p - x)|`
//!
//! Weights (optionally raised to a power):
//!
//! * `W1`: `1 / |p - x|`
//! * `W2`: `1 / mahalanobis(p - x; Σ_x)`
//! * `W3`: `1 / mahalanobis(x - p; Σ_p)`, with `Σ_p` the covariance of the
//!   sample's own k-nn in the original set, centered at `p`.

use crate::error::{MessError, Result};
use crate::linalg::{self, CholeskyFactor, SymMatrix};
use crate::localmodel::{Jitter, LocalModel};
use crate::neighbors::{NeighborIndex, NeighborList};
use crate::par;
use crate::points::{self, PointSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateMap {
    /// `C1`
    Covariance,
    /// `C2`
    #[default]
    Cholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// `W1`
    Euclidean,
    /// `W2`
    MahalanobisAtNeighbor,
    /// `W3`
    #[default]
    MahalanobisAtSample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightPower {
    Fixed(f64),
    /// Each neighbor's weight is raised to that neighbor's initial ID
    /// estimate.
    InitialId,
}

impl Default for WeightPower {
    fn default() -> Self {
        WeightPower::Fixed(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorrectionRule {
    pub candidate: CandidateMap,
    pub weighting: Weighting,
    pub power: WeightPower,
}

impl CorrectionRule {
    pub fn new(candidate: CandidateMap, weighting: Weighting) -> Self {
        Self {
            candidate,
            weighting,
            power: WeightPower::default(),
        }
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = WeightPower::Fixed(power);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let WeightPower::Fixed(p) = self.power {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(MessError::invalid("power", "must be >= 1"));
            }
        }
        Ok(())
    }

    pub fn needs_initial_ids(&self) -> bool {
        self.power == WeightPower::InitialId
    }
}

/// Outcome of a weight evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Value(f64),
    /// `p` coincides with the neighbor; the caller returns the neighbor.
    ExactHit,
}

fn rescale_around(x: &[f64], dir: &[f64], dist: f64, fallback: &[f64]) -> Vec<f64> {
    let n = points::norm(dir);
    if n == 0.0 || !n.is_finite() {
        return fallback.to_vec();
    }
    x.iter().zip(dir).map(|(xi, di)| xi + di * dist / n).collect()
}

/// `C1`. Returns `x` when `p == x`, and `p` unchanged when `Σ_x (p - x)`
/// vanishes (no direction information).
pub fn candidate_c1(x: &[f64], sigma_x: &SymMatrix, p: &[f64]) -> Vec<f64> {
    let v = points::sub(p, x);
    let dist = points::norm(&v);
    if dist == 0.0 {
        return x.to_vec();
    }
    rescale_around(x, &sigma_x.mul_vec(&v), dist, p)
}

/// `C2`, same conventions as [`candidate_c1`].
pub fn candidate_c2(x: &[f64], chol_x: &CholeskyFactor, p: &[f64]) -> Vec<f64> {
    let v = points::sub(p, x);
    let dist = points::norm(&v);
    if dist == 0.0 {
        return x.to_vec();
    }
    rescale_around(x, &chol_x.mul_vec(&v), dist, p)
}

/// Weight of neighbor `x` for sample `p`, before applying the power.
///
/// `neighbor` is the local model of `x` (needed for `W2`), `sample` the
/// model of `p` (needed for `W3`).
pub fn weight(
    weighting: Weighting,
    x: &[f64],
    p: &[f64],
    neighbor: Option<&LocalModel>,
    sample: Option<&LocalModel>,
) -> Result<Weight> {
    let v = points::sub(p, x);
    if v.iter().all(|&c| c == 0.0) {
        return Ok(Weight::ExactHit);
    }
    let dist = match weighting {
        Weighting::Euclidean => points::norm(&v),
        Weighting::MahalanobisAtNeighbor => {
            let m = neighbor.ok_or_else(|| MessError::invalid("weighting", "W2 needs Σ_x"))?;
            linalg::mahalanobis_sq(&v, &m.chol).sqrt()
        }
        Weighting::MahalanobisAtSample => {
            let m = sample.ok_or_else(|| MessError::invalid("weighting", "W3 needs Σ_p"))?;
            linalg::mahalanobis_sq(&v, &m.chol).sqrt()
        }
    };
    let w = 1.0 / dist;
    Ok(if w.is_finite() {
        Weight::Value(w)
    } else {
        Weight::ExactHit
    })
}

/// Shared read-only state of the correction stage.
pub struct Corrector<'a> {
    pub originals: &'a PointSet,
    pub index: &'a NeighborIndex<'a>,
    pub models: &'a [LocalModel],
    pub rule: CorrectionRule,
    /// `k2`: neighbors in the original set per sample.
    pub k: usize,
    pub jitter: Jitter,
    pub initial_ids: Option<&'a [f64]>,
}

struct Scratch {
    diff: Vec<f64>,
    mapped: Vec<f64>,
    solve: Vec<f64>,
    acc: Vec<f64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self {
            diff: vec![0.0; d],
            mapped: vec![0.0; d],
            solve: vec![0.0; d],
            acc: vec![0.0; d],
        }
    }
}

impl<'a> Corrector<'a> {
    pub fn new(
        originals: &'a PointSet,
        index: &'a NeighborIndex<'a>,
        models: &'a [LocalModel],
        rule: CorrectionRule,
        k: usize,
    ) -> Result<Self> {
        rule.validate()?;
        if models.len() != originals.len() {
            return Err(MessError::DimensionMismatch {
                expected: originals.len(),
                got: models.len(),
            });
        }
        if k == 0 {
            return Err(MessError::invalid("k2", "must be at least 1"));
        }
        if k > originals.len() {
            return Err(MessError::InsufficientPoints {
                param: "k2",
                requested: k,
                available: originals.len(),
            });
        }
        Ok(Self {
            originals,
            index,
            models,
            rule,
            k,
            jitter: Jitter::Auto,
            initial_ids: None,
        })
    }

    fn power_for(&self, neighbor: usize) -> f64 {
        match self.rule.power {
            WeightPower::Fixed(p) => p,
            WeightPower::InitialId => self
                .initial_ids
                .map(|ids| ids[neighbor])
                .filter(|v| v.is_finite() && *v >= 1.0)
                .unwrap_or(1.0),
        }
    }

    /// Covariance model of a sample from its neighbors in the original set.
    pub fn sample_model(&self, p: &[f64], neighbors: &NeighborList) -> Result<LocalModel> {
        let rows = neighbors.ids.iter().map(|&j| self.originals.row(j));
        LocalModel::from_neighbors(usize::MAX, p, rows, self.jitter)
    }

    /// Corrects one sample given its k-nn in the original set.
    pub fn correct_with(&self, p: &[f64], neighbors: &NeighborList) -> Result<Vec<f64>> {
        let mut scratch = Scratch::new(p.len());
        self.correct_into(p, neighbors, &mut scratch)
    }

    fn correct_into(&self, p: &[f64], neighbors: &NeighborList, s: &mut Scratch) -> Result<Vec<f64>> {
        if neighbors.is_empty() {
            return Err(MessError::DegenerateNeighborhood(
                "no neighbors to correct a sample with".into(),
            ));
        }
        // sorted ascending, so an exact hit is always first
        if neighbors.dists[0] == 0.0 {
            return Ok(self.originals.row(neighbors.ids[0]).to_vec());
        }
        let sample_model = match self.rule.weighting {
            Weighting::MahalanobisAtSample => Some(self.sample_model(p, neighbors)?),
            _ => None,
        };
        s.acc.iter_mut().for_each(|a| *a = 0.0);
        let mut wsum = 0.0;
        for &id in &neighbors.ids {
            let x = self.originals.row(id);
            let model = &self.models[id];
            for ((d, pi), xi) in s.diff.iter_mut().zip(p).zip(x) {
                *d = pi - xi;
            }
            let dist = points::norm(&s.diff);
            let raw_w = match self.rule.weighting {
                Weighting::Euclidean => 1.0 / dist,
                Weighting::MahalanobisAtNeighbor => {
                    1.0 / linalg::mahalanobis_sq_with(&s.diff, &model.chol, &mut s.solve).sqrt()
                }
                Weighting::MahalanobisAtSample => {
                    let m = sample_model.as_ref().expect("built above for W3");
                    1.0 / linalg::mahalanobis_sq_with(&s.diff, &m.chol, &mut s.solve).sqrt()
                }
            };
            let w = raw_w.powf(self.power_for(id));
            if !w.is_finite() {
                return Ok(x.to_vec());
            }
            match self.rule.candidate {
                CandidateMap::Covariance => model.sigma.mul_vec_into(&s.diff, &mut s.mapped),
                CandidateMap::Cholesky => model.chol.mul_vec_into(&s.diff, &mut s.mapped),
            }
            let mapped_norm = points::norm(&s.mapped);
            if mapped_norm > 0.0 && mapped_norm.is_finite() {
                let f = dist / mapped_norm;
                for ((a, xi), m) in s.acc.iter_mut().zip(x).zip(&s.mapped) {
                    *a += w * (xi + m * f);
                }
            } else {
                for (a, pi) in s.acc.iter_mut().zip(p) {
                    *a += w * pi;
                }
            }
            wsum += w;
        }
        Ok(s.acc.iter().map(|a| a / wsum).collect())
    }

    /// Corrects one sample, querying its neighbors first.
    pub fn correct_point(&self, p: &[f64]) -> Result<Vec<f64>> {
        let nl = self.index.query(p, self.k, None)?;
        self.correct_with(p, &nl)
    }

    /// Corrects every row of `raw`, preserving order.
    pub fn correct_all(&self, raw: &PointSet) -> Result<PointSet> {
        let d = raw.dim();
        let rows = par::try_map_indexed(raw.len(), |i| {
            let p = raw.row(i);
            let nl = self.index.query(p, self.k, None)?;
            let mut scratch = Scratch::new(d);
            self.correct_into(p, &nl, &mut scratch)
        })?;
        let mut flat = Vec::with_capacity(raw.len() * d);
        for r in rows {
            flat.extend_from_slice(&r);
        }
        PointSet::from_flat(d, flat)
    }
}

/// A raw sample after correction, with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedSample {
    pub position: Vec<f64>,
    pub parent: usize,
    pub sample: usize,
}

/// List form of [`Corrector::correct_all`].
pub fn correct_samples(
    corrector: &Corrector<'_>,
    raw: &[crate::generate::RawSupersample],
) -> Result<Vec<CorrectedSample>> {
    par::try_map_indexed(raw.len(), |i| {
        let r = &raw[i];
        Ok(CorrectedSample {
            position: corrector.correct_point(&r.position)?,
            parent: r.parent,
            sample: r.sample,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localmodel::fit_local_models;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    fn diag_model(diag: &[f64]) -> LocalModel {
        LocalModel::from_sigma(0, 5, SymMatrix::from_diag(diag), Jitter::Fixed(1e-12)).unwrap()
    }

    #[test]
    fn c1_examples() {
        let p = [0.3, -1.2];
        assert!(close(&candidate_c1(&[1.0, 1.0], &SymMatrix::identity(2), &p), &p, 1e-15));

        let c = candidate_c1(&[0.0, 0.0], &SymMatrix::from_diag(&[4.0, 1.0]), &[1.0, 1.0]);
        let f = 2f64.sqrt() / 17f64.sqrt();
        assert!(close(&c, &[4.0 * f, f], 1e-12));
        assert!((c[0] - 1.3720).abs() < 1e-4 && (c[1] - 0.3430).abs() < 1e-4);

        // along an eigenvector: unchanged
        let c = candidate_c1(&[1.0, 1.0], &SymMatrix::from_diag(&[4.0, 1.0]), &[3.0, 1.0]);
        assert!(close(&c, &[3.0, 1.0], 1e-15));

        assert_eq!(candidate_c1(&[2.0, 2.0], &SymMatrix::identity(2), &[2.0, 2.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn c2_examples() {
        let m = diag_model(&[1.0, 1.0]);
        let p = [0.3, -1.2];
        assert!(close(&candidate_c2(&[1.0, 1.0], &m.chol, &p), &p, 1e-9));

        let m = diag_model(&[4.0, 1.0]);
        let c = candidate_c2(&[0.0, 0.0], &m.chol, &[1.0, 1.0]);
        let f = 2f64.sqrt() / 5f64.sqrt();
        assert!(close(&c, &[2.0 * f, f], 1e-9));
        assert!((c[0] - 1.2649).abs() < 1e-4 && (c[1] - 0.6325).abs() < 1e-4);
    }

    #[test]
    fn weight_examples() {
        let w = weight(Weighting::Euclidean, &[0.0, 0.0], &[3.0, 4.0], None, None).unwrap();
        assert_eq!(w, Weight::Value(0.2));

        let id = diag_model(&[1.0, 1.0]);
        let p = [0.7, -0.4];
        let (Weight::Value(w1), Weight::Value(w2)) = (
            weight(Weighting::Euclidean, &[0.0, 0.0], &p, None, None).unwrap(),
            weight(Weighting::MahalanobisAtNeighbor, &[0.0, 0.0], &p, Some(&id), None).unwrap(),
        ) else {
            panic!("expected values");
        };
        assert!((w1 - w2).abs() < 1e-9);

        let m = diag_model(&[4.0, 1.0]);
        let Weight::Value(w) =
            weight(Weighting::MahalanobisAtNeighbor, &[0.0, 0.0], &[2.0, 1.0], Some(&m), None).unwrap()
        else {
            panic!()
        };
        assert!((w - 1.0 / 2f64.sqrt()).abs() < 1e-9);

        assert_eq!(
            weight(Weighting::Euclidean, &[1.0, 1.0], &[1.0, 1.0], None, None).unwrap(),
            Weight::ExactHit
        );
        assert!(weight(Weighting::MahalanobisAtSample, &[0.0, 0.0], &[1.0, 0.0], None, None).is_err());
    }

    fn setup(n: usize, seed: u64) -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // noisy parabola in the plane
        let rows: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                let t: f64 = rng.random_range(-1.0..1.0);
                [t, t * t + rng.random_range(-0.02..0.02)]
            })
            .collect();
        PointSet::from_rows(&rows).unwrap()
    }

    #[test]
    fn single_neighbor_returns_its_candidate() {
        let x = setup(50, 1);
        let idx = NeighborIndex::build(&x).unwrap();
        let models = fit_local_models(&x, &idx, 6, Jitter::Auto, true).unwrap();
        let c = Corrector::new(&x, &idx, &models, CorrectionRule::default(), 1).unwrap();
        let p = [0.11, 0.05];
        let nl = idx.query(&p, 1, None).unwrap();
        let got = c.correct_point(&p).unwrap();
        let want = candidate_c2(x.row(nl.ids[0]), &models[nl.ids[0]].chol, &p);
        assert!(close(&got, &want, 1e-12));
    }

    #[test]
    fn two_neighbors_weighted_mean() {
        // p sits at distance 3 from x0 and 1 from x1, so W1 weights are 1/3 and 1
        let x = PointSet::from_rows(&[[0.0, 0.0], [4.0, 0.0], [0.0, 10.0]]).unwrap();
        let idx = NeighborIndex::build(&x).unwrap();
        let models = fit_local_models(&x, &idx, 2, Jitter::Auto, true).unwrap();
        let rule = CorrectionRule::new(CandidateMap::Cholesky, Weighting::Euclidean);
        let c = Corrector::new(&x, &idx, &models, rule, 2).unwrap();
        let p = [3.0, 0.0];
        let got = c.correct_point(&p).unwrap();
        let c0 = candidate_c2(x.row(0), &models[0].chol, &p);
        let c1 = candidate_c2(x.row(1), &models[1].chol, &p);
        // weights 1/3 and 1 normalize to 1 : 3
        let want = [(c0[0] + 3.0 * c1[0]) / 4.0, (c0[1] + 3.0 * c1[1]) / 4.0];
        assert!(close(&got, &want, 1e-12), "{got:?} vs {want:?}");
    }

    #[test]
    fn original_points_are_fixed_points() {
        let x = setup(200, 2);
        let idx = NeighborIndex::build(&x).unwrap();
        let models = fit_local_models(&x, &idx, 10, Jitter::Auto, true).unwrap();
        for cand in [CandidateMap::Covariance, CandidateMap::Cholesky] {
            for w in [
                Weighting::Euclidean,
                Weighting::MahalanobisAtNeighbor,
                Weighting::MahalanobisAtSample,
            ] {
                let c = Corrector::new(&x, &idx, &models, CorrectionRule::new(cand, w), 10).unwrap();
                let out = c.correct_all(&x).unwrap();
                assert_eq!(out, x);
            }
        }
    }

    #[test]
    fn correct_all_matches_point_queries_and_is_in_hull() {
        let x = setup(300, 3);
        let idx = NeighborIndex::build(&x).unwrap();
        let models = fit_local_models(&x, &idx, 12, Jitter::Auto, true).unwrap();
        let c = Corrector::new(&x, &idx, &models, CorrectionRule::default(), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let raw: Vec<[f64; 2]> = (0..200)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-0.2..1.2)])
            .collect();
        let raw = PointSet::from_rows(&raw).unwrap();
        let out = c.correct_all(&raw).unwrap();
        for i in 0..raw.len() {
            let p = raw.row(i);
            assert_eq!(out.row(i), c.correct_point(p).unwrap().as_slice());
            // bounding box of the candidates contains the weighted mean
            let nl = idx.query(p, 8, None).unwrap();
            let cands: Vec<Vec<f64>> = nl
                .ids
                .iter()
                .map(|&j| candidate_c2(x.row(j), &models[j].chol, p))
                .collect();
            for a in 0..2 {
                let lo = cands.iter().map(|c| c[a]).fold(f64::INFINITY, f64::min);
                let hi = cands.iter().map(|c| c[a]).fold(f64::NEG_INFINITY, f64::max);
                assert!(out.row(i)[a] >= lo - 1e-12 && out.row(i)[a] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn invalid_rules() {
        let x = setup(20, 5);
        let idx = NeighborIndex::build(&x).unwrap();
        let models = fit_local_models(&x, &idx, 3, Jitter::Auto, true).unwrap();
        assert!(Corrector::new(&x, &idx, &models, CorrectionRule::default().with_power(0.5), 3).is_err());
        assert!(Corrector::new(&x, &idx, &models, CorrectionRule::default(), 21).is_err());
        let c = Corrector::new(&x, &idx, &models, CorrectionRule::default(), 3).unwrap();
        let empty = NeighborList { ids: vec![], dists: vec![] };
        assert!(c.correct_with(&[0.0, 0.0], &empty).is_err());
    }

    #[test]
    fn powered_weights_pull_towards_nearest() {
        let x = setup(100, 6);
        let idx = NeighborIndex::build(&x).unwrap();
        let models = fit_local_models(&x, &idx, 8, Jitter::Auto, true).unwrap();
        let p = [0.31, 0.2];
        let nearest = idx.query(&p, 1, None).unwrap().ids[0];
        let near_c = candidate_c2(x.row(nearest), &models[nearest].chol, &p);
        let rule = CorrectionRule::new(CandidateMap::Cholesky, Weighting::Euclidean);
        let plain = Corrector::new(&x, &idx, &models, rule, 8).unwrap().correct_point(&p).unwrap();
        let powered = Corrector::new(&x, &idx, &models, rule.with_power(8.0), 8)
            .unwrap()
            .correct_point(&p)
            .unwrap();
        let dist = |a: &[f64]| points::norm(&points::sub(a, &near_c));
        assert!(dist(&powered) < dist(&plain));
    }

    fn spd(d: usize, e: &[f64]) -> SymMatrix {
        let mut s = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                s[i * d + j] = (0..d).map(|k| e[i * d + k] * e[j * d + k]).sum::<f64>()
                    + if i == j { 0.05 } else { 0.0 };
            }
        }
        SymMatrix::from_full(d, s).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn candidates_preserve_distance(
            d in 1usize..=6,
            e in proptest::collection::vec(-2.0f64..2.0, 36),
            x in proptest::collection::vec(-5.0f64..5.0, 6),
            p in proptest::collection::vec(-5.0f64..5.0, 6),
        ) {
            let sigma = spd(d, &e);
            let chol = linalg::cholesky(&sigma, 1e-9).unwrap();
            let (x, p) = (&x[..d], &p[..d]);
            let r = points::norm(&points::sub(p, x));
            for c in [candidate_c1(x, &sigma, p), candidate_c2(x, &chol, p)] {
                let rc = points::norm(&points::sub(&c, x));
                prop_assert!((rc - r).abs() <= 1e-9 * r.max(1e-300));
            }
        }

        #[test]
        fn c2_prescaling_mahalanobis_identity(
            d in 1usize..=6,
            e in proptest::collection::vec(-2.0f64..2.0, 36),
            x in proptest::collection::vec(-5.0f64..5.0, 6),
            p in proptest::collection::vec(-5.0f64..5.0, 6),
        ) {
            let sigma = spd(d, &e);
            let chol = linalg::cholesky(&sigma, 1e-9).unwrap();
            let v = points::sub(&p[..d], &x[..d]);
            let lv = chol.mul_vec(&v);
            let lhs = linalg::mahalanobis_sq(&lv, &chol);
            let rhs: f64 = v.iter().map(|a| a * a).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.max(1e-12));
        }
    }
}

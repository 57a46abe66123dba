//! Local intrinsic dimensionality estimators.
//!
//! Two prototypes are provided, one per estimator family:
//!
//! * Hill (expansion based): the maximum-likelihood estimate over the ratios
//!   of the k-th neighbor distance to the closer ones,
//!   `((1/(k-1)) * sum_{i<k} ln(r_k / r_i))^{-1}`.
//! * ABID (angle based): with unit offsets `u_i` from the query to its
//!   neighbors, `E[cos^2] = 1/δ` for isotropic directions, so
//!   `k(k-1) / sum_{i≠j} <u_i, u_j>^2` estimates δ.
//!
//! Degenerate neighborhoods yield `f64::INFINITY` rather than an error; the
//! harness counts those separately.

use std::fmt;
use std::str::FromStr;

use crate::error::{MessError, Result};
use crate::neighbors::NeighborIndex;
use crate::par;
use crate::points::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Estimator {
    Hill,
    #[default]
    Abid,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Hill => "hill",
            Estimator::Abid => "abid",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = MessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hill" => Ok(Estimator::Hill),
            "abid" => Ok(Estimator::Abid),
            other => Err(MessError::invalid("estimator", format!("unknown estimator `{other}`"))),
        }
    }
}

/// ABID normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AbidVariant {
    /// `k(k-1) / sum_{i≠j} cos^2`.
    #[default]
    OffDiagonal,
    /// `k^2 / sum_{i,j} cos^2` (self pairs included).
    WithSelfPairs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdEstimate {
    pub point: usize,
    /// Positive, or `f64::INFINITY` for a degenerate neighborhood.
    pub value: f64,
    pub estimator: Estimator,
    pub k: usize,
}

impl IdEstimate {
    pub fn is_degenerate(&self) -> bool {
        !self.value.is_finite()
    }
}

/// Hill estimate from ascending neighbor distances.
///
/// Zero distances are replaced by `1e-12` times the smallest positive one.
pub fn hill(distances: &[f64]) -> Result<f64> {
    let k = distances.len();
    if k < 2 {
        return Err(MessError::invalid("k", "Hill needs at least 2 distances"));
    }
    let rk = distances[k - 1];
    if !(rk > 0.0) {
        return Ok(f64::INFINITY);
    }
    let floor = distances
        .iter()
        .copied()
        .find(|&r| r > 0.0)
        .unwrap_or(rk)
        * 1e-12;
    let sum: f64 = distances[..k - 1]
        .iter()
        .map(|&r| (rk / if r > 0.0 { r } else { floor }).ln())
        .sum();
    if sum <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((k - 1) as f64 / sum)
}

/// ABID estimate from neighbor offsets `x_i - x`. Zero offsets are dropped.
pub fn abid(offsets: &[&[f64]], variant: AbidVariant) -> Result<f64> {
    let d = offsets.first().map_or(0, |o| o.len());
    let units: Vec<Vec<f64>> = offsets
        .iter()
        .filter_map(|o| {
            let n = o.iter().map(|x| x * x).sum::<f64>().sqrt();
            (n > 0.0).then(|| o.iter().map(|x| x / n).collect())
        })
        .collect();
    let k = units.len();
    if k < 2 {
        return Err(MessError::DegenerateNeighborhood(
            "ABID needs at least 2 nonzero offsets".into(),
        ));
    }
    // sum_{i,j} <u_i,u_j>^2 = |sum_i u_i u_i^T|_F^2, cheaper than all pairs
    // once k exceeds d
    let total = if k > d {
        let mut m = vec![0.0; d * d];
        for u in &units {
            for a in 0..d {
                let ua = u[a];
                if ua == 0.0 {
                    continue;
                }
                for b in a..d {
                    m[a * d + b] += ua * u[b];
                }
            }
        }
        let mut s = 0.0;
        for a in 0..d {
            s += m[a * d + a] * m[a * d + a];
            for b in (a + 1)..d {
                s += 2.0 * m[a * d + b] * m[a * d + b];
            }
        }
        s
    } else {
        let mut s = k as f64;
        for i in 0..k {
            for j in (i + 1)..k {
                let c: f64 = units[i].iter().zip(&units[j]).map(|(a, b)| a * b).sum();
                s += 2.0 * c * c;
            }
        }
        s
    };
    let kf = k as f64;
    let value = match variant {
        AbidVariant::OffDiagonal => {
            let off = total - kf;
            if off <= 1e-12 * kf * (kf - 1.0) {
                return Ok(f64::INFINITY);
            }
            kf * (kf - 1.0) / off
        }
        AbidVariant::WithSelfPairs => kf * kf / total,
    };
    Ok(value)
}

/// Which reference points are not eligible as neighbors of query `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exclusion {
    #[default]
    None,
    /// Reference id `i` (queries and reference are the same set).
    SameIndex,
    /// Reference points at distance zero from the query.
    Identical,
    /// Reference rows `i*ext .. (i+1)*ext`, i.e. the query's own
    /// supersamples.
    OwnSamples { ext: usize },
}

/// Per-query ID estimates with neighborhoods drawn from `reference`.
pub fn estimate_set(
    queries: &PointSet,
    reference: &NeighborIndex<'_>,
    k: usize,
    estimator: Estimator,
    exclusion: Exclusion,
) -> Result<Vec<IdEstimate>> {
    estimate_set_with(queries, reference, k, estimator, exclusion, AbidVariant::default())
}

pub fn estimate_set_with(
    queries: &PointSet,
    reference: &NeighborIndex<'_>,
    k: usize,
    estimator: Estimator,
    exclusion: Exclusion,
    variant: AbidVariant,
) -> Result<Vec<IdEstimate>> {
    if queries.dim() != reference.points().dim() {
        return Err(MessError::DimensionMismatch {
            expected: reference.points().dim(),
            got: queries.dim(),
        });
    }
    let min_k = 2;
    if k < min_k {
        return Err(MessError::invalid("k", "estimators need at least 2 neighbors"));
    }
    let refs = reference.points();
    par::try_map_indexed(queries.len(), |i| {
        let q = queries.row(i);
        let nl = match exclusion {
            Exclusion::None => reference.query(q, k, None)?,
            Exclusion::SameIndex => reference.query(q, k, Some(i))?,
            Exclusion::Identical => reference.query_filtered(q, k, |j| refs.row(j) != q)?,
            Exclusion::OwnSamples { ext } => {
                reference.query_filtered(q, k, |j| j / ext.max(1) != i)?
            }
        };
        let value = match estimator {
            Estimator::Hill => hill(&nl.dists)?,
            Estimator::Abid => {
                let offsets: Vec<Vec<f64>> = nl
                    .ids
                    .iter()
                    .map(|&j| refs.row(j).iter().zip(q).map(|(a, b)| a - b).collect())
                    .collect();
                let views: Vec<&[f64]> = offsets.iter().map(|o| o.as_slice()).collect();
                match abid(&views, variant) {
                    Ok(v) => v,
                    // every neighbor coincides with the query
                    Err(MessError::DegenerateNeighborhood(_)) => f64::INFINITY,
                    Err(e) => return Err(e),
                }
            }
        };
        Ok(IdEstimate {
            point: i,
            value,
            estimator,
            k,
        })
    })
}

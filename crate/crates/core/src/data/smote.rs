use rand::Rng;

use crate::error::{MessError, Result};
use crate::neighbors::NeighborIndex;
use crate::points::PointSet;
use crate::rng::{self, Purpose};

/// `x + lambda (neighbor - x)`.
pub fn smote_point(x: &[f64], neighbor: &[f64], lambda: f64) -> Vec<f64> {
    x.iter().zip(neighbor).map(|(a, b)| a + lambda * (b - a)).collect()
}

/// SMOTE-style interpolation: for every point, `ext` samples on segments to
/// uniformly chosen members of its `k` nearest neighbors. Row `i * ext + s`
/// is sample `s` of point `i`.
pub fn smote_supersample(points: &PointSet, ext: usize, k: usize, seed: u64) -> Result<PointSet> {
    if ext == 0 {
        return Err(MessError::invalid("ext", "must be at least 1"));
    }
    if k == 0 {
        return Err(MessError::invalid("k", "must be at least 1"));
    }
    let index = NeighborIndex::build(points)?;
    let rows = crate::par::try_map_indexed(points.len(), |i| {
        let x = points.row(i);
        let nn = index.query(x, k, Some(i))?;
        let mut out = Vec::with_capacity(ext * points.dim());
        for s in 0..ext {
            let mut r = rng::stream(seed, Purpose::Smote, i as u64, s as u64);
            let j = nn.ids[r.random_range(0..nn.ids.len())];
            let lambda: f64 = r.random();
            out.extend(smote_point(x, points.row(j), lambda));
        }
        Ok(out)
    })?;
    PointSet::from_flat(points.dim(), rows.concat())
}

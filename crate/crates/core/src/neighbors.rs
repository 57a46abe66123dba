//! Exact Euclidean k-nearest-neighbor queries.
//!
//! Low-dimensional reference sets are indexed with a kd-tree; above
//! [`TREE_MAX_DIM`] coordinates the index falls back to a linear scan with
//! partial-distance early exit, which beats a tree once pruning stops
//! working. Both paths share the distance kernel and the tie rule (equal
//! distances are ordered by smaller point id), so their results are
//! identical to a naive scan.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{MessError, Result};
use crate::par;
use crate::points::PointSet;

/// Highest ambient dimension for which a kd-tree is built.
pub const TREE_MAX_DIM: usize = 16;

const LEAF_SIZE: usize = 24;

/// Sorted neighbors of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub ids: Vec<usize>,
    /// Euclidean distances, ascending.
    pub dists: Vec<f64>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    d2: f64,
    id: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.id.cmp(&other.id))
    }
}

/// Bounded max-heap keeping the `k` best `(d2, id)` pairs.
struct TopK {
    k: usize,
    heap: BinaryHeap<Candidate>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    fn worst(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |c| c.d2)
        }
    }

    #[inline]
    fn offer(&mut self, c: Candidate) {
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if let Some(top) = self.heap.peek() {
            if c < *top {
                self.heap.pop();
                self.heap.push(c);
            }
        }
    }

    fn into_list(self) -> NeighborList {
        let sorted = self.heap.into_sorted_vec();
        NeighborList {
            ids: sorted.iter().map(|c| c.id).collect(),
            dists: sorted.iter().map(|c| c.d2.sqrt()).collect(),
        }
    }
}

/// Squared distance, abandoning the sum once it exceeds `bound`.
///
/// Partial sums only grow, so a result `> bound` is final; any result
/// `<= bound` is the complete sum in the same order as the full kernel.
#[inline]
fn sq_dist_bounded(a: &[f64], b: &[f64], bound: f64) -> f64 {
    let mut s = 0.0;
    let mut ca = a.chunks(8);
    let mut cb = b.chunks(8);
    while let (Some(x), Some(y)) = (ca.next(), cb.next()) {
        for (u, v) in x.iter().zip(y) {
            let t = u - v;
            s += t * t;
        }
        if s > bound {
            return s;
        }
    }
    s
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct KdTree {
    /// Point ids permuted so every leaf owns a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    fn build(points: &PointSet) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        let n = order.len();
        Self::build_node(points, &mut order, 0, n, &mut nodes);
        Self { order, nodes }
    }

    fn build_node(
        points: &PointSet,
        order: &mut [usize],
        start: usize,
        end: usize,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let me = nodes.len();
        if end - start <= LEAF_SIZE {
            nodes.push(Node::Leaf { start, end });
            return me;
        }
        let d = points.dim();
        let slice = &mut order[start..end];
        let mut axis = 0;
        let mut best_spread = -1.0;
        for j in 0..d {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in slice.iter() {
                let v = points.row(i)[j];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                axis = j;
            }
        }
        if best_spread <= 0.0 {
            nodes.push(Node::Leaf { start, end });
            return me;
        }
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            points.row(a)[axis]
                .total_cmp(&points.row(b)[axis])
                .then(a.cmp(&b))
        });
        let value = points.row(slice[mid])[axis];
        nodes.push(Node::Leaf { start, end }); // placeholder
        let left = Self::build_node(points, order, start, start + mid, nodes);
        let right = Self::build_node(points, order, start + mid, end, nodes);
        nodes[me] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        me
    }

    fn search<F: Fn(usize) -> bool>(
        &self,
        points: &PointSet,
        node: usize,
        q: &[f64],
        offsets: &mut [f64],
        rd: f64,
        keep: &F,
        top: &mut TopK,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &id in &self.order[start..end] {
                    if !keep(id) {
                        continue;
                    }
                    let worst = top.worst();
                    let d2 = sq_dist_bounded(q, points.row(id), worst);
                    if d2 <= worst {
                        top.offer(Candidate { d2, id });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                // points equal to the split value may sit on either side
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(points, near, q, offsets, rd, keep, top);
                let old = offsets[axis];
                let rd_far = rd - old * old + diff * diff;
                if rd_far * (1.0 - 1e-12) <= top.worst() {
                    offsets[axis] = diff;
                    self.search(points, far, q, offsets, rd_far, keep, top);
                    offsets[axis] = old;
                }
            }
        }
    }
}

/// Exact k-nn index over a borrowed reference set.
#[derive(Debug, Clone)]
pub struct NeighborIndex<'a> {
    points: &'a PointSet,
    tree: Option<KdTree>,
}

impl<'a> NeighborIndex<'a> {
    pub fn build(points: &'a PointSet) -> Result<Self> {
        if points.is_empty() {
            return Err(MessError::InsufficientPoints {
                param: "points",
                requested: 1,
                available: 0,
            });
        }
        if !points.is_finite() {
            return Err(MessError::invalid("points", "non-finite coordinate"));
        }
        let tree = (points.dim() <= TREE_MAX_DIM).then(|| KdTree::build(points));
        Ok(Self { points, tree })
    }

    /// Forces a linear scan regardless of dimension.
    pub fn build_brute_force(points: &'a PointSet) -> Result<Self> {
        let mut idx = Self::build(points)?;
        idx.tree = None;
        Ok(idx)
    }

    pub fn points(&self) -> &'a PointSet {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k` nearest reference points to `q`, optionally skipping one id.
    pub fn query(&self, q: &[f64], k: usize, exclude: Option<usize>) -> Result<NeighborList> {
        let available = self.len() - usize::from(exclude.is_some_and(|e| e < self.len()));
        if k > available {
            return Err(MessError::InsufficientPoints {
                param: "k",
                requested: k,
                available,
            });
        }
        self.query_filtered(q, k, |id| Some(id) != exclude)
    }

    /// The `k` nearest reference points among those with `keep(id) == true`.
    pub fn query_filtered<F: Fn(usize) -> bool>(
        &self,
        q: &[f64],
        k: usize,
        keep: F,
    ) -> Result<NeighborList> {
        if k == 0 {
            return Err(MessError::invalid("k", "must be at least 1"));
        }
        if q.len() != self.points.dim() {
            return Err(MessError::DimensionMismatch {
                expected: self.points.dim(),
                got: q.len(),
            });
        }
        let mut top = TopK::new(k);
        match &self.tree {
            Some(tree) => {
                let mut offsets = vec![0.0; q.len()];
                tree.search(self.points, 0, q, &mut offsets, 0.0, &keep, &mut top);
            }
            None => {
                for (id, row) in self.points.rows().enumerate() {
                    if !keep(id) {
                        continue;
                    }
                    let worst = top.worst();
                    let d2 = sq_dist_bounded(q, row, worst);
                    if d2 <= worst {
                        top.offer(Candidate { d2, id });
                    }
                }
            }
        }
        if top.heap.len() < k {
            return Err(MessError::InsufficientPoints {
                param: "k",
                requested: k,
                available: top.heap.len(),
            });
        }
        Ok(top.into_list())
    }

    /// Queries every row of `queries`. With `exclude_self`, query `i` skips
    /// reference id `i` (for self-queries of the indexed set).
    pub fn query_batch(
        &self,
        queries: &PointSet,
        k: usize,
        exclude_self: bool,
    ) -> Result<Vec<NeighborList>> {
        par::try_map_indexed(queries.len(), |i| {
            self.query(queries.row(i), k, exclude_self.then_some(i))
        })
    }
}

//! Manifold-faithful supersampling for local intrinsic dimensionality (ID)
//! estimation.
//!
//! A point set `X` is enlarged by `ext` virtual samples per point. Samples are
//! drawn from local covariance models fitted to the k-nearest neighbors of
//! each point, moved back onto the manifold by an inverse-distance-weighted
//! mean of rotated candidates, and the union is then used as the reference
//! set for ID estimation of the original points with `ext`-times larger
//! neighborhoods at roughly the same radius.
//!
//! The pipeline stages live in their own modules:
//!
//! * [`linalg`]: covariance assembly, regularized Cholesky, Jacobi
//!   eigendecomposition, Mahalanobis distances.
//! * [`neighbors`]: exact Euclidean k-nn with a deterministic tie rule.
//! * [`localmodel`]: per-point covariance models.
//! * [`generate`]: raw supersample generation rules.
//! * [`correct`]: candidate maps and IDW weights that pull samples onto the
//!   manifold.
//! * [`estimate`]: Hill and ABID local ID estimators.
//! * [`data`]: synthetic manifolds, CSV I/O and the SMOTE baseline.
//! * [`pipeline`]: the end-to-end run.
//! * [`harness`]: summaries, local deviation, sweeps, reports and recipes.

mod clock;
pub mod correct;
pub mod data;
pub mod error;
pub mod estimate;
pub mod generate;
pub mod harness;
pub mod linalg;
pub mod localmodel;
pub mod neighbors;
mod par;
pub mod pipeline;
pub mod points;
pub mod rng;

pub use error::{MessError, Result};
pub use points::PointSet;

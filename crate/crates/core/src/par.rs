//! Thin switch between rayon and serial iteration.
//!
//! Every parallel stage is an indexed map whose per-index work is a pure
//! function of its inputs, so results never depend on the worker count.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

/// Like [`map_indexed`] for fallible work; the error of the lowest failing
/// index is returned.
pub(crate) fn try_map_indexed<R, F>(n: usize, f: F) -> crate::Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> crate::Result<R> + Sync + Send,
{
    map_indexed(n, f).into_iter().collect()
}

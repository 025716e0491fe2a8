//! Execution policy for the data-parallel loops (per-cell kernels, sparse
//! matrix-vector products, reductions).
//!
//! Every parallel path produces bit-identical results to the sequential one:
//! work is split into fixed chunks whose partial results are combined in
//! index order. Without the `parallel` feature, [`Execution::Parallel`]
//! runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Fixed reduction chunk; partial sums are added in chunk order.
const REDUCE_CHUNK: usize = 4096;

/// `(0..n).map(f).collect()`, possibly in parallel. Output order is by index.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f(i, &mut out[i])` to every entry.
pub fn for_each_mut<T, F>(exec: Execution, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_iter_mut().enumerate().for_each(|(i, v)| f(i, v));
        return;
    }
    let _ = exec;
    out.iter_mut().enumerate().for_each(|(i, v)| f(i, v));
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum_range<F>(exec: Execution, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let n_chunks = n.div_ceil(REDUCE_CHUNK);
    let partial = map_range(exec, n_chunks, |k| {
        let lo = k * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.iter().sum()
}

pub fn dot(exec: Execution, a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_range(exec, a.len(), |i| a[i] * b[i])
}

//! Execution helpers for the data-parallel kernels.
//!
//! Everything here is deterministic: parallel results are collected in index
//! order and reduced sequentially, so output bytes do not depend on the
//! thread count. With the `parallel` feature disabled the same entry points
//! degrade to plain loops.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluate `f(0..n)` and collect results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(n, f)
    }
}

/// Sequential twin of [`map_indexed`], kept public so benchmarks can compare
/// the two paths in one build.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Cap the worker pool at `n` threads. Must run before any parallel work;
/// the pool can only be sized once per process. A no-op without the
/// `parallel` feature.
pub fn configure_threads(n: usize) -> crate::Result<()> {
    if n == 0 {
        return Err(crate::Error::invalid("thread count must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| crate::Error::invalid(format!("worker pool already running: {e}")))
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let a = map_indexed(100, |i| i * i);
        let b = map_indexed_seq(100, |i| i * i);
        assert_eq!(a, b);
    }
}

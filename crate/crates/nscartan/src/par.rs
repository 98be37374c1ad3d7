//! Order-preserving data parallelism with a sequential fallback.
//!
//! Scans over primes, τ samples, and bound grids are embarrassingly
//! parallel; results are always collected in input order, so output bytes do
//! not depend on the thread count. Built with the `parallel` feature
//! (default) this fans out over a work-stealing pool; without it the same
//! API runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving input order in the output.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Map `f` over `items`, preserving input order in the output.
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// Cap the worker pool at `jobs` threads (global, first call wins). With the
/// sequential fallback this is a no-op; `jobs = 1` always means sequential.
#[cfg(feature = "parallel")]
pub fn configure_jobs(jobs: usize) -> bool {
    if jobs == 0 {
        return false;
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .is_ok()
}

/// Cap the worker pool at `jobs` threads (global, first call wins). With the
/// sequential fallback this is a no-op; `jobs = 1` always means sequential.
#[cfg(not(feature = "parallel"))]
pub fn configure_jobs(jobs: usize) -> bool {
    jobs > 0
}

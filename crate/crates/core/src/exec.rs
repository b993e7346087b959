//! Data-parallel execution with a sequential fallback.
//!
//! All hot loops (permutation draws, Monte Carlo replications) funnel
//! through [`map_indices`], which runs on rayon when the `parallel`
//! feature is enabled (the default) and as a plain loop otherwise.
//! Results are assembled in index order either way, so output never
//! depends on scheduling.

/// Apply `op` to `0..count` and collect results in index order.
#[cfg(feature = "parallel")]
pub fn map_indices<T, F>(count: usize, op: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(op).collect()
}

/// Apply `op` to `0..count` and collect results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indices<T, F>(count: usize, op: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(op).collect()
}

/// Cap the worker count for the process. `None` keeps the machine default.
///
/// Calling this more than once, or after any parallel work has run, has
/// no effect; ignored entirely without the `parallel` feature.
pub fn configure_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

//! Data-parallel helpers.
//!
//! Every helper returns results in index order, so the output of a parallel
//! run is bitwise identical to the sequential one. Without the `parallel`
//! feature both execution modes run sequentially.

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Applies `f(index, chunk)` to consecutive `chunk`-sized pieces of `data`
/// and collects the return values.
pub fn map_chunks_mut<T, F>(exec: Execution, data: &mut [f64], chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut [f64]) -> T + Sync + Send,
{
    assert!(chunk > 0, "chunk size must be positive");
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk)
                .enumerate()
                .map(|(i, c)| f(i, c))
                .collect()
        }
        _ => data
            .chunks_mut(chunk)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect(),
    }
}

/// Evaluates `f(i)` for `i in 0..n`.
pub fn map_indices<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Caps the global worker pool. Only the first call has an effect.
#[cfg(feature = "parallel")]
pub fn init_workers(jobs: usize) -> bool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .is_ok()
}

#[cfg(not(feature = "parallel"))]
pub fn init_workers(_jobs: usize) -> bool {
    false
}

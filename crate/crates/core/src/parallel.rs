//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) the map runs on the rayon global
//! pool; without it the same API iterates in order. Results are collected
//! in input order either way, so outputs are identical across thread
//! counts and feature choices.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Always-sequential map, kept for benchmarking against the parallel path.
pub fn map_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Honor `BOSEGAS_THREADS` for the worker count. Thread count never
/// affects numerical results, only wall time.
pub fn configure_threads_from_env() {
    #[cfg(feature = "parallel")]
    if let Ok(val) = std::env::var("BOSEGAS_THREADS") {
        if let Ok(n) = val.parse::<usize>() {
            if n > 0 {
                // Ignore the error if a global pool already exists.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

//! Scoped worker threads with results assembled in input order.

use std::num::NonZeroUsize;
use std::thread;

use gridveil_core::privacy::{mc_block_count, monte_carlo_block, GaussianHypothesisPair};

pub const THREADS_ENV: &str = "GRIDVEIL_THREADS";

/// Worker cap from `GRIDVEIL_THREADS`; unset, unparsable or `0` means one worker
/// per available core.
pub fn worker_count() -> usize {
    let auto = || thread::available_parallelism().map_or(1, NonZeroUsize::get);
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(0) | None => auto(),
        Some(n) => n,
    }
}

/// Applies `f` to every item on up to `workers` threads. Output order matches
/// input order regardless of scheduling.
pub fn map_ordered<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// Monte Carlo success rate with blocks spread over `workers` threads; equal to
/// the single-threaded estimate for any worker count.
pub fn monte_carlo_success(pair: &GaussianHypothesisPair, trials: u64, seed: u64, workers: usize) -> f64 {
    let blocks: Vec<u64> = (0..mc_block_count(trials)).collect();
    let successes: u64 = map_ordered(&blocks, workers, |&b| monte_carlo_block(pair, trials, seed, b)).into_iter().sum();
    successes as f64 / trials as f64
}

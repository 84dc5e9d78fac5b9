//! Path-parallel map-reduce with a result that does not depend on the
//! execution policy or the number of worker threads.
//!
//! Paths are split into fixed chunks of [`CHUNK_PATHS`] consecutive ids. Each
//! chunk is folded sequentially in path order, and chunk accumulators are
//! merged in chunk order. Only the scheduling of chunks onto threads varies.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const CHUNK_PATHS: u64 = 64;

/// How Monte Carlo paths are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecPolicy {
    Sequential,
    /// Rayon work stealing over chunks. Falls back to sequential execution
    /// when the `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl ExecPolicy {
    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Folds paths `0..num_paths` chunk by chunk and merges the chunk results.
///
/// `init` builds a fresh accumulator and scratch state for a chunk; `fold`
/// processes one path id; `merge` absorbs a later chunk into an earlier one.
pub fn map_reduce_paths<A, S, I, F, M>(
    policy: ExecPolicy,
    num_paths: u64,
    init: I,
    fold: F,
    mut merge: M,
) -> A
where
    A: Send,
    I: Fn() -> (A, S) + Sync,
    F: Fn(&mut A, &mut S, u64) + Sync,
    M: FnMut(&mut A, A),
{
    let num_chunks = num_paths.div_ceil(CHUNK_PATHS);
    let run_chunk = |c: u64| {
        let (mut acc, mut scratch) = init();
        let end = ((c + 1) * CHUNK_PATHS).min(num_paths);
        for path in c * CHUNK_PATHS..end {
            fold(&mut acc, &mut scratch, path);
        }
        acc
    };
    let chunks: Vec<A> = match policy {
        #[cfg(feature = "parallel")]
        ExecPolicy::Parallel => (0..num_chunks).into_par_iter().map(run_chunk).collect(),
        _ => (0..num_chunks).map(run_chunk).collect(),
    };
    let mut chunks = chunks.into_iter();
    let mut total = match chunks.next() {
        Some(first) => first,
        None => init().0,
    };
    for c in chunks {
        merge(&mut total, c);
    }
    total
}

/// Runs `f` on a dedicated pool of `workers` threads, so parallel work
/// inside `f` uses exactly that many. Runs inline when parallelism is
/// compiled out.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        return pool.install(f);
    }
    let _ = workers;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(policy: ExecPolicy, n: u64) -> f64 {
        map_reduce_paths(
            policy,
            n,
            || (0.0f64, ()),
            |acc, _, p| *acc += 1.0 / (p as f64 + 1.0),
            |a, b| *a += b,
        )
    }

    #[test]
    fn policies_agree_bitwise() {
        for n in [0, 1, 63, 64, 65, 1000, 12_345] {
            let s = harmonic(ExecPolicy::Sequential, n);
            assert_eq!(s.to_bits(), harmonic(ExecPolicy::Parallel, n).to_bits());
            for workers in [1, 2, 5] {
                let w = with_workers(workers, || harmonic(ExecPolicy::Parallel, n));
                assert_eq!(s.to_bits(), w.to_bits());
            }
        }
    }

    #[test]
    fn every_path_visited_once_in_order_within_chunks() {
        let ids = map_reduce_paths(
            ExecPolicy::Parallel,
            200,
            || (Vec::new(), ()),
            |acc: &mut Vec<u64>, _, p| acc.push(p),
            |a, b| a.extend(b),
        );
        assert_eq!(ids, (0..200).collect::<Vec<_>>());
    }
}

//! Per-sample seeding and the sample loop.
//!
//! Sample `i` of a run with master seed `m` draws from
//! `ChaCha8Rng::seed_from_u64(sample_seed(m, i))`, so results do not depend on
//! scheduling or on whether the loop runs in parallel.

use crate::error::Result;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer applied to `master + (index + 1) * GOLDEN_GAMMA`.
pub fn sample_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Run `f(index, seed)` for `start..start + count` in index order.
pub fn map_samples_sequential<T, F>(start: usize, count: usize, master: u64, f: F) -> Vec<T>
where
    F: Fn(usize, u64) -> T,
{
    (start..start + count).map(|i| f(i, sample_seed(master, i as u64))).collect()
}

/// Same as [`map_samples_sequential`], spread over the rayon pool.
#[cfg(feature = "parallel")]
pub fn map_samples_parallel<T, F>(start: usize, count: usize, master: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (start..start + count).into_par_iter().map(|i| f(i, sample_seed(master, i as u64))).collect()
}

/// The sample loop used by the checks: parallel when the `parallel` feature
/// is enabled, sequential otherwise. Output order is always index order.
pub fn map_samples<T, F>(start: usize, count: usize, master: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_samples_parallel(start, count, master, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_samples_sequential(start, count, master, f)
    }
}

/// Results of [`first_successes`].
#[derive(Debug)]
pub struct Attempts<S, F> {
    /// `(index, value)` of the first `want` successes, in index order.
    pub successes: Vec<(usize, S)>,
    /// `(index, value)` of every failure among the attempts consumed.
    pub failures: Vec<(usize, F)>,
    pub attempts: usize,
}

/// Attempt indices `0, 1, ...` in batches until `want` attempts succeed or
/// `max_attempts` are used. Attempts past the `want`-th success are discarded,
/// so the result is the same for every batch size and schedule.
pub fn first_successes<S, F, G>(want: usize, max_attempts: usize, master: u64, attempt: G) -> Result<Attempts<S, F>>
where
    S: Send,
    F: Send,
    G: Fn(usize, u64) -> Result<std::result::Result<S, F>> + Sync + Send,
{
    let mut out = Attempts { successes: Vec::new(), failures: Vec::new(), attempts: 0 };
    let mut next = 0;
    while out.successes.len() < want && next < max_attempts {
        let batch = (2 * (want - out.successes.len())).max(16).min(max_attempts - next);
        for (offset, result) in map_samples(next, batch, master, &attempt).into_iter().enumerate() {
            if out.successes.len() == want {
                break;
            }
            let index = next + offset;
            out.attempts = index + 1;
            match result? {
                Ok(s) => out.successes.push((index, s)),
                Err(f) => out.failures.push((index, f)),
            }
        }
        next += batch;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..1000).map(|i| sample_seed(7, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
        assert_eq!(sample_seed(7, 0), sample_seed(7, 0));
        assert_ne!(sample_seed(7, 0), sample_seed(8, 0));
    }

    #[test]
    fn loop_matches_sequential() {
        let f = |i: usize, seed: u64| (i, seed % 1000);
        assert_eq!(map_samples(3, 50, 42, f), map_samples_sequential(3, 50, 42, f));
    }

    #[test]
    fn successes_are_prefix_of_index_order() {
        let attempt = |i: usize, _seed: u64| -> Result<std::result::Result<usize, usize>> {
            Ok(if i.is_multiple_of(3) { Err(i) } else { Ok(i) })
        };
        let a = first_successes(10, 100, 1, attempt).unwrap();
        assert_eq!(a.successes.iter().map(|s| s.0).collect::<Vec<_>>(), vec![1, 2, 4, 5, 7, 8, 10, 11, 13, 14]);
        assert_eq!(a.failures.len(), 5);
        assert_eq!(a.attempts, 15);
        let short = first_successes(10, 6, 1, attempt).unwrap();
        assert_eq!(short.successes.len(), 4);
        let err = first_successes(1, 5, 1, |_, _| -> Result<std::result::Result<(), ()>> {
            Err(Error::Config("boom".into()))
        });
        assert!(err.is_err());
    }
}

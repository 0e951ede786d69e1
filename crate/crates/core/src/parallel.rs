//! Trial fan-out. With the `parallel` feature, trials run on the rayon pool;
//! without it they run in order on the calling thread. Each trial derives its
//! own randomness from its index, so both paths produce identical results.

/// Runs `f(0..count)` and returns results in index order.
pub fn map_trials<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Sequential reference path, always available (used by benches to compare).
pub fn map_trials_sequential<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

/// Whether trials are dispatched to a thread pool in this build.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 7;
        assert_eq!(map_trials(1000, f), map_trials_sequential(1000, f));
    }
}

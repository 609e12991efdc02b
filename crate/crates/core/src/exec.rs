//! Execution strategy for the heavy scans: data-parallel via a work-stealing
//! pool when the `parallel` feature is on, plain sequential otherwise or on
//! request. Callers must pass associative, commutative reductions so the
//! result never depends on chunk boundaries.

/// How a scan should run. `Auto` uses the pool when compiled in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecMode {
    #[default]
    Auto,
    Sequential,
}

/// True when this build can actually fan out.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Cap the global worker pool. Returns false when the cap could not be
/// applied (pool already started, or a sequential build).
pub fn set_global_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

/// Fold every integer in [lo, hi) and combine the partial states.
pub fn reduce_range<T, F, R>(mode: ExecMode, lo: u64, hi: u64, identity: T, fold: F, reduce: R) -> T
where
    T: Send + Sync + Clone,
    F: Fn(T, u64) -> T + Send + Sync,
    R: Fn(T, T) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Auto && hi > lo {
        use rayon::prelude::*;
        const CHUNK: u64 = 1024;
        let chunks = (hi - lo).div_ceil(CHUNK);
        return (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = lo + c * CHUNK;
                let end = hi.min(start + CHUNK);
                let mut acc = identity.clone();
                for x in start..end {
                    acc = fold(acc, x);
                }
                acc
            })
            .reduce(|| identity.clone(), &reduce);
    }
    let _ = (&mode, &reduce);
    let mut acc = identity;
    for x in lo..hi {
        acc = fold(acc, x);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let fold = |acc: u64, x: u64| acc + x * x;
        let auto = reduce_range(ExecMode::Auto, 0, 100_000, 0, fold, |a, b| a + b);
        let seq = reduce_range(ExecMode::Sequential, 0, 100_000, 0, fold, |a, b| a + b);
        assert_eq!(auto, seq);
        let direct: u64 = (0..100_000u64).map(|x| x * x).sum();
        assert_eq!(auto, direct);
    }

    #[test]
    fn empty_range_returns_identity() {
        let out = reduce_range(ExecMode::Auto, 5, 5, 42u64, |a, _| a + 1, |a, b| a + b);
        assert_eq!(out, 42);
    }

    #[test]
    fn min_witness_reduction_is_canonical() {
        // A lattice reduction (min value, then min index) must be invariant
        // under chunking; compare the two modes on an adversarial profile.
        let val = |x: u64| (x % 97) * 1000 + (x % 13);
        let fold = |acc: (u64, u64), x: u64| {
            let v = val(x);
            if v < acc.0 || (v == acc.0 && x < acc.1) {
                (v, x)
            } else {
                acc
            }
        };
        let reduce = |a: (u64, u64), b: (u64, u64)| {
            if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        };
        let id = (u64::MAX, u64::MAX);
        let auto = reduce_range(ExecMode::Auto, 1, 500_000, id, fold, reduce);
        let seq = reduce_range(ExecMode::Sequential, 1, 500_000, id, fold, reduce);
        assert_eq!(auto, seq);
    }
}

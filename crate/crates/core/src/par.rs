//! Thin data-parallel helpers.
//!
//! Every helper returns results in index order, so output is identical with
//! and without the `parallel` feature and for any thread count. Reductions
//! are left to the caller and performed sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "FFAVG_THREADS";

/// `(0..n).map(f).collect()`, parallel when enabled.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
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
        (0..n).map(f).collect()
    }
}

/// `items.iter().map(f).collect()`, parallel when enabled.
pub fn map_slice<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Installs a global worker pool sized by `FFAVG_THREADS`, if set.
///
/// Returns the thread cap that was applied. Without the `parallel` feature
/// this is a no-op returning `Some(1)`.
pub fn init_from_env() -> Option<usize> {
    #[cfg(feature = "parallel")]
    {
        let n = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)?;
        // A pool may already exist (tests, repeated calls); keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        Some(n)
    }
    #[cfg(not(feature = "parallel"))]
    {
        Some(1)
    }
}

/// Runs `f` on a dedicated pool with `threads` workers.
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

/// Runs `f` on a dedicated pool with `threads` workers.
#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let v = map_range(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
        let w = map_slice(&v, |&x| x + 1);
        assert_eq!(w[999], 1999);
    }

    #[test]
    fn single_thread_pool_matches() {
        let a = with_threads(1, || map_range(64, |i| (i as f64).sqrt()));
        let b = map_range(64, |i| (i as f64).sqrt());
        assert_eq!(a, b);
    }
}

//! Order-preserving map over independent cells.
//!
//! With the `parallel` feature the work is spread over the rayon pool;
//! without it everything runs on the calling thread. Results always come back
//! in input order so reports do not depend on scheduling.

/// Maps `f` over `items`, in parallel when the `parallel` feature is enabled.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(items, f)
    }
}

pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Like [`map`] for fallible cells; the first error in input order wins.
pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map(items, f).into_iter().collect()
}

/// Caps the global worker pool. Returns `false` when the pool was already
/// initialised or the build is sequential.
pub fn init_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

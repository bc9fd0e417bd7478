//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature the map runs on rayon; without it, on the
//! calling thread. Both paths return results in index order, so callers see
//! identical output either way. `OAS_WORKERS` bounds the rayon pool size.

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "OAS_WORKERS";

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Map `f` over `0..count` on the calling thread.
pub fn map_indexed_sequential<U, F>(count: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..count).map(f).collect()
}

#[cfg(feature = "parallel")]
fn configured_workers() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
}

/// Dedicated pool when `OAS_WORKERS` is set, read once per process.
#[cfg(feature = "parallel")]
fn sized_pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: std::sync::OnceLock<Option<rayon::ThreadPool>> = std::sync::OnceLock::new();
    POOL.get_or_init(|| {
        configured_workers()
            .and_then(|w| rayon::ThreadPoolBuilder::new().num_threads(w).build().ok())
    })
    .as_ref()
}

#[cfg(feature = "parallel")]
fn install<R: Send>(job: impl FnOnce() -> R + Send) -> R {
    match sized_pool() {
        // already on a pool thread: stay there rather than nesting pools
        Some(pool) if rayon::current_thread_index().is_none() => pool.install(job),
        _ => job(),
    }
}

/// Number of threads the parallel maps use (1 without the feature).
pub fn worker_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        sized_pool().map_or_else(rayon::current_num_threads, |p| p.current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Map `f` over `0..count` on the rayon pool.
#[cfg(feature = "parallel")]
pub fn map_indexed_parallel<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    install(|| (0..count).into_par_iter().map(&f).collect())
}

/// Map `f` over `0..count`, in parallel when the feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    map_indexed_parallel(count, f)
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    map_indexed_sequential(count, f)
}

/// Map `f` over owned items, in parallel when the feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_vec<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    install(|| items.into_par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
pub fn map_vec<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}

//! Execution-mode seam: every data-parallel site in the crate goes through
//! [`par_map`], which either fans out over rayon or runs a plain sequential
//! map.
//!
//! Both paths perform the same operations on the same inputs in the same
//! order-preserving layout, so results are byte-identical; the benches
//! compare their throughput. With the `parallel` feature disabled the
//! parallel variant silently degrades to the sequential one, keeping callers
//! free of `cfg` noise.

/// How to run the data-parallel regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Plain iteration on the calling thread.
    Sequential,
    /// Rayon work-stealing over the current thread pool (requires the
    /// `parallel` feature; falls back to sequential without it).
    Parallel,
}

/// Maps `f` over `items`, preserving order, in the requested mode.
pub fn par_map<T, U, F>(mode: ExecMode, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match mode {
        ExecMode::Sequential => items.iter().map(f).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                items.iter().map(f).collect()
            }
        }
    }
}

/// Runs `body` inside a rayon pool of `workers` threads (parallel feature
/// only; otherwise the pool request is ignored). `None` keeps the default
/// global pool.
pub fn with_worker_count<R: Send>(workers: Option<usize>, body: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match workers {
            Some(n) if n >= 1 => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool construction cannot fail for n >= 1")
                .install(body),
            _ => body(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        body()
    }
}

//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the work is spread over the rayon pool;
//! without it every call runs on the caller's thread. Results always come back
//! in input order, so output is identical either way.

/// How a batch of independent jobs is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Parallel when the feature is enabled and the batch is large enough.
    #[default]
    Auto,
    Sequential,
    Parallel,
}

const AUTO_THRESHOLD: usize = 32;

impl Execution {
    fn parallel_for(self, len: usize) -> bool {
        cfg!(feature = "parallel")
            && match self {
                Execution::Sequential => false,
                Execution::Parallel => len > 1,
                Execution::Auto => len >= AUTO_THRESHOLD,
            }
    }
}

pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.parallel_for(items.len()) {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = exec.parallel_for(items.len());
    items.iter().map(f).collect()
}

/// Sizes the global pool. Has no effect without the `parallel` feature or
/// once the pool is running.
pub fn init_threads(threads: usize) -> bool {
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

pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

//! Ordered map over image indices, optionally on a fixed-size thread pool.
//!
//! Each item is computed independently and results come back in index order,
//! so output never depends on the thread count.

use crate::error::{Error, Result};

pub(crate) fn map_indices<S, R, I, F>(n: usize, threads: usize, init: I, f: F) -> Result<Vec<R>>
where
    R: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> Result<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if threads > 1 && n > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        return pool.install(|| (0..n).into_par_iter().map_init(&init, |s, i| f(s, i)).collect());
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    let mut state = init();
    (0..n).map(|i| f(&mut state, i)).collect::<Result<Vec<R>, Error>>()
}

//! Worker-pool wrapper. All parallel work is expressed as indexed maps whose
//! outputs are reduced in index order, so results do not depend on `workers`.

use crate::error::{Error, Result};

pub struct Engine {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
    workers: usize,
}

impl Engine {
    /// `workers == 0` uses one thread per available core.
    pub fn new(workers: usize) -> Result<Self> {
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            let workers = pool.current_num_threads();
            Ok(Engine { pool: Some(pool), workers })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = Error::Config;
            Ok(Engine { workers: workers.max(1) })
        }
    }

    pub fn sequential() -> Self {
        Engine {
            #[cfg(feature = "parallel")]
            pool: None,
            workers: 1,
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `f` inside the pool so that nested [`par_map`] calls use it.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(f);
        }
        f()
    }
}

/// `(0..n).map(f)` evaluated on the current pool, collected in index order.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if rayon::current_num_threads() > 1 {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

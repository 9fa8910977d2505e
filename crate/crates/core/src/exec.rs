use rayon::prelude::*;

use crate::error::{Error, Result};

/// How independent evaluations are scheduled.
///
/// Results are always collected in index order, so both modes produce the
/// same values for pure maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    Parallel {
        threads: usize,
    },
}

impl Execution {
    pub fn from_threads(threads: usize) -> Self {
        if threads <= 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { threads }
        }
    }

    pub(crate) fn map<R, F>(self, n: usize, f: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(usize) -> Result<R> + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel { threads } => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads.max(1))
                    .build()
                    .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
                pool.install(|| (0..n).into_par_iter().map(&f).collect())
            }
        }
    }
}

//! Serial or thread-pool execution of independent work items.

use rayon::prelude::*;

/// How independent evaluations inside one optimizer step are scheduled.
///
/// `Serial` is the reference mode. `Parallel` produces identical results because
/// each work item owns its random stream and results are reduced in index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Serial,
    Parallel {
        jobs: usize,
    },
}

impl Execution {
    /// `jobs <= 1` maps to the serial reference path.
    pub fn from_jobs(jobs: usize) -> Self {
        if jobs <= 1 {
            Execution::Serial
        } else {
            Execution::Parallel { jobs }
        }
    }
}

pub(crate) struct Executor {
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    pub(crate) fn new(mode: Execution) -> Self {
        let pool = match mode {
            Execution::Serial => None,
            Execution::Parallel { jobs } => rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .ok(),
        };
        Executor { pool }
    }

    /// Maps `f` over `items` with their indices, returning results in input order.
    pub(crate) fn map_indexed<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, T) -> R + Sync + Send,
    {
        match &self.pool {
            None => items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect(),
            Some(pool) => pool.install(|| {
                items
                    .into_par_iter()
                    .enumerate()
                    .map(|(i, t)| f(i, t))
                    .collect()
            }),
        }
    }
}

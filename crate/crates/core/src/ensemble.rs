//! Deterministic ensemble execution.
//!
//! Realization `k` always draws from `derive_seed(master, k)` and results are
//! folded strictly in index order, so the output is bit-identical for any
//! worker count. Workers only change how many realizations of a batch are
//! in flight at once.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ensemble {
    pub realizations: usize,
    pub master_seed: u64,
    pub workers: usize,
}

impl Ensemble {
    pub fn new(realizations: usize, master_seed: u64) -> Self {
        Ensemble {
            realizations,
            master_seed,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn seed(&self, index: usize) -> u64 {
        derive_seed(self.master_seed, index as u64)
    }

    /// Runs `task(index, seed)` for every realization and folds the results
    /// in index order.
    pub fn fold<T, A>(
        &self,
        init: A,
        task: impl Fn(usize, u64) -> T + Sync,
        mut fold: impl FnMut(A, T) -> A,
    ) -> Result<A>
    where
        T: Send,
    {
        if self.realizations == 0 {
            return Err(Error::InvalidArgument("realization count must be at least 1".into()));
        }
        let mut acc = init;
        if self.workers <= 1 {
            for k in 0..self.realizations {
                acc = fold(acc, task(k, self.seed(k)));
            }
            return Ok(acc);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        let batch = self.workers * 2;
        let mut start = 0;
        while start < self.realizations {
            let end = (start + batch).min(self.realizations);
            let results: Vec<T> = pool.install(|| {
                (start..end)
                    .into_par_iter()
                    .map(|k| task(k, self.seed(k)))
                    .collect()
            });
            for r in results {
                acc = fold(acc, r);
            }
            start = end;
        }
        Ok(acc)
    }

    /// Collects per-realization results in index order.
    pub fn map<T: Send>(&self, task: impl Fn(usize, u64) -> T + Sync) -> Result<Vec<T>> {
        self.fold(Vec::with_capacity(self.realizations), task, |mut v, t| {
            v.push(t);
            v
        })
    }
}

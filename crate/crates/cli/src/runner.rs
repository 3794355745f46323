//! Replicate scheduling. Replicate `k` of stream `s` always draws from the
//! same generator, and results are collected in replicate order, so output
//! does not depend on the number of workers.

use levy_prune::rng::{Rng, RngStreams};
use rayon::prelude::*;

use crate::error::RunError;

pub struct Runner {
    pool: rayon::ThreadPool,
    seed: u64,
}

impl Runner {
    /// `workers = 0` uses one worker per available core.
    pub fn new(seed: u64, workers: usize) -> Result<Self, RunError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| RunError::Config(format!("cannot start workers: {e}")))?;
        Ok(Runner { pool, seed })
    }

    /// Runs `f` on `count` replicates of `stream`; row `k` is replicate `k`.
    pub fn replicates<F>(&self, stream: u64, count: u64, f: F) -> Result<Vec<Vec<f64>>, RunError>
    where
        F: Fn(&mut Rng) -> levy_prune::Result<Vec<f64>> + Sync,
    {
        let streams = RngStreams::new(self.seed, stream);
        let out = self.pool.install(|| {
            (0..count)
                .into_par_iter()
                .map(|k| f(&mut streams.replicate(k)))
                .collect::<levy_prune::Result<Vec<_>>>()
        })?;
        Ok(out)
    }
}

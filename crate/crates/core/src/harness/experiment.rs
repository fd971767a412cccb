//! Monte Carlo runner. Sessions run on a dedicated thread pool, results are
//! collected in session order and folded sequentially, so the output depends
//! only on the base seed.

use rayon::prelude::*;

use super::session::{run_session, SessionOptions, SessionRecord};
use super::stats::ExperimentStats;
use super::SessionSeeds;
use crate::error::{Error, Result};
use crate::protocol::{AliceStrategy, BobStrategy, ProtocolParams};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub params: ProtocolParams,
    pub alice: AliceStrategy,
    pub bob: BobStrategy,
    pub sessions: u64,
    pub base_seed: u64,
    /// Worker threads; `0` uses every available core.
    pub parallelism: usize,
    pub options: SessionOptions,
}

impl ExperimentConfig {
    pub fn new(params: ProtocolParams, alice: AliceStrategy, bob: BobStrategy, sessions: u64, base_seed: u64) -> Self {
        Self {
            params,
            alice,
            bob,
            sessions,
            base_seed,
            parallelism: 0,
            options: SessionOptions::default(),
        }
    }

    pub fn with_parallelism(mut self, threads: usize) -> Self {
        self.parallelism = threads;
        self
    }
}

pub fn run_records(config: &ExperimentConfig) -> Result<Vec<SessionRecord>> {
    config.params.validate()?;
    if config.sessions == 0 {
        return Err(Error::InvalidParams("an experiment needs at least one session".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..config.sessions)
            .into_par_iter()
            .map(|i| {
                let seeds = SessionSeeds::derive(config.base_seed, i);
                run_session(&config.params, config.alice, config.bob, seeds, &config.options).map(|o| o.record)
            })
            .collect()
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentStats> {
    let records = run_records(config)?;
    let mut stats = ExperimentStats::new(config.params, config.alice, config.bob, config.base_seed);
    for r in &records {
        stats.add(r);
    }
    Ok(stats)
}

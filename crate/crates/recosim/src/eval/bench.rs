use std::time::Instant;

use super::{rollout_user, run_partitioned, shared_params, EvalError, Policy};
use crate::agents::RandomAgent;
use crate::config::SimConfig;
use crate::rng::{derive_seed, TRAIN_SALT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub threads: usize,
    pub users: u64,
    pub events: u64,
    pub seconds: f64,
}

impl Throughput {
    pub fn events_per_second(&self) -> f64 {
        self.events as f64 / self.seconds
    }
}

/// Times full episodes of `n_users` users under a random policy.
pub fn measure_throughput(config: &SimConfig, n_users: u64, threads: usize, seed: u64) -> Result<Throughput, EvalError> {
    let params = shared_params(config)?;
    let policy = RandomAgent::new(config.num_products, seed);
    let population = derive_seed(seed, TRAIN_SALT);
    let start = Instant::now();
    let counts = run_partitioned(config, &params, population, false, n_users, threads, |env, range| {
        let mut events = 0u64;
        for u in range {
            events += rollout_user(env, Policy::Agent(&policy), u, false)?.events.len() as u64;
        }
        Ok(events)
    })?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(Throughput { threads, users: n_users, events: counts.into_iter().sum(), seconds })
}

//! Log generation, online evaluation and the performance sweeps.
//!
//! Training populations and evaluation populations are disjoint derivations
//! of the run seed ([`TRAIN_SALT`], [`EVAL_SALT`]). Within a population every
//! user, and the policy's action stream for that user, is seeded from the
//! user id alone, so results do not depend on how users are split across
//! threads.

mod bench;
mod stats;
mod sweep;

use std::ops::Range;
use std::sync::Arc;
use std::thread;

use thiserror::Error;

use crate::agents::{Agent, AgentError};
use crate::config::SimConfig;
use crate::env::{Environment, SimError};
use crate::event::{Event, EventLog};
use crate::model::ModelParams;
use crate::rng::{derive_seed, stream, EVAL_SALT, TRAIN_SALT};

pub use bench::{measure_throughput, Throughput};
pub use stats::{wilson_interval, CtrReport, Tally, Z_95};
pub use sweep::{sweep_bandit_events, sweep_sigma_phi, Axis, SweepRow, SweepSettings, SweepTable, ORACLE_LABEL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("no ads were displayed; the report is undefined")]
    ZeroDisplays,
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

/// What chooses the ads during a rollout.
#[derive(Clone, Copy)]
pub enum Policy<'a> {
    Agent(&'a dyn Agent),
    /// Always shows the true best action.
    Oracle,
}

impl Policy<'_> {
    fn seed(&self) -> u64 {
        match self {
            Policy::Agent(a) => a.seed(),
            Policy::Oracle => 0,
        }
    }

    fn check_products(&self, num_products: usize) -> Result<(), EvalError> {
        match self {
            Policy::Agent(a) if a.num_products() != num_products => Err(EvalError::Sim(SimError::InvalidConfig(
                crate::config::InvalidConfig(format!(
                    "agent knows {} products, environment has {num_products}",
                    a.num_products()
                )),
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub z: f64,
    /// Accumulate regret against the oracle best action.
    pub oracle: bool,
    pub threads: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { z: Z_95, oracle: false, threads: 1 }
    }
}

/// One simulated user's episode.
#[derive(Debug, Clone, PartialEq)]
pub struct UserOutcome {
    pub tally: Tally,
    pub events: Vec<Event>,
}

/// Runs user `user_id` of `env`'s population to completion under `policy`.
pub fn rollout_user(
    env: &mut Environment,
    policy: Policy<'_>,
    user_id: u64,
    with_regret: bool,
) -> Result<UserOutcome, EvalError> {
    let mut rng = stream(derive_seed(derive_seed(policy.seed(), env.population()), user_id));
    let mut tally = Tally::default();
    env.reset_user(user_id);
    while env.awaiting_action() {
        let (action, regret_ref) = match policy {
            Policy::Agent(agent) => (agent.act(env.history(), &mut rng)?, None),
            Policy::Oracle => {
                let oracle = env.oracle()?;
                let best = oracle.best_action();
                (best, Some(oracle.click_probability(best)?))
            }
        };
        let regret = if with_regret {
            let oracle = env.oracle()?;
            let best = match regret_ref {
                Some(p) => p,
                None => oracle.click_probability(oracle.best_action())?,
            };
            Some(best - oracle.click_probability(action)?)
        } else {
            None
        };
        let step = env.step(action)?;
        tally.record(step.reward == Some(true), regret);
    }
    Ok(UserOutcome { tally, events: env.history().to_vec() })
}

fn split_range(n: u64, parts: usize) -> Vec<Range<u64>> {
    let parts = parts.max(1) as u64;
    let chunk = n.div_ceil(parts).max(1);
    (0..parts)
        .map(|i| (i * chunk).min(n)..((i + 1) * chunk).min(n))
        .filter(|r| !r.is_empty())
        .collect()
}

/// Runs `job` over contiguous user-id ranges, one environment per worker, and
/// returns the per-range results in id order.
fn run_partitioned<T, F>(
    config: &SimConfig,
    params: &Arc<ModelParams>,
    population: u64,
    oracle: bool,
    n_users: u64,
    threads: usize,
    job: F,
) -> Result<Vec<T>, EvalError>
where
    T: Send,
    F: Fn(&mut Environment, Range<u64>) -> Result<T, EvalError> + Sync,
{
    let make_env = || -> Result<Environment, EvalError> {
        Ok(Environment::with_params(config.clone(), Arc::clone(params))?
            .with_population(population)
            .with_oracle(oracle))
    };
    let ranges = split_range(n_users, threads);
    if ranges.len() <= 1 {
        let mut env = make_env()?;
        return ranges.into_iter().map(|r| job(&mut env, r)).collect();
    }
    thread::scope(|scope| {
        let handles: Vec<_> = ranges
            .into_iter()
            .map(|r| {
                let job = &job;
                let make_env = &make_env;
                scope.spawn(move || job(&mut make_env()?, r))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("evaluation worker panicked")).collect()
    })
}

fn shared_params(config: &SimConfig) -> Result<Arc<ModelParams>, EvalError> {
    config.validate().map_err(SimError::from)?;
    Ok(Arc::new(ModelParams::sample(config.num_products, config.latent_dim, config.master_seed)))
}

/// Simulates `n_users` episodes under `logging_policy` and logs every event.
pub fn generate_log(
    config: &SimConfig,
    n_users: u64,
    logging_policy: &dyn Agent,
    seed: u64,
    threads: usize,
) -> Result<EventLog, EvalError> {
    let params = shared_params(config)?;
    Policy::Agent(logging_policy).check_products(config.num_products)?;
    let population = derive_seed(seed, TRAIN_SALT);
    let chunks = run_partitioned(config, &params, population, false, n_users, threads, |env, range| {
        let mut events = Vec::new();
        for u in range {
            events.extend(rollout_user(env, Policy::Agent(logging_policy), u, false)?.events);
        }
        Ok(events)
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Simulates users of the training population until at least `n_bandit`
/// bandit events exist, then truncates the log at the `n_bandit`-th one.
pub fn generate_log_with_bandit_events(
    config: &SimConfig,
    n_bandit: usize,
    logging_policy: &dyn Agent,
    seed: u64,
) -> Result<EventLog, EvalError> {
    let params = shared_params(config)?;
    Policy::Agent(logging_policy).check_products(config.num_products)?;
    let mut env = Environment::with_params(config.clone(), params)?.with_population(derive_seed(seed, TRAIN_SALT));
    let mut log = EventLog::new();
    let mut bandit = 0;
    let mut user = 0;
    while bandit < n_bandit {
        let outcome = rollout_user(&mut env, Policy::Agent(logging_policy), user, false)?;
        bandit += outcome.tally.displays as usize;
        log.extend(outcome.events);
        user += 1;
    }
    Ok(log.truncate_to_bandit_events(n_bandit))
}

/// Merged tally of `policy` over `n_users` fresh evaluation users.
pub fn evaluate_tally(
    config: &SimConfig,
    policy: Policy<'_>,
    n_users: u64,
    seed: u64,
    opts: &EvalOptions,
) -> Result<Tally, EvalError> {
    let params = shared_params(config)?;
    policy.check_products(config.num_products)?;
    let needs_oracle = opts.oracle || matches!(policy, Policy::Oracle);
    let population = derive_seed(seed, EVAL_SALT);
    let tallies = run_partitioned(config, &params, population, needs_oracle, n_users, opts.threads, |env, range| {
        range
            .map(|u| rollout_user(env, policy, u, opts.oracle).map(|o| o.tally))
            .try_fold(Tally::default(), |acc, t| t.map(|t| acc.merge(t)))
    })?;
    Ok(tallies.into_iter().fold(Tally::default(), Tally::merge))
}

/// Rolls `policy` against `n_users` fresh users and summarizes the clicks.
pub fn evaluate_online(
    config: &SimConfig,
    policy: Policy<'_>,
    n_users: u64,
    seed: u64,
    opts: &EvalOptions,
) -> Result<CtrReport, EvalError> {
    evaluate_tally(config, policy, n_users, seed, opts)?.report(opts.z, opts.oracle)
}

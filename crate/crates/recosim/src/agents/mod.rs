//! Reference recommendation policies.
//!
//! Every agent sees a user only through the events logged so far; its state
//! is the user's most recent organic view.

mod blob;
mod combined;
mod counts;
mod organic;
mod prod2vec;
mod random;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{last_organic_product, Event, EventLog};
use crate::rng::SimRng;

pub use blob::{load_agent, save_agent, BlobError, BLOB_MAGIC, BLOB_VERSION};
pub use combined::CombinedAgent;
pub use counts::{CountTable, LogisticCountAgent};
pub use organic::{OrganicTransitionTable, PureOrganicAgent};
pub use prod2vec::{Prod2VecAgent, Prod2VecConfig, Prod2VecParams};
pub use random::RandomAgent;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("agent must be trained before acting")]
    UntrainedAgent,
    #[error("malformed log: bandit event for user {user} at t={t} has no preceding organic view")]
    MalformedLog { user: u64, t: u64 },
    #[error("product {product} out of range for {num_products} products (user {user}, t={t})")]
    ProductOutOfRange { user: u64, t: u64, product: usize, num_products: usize },
    #[error("training diverged: non-finite parameters after epoch {epoch}")]
    DivergedTraining { epoch: usize },
    #[error("unknown agent `{name}`; valid names: {}", AGENT_NAMES.join(", "))]
    UnknownAgent { name: String },
}

/// Behavioral contract shared by every policy.
pub trait Agent: Send + Sync {
    fn name(&self) -> &'static str;

    fn num_products(&self) -> usize;

    /// Batch fit from a historical log, replacing any earlier fit.
    fn train(&mut self, log: &EventLog) -> Result<(), AgentError>;

    /// Action for a user whose last organic view is `state`.
    fn policy(&self, state: Option<usize>, rng: &mut SimRng) -> Result<usize, AgentError>;

    /// Action for a user with the given event history.
    fn act(&self, history: &[Event], rng: &mut SimRng) -> Result<usize, AgentError> {
        act_on_observation(self, history, rng)
    }

    /// Online feedback for one display. The default ignores it.
    fn update(&mut self, _history: &[Event], _action: usize, _click: bool) {}

    /// Seed of the agent's own action stream; zero for deterministic agents.
    fn seed(&self) -> u64 {
        0
    }
}

/// Extracts the last organic view from `history` and delegates to the policy.
pub fn act_on_observation<A: Agent + ?Sized>(
    agent: &A,
    history: &[Event],
    rng: &mut SimRng,
) -> Result<usize, AgentError> {
    agent.policy(last_organic_product(history), rng)
}

/// Pairs each bandit row with the user's last organic view before it.
pub(crate) fn bandit_samples(
    log: &EventLog,
    num_products: usize,
) -> Result<Vec<(usize, usize, bool)>, AgentError> {
    let mut samples = Vec::new();
    for user in log.users() {
        let mut state = None;
        for e in user {
            check_range(e, num_products)?;
            match (e.viewed(), e.action(), e.click()) {
                (Some(p), _, _) => state = Some(p),
                (None, Some(a), Some(c)) => {
                    let s = state.ok_or(AgentError::MalformedLog { user: e.user, t: e.t })?;
                    samples.push((s, a, c));
                }
                _ => unreachable!("events are either organic or bandit"),
            }
        }
    }
    Ok(samples)
}

pub(crate) fn check_range(e: &Event, num_products: usize) -> Result<(), AgentError> {
    let product = e.viewed().or(e.action()).unwrap_or(0);
    if product >= num_products {
        return Err(AgentError::ProductOutOfRange { user: e.user, t: e.t, product, num_products });
    }
    Ok(())
}

pub const AGENT_NAMES: &[&str] = &["random", "logistic", "pure_bandit", "pure_organic", "combined", "prod2vec"];

/// Hyperparameters for every agent, keyed by name in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSettings {
    pub name: String,
    pub random_seed: u64,
    pub logistic_alpha: f64,
    pub logistic_beta: f64,
    pub organic_alpha: f64,
    pub combined_lambda: f64,
    pub prod2vec_dim: usize,
    pub prod2vec_learning_rate: f64,
    pub prod2vec_epochs: usize,
    pub prod2vec_init_scale: f64,
    pub prod2vec_seed: u64,
}

impl Default for AgentSettings {
    fn default() -> Self {
        let p2v = Prod2VecConfig::default();
        Self {
            name: "random".into(),
            random_seed: 0,
            logistic_alpha: 1.0,
            logistic_beta: 1.0,
            organic_alpha: 1.0,
            combined_lambda: 100.0,
            prod2vec_dim: p2v.dim,
            prod2vec_learning_rate: p2v.learning_rate,
            prod2vec_epochs: p2v.epochs,
            prod2vec_init_scale: p2v.init_scale,
            prod2vec_seed: p2v.seed,
        }
    }
}

impl AgentSettings {
    /// Builds an untrained agent called `name` with these hyperparameters.
    pub fn build(&self, name: &str, num_products: usize) -> Result<AnyAgent, AgentError> {
        Ok(match name {
            "random" => AnyAgent::Random(RandomAgent::new(num_products, self.random_seed)),
            "logistic" | "pure_bandit" => {
                AnyAgent::Logistic(LogisticCountAgent::new(num_products, self.logistic_alpha, self.logistic_beta))
            }
            "pure_organic" => AnyAgent::PureOrganic(PureOrganicAgent::new(num_products, self.organic_alpha)),
            "combined" => {
                AnyAgent::Combined(CombinedAgent::new(num_products, self.combined_lambda, self.organic_alpha))
            }
            "prod2vec" => AnyAgent::Prod2Vec(Prod2VecAgent::new(
                num_products,
                Prod2VecConfig {
                    dim: self.prod2vec_dim,
                    learning_rate: self.prod2vec_learning_rate,
                    epochs: self.prod2vec_epochs,
                    init_scale: self.prod2vec_init_scale,
                    seed: self.prod2vec_seed,
                },
            )),
            other => return Err(AgentError::UnknownAgent { name: other.to_string() }),
        })
    }

    pub fn build_default(&self, num_products: usize) -> Result<AnyAgent, AgentError> {
        self.build(&self.name, num_products)
    }
}

/// Closed set of the bundled agents, used for persistence and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnyAgent {
    Random(RandomAgent),
    Logistic(LogisticCountAgent),
    PureOrganic(PureOrganicAgent),
    Combined(CombinedAgent),
    Prod2Vec(Prod2VecAgent),
}

impl AnyAgent {
    fn inner(&self) -> &dyn Agent {
        match self {
            AnyAgent::Random(a) => a,
            AnyAgent::Logistic(a) => a,
            AnyAgent::PureOrganic(a) => a,
            AnyAgent::Combined(a) => a,
            AnyAgent::Prod2Vec(a) => a,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Agent {
        match self {
            AnyAgent::Random(a) => a,
            AnyAgent::Logistic(a) => a,
            AnyAgent::PureOrganic(a) => a,
            AnyAgent::Combined(a) => a,
            AnyAgent::Prod2Vec(a) => a,
        }
    }
}

impl Agent for AnyAgent {
    fn name(&self) -> &'static str {
        self.inner().name()
    }

    fn num_products(&self) -> usize {
        self.inner().num_products()
    }

    fn train(&mut self, log: &EventLog) -> Result<(), AgentError> {
        self.inner_mut().train(log)
    }

    fn policy(&self, state: Option<usize>, rng: &mut SimRng) -> Result<usize, AgentError> {
        self.inner().policy(state, rng)
    }

    fn update(&mut self, history: &[Event], action: usize, click: bool) {
        self.inner_mut().update(history, action, click)
    }

    fn seed(&self) -> u64 {
        self.inner().seed()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    /// Records the state it was asked about.
    struct Echo;

    impl Agent for Echo {
        fn name(&self) -> &'static str {
            "echo"
        }
        fn num_products(&self) -> usize {
            200
        }
        fn train(&mut self, _: &EventLog) -> Result<(), AgentError> {
            Ok(())
        }
        fn policy(&self, state: Option<usize>, _: &mut SimRng) -> Result<usize, AgentError> {
            Ok(state.map_or(199, |s| s))
        }
    }

    fn example() -> Vec<Event> {
        vec![
            Event::organic(10, 0, 104),
            Event::organic(10, 1, 52),
            Event::organic(10, 2, 71),
            Event::bandit(10, 3, 42, false),
            Event::bandit(10, 4, 52, true),
            Event::organic(10, 5, 52),
        ]
    }

    #[test]
    fn state_is_last_organic_view() {
        let mut rng = stream(0);
        let h = example();
        assert_eq!(Echo.act(&h[..3], &mut rng), Ok(71));
        assert_eq!(Echo.act(&h[..5], &mut rng), Ok(71));
        assert_eq!(Echo.act(&h[..2], &mut rng), Ok(52));
        assert_eq!(Echo.act(&[], &mut rng), Ok(199), "no-state fallback");
    }

    #[test]
    fn bandit_before_organic_is_malformed() {
        let log = EventLog::from_events(vec![Event::bandit(3, 0, 1, false)]);
        assert_eq!(bandit_samples(&log, 5), Err(AgentError::MalformedLog { user: 3, t: 0 }));
    }

    #[test]
    fn state_does_not_leak_across_users() {
        let log = EventLog::from_events(vec![Event::organic(0, 0, 1), Event::bandit(1, 0, 1, false)]);
        assert!(matches!(bandit_samples(&log, 5), Err(AgentError::MalformedLog { user: 1, .. })));
    }

    #[test]
    fn unknown_name_lists_valid_ones() {
        let err = AgentSettings::default().build("bogus", 3).unwrap_err();
        let msg = err.to_string();
        for name in AGENT_NAMES {
            assert!(msg.contains(name));
        }
    }
}

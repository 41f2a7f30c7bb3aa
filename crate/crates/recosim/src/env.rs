//! Reset/step environment over the organic/bandit session state machine.
//!
//! # Sampling order
//!
//! User `u` of population `pop` draws from
//! `stream(derive_seed(derive_seed(master_seed, pop), u))`, in this order:
//!
//! 1. `ω`: `K` standard normals.
//! 2. Organic view: one uniform `x ∈ [0,1)`; the product is the first index
//!    whose running sum of `softmax(Λ)` exceeds `x` (the last index if none).
//!    A view forced by a click consumes no draw.
//! 3. After each organic view: one uniform `x`; `x < p_oo` stays organic,
//!    `x < p_oo + p_ob` moves to bandit, otherwise the user stops.
//! 4. Each ad display: one uniform `x`; the ad is clicked iff `x < Φ`.
//! 5. After a non-click: one uniform `x`; `x < p_bb` stays bandit, otherwise
//!    the user stops.
//!
//! A user also stops once `max_events_per_user` events have been emitted; no
//! transition draw is made after the capping event.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::config::{InvalidConfig, SimConfig};
use crate::event::Event;
use crate::model::{calibrated_click, softmax, ModelParams, Session, UserState};
use crate::rng::{derive_seed, stream, SimRng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    InvalidConfig(#[from] InvalidConfig),
    #[error("no active user: call reset first")]
    NoActiveUser,
    #[error("action {action} out of range for {num_products} products")]
    ActionOutOfRange { action: usize, num_products: usize },
    #[error("oracle access requires oracle mode")]
    OracleDisabled,
}

/// Organic events emitted by a reset or step, in time order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observation {
    pub sessions: Vec<Event>,
}

impl Observation {
    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    /// Click on the displayed ad, `None` when nothing was displayed.
    pub reward: Option<bool>,
    pub done: bool,
    /// Diagnostics; populated only in oracle mode.
    pub info: BTreeMap<String, f64>,
}

struct ActiveUser {
    state: UserState,
    rng: SimRng,
    /// Running sums of the organic distribution.
    cdf: Vec<f64>,
    /// `Λ + ε` per product.
    scores: Vec<f64>,
    history: Vec<Event>,
    finished: bool,
}

pub struct Environment {
    config: SimConfig,
    params: Arc<ModelParams>,
    population: u64,
    next_user: u64,
    oracle: bool,
    active: Option<ActiveUser>,
}

impl Environment {
    /// Validates `config` and samples the model parameters from its master seed.
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let params = Arc::new(ModelParams::sample(config.num_products, config.latent_dim, config.master_seed));
        Ok(Self::assemble(config, params))
    }

    /// Builds an environment around already sampled parameters.
    pub fn with_params(config: SimConfig, params: Arc<ModelParams>) -> Result<Self, SimError> {
        config.validate()?;
        if params.num_products() != config.num_products || params.latent_dim() != config.latent_dim {
            return Err(InvalidConfig(format!(
                "parameters are {}x{} but config asks for {}x{}",
                params.num_products(),
                params.latent_dim(),
                config.num_products,
                config.latent_dim
            ))
            .into());
        }
        Ok(Self::assemble(config, params))
    }

    fn assemble(config: SimConfig, params: Arc<ModelParams>) -> Self {
        Self { config, params, population: 0, next_user: 0, oracle: false, active: None }
    }

    /// Selects the user population; users of different populations draw from
    /// unrelated streams while sharing the same product parameters.
    pub fn with_population(mut self, population: u64) -> Self {
        self.population = population;
        self
    }

    pub fn with_oracle(mut self, enabled: bool) -> Self {
        self.oracle = enabled;
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn num_products(&self) -> usize {
        self.config.num_products
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn oracle_enabled(&self) -> bool {
        self.oracle
    }

    /// Shared handle to the parameters, for building sibling environments.
    pub fn shared_params(&self) -> Arc<ModelParams> {
        Arc::clone(&self.params)
    }

    /// Id the next [`reset`](Self::reset) will use.
    pub fn next_user_id(&self) -> u64 {
        self.next_user
    }

    /// Seed of the private stream for `user_id` in this environment's population.
    pub fn user_seed(&self, user_id: u64) -> u64 {
        derive_seed(derive_seed(self.config.master_seed, self.population), user_id)
    }

    /// Starts the next user and simulates the opening organic session.
    pub fn reset(&mut self) -> Observation {
        let id = self.next_user;
        self.reset_user(id)
    }

    /// Starts user `user_id` (abandoning any active user) and simulates the
    /// opening organic session. Subsequent [`reset`](Self::reset) calls
    /// continue from `user_id + 1`.
    pub fn reset_user(&mut self, user_id: u64) -> Observation {
        self.next_user = user_id + 1;
        let mut rng = stream(self.user_seed(user_id));
        let omega: Vec<f64> = (0..self.config.latent_dim).map(|_| rng.sample(StandardNormal)).collect();
        let state = UserState::new(user_id, omega, self.config.num_products);
        let logits = self.params.organic_logits(&state);
        let cdf = softmax(&logits)
            .into_iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let scores = self.params.bandit_scores(&state.omega, self.config.sigma_phi);
        let mut user = ActiveUser { state, rng, cdf, scores, history: Vec::new(), finished: false };
        let sessions = organic_session(&self.config, &mut user, None);
        self.active = Some(user);
        Observation { sessions }
    }

    /// Shows ad `action` to the active user.
    pub fn step(&mut self, action: usize) -> Result<StepResult, SimError> {
        let num_products = self.config.num_products;
        let user = match self.active.as_mut() {
            Some(u) if !u.finished => u,
            _ => return Err(SimError::NoActiveUser),
        };
        if action >= num_products {
            return Err(SimError::ActionOutOfRange { action, num_products });
        }
        if user.state.session == Session::Stopped {
            user.finished = true;
            return Ok(StepResult { observation: Observation::default(), reward: None, done: true, info: BTreeMap::new() });
        }
        debug_assert_eq!(user.state.session, Session::Bandit);

        let prob = calibrated_click(&self.config, user.scores[action], user.state.exposure_counts[action]);
        let click = user.rng.random::<f64>() < prob;
        let t = user.state.t;
        user.history.push(Event::bandit(user.state.user_id, t, action, click));
        user.state.t += 1;
        user.state.exposure_counts[action] += 1;

        let mut sessions = Vec::new();
        if user.state.t >= self.config.max_events_per_user {
            user.state.session = Session::Stopped;
        } else if click {
            user.state.session = Session::Organic;
            sessions = organic_session(&self.config, user, Some(action));
        } else if user.rng.random::<f64>() < self.config.p_bandit_to_bandit {
            user.state.session = Session::Bandit;
        } else {
            user.state.session = Session::Stopped;
        }

        let done = user.state.session == Session::Stopped;
        user.finished = done;
        let mut info = BTreeMap::new();
        if self.oracle {
            info.insert("click_probability".to_string(), prob);
        }
        Ok(StepResult { observation: Observation { sessions }, reward: Some(click), done, info })
    }

    /// True while the active user sits in a bandit session waiting for an ad.
    pub fn awaiting_action(&self) -> bool {
        self.active
            .as_ref()
            .is_some_and(|u| !u.finished && u.state.session == Session::Bandit)
    }

    /// Events of the active (or most recently finished) user so far.
    pub fn history(&self) -> &[Event] {
        self.active.as_ref().map_or(&[], |u| &u.history)
    }

    /// Oracle access to the true model for the active user.
    pub fn oracle(&self) -> Result<Oracle<'_>, SimError> {
        if !self.oracle {
            return Err(SimError::OracleDisabled);
        }
        let user = self.active.as_ref().ok_or(SimError::NoActiveUser)?;
        Ok(Oracle { config: &self.config, params: &self.params, user: &user.state })
    }
}

/// Simulates organic views until the user leaves for a bandit session or stops.
fn organic_session(config: &SimConfig, user: &mut ActiveUser, mut forced: Option<usize>) -> Vec<Event> {
    let mut events = Vec::new();
    loop {
        let product = match forced.take() {
            Some(p) => p,
            None => {
                let x = user.rng.random::<f64>();
                user.cdf.partition_point(|&c| c <= x).min(config.num_products - 1)
            }
        };
        let event = Event::organic(user.state.user_id, user.state.t, product);
        user.history.push(event);
        events.push(event);
        user.state.t += 1;
        user.state.last_organic_product = Some(product);

        if user.state.t >= config.max_events_per_user {
            user.state.session = Session::Stopped;
            break;
        }
        let x = user.rng.random::<f64>();
        if x < config.p_organic_to_organic {
            continue;
        }
        user.state.session = if x < config.p_organic_to_organic + config.p_organic_to_bandit {
            Session::Bandit
        } else {
            Session::Stopped
        };
        break;
    }
    events
}

/// Read-only view of the true model for the active user.
pub struct Oracle<'a> {
    config: &'a SimConfig,
    params: &'a ModelParams,
    user: &'a UserState,
}

impl<'a> Oracle<'a> {
    pub fn params(&self) -> &'a ModelParams {
        self.params
    }

    pub fn user(&self) -> &'a UserState {
        self.user
    }

    pub fn organic_logits(&self) -> Vec<f64> {
        self.params.organic_logits(self.user)
    }

    pub fn organic_distribution(&self) -> Vec<f64> {
        self.params.organic_distribution(self.user)
    }

    pub fn click_probability(&self, action: usize) -> Result<f64, SimError> {
        if action >= self.config.num_products {
            return Err(SimError::ActionOutOfRange { action, num_products: self.config.num_products });
        }
        Ok(self.params.click_probability(self.config, self.user, action))
    }

    pub fn best_action(&self) -> usize {
        self.params.best_action(self.config, self.user)
    }
}

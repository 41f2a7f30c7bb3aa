//! Deterministic simulator of organic and bandit user sessions for
//! recommendation, with baseline agents and an online evaluation harness.
//!
//! Users alternate between organic browsing (product views drawn from a
//! latent-factor model) and bandit sessions where an agent shows one ad per
//! event and observes a click. Bandit click probabilities are the organic
//! log-odds plus a tunable noise term, so the noise scale controls how much
//! organic data says about ad performance.

pub mod agents;
pub mod config;
pub mod env;
pub mod eval;
pub mod event;
pub mod io;
pub mod model;
pub mod plot;
pub mod rng;

pub use agents::{Agent, AgentError, AgentSettings, AnyAgent};
pub use config::{InvalidConfig, SimConfig};
pub use env::{Environment, Observation, Oracle, SimError, StepResult};
pub use eval::{evaluate_online, generate_log, CtrReport, EvalError, EvalOptions, Policy};
pub use event::{Event, EventKind, EventLog};
pub use model::{ModelParams, Session, UserState};

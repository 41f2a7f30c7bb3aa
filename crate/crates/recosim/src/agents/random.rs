use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Agent, AgentError};
use crate::event::EventLog;
use crate::rng::SimRng;

/// Uniform recommendations; learns nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomAgent {
    num_products: usize,
    seed: u64,
}

impl RandomAgent {
    pub fn new(num_products: usize, seed: u64) -> Self {
        Self { num_products, seed }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> &'static str {
        "random"
    }

    fn num_products(&self) -> usize {
        self.num_products
    }

    fn train(&mut self, _log: &EventLog) -> Result<(), AgentError> {
        Ok(())
    }

    fn policy(&self, _state: Option<usize>, rng: &mut SimRng) -> Result<usize, AgentError> {
        Ok(rng.random_range(0..self.num_products))
    }

    fn seed(&self) -> u64 {
        self.seed
    }
}

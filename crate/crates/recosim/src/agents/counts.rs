use serde::{Deserialize, Serialize};

use super::{bandit_samples, Agent, AgentError};
use crate::event::{last_organic_product, Event, EventLog};
use crate::model::argmax;
use crate::rng::SimRng;

/// Displays and clicks per (state, action), where the state is the user's
/// last organic view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    num_products: usize,
    displays: Vec<u64>,
    clicks: Vec<u64>,
}

impl CountTable {
    pub fn new(num_products: usize) -> Self {
        Self { num_products, displays: vec![0; num_products * num_products], clicks: vec![0; num_products * num_products] }
    }

    /// Counts every bandit row of `log` against its preceding organic view.
    pub fn from_log(log: &EventLog, num_products: usize) -> Result<Self, AgentError> {
        let mut table = Self::new(num_products);
        for (s, a, c) in bandit_samples(log, num_products)? {
            table.record(s, a, c);
        }
        Ok(table)
    }

    pub fn record(&mut self, state: usize, action: usize, click: bool) {
        let i = state * self.num_products + action;
        self.displays[i] += 1;
        self.clicks[i] += u64::from(click);
    }

    /// Adds `displays` displays with `clicks` clicks to one cell.
    pub fn add(&mut self, state: usize, action: usize, displays: u64, clicks: u64) {
        assert!(clicks <= displays, "clicks cannot exceed displays");
        let i = state * self.num_products + action;
        self.displays[i] += displays;
        self.clicks[i] += clicks;
    }

    pub fn num_products(&self) -> usize {
        self.num_products
    }

    pub fn displays(&self, state: usize, action: usize) -> u64 {
        self.displays[state * self.num_products + action]
    }

    pub fn clicks(&self, state: usize, action: usize) -> u64 {
        self.clicks[state * self.num_products + action]
    }

    pub fn row_displays(&self, state: usize) -> u64 {
        self.displays[state * self.num_products..(state + 1) * self.num_products].iter().sum()
    }

    /// Displays and clicks of `action` summed over states.
    pub fn marginal(&self, action: usize) -> (u64, u64) {
        (0..self.num_products).fold((0, 0), |(d, c), s| (d + self.displays(s, action), c + self.clicks(s, action)))
    }

    pub fn total_displays(&self) -> u64 {
        self.displays.iter().sum()
    }
}

/// Per-state smoothed CTR lookup; this is also the pure-bandit policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticCountAgent {
    alpha: f64,
    beta: f64,
    table: Option<CountTable>,
    num_products: usize,
}

impl LogisticCountAgent {
    pub fn new(num_products: usize, alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, table: None, num_products }
    }

    /// A trained agent over an existing count table.
    pub fn from_table(table: CountTable, alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, num_products: table.num_products(), table: Some(table) }
    }

    pub fn table(&self) -> Option<&CountTable> {
        self.table.as_ref()
    }

    fn ctr(&self, clicks: u64, displays: u64) -> f64 {
        let den = displays as f64 + self.alpha + self.beta;
        if den > 0.0 {
            (clicks as f64 + self.alpha) / den
        } else {
            0.0
        }
    }
}

impl Agent for LogisticCountAgent {
    fn name(&self) -> &'static str {
        "pure_bandit"
    }

    fn num_products(&self) -> usize {
        self.num_products
    }

    fn train(&mut self, log: &EventLog) -> Result<(), AgentError> {
        self.table = Some(CountTable::from_log(log, self.num_products)?);
        Ok(())
    }

    fn policy(&self, state: Option<usize>, _rng: &mut SimRng) -> Result<usize, AgentError> {
        let table = self.table.as_ref().ok_or(AgentError::UntrainedAgent)?;
        let p = self.num_products;
        Ok(match state.filter(|&s| s < p && table.row_displays(s) > 0) {
            Some(s) => argmax((0..p).map(|a| self.ctr(table.clicks(s, a), table.displays(s, a)))),
            None => argmax((0..p).map(|a| {
                let (d, c) = table.marginal(a);
                self.ctr(c, d)
            })),
        })
    }

    fn update(&mut self, history: &[Event], action: usize, click: bool) {
        if let (Some(table), Some(s)) = (self.table.as_mut(), last_organic_product(history)) {
            table.record(s, action, click);
        }
    }
}

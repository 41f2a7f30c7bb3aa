use serde::{Deserialize, Serialize};

use super::{check_range, Agent, AgentError};
use crate::event::EventLog;
use crate::model::argmax;
use crate::rng::SimRng;

/// Counts of successive organic views `C[s, p']`.
///
/// Successive means consecutive organic rows of the same user; bandit rows in
/// between are skipped, so the table depends on organic rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganicTransitionTable {
    num_products: usize,
    smoothing: f64,
    counts: Vec<u64>,
    /// Organic views per product.
    views: Vec<u64>,
}

impl OrganicTransitionTable {
    pub fn from_log(log: &EventLog, num_products: usize, smoothing: f64) -> Result<Self, AgentError> {
        let mut counts = vec![0; num_products * num_products];
        let mut views = vec![0; num_products];
        for user in log.users() {
            let mut prev = None;
            for e in user {
                check_range(e, num_products)?;
                if let Some(p) = e.viewed() {
                    views[p] += 1;
                    if let Some(s) = prev {
                        counts[s * num_products + p] += 1;
                    }
                    prev = Some(p);
                }
            }
        }
        Ok(Self { num_products, smoothing, counts, views })
    }

    pub fn count(&self, state: usize, next: usize) -> u64 {
        self.counts[state * self.num_products + next]
    }

    pub fn views(&self) -> &[u64] {
        &self.views
    }

    /// Smoothed next-view distribution `q(·|s)`.
    ///
    /// Falls back to the smoothed marginal view distribution when `state` is
    /// `None` or has no recorded successor, and to uniform when that is empty
    /// too.
    pub fn next_view_distribution(&self, state: Option<usize>) -> Vec<f64> {
        let p = self.num_products;
        let row = state
            .filter(|&s| s < p)
            .map(|s| &self.counts[s * p..(s + 1) * p])
            .filter(|row| row.iter().any(|&c| c > 0))
            .unwrap_or(&self.views);
        let total: u64 = row.iter().sum();
        let den = total as f64 + self.smoothing * p as f64;
        if den > 0.0 {
            row.iter().map(|&c| (c as f64 + self.smoothing) / den).collect()
        } else {
            vec![1.0 / p as f64; p]
        }
    }
}

/// Recommends the most likely next organic view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureOrganicAgent {
    num_products: usize,
    smoothing: f64,
    table: Option<OrganicTransitionTable>,
}

impl PureOrganicAgent {
    pub fn new(num_products: usize, smoothing: f64) -> Self {
        Self { num_products, smoothing, table: None }
    }

    pub fn table(&self) -> Option<&OrganicTransitionTable> {
        self.table.as_ref()
    }
}

impl Agent for PureOrganicAgent {
    fn name(&self) -> &'static str {
        "pure_organic"
    }

    fn num_products(&self) -> usize {
        self.num_products
    }

    fn train(&mut self, log: &EventLog) -> Result<(), AgentError> {
        self.table = Some(OrganicTransitionTable::from_log(log, self.num_products, self.smoothing)?);
        Ok(())
    }

    fn policy(&self, state: Option<usize>, _rng: &mut SimRng) -> Result<usize, AgentError> {
        let table = self.table.as_ref().ok_or(AgentError::UntrainedAgent)?;
        Ok(argmax(table.next_view_distribution(state)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Event;
    use crate::rng::stream;

    #[test]
    fn point_mass_transition() {
        let log = EventLog::from_events(vec![
            Event::organic(0, 0, 1),
            Event::organic(0, 1, 2),
            Event::organic(1, 0, 1),
            Event::bandit(1, 1, 0, false),
            Event::organic(1, 2, 2),
        ]);
        let mut agent = PureOrganicAgent::new(3, 1.0);
        agent.train(&log).unwrap();
        assert_eq!(agent.policy(Some(1), &mut stream(0)), Ok(2));
        assert_eq!(agent.table().unwrap().count(1, 2), 2);
    }

    #[test]
    fn rows_sum_to_one() {
        let log = EventLog::from_events(vec![Event::organic(0, 0, 0), Event::organic(0, 1, 2)]);
        let table = OrganicTransitionTable::from_log(&log, 4, 0.5).unwrap();
        for s in [None, Some(0), Some(1), Some(3)] {
            let q = table.next_view_distribution(s);
            assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let empty = OrganicTransitionTable::from_log(&EventLog::new(), 4, 0.0).unwrap();
        assert_eq!(empty.next_view_distribution(None), vec![0.25; 4]);
    }

    #[test]
    fn no_state_uses_popularity() {
        let log = EventLog::from_events(vec![
            Event::organic(0, 0, 3),
            Event::organic(1, 0, 3),
            Event::organic(2, 0, 1),
        ]);
        let mut agent = PureOrganicAgent::new(4, 1.0);
        agent.train(&log).unwrap();
        assert_eq!(agent.policy(None, &mut stream(0)), Ok(3));
    }

    #[test]
    fn untrained_agent_refuses() {
        assert_eq!(PureOrganicAgent::new(2, 1.0).policy(None, &mut stream(0)), Err(AgentError::UntrainedAgent));
    }
}

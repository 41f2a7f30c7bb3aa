use serde::{Deserialize, Serialize};

use super::{Agent, AgentError, CountTable, OrganicTransitionTable};
use crate::event::{last_organic_product, Event, EventLog};
use crate::model::argmax;
use crate::rng::SimRng;

/// Organic next-view distribution used as a prior of strength `λ` over the
/// per-(state, action) CTR:
///
/// ```text
/// score(s, a) = (clicks[s,a] + λ q(a|s)) / (displays[s,a] + λ)
/// ```
///
/// With no bandit data the score is `q(a|s)`; with many displays it tends to
/// the empirical CTR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedAgent {
    num_products: usize,
    prior_strength: f64,
    smoothing: f64,
    fitted: Option<(OrganicTransitionTable, CountTable)>,
}

impl CombinedAgent {
    pub fn new(num_products: usize, prior_strength: f64, smoothing: f64) -> Self {
        Self { num_products, prior_strength, smoothing, fitted: None }
    }

    /// Fits directly from tables.
    pub fn from_tables(prior_strength: f64, organic: OrganicTransitionTable, bandit: CountTable) -> Self {
        let num_products = bandit.num_products();
        Self { num_products, prior_strength, smoothing: 0.0, fitted: Some((organic, bandit)) }
    }

    pub fn scores(&self, state: Option<usize>) -> Result<Vec<f64>, AgentError> {
        let (organic, bandit) = self.fitted.as_ref().ok_or(AgentError::UntrainedAgent)?;
        let q = organic.next_view_distribution(state);
        let lambda = self.prior_strength;
        let state = state.filter(|&s| s < self.num_products);
        Ok((0..self.num_products)
            .map(|a| {
                let (d, c) = match state {
                    Some(s) => (bandit.displays(s, a), bandit.clicks(s, a)),
                    None => bandit.marginal(a),
                };
                let den = d as f64 + lambda;
                if den > 0.0 {
                    (c as f64 + lambda * q[a]) / den
                } else {
                    q[a]
                }
            })
            .collect())
    }
}

impl Agent for CombinedAgent {
    fn name(&self) -> &'static str {
        "combined"
    }

    fn num_products(&self) -> usize {
        self.num_products
    }

    fn train(&mut self, log: &EventLog) -> Result<(), AgentError> {
        let organic = OrganicTransitionTable::from_log(log, self.num_products, self.smoothing)?;
        let bandit = CountTable::from_log(log, self.num_products)?;
        self.fitted = Some((organic, bandit));
        Ok(())
    }

    fn policy(&self, state: Option<usize>, _rng: &mut SimRng) -> Result<usize, AgentError> {
        Ok(argmax(self.scores(state)?))
    }

    fn update(&mut self, history: &[Event], action: usize, click: bool) {
        if let (Some((_, table)), Some(s)) = (self.fitted.as_mut(), last_organic_product(history)) {
            table.record(s, action, click);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::PureOrganicAgent;
    use crate::rng::stream;

    fn organic_log() -> EventLog {
        EventLog::from_events(vec![
            Event::organic(0, 0, 0),
            Event::organic(0, 1, 2),
            Event::organic(0, 2, 1),
            Event::organic(0, 3, 2),
            Event::organic(1, 0, 1),
            Event::organic(1, 1, 0),
        ])
    }

    #[test]
    fn no_bandit_data_matches_pure_organic() {
        let log = organic_log();
        let mut combined = CombinedAgent::new(3, 100.0, 1.0);
        let mut organic = PureOrganicAgent::new(3, 1.0);
        combined.train(&log).unwrap();
        organic.train(&log).unwrap();
        for s in [None, Some(0), Some(1), Some(2)] {
            assert_eq!(combined.policy(s, &mut stream(0)), organic.policy(s, &mut stream(0)));
        }
    }

    #[test]
    fn heavy_bandit_data_matches_empirical_ctr() {
        let organic = OrganicTransitionTable::from_log(&organic_log(), 3, 1.0).unwrap();
        let mut bandit = CountTable::new(3);
        let n = 1_000_000u64;
        for (s, ctrs) in [(0, [0.01, 0.03, 0.02]), (1, [0.05, 0.01, 0.02]), (2, [0.02, 0.02, 0.04])] {
            for (a, ctr) in ctrs.iter().enumerate() {
                bandit.add(s, a, n, (ctr * n as f64) as u64);
            }
        }
        let combined = CombinedAgent::from_tables(100.0, organic, bandit.clone());
        for s in 0..3 {
            let empirical = argmax((0..3).map(|a| bandit.clicks(s, a) as f64 / bandit.displays(s, a) as f64));
            assert_eq!(combined.policy(Some(s), &mut stream(0)).unwrap(), empirical);
        }
    }

    #[test]
    fn untrained_agent_refuses() {
        assert_eq!(CombinedAgent::new(2, 1.0, 1.0).policy(None, &mut stream(0)), Err(AgentError::UntrainedAgent));
    }
}

//! Supervised product-embedding click model.
//!
//! `p(click | s, a) = logistic(state_embed[s] · action_embed[a] + action_bias[a])`,
//! fitted by shuffled SGD on the cross-entropy of logged bandit rows.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{bandit_samples, Agent, AgentError};
use crate::event::EventLog;
use crate::model::{argmax, dot, logistic};
use crate::rng::{derive_seed, stream, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prod2VecConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub init_scale: f64,
    /// Seeds initialization and shuffling.
    pub seed: u64,
}

impl Default for Prod2VecConfig {
    fn default() -> Self {
        Self { dim: 8, learning_rate: 0.01, epochs: 10, init_scale: 0.01, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prod2VecParams {
    pub num_products: usize,
    pub dim: usize,
    /// Row-major `P × D`.
    pub state_embed: Vec<f64>,
    /// Row-major `P × D`.
    pub action_embed: Vec<f64>,
    pub action_bias: Vec<f64>,
}

/// Gradient of one example's loss with respect to the parameters it touches.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleGradient {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub bias: f64,
}

impl Prod2VecParams {
    pub fn init(num_products: usize, dim: usize, init_scale: f64, seed: u64) -> Self {
        let mut rng = stream(seed);
        let mut draw =
            |n: usize| -> Vec<f64> { (0..n).map(|_| init_scale * rng.sample::<f64, _>(StandardNormal)).collect() };
        let state_embed = draw(num_products * dim);
        let action_embed = draw(num_products * dim);
        Self { num_products, dim, state_embed, action_embed, action_bias: vec![0.0; num_products] }
    }

    pub fn state_row(&self, s: usize) -> &[f64] {
        &self.state_embed[s * self.dim..(s + 1) * self.dim]
    }

    pub fn action_row(&self, a: usize) -> &[f64] {
        &self.action_embed[a * self.dim..(a + 1) * self.dim]
    }

    pub fn logit(&self, s: usize, a: usize) -> f64 {
        dot(self.state_row(s), self.action_row(a)) + self.action_bias[a]
    }

    pub fn click_probability(&self, s: usize, a: usize) -> f64 {
        logistic(self.logit(s, a))
    }

    /// Cross-entropy of one labeled example.
    pub fn loss(&self, s: usize, a: usize, click: bool) -> f64 {
        let z = self.logit(s, a);
        softplus(z) - if click { z } else { 0.0 }
    }

    pub fn loss_and_gradient(&self, s: usize, a: usize, click: bool) -> (f64, ExampleGradient) {
        let z = self.logit(s, a);
        let g = logistic(z) - if click { 1.0 } else { 0.0 };
        let grad = ExampleGradient {
            state: self.action_row(a).iter().map(|y| g * y).collect(),
            action: self.state_row(s).iter().map(|x| g * x).collect(),
            bias: g,
        };
        (softplus(z) - if click { z } else { 0.0 }, grad)
    }

    fn sgd_step(&mut self, s: usize, a: usize, click: bool, lr: f64) {
        let (_, grad) = self.loss_and_gradient(s, a, click);
        let d = self.dim;
        for (x, g) in self.state_embed[s * d..(s + 1) * d].iter_mut().zip(&grad.state) {
            *x -= lr * g;
        }
        for (y, g) in self.action_embed[a * d..(a + 1) * d].iter_mut().zip(&grad.action) {
            *y -= lr * g;
        }
        self.action_bias[a] -= lr * grad.bias;
    }

    pub fn is_finite(&self) -> bool {
        self.state_embed.iter().chain(&self.action_embed).chain(&self.action_bias).all(|v| v.is_finite())
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prod2VecAgent {
    num_products: usize,
    config: Prod2VecConfig,
    params: Option<Prod2VecParams>,
    /// Mean training loss after each epoch.
    epoch_losses: Vec<f64>,
}

impl Prod2VecAgent {
    pub fn new(num_products: usize, config: Prod2VecConfig) -> Self {
        Self { num_products, config, params: None, epoch_losses: Vec::new() }
    }

    pub fn params(&self) -> Option<&Prod2VecParams> {
        self.params.as_ref()
    }

    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    /// Fits on `(state, action, click)` triples.
    pub fn fit(&mut self, samples: &[(usize, usize, bool)]) -> Result<(), AgentError> {
        let cfg = &self.config;
        let mut params = Prod2VecParams::init(self.num_products, cfg.dim, cfg.init_scale, cfg.seed);
        let mut shuffle_rng = stream(derive_seed(cfg.seed, 1));
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut losses = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut shuffle_rng);
            for &i in &order {
                let (s, a, c) = samples[i];
                params.sgd_step(s, a, c, cfg.learning_rate);
            }
            if !params.is_finite() {
                return Err(AgentError::DivergedTraining { epoch });
            }
            let total: f64 = samples.iter().map(|&(s, a, c)| params.loss(s, a, c)).sum();
            losses.push(if samples.is_empty() { 0.0 } else { total / samples.len() as f64 });
        }
        self.params = Some(params);
        self.epoch_losses = losses;
        Ok(())
    }
}

impl Agent for Prod2VecAgent {
    fn name(&self) -> &'static str {
        "prod2vec"
    }

    fn num_products(&self) -> usize {
        self.num_products
    }

    fn train(&mut self, log: &EventLog) -> Result<(), AgentError> {
        let samples = bandit_samples(log, self.num_products)?;
        self.fit(&samples)
    }

    fn policy(&self, state: Option<usize>, _rng: &mut SimRng) -> Result<usize, AgentError> {
        let params = self.params.as_ref().ok_or(AgentError::UntrainedAgent)?;
        Ok(match state.filter(|&s| s < self.num_products) {
            Some(s) => argmax((0..self.num_products).map(|a| params.logit(s, a))),
            // Cold users have a zero state vector.
            None => argmax(params.action_bias.iter().copied()),
        })
    }
}

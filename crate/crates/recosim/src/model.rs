//! The generative model: product embeddings, user latents, organic log-odds
//! and click probabilities.
//!
//! For user latent `ω` (length K) and product `p`:
//!
//! ```text
//! Λ[p] = (ω · Γ[p]) / √K + μ[p]          organic log-odds
//! ε[p] = σ_Φ (ω · Δ[p]) / √K             bandit residual, frozen per (user, product)
//! Φ[p] = logistic(c₁ (Λ[p] + ε[p] − φ_f n[p]) + c₀)
//! ```
//!
//! Organic views are categorical draws from `softmax(Λ)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{InvalidConfig, SimConfig};
use crate::rng::{derive_seed, stream, MODEL_SALT};

/// Product-side parameters shared by every user of an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    num_products: usize,
    latent_dim: usize,
    /// Organic embeddings, row-major `P × K`.
    gamma: Vec<f64>,
    /// Popularity offsets, length `P`.
    mu: Vec<f64>,
    /// Bandit residual embeddings, row-major `P × K`.
    delta: Vec<f64>,
}

impl ModelParams {
    /// Samples the parameters from the master seed.
    ///
    /// Draw order on the model stream: `Γ` row-major, then `μ`, then `Δ`
    /// row-major, each entry standard normal.
    pub fn sample(num_products: usize, latent_dim: usize, master_seed: u64) -> Self {
        let mut rng = stream(derive_seed(master_seed, MODEL_SALT));
        let mut normals = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };
        let gamma = normals(num_products * latent_dim);
        let mu = normals(num_products);
        let delta = normals(num_products * latent_dim);
        Self { num_products, latent_dim, gamma, mu, delta }
    }

    pub fn from_parts(
        num_products: usize,
        latent_dim: usize,
        gamma: Vec<f64>,
        mu: Vec<f64>,
        delta: Vec<f64>,
    ) -> Result<Self, InvalidConfig> {
        if num_products == 0 || latent_dim == 0 {
            return Err(InvalidConfig("model dimensions must be positive".into()));
        }
        if gamma.len() != num_products * latent_dim || delta.len() != num_products * latent_dim {
            return Err(InvalidConfig(format!("embedding matrices must be {num_products}x{latent_dim}")));
        }
        if mu.len() != num_products {
            return Err(InvalidConfig(format!("mu must have length {num_products}")));
        }
        if !gamma.iter().chain(&mu).chain(&delta).all(|x| x.is_finite()) {
            return Err(InvalidConfig("model parameters must be finite".into()));
        }
        Ok(Self { num_products, latent_dim, gamma, mu, delta })
    }

    pub fn num_products(&self) -> usize {
        self.num_products
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn gamma_row(&self, p: usize) -> &[f64] {
        &self.gamma[p * self.latent_dim..(p + 1) * self.latent_dim]
    }

    pub fn delta_row(&self, p: usize) -> &[f64] {
        &self.delta[p * self.latent_dim..(p + 1) * self.latent_dim]
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Organic log-odds of product `p` for latent `omega`.
    #[inline]
    pub fn logit(&self, omega: &[f64], p: usize) -> f64 {
        dot(omega, self.gamma_row(p)) / (self.latent_dim as f64).sqrt() + self.mu[p]
    }

    /// Bandit residual `ε` of product `p` for latent `omega`.
    #[inline]
    pub fn residual(&self, omega: &[f64], p: usize, sigma_phi: f64) -> f64 {
        sigma_phi * dot(omega, self.delta_row(p)) / (self.latent_dim as f64).sqrt()
    }

    /// Pre-fatigue bandit score `Λ[p] + ε[p]` for every product.
    pub fn bandit_scores(&self, omega: &[f64], sigma_phi: f64) -> Vec<f64> {
        (0..self.num_products)
            .map(|p| self.logit(omega, p) + self.residual(omega, p, sigma_phi))
            .collect()
    }

    pub fn organic_logits(&self, user: &UserState) -> Vec<f64> {
        (0..self.num_products).map(|p| self.logit(&user.omega, p)).collect()
    }

    pub fn organic_distribution(&self, user: &UserState) -> Vec<f64> {
        softmax(&self.organic_logits(user))
    }

    pub fn click_probability(&self, config: &SimConfig, user: &UserState, action: usize) -> f64 {
        let score = self.logit(&user.omega, action) + self.residual(&user.omega, action, config.sigma_phi);
        calibrated_click(config, score, user.exposure_counts[action])
    }

    /// Action with the highest click probability; ties go to the lowest index.
    pub fn best_action(&self, config: &SimConfig, user: &UserState) -> usize {
        argmax((0..self.num_products).map(|a| self.click_probability(config, user, a)))
    }
}

/// Session state of a simulated user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Session {
    Organic,
    Bandit,
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub user_id: u64,
    pub omega: Vec<f64>,
    pub session: Session,
    pub last_organic_product: Option<usize>,
    /// Ads shown so far, per product.
    pub exposure_counts: Vec<u32>,
    /// Index of the next event.
    pub t: u64,
}

impl UserState {
    pub fn new(user_id: u64, omega: Vec<f64>, num_products: usize) -> Self {
        Self {
            user_id,
            omega,
            session: Session::Organic,
            last_organic_product: None,
            exposure_counts: vec![0; num_products],
            t: 0,
        }
    }
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `f(score − φ_f·n)` with `f(x) = logistic(c₁x + c₀)`.
#[inline]
pub fn calibrated_click(config: &SimConfig, score: f64, exposures: u32) -> f64 {
    let x = score - config.fatigue_strength * f64::from(exposures);
    logistic(config.calib_scale * x + config.calib_offset)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the maximum; the first one wins ties. Empty input yields 0.
pub fn argmax<I: IntoIterator<Item = f64>>(values: I) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

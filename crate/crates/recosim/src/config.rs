use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for each transition-probability group to sum to one.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid config: {0}")]
pub struct InvalidConfig(pub String);

/// Knobs of the generative model and the session state machine.
///
/// Click probability for ad `a` shown to user `u` is
/// `logistic(calib_scale * (Λ[u,a] + ε[u,a] - fatigue_strength * n[u,a]) + calib_offset)`
/// where `n[u,a]` counts earlier displays of `a` to `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub num_products: usize,
    pub latent_dim: usize,
    /// Standard deviation of the noise separating bandit from organic log-odds.
    pub sigma_phi: f64,
    /// Log-odds penalty per earlier display of the same ad.
    pub fatigue_strength: f64,
    pub calib_scale: f64,
    pub calib_offset: f64,
    pub p_organic_to_organic: f64,
    pub p_organic_to_bandit: f64,
    pub p_organic_to_stop: f64,
    /// Used after a non-clicked ad; a click always returns the user to organic browsing.
    pub p_bandit_to_bandit: f64,
    pub p_bandit_to_stop: f64,
    pub max_events_per_user: u64,
    #[serde(with = "crate::io::seed_serde")]
    pub master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_products: 10,
            latent_dim: 5,
            sigma_phi: 1.0,
            fatigue_strength: 0.0,
            calib_scale: 1.0,
            calib_offset: -4.0,
            p_organic_to_organic: 0.7,
            p_organic_to_bandit: 0.25,
            p_organic_to_stop: 0.05,
            p_bandit_to_bandit: 0.9,
            p_bandit_to_stop: 0.1,
            max_events_per_user: 500,
            master_seed: 42,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        if self.num_products == 0 {
            return Err(InvalidConfig("num_products must be at least 1".into()));
        }
        if self.latent_dim == 0 {
            return Err(InvalidConfig("latent_dim must be at least 1".into()));
        }
        if !(self.sigma_phi.is_finite() && self.sigma_phi >= 0.0) {
            return Err(InvalidConfig(format!("sigma_phi must be finite and >= 0, got {}", self.sigma_phi)));
        }
        if !(self.fatigue_strength.is_finite() && self.fatigue_strength >= 0.0) {
            return Err(InvalidConfig(format!(
                "fatigue_strength must be finite and >= 0, got {}",
                self.fatigue_strength
            )));
        }
        if !(self.calib_scale.is_finite() && self.calib_scale > 0.0) {
            return Err(InvalidConfig(format!("calib_scale must be finite and > 0, got {}", self.calib_scale)));
        }
        if !self.calib_offset.is_finite() {
            return Err(InvalidConfig("calib_offset must be finite".into()));
        }
        check_group(
            "p_organic_to_*",
            &[self.p_organic_to_organic, self.p_organic_to_bandit, self.p_organic_to_stop],
        )?;
        check_group("p_bandit_to_*", &[self.p_bandit_to_bandit, self.p_bandit_to_stop])?;
        if self.max_events_per_user == 0 {
            return Err(InvalidConfig("max_events_per_user must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_group(name: &str, probs: &[f64]) -> Result<(), InvalidConfig> {
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(InvalidConfig(format!("{name}: probability {p} outside [0, 1]")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(InvalidConfig(format!("{name} must sum to 1, got {sum}")));
    }
    Ok(())
}

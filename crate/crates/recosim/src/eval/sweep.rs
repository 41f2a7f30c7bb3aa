use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{evaluate_online, generate_log_with_bandit_events, CtrReport, EvalError, EvalOptions, Policy};
use crate::agents::{Agent, AgentSettings, RandomAgent};
use crate::config::SimConfig;
use crate::rng::{derive_seed, LOGGING_SALT};

/// Agent label used for oracle-policy rows.
pub const ORACLE_LABEL: &str = "oracle";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    BanditEvents,
    SigmaPhi,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::BanditEvents => "bandit_events",
            Axis::SigmaPhi => "sigma_phi",
        })
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bandit_events" => Ok(Axis::BanditEvents),
            "sigma_phi" => Ok(Axis::SigmaPhi),
            other => Err(format!("unknown axis `{other}` (expected bandit_events or sigma_phi)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub agent: String,
    pub report: CtrReport,
    pub rep: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: Axis,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn values(&self) -> Vec<f64> {
        let mut values: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !values.contains(&r.value) {
                values.push(r.value);
            }
        }
        values
    }

    pub fn agents(&self) -> Vec<&str> {
        let mut agents: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !agents.contains(&r.agent.as_str()) {
                agents.push(&r.agent);
            }
        }
        agents
    }

    pub fn get(&self, value: f64, agent: &str, rep: u32) -> Option<&CtrReport> {
        self.rows
            .iter()
            .find(|r| r.value == value && r.agent == agent && r.rep == rep)
            .map(|r| &r.report)
    }

    /// Counts of `agent` at `value` pooled over repetitions.
    pub fn pooled(&self, value: f64, agent: &str, z: f64) -> Option<CtrReport> {
        let reports: Vec<&CtrReport> =
            self.rows.iter().filter(|r| r.value == value && r.agent == agent).map(|r| &r.report).collect();
        if reports.is_empty() {
            return None;
        }
        CtrReport::pooled(reports, z).ok()
    }

    /// Pooled CTR and interval of `agent` divided by the pooled oracle CTR at
    /// the same grid value, as `(ctr, low, high)`.
    pub fn normalized(&self, value: f64, agent: &str, z: f64) -> Option<(f64, f64, f64)> {
        let oracle = self.pooled(value, ORACLE_LABEL, z)?;
        let r = self.pooled(value, agent, z)?;
        Some((r.ctr / oracle.ctr, r.ci_low / oracle.ctr, r.ci_high / oracle.ctr))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub eval_users: u64,
    pub reps: u32,
    pub seed: u64,
    pub eval: EvalOptions,
}

fn check_ascending(grid: &[f64]) -> Result<(), EvalError> {
    if grid.is_empty() {
        return Err(EvalError::InvalidSweep("grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidSweep("grid must be strictly ascending".into()));
    }
    Ok(())
}

fn logging_policy(config: &SimConfig, rep_seed: u64) -> RandomAgent {
    RandomAgent::new(config.num_products, derive_seed(rep_seed, LOGGING_SALT))
}

/// Seed of repetition `rep`.
pub fn rep_seed(seed: u64, rep: u32) -> u64 {
    derive_seed(seed, u64::from(rep))
}

/// Performance as the number of training bandit events grows.
///
/// Per repetition one log is generated and truncated at the largest grid
/// value. Grid value `N` trains on every organic row of that log plus its
/// first `N` bandit rows, so organic data is held fixed along the axis. All
/// agents and grid values of a repetition are evaluated on the same users.
pub fn sweep_bandit_events(
    config: &SimConfig,
    agents: &AgentSettings,
    names: &[&str],
    grid: &[usize],
    settings: &SweepSettings,
) -> Result<SweepTable, EvalError> {
    check_ascending(&grid.iter().map(|&n| n as f64).collect::<Vec<_>>())?;
    check_reps(settings)?;
    for name in names {
        agents.build(name, config.num_products)?;
    }
    let max = *grid.last().expect("grid checked non-empty");
    let mut rows = Vec::new();
    for rep in 0..settings.reps {
        let seed = rep_seed(settings.seed, rep);
        let logger = logging_policy(config, seed);
        let base = generate_log_with_bandit_events(config, max, &logger, seed)?;
        for &n in grid {
            let train = base.with_bandit_budget(n);
            for name in names {
                let mut agent = agents.build(name, config.num_products)?;
                agent.train(&train)?;
                let report = evaluate_online(config, Policy::Agent(&agent), settings.eval_users, seed, &settings.eval)?;
                log::debug!("bandit_events={n} agent={name} rep={rep} ctr={:.5}", report.ctr);
                rows.push(SweepRow { value: n as f64, agent: name.to_string(), report, rep });
            }
        }
    }
    Ok(SweepTable { axis: Axis::BanditEvents, rows })
}

/// Performance as the organic/bandit noise `σ_Φ` grows.
///
/// Each grid value reuses the master seed (same product parameters), draws a
/// fresh training log of `training_bandit_events` bandit rows, and also
/// records the oracle policy under [`ORACLE_LABEL`] for normalization.
pub fn sweep_sigma_phi(
    config: &SimConfig,
    agents: &AgentSettings,
    names: &[&str],
    grid: &[f64],
    training_bandit_events: usize,
    settings: &SweepSettings,
) -> Result<SweepTable, EvalError> {
    check_ascending(grid)?;
    check_reps(settings)?;
    if grid.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(EvalError::InvalidSweep("sigma_phi values must be finite and >= 0".into()));
    }
    for name in names {
        agents.build(name, config.num_products)?;
    }
    let mut rows = Vec::new();
    for rep in 0..settings.reps {
        let seed = rep_seed(settings.seed, rep);
        for &sigma in grid {
            let cfg = SimConfig { sigma_phi: sigma, ..config.clone() };
            let logger = logging_policy(&cfg, seed);
            let train = generate_log_with_bandit_events(&cfg, training_bandit_events, &logger, seed)?;
            for name in names {
                let mut agent = agents.build(name, cfg.num_products)?;
                agent.train(&train)?;
                let report = evaluate_online(&cfg, Policy::Agent(&agent), settings.eval_users, seed, &settings.eval)?;
                log::debug!("sigma_phi={sigma} agent={name} rep={rep} ctr={:.5}", report.ctr);
                rows.push(SweepRow { value: sigma, agent: name.to_string(), report, rep });
            }
            let report = evaluate_online(&cfg, Policy::Oracle, settings.eval_users, seed, &settings.eval)?;
            rows.push(SweepRow { value: sigma, agent: ORACLE_LABEL.to_string(), report, rep });
        }
    }
    Ok(SweepTable { axis: Axis::SigmaPhi, rows })
}

fn check_reps(settings: &SweepSettings) -> Result<(), EvalError> {
    if settings.reps == 0 {
        return Err(EvalError::InvalidSweep("reps must be at least 1".into()));
    }
    Ok(())
}

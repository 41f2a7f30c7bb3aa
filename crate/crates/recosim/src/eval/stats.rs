use serde::{Deserialize, Serialize};

use super::EvalError;

/// Normal quantile for a two-sided 95% interval.
pub const Z_95: f64 = 1.959963984540054;

/// Wilson score interval for `clicks` successes in `displays` trials.
pub fn wilson_interval(clicks: u64, displays: u64, z: f64) -> Result<(f64, f64), EvalError> {
    if displays == 0 {
        return Err(EvalError::ZeroDisplays);
    }
    assert!(clicks <= displays, "clicks ({clicks}) exceed displays ({displays})");
    assert!(z > 0.0, "z must be positive");
    let n = displays as f64;
    let p = clicks as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The closed form hits the bounds exactly at the extremes.
    let low = if clicks == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if clicks == displays { 1.0 } else { (center + half).min(1.0) };
    Ok((low, high))
}

/// Fixed-point scale for accumulating regret exactly.
const REGRET_SCALE: f64 = (1u64 << 52) as f64;

/// Mergeable display/click/regret accumulator.
///
/// Regret is stored in fixed point so that merging is exact integer addition
/// and results do not depend on how work was partitioned.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub displays: u64,
    pub clicks: u64,
    regret_fixed: u128,
}

impl Tally {
    pub fn record(&mut self, click: bool, regret: Option<f64>) {
        self.displays += 1;
        self.clicks += u64::from(click);
        if let Some(r) = regret {
            debug_assert!(r >= 0.0);
            self.regret_fixed += (r.max(0.0) * REGRET_SCALE).round() as u128;
        }
    }

    pub fn merge(self, other: Tally) -> Tally {
        Tally {
            displays: self.displays + other.displays,
            clicks: self.clicks + other.clicks,
            regret_fixed: self.regret_fixed + other.regret_fixed,
        }
    }

    pub fn total_regret(&self) -> f64 {
        self.regret_fixed as f64 / REGRET_SCALE
    }

    pub fn report(&self, z: f64, with_regret: bool) -> Result<CtrReport, EvalError> {
        let (ci_low, ci_high) = wilson_interval(self.clicks, self.displays, z)?;
        Ok(CtrReport {
            displays: self.displays,
            clicks: self.clicks,
            ctr: self.clicks as f64 / self.displays as f64,
            ci_low,
            ci_high,
            mean_regret: with_regret.then(|| self.total_regret() / self.displays as f64),
        })
    }
}

/// Online click-through summary of a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtrReport {
    pub displays: u64,
    pub clicks: u64,
    pub ctr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Mean per-display regret; only computed in oracle mode.
    pub mean_regret: Option<f64>,
}

impl CtrReport {
    /// Pools counts of several reports into one report.
    pub fn pooled<'a, I: IntoIterator<Item = &'a CtrReport>>(reports: I, z: f64) -> Result<CtrReport, EvalError> {
        let (displays, clicks) =
            reports.into_iter().fold((0, 0), |(d, c), r| (d + r.displays, c + r.clicks));
        let (ci_low, ci_high) = wilson_interval(clicks, displays, z)?;
        Ok(CtrReport { displays, clicks, ctr: clicks as f64 / displays as f64, ci_low, ci_high, mean_regret: None })
    }

    pub fn overlaps(&self, other: &CtrReport) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }

    /// Both intervals are disjoint and this one lies above.
    pub fn separated_above(&self, other: &CtrReport) -> bool {
        self.ci_low > other.ci_high
    }
}

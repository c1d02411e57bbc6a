use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Carrier baseband frequency, tag modulation frequency and receiver sampling rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrequencyPlan {
    pub f_b: f64,
    pub f_m: f64,
    pub f_s: f64,
}

impl Default for FrequencyPlan {
    fn default() -> Self {
        Self {
            f_b: 1e6,
            f_m: 500e3,
            f_s: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanVerdict {
    Valid,
    /// The carrier rotates faster than the tag symbol rate.
    SpinningConstellation,
    /// The receiver samples faster than the carrier baseband.
    ConcentricCircles,
}

impl FrequencyPlan {
    pub fn new(f_b: f64, f_m: f64, f_s: f64) -> Result<Self> {
        let plan = Self { f_b, f_m, f_s };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.f_b, self.f_m, self.f_s].iter().all(|f| *f > 0.0 && f.is_finite()) {
            Ok(())
        } else {
            Err(invalid(format!("frequency plan entries must be positive: {self:?}")))
        }
    }
}

/// Valid iff `f_b ≥ f_s ≥ 2·f_m`. When the plan is both spinning and
/// over-sampled the spinning diagnosis is reported.
pub fn check_frequency_plan(p: &FrequencyPlan) -> PlanVerdict {
    if p.f_b >= p.f_s && p.f_s >= 2.0 * p.f_m {
        PlanVerdict::Valid
    } else if p.f_b < p.f_m {
        PlanVerdict::SpinningConstellation
    } else if p.f_s > p.f_b {
        PlanVerdict::ConcentricCircles
    } else {
        // f_s < 2 f_m with a fast enough carrier: the tag symbols are undersampled,
        // which shows up as the same rotating clusters.
        PlanVerdict::SpinningConstellation
    }
}

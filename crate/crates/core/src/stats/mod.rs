//! Proportion estimates with score intervals, leave-one-out outlier tests
//! and two-stage sample planning.

pub mod normal;
mod tables;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::consensus::TestVariance;
pub use tables::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn invalid(msg: impl Into<String>) -> StatsError {
    StatsError::InvalidInput(msg.into())
}

/// Wilson score interval for k successes in n trials at level 1 − alpha.
pub fn wilson_ci(k: u64, n: u64, alpha: f64) -> Result<(f64, f64), StatsError> {
    if n == 0 || k > n {
        return Err(invalid(format!("need 0 <= k <= n and n >= 1, got k={k}, n={n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(wilson_with_z(k, n, normal::critical_value(alpha)))
}

fn wilson_with_z(k: u64, n: u64, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let low = if k == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let high = if k == n { 1.0 } else { (center + half).clamp(p, 1.0) };
    (low, high)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProportionCount {
    pub group: String,
    pub category: String,
    pub k: u64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionEstimate {
    pub group: String,
    pub category: String,
    pub k: u64,
    pub n: u64,
    /// Absent when n = 0.
    pub p_hat: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub alpha_effective: f64,
}

impl ProportionEstimate {
    pub fn new(count: &ProportionCount, alpha_effective: f64) -> Result<Self, StatsError> {
        let (p_hat, ci) = if count.n == 0 {
            if count.k > 0 {
                return Err(invalid(format!("k={} with n=0", count.k)));
            }
            (None, None)
        } else {
            (
                Some(count.k as f64 / count.n as f64),
                Some(wilson_ci(count.k, count.n, alpha_effective)?),
            )
        };
        Ok(ProportionEstimate {
            group: count.group.clone(),
            category: count.category.clone(),
            k: count.k,
            n: count.n,
            p_hat,
            ci_low: ci.map(|c| c.0),
            ci_high: ci.map(|c| c.1),
            alpha_effective,
        })
    }
}

/// Bonferroni-adjusted intervals: each at alpha / family_size.
pub fn simultaneous_cis(
    counts: &[ProportionCount],
    alpha: f64,
    family_size: usize,
) -> Result<Vec<ProportionEstimate>, StatsError> {
    if family_size == 0 {
        return Err(invalid("family size must be at least 1"));
    }
    let a = alpha / family_size as f64;
    counts.par_iter().map(|c| ProportionEstimate::new(c, a)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Higher,
    Lower,
    NotSignificant,
}

impl Direction {
    pub fn token(self) -> &'static str {
        match self {
            Direction::Higher => "higher",
            Direction::Lower => "lower",
            Direction::NotSignificant => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestNote {
    /// The pooled proportion (or, unpooled, the standard error) is
    /// degenerate, so no test statistic exists.
    DegenerateCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierResult {
    pub group: String,
    pub category: String,
    pub direction: Direction,
    pub z: Option<f64>,
    pub raw_p: f64,
    pub adjusted_p: f64,
    pub group_proportion: f64,
    /// Proportion over every other group combined.
    pub rest_proportion: f64,
    pub note: Option<TestNote>,
}

/// Two-proportion z statistic for k1/n1 against k2/n2, or `None` when the
/// variance estimate is zero.
pub fn two_proportion_z(k1: u64, n1: u64, k2: u64, n2: u64, variance: TestVariance) -> Option<f64> {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let p1 = k1 as f64 / n1f;
    let p2 = k2 as f64 / n2f;
    let var = match variance {
        TestVariance::Pooled => {
            let p = (k1 + k2) as f64 / (n1f + n2f);
            p * (1.0 - p) * (1.0 / n1f + 1.0 / n2f)
        }
        TestVariance::Unpooled => p1 * (1.0 - p1) / n1f + p2 * (1.0 - p2) / n2f,
    };
    (var > 0.0).then(|| (p1 - p2) / var.sqrt())
}

/// Each group against the union of all other groups, Bonferroni-adjusted
/// over the number of groups. Groups are `(label, k, n)` for one category.
pub fn leave_one_out_tests(
    category: &str,
    groups: &[(String, u64, u64)],
    alpha: f64,
    variance: TestVariance,
) -> Result<Vec<OutlierResult>, StatsError> {
    if groups.len() < 2 {
        return Err(invalid("leave-one-out tests need at least two groups"));
    }
    if let Some((g, k, n)) = groups.iter().find(|(_, k, n)| *n == 0 || k > n) {
        return Err(invalid(format!("group {g}: need 1 <= n and k <= n, got k={k}, n={n}")));
    }
    let m = groups.len() as f64;
    let total_k: u64 = groups.iter().map(|g| g.1).sum();
    let total_n: u64 = groups.iter().map(|g| g.2).sum();
    Ok(groups
        .iter()
        .map(|(g, k, n)| {
            let (rk, rn) = (total_k - k, total_n - n);
            let gp = *k as f64 / *n as f64;
            let rp = rk as f64 / rn as f64;
            let z = two_proportion_z(*k, *n, rk, rn, variance);
            let raw_p = z.map_or(1.0, normal::two_sided_p);
            let adjusted_p = (raw_p * m).min(1.0);
            let direction = match z {
                Some(z) if adjusted_p < alpha && z > 0.0 => Direction::Higher,
                Some(z) if adjusted_p < alpha && z < 0.0 => Direction::Lower,
                _ => Direction::NotSignificant,
            };
            OutlierResult {
                group: g.clone(),
                category: category.to_string(),
                direction,
                z,
                raw_p,
                adjusted_p,
                group_proportion: gp,
                rest_proportion: rp,
                note: z.is_none().then_some(TestNote::DegenerateCell),
            }
        })
        .collect())
}

/// Stage-1 results for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotSummary {
    pub group: String,
    /// Records drawn in stage 1.
    pub draw: u64,
    /// Share of drawn records that were IIA, as an exact fraction.
    pub iia_rate: Ratio<i64>,
    /// Pilot estimate of the proportion being planned for; worst case 0.5
    /// when absent.
    pub proportion: Option<f64>,
}

impl PilotSummary {
    pub fn from_counts(group: impl Into<String>, draw: u64, iia: u64, proportion: Option<f64>) -> Result<Self, StatsError> {
        if draw == 0 || iia == 0 || iia > draw {
            return Err(invalid(format!("need 0 < iia <= draw, got iia={iia}, draw={draw}")));
        }
        Ok(PilotSummary {
            group: group.into(),
            draw,
            iia_rate: Ratio::new(iia as i64, draw as i64),
            proportion,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub group: String,
    pub target_moe: f64,
    pub confidence: f64,
    pub z: f64,
    pub iia_rate: f64,
    pub proportion: f64,
    pub required_iia: u64,
    pub required_raw: u64,
    pub stage1_draw: u64,
    pub stage2_draw: u64,
}

/// n* = ceil(z² p (1 − p) / moe²) IIA records; the raw draw inflates n* by
/// the pilot IIA rate.
pub fn plan_sample(pilot: &PilotSummary, target_moe: f64, confidence: f64) -> Result<SamplePlan, StatsError> {
    if !(target_moe > 0.0 && target_moe < 0.5) {
        return Err(invalid(format!("target margin of error must lie in (0, 0.5), got {target_moe}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let rate = pilot.iia_rate;
    if *rate.numer() <= 0 || rate > Ratio::from_integer(1) {
        return Err(invalid(format!("IIA rate must lie in (0, 1], got {rate}")));
    }
    let p = pilot.proportion.unwrap_or(0.5);
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("pilot proportion must lie in [0, 1], got {p}")));
    }
    let z = normal::critical_value(1.0 - confidence);
    let required_iia = (z * z * p * (1.0 - p) / (target_moe * target_moe)).ceil() as u64;
    // ceil(n* / (a/b)) = ceil(n* b / a) in integers
    let (a, b) = (*rate.numer() as u128, *rate.denom() as u128);
    let required_raw = (required_iia as u128 * b).div_ceil(a);
    let required_raw = u64::try_from(required_raw).map_err(|_| invalid("required sample overflows"))?;
    Ok(SamplePlan {
        group: pilot.group.clone(),
        target_moe,
        confidence,
        z,
        iia_rate: rate.to_f64().unwrap_or(f64::NAN),
        proportion: p,
        required_iia,
        required_raw,
        stage1_draw: pilot.draw,
        stage2_draw: required_raw.saturating_sub(pilot.draw),
    })
}

//! Tunable thresholds for a campaign, read from a flat `key = value` file.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact rational used for every score and threshold.
pub type Score = Ratio<i64>;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("`{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("`{key}` out of range: {reason}")]
    OutOfRange { key: String, reason: String },
}

/// A decimal-or-fraction literal held exactly, e.g. `0.65` or `2/3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(pub Score);

impl Exact {
    pub fn new(numer: i64, denom: i64) -> Self {
        Exact(Ratio::new(numer, denom))
    }

    pub fn value(self) -> Score {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl FromStr for Exact {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| s.to_string())?;
            let d: i64 = d.trim().parse().map_err(|_| s.to_string())?;
            if d == 0 {
                return Err(s.to_string());
            }
            return Ok(Exact(Ratio::new(n, d)));
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty()
            || !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
            || frac_part.len() > 12
        {
            return Err(s.to_string());
        }
        let denom = 10_i64.pow(frac_part.len() as u32);
        let int_val: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| s.to_string())? };
        let frac_val: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| s.to_string())? };
        let numer = int_val
            .checked_mul(denom)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(|| s.to_string())?;
        Ok(Exact(Ratio::new(if neg { -numer } else { numer }, denom)))
    }
}

impl fmt::Display for Exact {
    /// Terminating decimals print as decimals, everything else as `n/d`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.0;
        let mut d = *r.denom();
        let mut digits = 0u32;
        // decimal digits needed = max(power of 2, power of 5) in the denominator
        while d % 2 == 0 || d % 5 == 0 {
            if d % 10 == 0 {
                d /= 10;
            } else if d % 2 == 0 {
                d /= 2;
            } else {
                d /= 5;
            }
            digits += 1;
        }
        if d != 1 {
            return write!(f, "{}/{}", r.numer(), r.denom());
        }
        if r.is_integer() {
            return write!(f, "{}", r.numer());
        }
        let scale = 10_i64.pow(digits);
        let scaled = (r * Ratio::from_integer(scale)).to_integer();
        let sign = if scaled < 0 { "-" } else { "" };
        let abs = scaled.abs();
        let s = format!("{}.{:0width$}", abs / scale, abs % scale, width = digits as usize);
        write!(f, "{sign}{}", s.trim_end_matches('0'))
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|e| serde::de::Error::custom(format!("bad exact literal `{e}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecadeRounding {
    /// 1835 -> 1830
    HalfDown,
    /// 1835 -> 1840
    HalfUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestVariance {
    Pooled,
    Unpooled,
}

/// Every tunable knob of the pipeline, with the published defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub gender_threshold: Exact,
    pub ethnicity_threshold: Exact,
    pub region_threshold: Exact,
    pub min_support: usize,
    pub z_cut: Exact,
    pub typo_tolerance_years: Exact,
    pub decade_rounding: DecadeRounding,

    pub fast_cutoff_secs: f64,
    pub volume_threshold: usize,
    pub fast_fraction_threshold: f64,
    pub agreement_threshold: f64,

    pub alpha: f64,
    pub test_variance: TestVariance,
    pub sample_moe: f64,
    pub sample_confidence: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            gender_threshold: Exact::new(65, 100),
            ethnicity_threshold: Exact::new(65, 100),
            region_threshold: Exact::new(8, 10),
            min_support: 3,
            z_cut: Exact::new(1, 1),
            typo_tolerance_years: Exact::new(1, 1),
            decade_rounding: DecadeRounding::HalfDown,
            fast_cutoff_secs: 30.0,
            volume_threshold: 500,
            fast_fraction_threshold: 0.5,
            agreement_threshold: 0.6,
            alpha: 0.05,
            test_variance: TestVariance::Pooled,
            sample_moe: 0.033,
            sample_confidence: 0.95,
        }
    }
}

pub const CONFIG_KEYS: [&str; 15] = [
    "gender_threshold",
    "ethnicity_threshold",
    "region_threshold",
    "min_support",
    "z_cut",
    "typo_tolerance_years",
    "decade_rounding",
    "fast_cutoff_secs",
    "volume_threshold",
    "fast_fraction_threshold",
    "agreement_threshold",
    "alpha",
    "test_variance",
    "sample_moe",
    "sample_confidence",
];

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn parse_as<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| bad(key, value))
}

impl CampaignConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = CampaignConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            cfg.set(key.trim(), value.trim().trim_matches('"'))
                .map_err(|e| match e {
                    ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: i + 1, key },
                    other => other,
                })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "gender_threshold" => self.gender_threshold = parse_as(key, value)?,
            "ethnicity_threshold" => self.ethnicity_threshold = parse_as(key, value)?,
            "region_threshold" => self.region_threshold = parse_as(key, value)?,
            "min_support" => self.min_support = parse_as(key, value)?,
            "z_cut" => self.z_cut = parse_as(key, value)?,
            "typo_tolerance_years" => self.typo_tolerance_years = parse_as(key, value)?,
            "decade_rounding" => {
                self.decade_rounding = match value {
                    "half_down" => DecadeRounding::HalfDown,
                    "half_up" => DecadeRounding::HalfUp,
                    _ => return Err(bad(key, value)),
                }
            }
            "fast_cutoff_secs" => self.fast_cutoff_secs = parse_as(key, value)?,
            "volume_threshold" => self.volume_threshold = parse_as(key, value)?,
            "fast_fraction_threshold" => self.fast_fraction_threshold = parse_as(key, value)?,
            "agreement_threshold" => self.agreement_threshold = parse_as(key, value)?,
            "alpha" => self.alpha = parse_as(key, value)?,
            "test_variance" => {
                self.test_variance = match value {
                    "pooled" => TestVariance::Pooled,
                    "unpooled" => TestVariance::Unpooled,
                    _ => return Err(bad(key, value)),
                }
            }
            "sample_moe" => self.sample_moe = parse_as(key, value)?,
            "sample_confidence" => self.sample_confidence = parse_as(key, value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |key: &str, v: Exact| {
            if v.0.is_positive() && v.0 <= Ratio::from_integer(1) {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    key: key.into(),
                    reason: format!("{v} not in (0, 1]"),
                })
            }
        };
        unit("gender_threshold", self.gender_threshold)?;
        unit("ethnicity_threshold", self.ethnicity_threshold)?;
        unit("region_threshold", self.region_threshold)?;
        let range = |key: &str, ok: bool, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    key: key.into(),
                    reason: reason.into(),
                })
            }
        };
        range("min_support", self.min_support >= 1, "must be at least 1")?;
        range("z_cut", self.z_cut.0.is_positive(), "must be positive")?;
        range(
            "typo_tolerance_years",
            !self.typo_tolerance_years.0.is_negative(),
            "must be nonnegative",
        )?;
        range("fast_cutoff_secs", self.fast_cutoff_secs >= 0.0, "must be nonnegative")?;
        range(
            "fast_fraction_threshold",
            (0.0..=1.0).contains(&self.fast_fraction_threshold),
            "must be in [0, 1]",
        )?;
        range(
            "agreement_threshold",
            (0.0..=1.0).contains(&self.agreement_threshold),
            "must be in [0, 1]",
        )?;
        range("alpha", self.alpha > 0.0 && self.alpha < 1.0, "must be in (0, 1)")?;
        range("sample_moe", self.sample_moe > 0.0 && self.sample_moe < 0.5, "must be in (0, 0.5)")?;
        range(
            "sample_confidence",
            self.sample_confidence > 0.0 && self.sample_confidence < 1.0,
            "must be in (0, 1)",
        )?;
        Ok(())
    }

    /// Renders every key in [`CONFIG_KEYS`] order; parses back to `self`.
    pub fn to_kv_string(&self) -> String {
        let rounding = match self.decade_rounding {
            DecadeRounding::HalfDown => "half_down",
            DecadeRounding::HalfUp => "half_up",
        };
        let variance = match self.test_variance {
            TestVariance::Pooled => "pooled",
            TestVariance::Unpooled => "unpooled",
        };
        let values: [String; 15] = [
            self.gender_threshold.to_string(),
            self.ethnicity_threshold.to_string(),
            self.region_threshold.to_string(),
            self.min_support.to_string(),
            self.z_cut.to_string(),
            self.typo_tolerance_years.to_string(),
            rounding.to_string(),
            self.fast_cutoff_secs.to_string(),
            self.volume_threshold.to_string(),
            self.fast_fraction_threshold.to_string(),
            self.agreement_threshold.to_string(),
            self.alpha.to_string(),
            variance.to_string(),
            self.sample_moe.to_string(),
            self.sample_confidence.to_string(),
        ];
        CONFIG_KEYS
            .iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

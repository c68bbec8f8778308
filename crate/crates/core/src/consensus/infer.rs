//! Per-record inference rules. All scores are exact rationals; a weight of
//! 1/3, 2/3 or 1 multiplies each worker's vote.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::config::{CampaignConfig, DecadeRounding, Score};
use super::region::{CountryLookup, Region, RegionMap};
use super::{Attribute, ConsensusError};
use crate::ingest::{AnnotationResponse, Ethnicity, GenderAnswer, IiaAnswer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IiaVerdict {
    Iia,
    NonIia,
    Undetermined,
}

impl IiaVerdict {
    pub fn token(self) -> &'static str {
        match self {
            IiaVerdict::Iia => "iia",
            IiaVerdict::NonIia => "non_iia",
            IiaVerdict::Undetermined => "undetermined",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "iia" => Some(IiaVerdict::Iia),
            "non_iia" => Some(IiaVerdict::NonIia),
            "undetermined" => Some(IiaVerdict::Undetermined),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    Man,
    Woman,
}

impl Gender {
    pub fn token(self) -> &'static str {
        match self {
            Gender::Man => "man",
            Gender::Woman => "woman",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "man" => Some(Gender::Man),
            "woman" => Some(Gender::Woman),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EthnicityOutcome {
    Single(Ethnicity),
    /// Two or more categories cleared the threshold; the record is left out
    /// of ethnicity analysis.
    MultipleExcluded,
}

impl EthnicityOutcome {
    pub fn token(self) -> &'static str {
        match self {
            EthnicityOutcome::Single(e) => e.token(),
            EthnicityOutcome::MultipleExcluded => "multiple_excluded",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "multiple_excluded" => Some(EthnicityOutcome::MultipleExcluded),
            other => Ethnicity::parse(other).map(EthnicityOutcome::Single),
        }
    }

    pub fn single(self) -> Option<Ethnicity> {
        match self {
            EthnicityOutcome::Single(e) => Some(e),
            EthnicityOutcome::MultipleExcluded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IiaOutcome<'a> {
    pub verdict: IiaVerdict,
    pub yes: usize,
    pub total: usize,
    /// Responses used downstream: everything except the "No" answers when
    /// the verdict is IIA, nothing otherwise.
    pub retained: Vec<&'a AnnotationResponse>,
}

/// Majority rule on the IIA question. Exactly half is not a majority.
pub fn infer_iia<'a, I>(responses: I, config: &CampaignConfig) -> IiaOutcome<'a>
where
    I: IntoIterator<Item = &'a AnnotationResponse>,
{
    let all: Vec<&AnnotationResponse> = responses.into_iter().collect();
    let total = all.len();
    let yes = all.iter().filter(|r| r.iia == IiaAnswer::Yes).count();
    let verdict = if total < config.min_support {
        IiaVerdict::Undetermined
    } else if 2 * yes > total {
        IiaVerdict::Iia
    } else {
        IiaVerdict::NonIia
    };
    let retained = match verdict {
        IiaVerdict::Iia => all.into_iter().filter(|r| r.iia != IiaAnswer::No).collect(),
        _ => Vec::new(),
    };
    IiaOutcome {
        verdict,
        yes,
        total,
        retained,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenderEstimate {
    pub score: Score,
    pub n: usize,
    pub inferred: Option<Gender>,
}

/// Mean of (-1 for man, +1 for woman) x confidence weight over the man /
/// woman answers. Nonbinary, unknown and not-IIA answers are left out.
pub fn gender_score<'a, I>(responses: I) -> Result<(Score, usize), ConsensusError>
where
    I: IntoIterator<Item = &'a AnnotationResponse>,
{
    let mut sum = Ratio::from_integer(0);
    let mut n = 0usize;
    for r in responses {
        let Some(a) = &r.gender else { continue };
        let sign = match a.value {
            GenderAnswer::Man => -1,
            GenderAnswer::Woman => 1,
            _ => continue,
        };
        sum += a.confidence.weight() * sign;
        n += 1;
    }
    if n == 0 {
        return Err(ConsensusError::NoUsableResponses(Attribute::Gender));
    }
    Ok((sum / Ratio::from_integer(n as i64), n))
}

pub fn estimate_gender<'a, I>(responses: I, config: &CampaignConfig) -> Result<GenderEstimate, ConsensusError>
where
    I: IntoIterator<Item = &'a AnnotationResponse>,
{
    let (score, n) = gender_score(responses)?;
    let tau = config.gender_threshold.value();
    let inferred = if n < config.min_support {
        None
    } else if score <= -tau {
        Some(Gender::Man)
    } else if score >= tau {
        Some(Gender::Woman)
    } else {
        None
    };
    Ok(GenderEstimate { score, n, inferred })
}

pub fn infer_gender<'a, I>(responses: I, config: &CampaignConfig) -> Option<Gender>
where
    I: IntoIterator<Item = &'a AnnotationResponse>,
{
    estimate_gender(responses, config).ok().and_then(|e| e.inferred)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryEstimate<C: Ord> {
    pub scores: BTreeMap<C, Score>,
    /// Number of responses naming each category.
    pub support: BTreeMap<C, usize>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EthnicityEstimate {
    pub categories: CategoryEstimate<Ethnicity>,
    pub outcome: Option<EthnicityOutcome>,
}

/// Per-category mean weighted indicator over responses that selected at
/// least one listed category. Free text never contributes; the three rare
/// census categories count as `Other` (once per response).
pub fn estimate_ethnicity<'a, I>(responses: I, config: &CampaignConfig) -> Result<EthnicityEstimate, ConsensusError>
where
    I: IntoIterator<Item = &'a AnnotationResponse>,
{
    let mut sums: BTreeMap<Ethnicity, Score> = BTreeMap::new();
    let mut support: BTreeMap<Ethnicity, usize> = BTreeMap::new();
    let mut n = 0usize;
    for r in responses {
        let Some(a) = &r.ethnicity else { continue };
        if a.categories.is_empty() {
            continue;
        }
        n += 1;
        let collapsed: std::collections::BTreeSet<Ethnicity> =
            a.categories.iter().map(|c| c.collapse()).collect();
        for c in collapsed {
            *sums.entry(c).or_insert_with(|| Ratio::from_integer(0)) += a.confidence.weight();
            *support.entry(c).or_insert(0) += 1;
        }
    }
    if n == 0 {
        return Err(ConsensusError::NoUsableResponses(Attribute::Ethnicity));
    }
    let denom = Ratio::from_integer(n as i64);
    let scores: BTreeMap<Ethnicity, Score> = sums.into_iter().map(|(c, s)| (c, s / denom)).collect();
    let tau = config.ethnicity_threshold.value();
    let qualifying: Vec<Ethnicity> = scores
        .iter()
        .filter(|(c, s)| **s > tau && support[*c] >= config.min_support)
        .map(|(c, _)| *c)
        .collect();
    let outcome = match qualifying.as_slice() {
        [] => None,
        [one] => Some(EthnicityOutcome::Single(*one)),
        _ => Some(EthnicityOutcome::MultipleExcluded),
    };
    Ok(EthnicityEstimate {
        categories: CategoryEstimate { scores, support, n },
        outcome,
    })
}

pub fn infer_ethnicity<'a, I>(responses: I, config: &CampaignConfig) -> Option<EthnicityOutcome>
where
    I: IntoIterator<Item = &'a AnnotationResponse>,
{
    estimate_ethnicity(responses, config).ok().and_then(|e| e.outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionEstimate {
    pub regions: CategoryEstimate<Region>,
    pub inferred: Option<Region>,
    /// Country answers absent from the map; excluded from `n`.
    pub unknown_countries: Vec<String>,
}

/// Per-region mean weighted indicator over responses whose country resolved.
pub fn estimate_region<'a, I>(responses: I, map: &RegionMap, config: &CampaignConfig) -> RegionEstimate
where
    I: IntoIterator<Item = &'a AnnotationResponse>,
{
    let mut sums: BTreeMap<Region, Score> = BTreeMap::new();
    let mut support: BTreeMap<Region, usize> = BTreeMap::new();
    let mut unknown_countries = Vec::new();
    let mut n = 0usize;
    for r in responses {
        let Some(a) = &r.origin else { continue };
        match map.lookup(&a.value) {
            CountryLookup::Region(region) => {
                n += 1;
                *sums.entry(region).or_insert_with(|| Ratio::from_integer(0)) += a.confidence.weight();
                *support.entry(region).or_insert(0) += 1;
            }
            CountryLookup::Abstained => {}
            CountryLookup::Unknown(name) => unknown_countries.push(name),
        }
    }
    let scores: BTreeMap<Region, Score> = if n == 0 {
        BTreeMap::new()
    } else {
        let denom = Ratio::from_integer(n as i64);
        sums.into_iter().map(|(c, s)| (c, s / denom)).collect()
    };
    let tau = config.region_threshold.value();
    // Only one region can qualify when tau > 1/2; for lower thresholds the
    // unique top scorer wins and a tie yields no inference.
    let mut qualifying: Vec<(Region, Score)> = scores
        .iter()
        .filter(|(r, s)| **s >= tau && support[*r] >= config.min_support)
        .map(|(r, s)| (*r, *s))
        .collect();
    qualifying.sort_by(|a, b| b.1.cmp(&a.1));
    let inferred = match qualifying.as_slice() {
        [] => None,
        [(r, _)] => Some(*r),
        [(r, top), (_, next), ..] => (top > next).then_some(*r),
    };
    RegionEstimate {
        regions: CategoryEstimate { scores, support, n },
        inferred,
        unknown_countries,
    }
}

pub fn infer_region<'a, I>(responses: I, map: &RegionMap, config: &CampaignConfig) -> Option<Region>
where
    I: IntoIterator<Item = &'a AnnotationResponse>,
{
    estimate_region(responses, map, config).inferred
}

#[derive(Debug, Clone, PartialEq)]
pub struct BirthEstimate {
    /// Years that parsed as three- or four-digit numbers.
    pub parsed: Vec<i64>,
    pub discarded: Vec<i64>,
    /// Number of responses surviving the outlier filter.
    pub n: usize,
    /// Confidence-weighted mean of the surviving years.
    pub weighted_mean: Option<Score>,
    pub decade: Option<i64>,
}

/// Accepts only bare three- or four-digit numbers.
pub fn parse_year(raw: &str) -> Option<i64> {
    let s = raw.trim();
    if (3..=4).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

/// Indices of years to discard: |z| above the cut *and* farther than the
/// typo tolerance from the unweighted mean. Population standard deviation;
/// nothing is discarded with two or fewer years or zero spread.
pub fn outlier_mask(years: &[i64], config: &CampaignConfig) -> Vec<bool> {
    let n = years.len() as i128;
    if n <= 2 {
        return vec![false; years.len()];
    }
    let sum: i128 = years.iter().map(|&y| y as i128).sum();
    let sum_sq: i128 = years.iter().map(|&y| (y as i128) * (y as i128)).sum();
    // n^2 * variance
    let spread = n * sum_sq - sum * sum;
    if spread == 0 {
        return vec![false; years.len()];
    }
    let z = config.z_cut.value();
    let (zp, zq) = (*z.numer() as i128, *z.denom() as i128);
    let tol = config.typo_tolerance_years.value();
    let (tp, tq) = (*tol.numer() as i128, *tol.denom() as i128);
    years
        .iter()
        .map(|&y| {
            // n * (y - mean)
            let dev = n * y as i128 - sum;
            let beyond_z = zq * zq * dev * dev > zp * zp * spread;
            let beyond_typo = tq * dev.abs() > tp * n;
            beyond_z && beyond_typo
        })
        .collect()
}

pub fn round_to_decade(mean: Score, rounding: DecadeRounding) -> i64 {
    let tenths = mean / Ratio::from_integer(10);
    let half = Ratio::new(1, 2);
    let units = match rounding {
        DecadeRounding::HalfDown => (tenths - half).ceil(),
        DecadeRounding::HalfUp => (tenths + half).floor(),
    };
    units.to_integer() * 10
}

pub fn estimate_birth_decade<'a, I>(responses: I, config: &CampaignConfig) -> Result<BirthEstimate, ConsensusError>
where
    I: IntoIterator<Item = &'a AnnotationResponse>,
{
    let answers: Vec<(i64, i64)> = responses
        .into_iter()
        .filter_map(|r| {
            let a = r.birth.as_ref()?;
            Some((parse_year(&a.value)?, a.confidence.thirds()))
        })
        .collect();
    if answers.is_empty() {
        return Err(ConsensusError::NoUsableResponses(Attribute::BirthDecade));
    }
    let years: Vec<i64> = answers.iter().map(|(y, _)| *y).collect();
    let mask = outlier_mask(&years, config);
    let mut discarded = Vec::new();
    let mut weighted = 0i64;
    let mut weight = 0i64;
    let mut n = 0usize;
    for ((year, thirds), drop) in answers.iter().zip(&mask) {
        if *drop {
            discarded.push(*year);
        } else {
            weighted += year * thirds;
            weight += thirds;
            n += 1;
        }
    }
    let weighted_mean = (weight > 0).then(|| Ratio::new(weighted, weight));
    let decade = match weighted_mean {
        Some(m) if n >= config.min_support => Some(round_to_decade(m, config.decade_rounding)),
        _ => None,
    };
    Ok(BirthEstimate {
        parsed: years,
        discarded,
        n,
        weighted_mean,
        decade,
    })
}

pub fn infer_birth_decade<'a, I>(responses: I, config: &CampaignConfig) -> Option<i64>
where
    I: IntoIterator<Item = &'a AnnotationResponse>,
{
    estimate_birth_decade(responses, config).ok().and_then(|e| e.decade)
}

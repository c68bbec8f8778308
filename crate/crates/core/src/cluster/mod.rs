//! Mission and diversity feature vectors per collection, average-linkage
//! clustering under the maximum metric, dendrogram cuts and cross-tabs.

mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::Region;
use crate::ingest::{read_table, IngestError, RawTable};
use crate::stats::{DemographicCategory, DemographicTable, MissionTable};

pub use tree::*;

const PUBLISHED_TABLES: &str = include_str!("../../data/published_tables.csv");

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("group {group} has no value for {coordinate}")]
    MissingFeature { group: String, coordinate: String },
    #[error("vectors have different coordinates: {left:?} vs {right:?}")]
    DimensionMismatch { left: Vec<String>, right: Vec<String> },
    #[error("need at least two vectors, got {0}")]
    TooFewLeaves(usize),
    #[error("leaf label `{0}` appears twice")]
    DuplicateLabel(String),
    #[error("k = {k} is outside 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("partitions cover different leaves")]
    LeafMismatch,
    #[error("line {line}: {message}")]
    BadValue { line: usize, message: String },
    #[error("unknown feature set `{0}`")]
    UnknownFeatureSet(String),
}

pub const AVG_BIRTH_YEAR: &str = "avg_birth_year";

/// Regions used as mission coordinates, in canonical order.
pub const MISSION_REGIONS: [Region; 6] = [
    Region::Africa,
    Region::AsiaPacific,
    Region::Europe,
    Region::LatinAmericaCaribbean,
    Region::NorthAmerica,
    Region::WestAsia,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    /// Six regions plus scaled year.
    MissionA,
    /// MissionA without West Asia.
    MissionB,
    /// Women plus the five ethnicities.
    DiversityA,
    /// DiversityA without White.
    DiversityB,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [
        FeatureSet::MissionA,
        FeatureSet::MissionB,
        FeatureSet::DiversityA,
        FeatureSet::DiversityB,
    ];

    pub fn token(self) -> &'static str {
        match self {
            FeatureSet::MissionA => "missionA",
            FeatureSet::MissionB => "missionB",
            FeatureSet::DiversityA => "diversityA",
            FeatureSet::DiversityB => "diversityB",
        }
    }

    pub fn coordinates(self) -> Vec<&'static str> {
        match self {
            FeatureSet::MissionA | FeatureSet::MissionB => {
                let mut c: Vec<&str> = MISSION_REGIONS
                    .iter()
                    .filter(|r| !(self == FeatureSet::MissionB && **r == Region::WestAsia))
                    .map(|r| r.token())
                    .collect();
                c.push(AVG_BIRTH_YEAR);
                c
            }
            FeatureSet::DiversityA | FeatureSet::DiversityB => DemographicCategory::ALL
                .iter()
                .map(|c| c.token())
                .filter(|c| !(self == FeatureSet::DiversityB && *c == "white"))
                .collect(),
        }
    }

    pub fn is_mission(self) -> bool {
        matches!(self, FeatureSet::MissionA | FeatureSet::MissionB)
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for FeatureSet {
    type Err = ClusterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.token().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ClusterError::UnknownFeatureSet(s.to_string()))
    }
}

/// Named per-group values: proportions as fractions and the average birth
/// year in years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub group: String,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub rows: Vec<ProfileRow>,
}

impl ProfileTable {
    /// Builds profiles from the stats stage output. Groups or categories
    /// with no confident inferences are left without a value.
    pub fn from_stats(demographics: &DemographicTable, mission: &MissionTable) -> Self {
        let mut rows: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for e in &demographics.estimates {
            if let Some(p) = e.p_hat {
                rows.entry(e.group.clone()).or_default().insert(e.category.clone(), p);
            }
        }
        for m in &mission.rows {
            let values = rows.entry(m.group.clone()).or_default();
            for r in MISSION_REGIONS {
                if let Some(p) = m.proportion(r) {
                    values.insert(r.token().to_string(), p);
                }
            }
            if let Some(y) = m.avg_birth_year {
                values.insert(AVG_BIRTH_YEAR.to_string(), y);
            }
        }
        ProfileTable {
            rows: rows
                .into_iter()
                .map(|(group, values)| ProfileRow { group, values })
                .collect(),
        }
    }

    /// Reads a table whose numeric columns are percentages, except
    /// `avg_birth_year`. Columns not naming a coordinate are ignored.
    pub fn from_percent_table(table: &RawTable) -> Result<Self, ClusterError> {
        let g = table.require_columns(&["group"])?[0];
        let known: Vec<&str> = FeatureSet::MissionA
            .coordinates()
            .into_iter()
            .chain(FeatureSet::DiversityA.coordinates())
            .collect();
        let cols: Vec<(usize, &str)> = table
            .header
            .iter()
            .enumerate()
            .filter_map(|(i, h)| known.iter().find(|k| **k == h.trim()).map(|k| (i, *k)))
            .collect();
        let mut rows = Vec::with_capacity(table.rows.len());
        for row in &table.rows {
            let mut values = BTreeMap::new();
            for (i, name) in &cols {
                let raw = row.cells[*i].trim();
                if raw.is_empty() {
                    continue;
                }
                let v: f64 = raw.parse().map_err(|_| ClusterError::BadValue {
                    line: row.line,
                    message: format!("`{raw}` in column {name} is not a number"),
                })?;
                let v = if *name == AVG_BIRTH_YEAR { v } else { v / 100.0 };
                values.insert(name.to_string(), v);
            }
            rows.push(ProfileRow {
                group: row.cells[g].trim().to_string(),
                values,
            });
        }
        Ok(ProfileTable { rows })
    }

    /// The published per-collection proportions and birth years.
    pub fn published() -> Self {
        Self::from_percent_table(&published_table()).expect("bundled fixture is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self, ClusterError> {
        Self::from_percent_table(&read_table(path)?)
    }

    pub fn groups(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.group.as_str()).collect()
    }
}

/// The raw fixture table, including the published grouping and counts.
pub fn published_table() -> RawTable {
    RawTable::from_csv_reader(PUBLISHED_TABLES.as_bytes()).expect("bundled fixture parses")
}

/// Published mission grouping of the fixture collections.
pub fn published_mission_groups() -> Vec<Vec<String>> {
    let t = published_table();
    let idx = t.require_columns(&["group", "mission_group"]).expect("fixture columns");
    let mut by: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for row in &t.rows {
        by.entry(row.cells[idx[1]].clone()).or_default().push(row.cells[idx[0]].clone());
    }
    by.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub label: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(label: impl Into<String>, names: &[&str], values: Vec<f64>) -> Self {
        FeatureVector {
            label: label.into(),
            names: names.iter().map(|s| s.to_string()).collect(),
            values,
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Feature vectors for every profile row. The average birth year is
/// min-max scaled across the rows given; if all years are equal the scaled
/// coordinate is 0.
pub fn build_features(profiles: &ProfileTable, set: FeatureSet) -> Result<Vec<FeatureVector>, ClusterError> {
    let coords = set.coordinates();
    let mut out = Vec::with_capacity(profiles.rows.len());
    for row in &profiles.rows {
        let values = coords
            .iter()
            .map(|c| {
                row.values.get(*c).copied().ok_or_else(|| ClusterError::MissingFeature {
                    group: row.group.clone(),
                    coordinate: c.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        out.push(FeatureVector::new(row.group.clone(), &coords, values));
    }
    if let Some(yi) = coords.iter().position(|c| *c == AVG_BIRTH_YEAR) {
        let (lo, hi) = out
            .iter()
            .map(|v| v.values[yi])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
        for v in &mut out {
            v.values[yi] = if hi > lo { (v.values[yi] - lo) / (hi - lo) } else { 0.0 };
        }
    }
    Ok(out)
}

/// max_i |u_i − v_i|.
pub fn chebyshev(u: &FeatureVector, v: &FeatureVector) -> Result<f64, ClusterError> {
    if u.names != v.names || u.values.len() != v.values.len() {
        return Err(ClusterError::DimensionMismatch {
            left: u.names.clone(),
            right: v.names.clone(),
        });
    }
    Ok(u.values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Everything the cluster stage produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutput {
    pub mission_features: FeatureSet,
    pub diversity_features: FeatureSet,
    pub linkage: Linkage,
    pub mission: Dendrogram,
    pub diversity: Dendrogram,
    pub mission_partition: Partition,
    pub diversity_partition: Partition,
    pub cross_tab: CrossTab,
}

pub fn cluster_profiles(
    profiles: &ProfileTable,
    mission_features: FeatureSet,
    mission_k: usize,
    diversity_features: FeatureSet,
    diversity_k: usize,
    linkage: Linkage,
) -> Result<ClusterOutput, ClusterError> {
    let mission = agglomerate(&build_features(profiles, mission_features)?, linkage)?;
    let diversity = agglomerate(&build_features(profiles, diversity_features)?, linkage)?;
    let mission_partition = cut(&mission, mission_k)?;
    let diversity_partition = cut(&diversity, diversity_k)?;
    let cross_tab = cross_tab(&mission_partition, &diversity_partition)?;
    Ok(ClusterOutput {
        mission_features,
        diversity_features,
        linkage,
        mission,
        diversity,
        mission_partition,
        diversity_partition,
        cross_tab,
    })
}

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{leave_one_out_tests, simultaneous_cis, OutlierResult, ProportionCount, ProportionEstimate, StatsError, TestVariance};
use crate::consensus::{ConsensusInference, Gender, Region};
use crate::ingest::{write_table, Ethnicity, IngestError, RawTable, RecordKey};

pub const OVERALL: &str = "Overall";

/// Diversity categories in display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DemographicCategory {
    Women,
    Ethnicity(Ethnicity),
}

impl DemographicCategory {
    pub const ALL: [DemographicCategory; 6] = [
        DemographicCategory::Women,
        DemographicCategory::Ethnicity(Ethnicity::Asian),
        DemographicCategory::Ethnicity(Ethnicity::Black),
        DemographicCategory::Ethnicity(Ethnicity::Hispanic),
        DemographicCategory::Ethnicity(Ethnicity::White),
        DemographicCategory::Ethnicity(Ethnicity::Other),
    ];

    pub fn token(self) -> &'static str {
        match self {
            DemographicCategory::Women => "women",
            DemographicCategory::Ethnicity(e) => e.token(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.token() == s.trim())
    }

    /// `Some(true)` if the record is confidently in the category,
    /// `Some(false)` if confidently in a sibling category, `None` otherwise.
    fn membership(self, inf: &ConsensusInference) -> Option<bool> {
        match self {
            DemographicCategory::Women => inf.gender.map(|g| g == Gender::Woman),
            DemographicCategory::Ethnicity(e) => inf.ethnicity.and_then(|o| o.single()).map(|x| x == e),
        }
    }
}

fn counts_for<'a>(
    group: &str,
    records: impl Iterator<Item = &'a ConsensusInference> + Clone,
) -> Vec<ProportionCount> {
    DemographicCategory::ALL
        .iter()
        .map(|c| {
            let (mut k, mut n) = (0, 0);
            for inf in records.clone() {
                if let Some(member) = c.membership(inf) {
                    n += 1;
                    k += u64::from(member);
                }
            }
            ProportionCount {
                group: group.to_string(),
                category: c.token().to_string(),
                k,
                n,
            }
        })
        .collect()
}

/// Counts each identity once. Records not listed in `identity_groups` are
/// their own identity. An identity counts toward a category family only
/// when its members carry exactly one distinct confident value.
pub fn unique_counts(inferences: &[ConsensusInference], identity_groups: &[Vec<RecordKey>]) -> Vec<ProportionCount> {
    let by_key: HashMap<&RecordKey, &ConsensusInference> = inferences.iter().map(|i| (&i.key, i)).collect();
    let mut grouped: BTreeSet<&RecordKey> = BTreeSet::new();
    let mut identities: Vec<Vec<&ConsensusInference>> = Vec::new();
    for g in identity_groups {
        let members: Vec<_> = g.iter().filter_map(|k| by_key.get(k).copied()).collect();
        grouped.extend(members.iter().map(|m| &m.key));
        if !members.is_empty() {
            identities.push(members);
        }
    }
    identities.extend(inferences.iter().filter(|i| !grouped.contains(&i.key)).map(|i| vec![i]));

    let genders: Vec<Option<Gender>> = identities
        .iter()
        .map(|m| unique_value(m.iter().filter_map(|i| i.gender)))
        .collect();
    let ethnicities: Vec<Option<Ethnicity>> = identities
        .iter()
        .map(|m| unique_value(m.iter().filter_map(|i| i.ethnicity.and_then(|o| o.single()))))
        .collect();
    DemographicCategory::ALL
        .iter()
        .map(|c| {
            let (k, n) = match c {
                DemographicCategory::Women => (
                    genders.iter().filter(|g| **g == Some(Gender::Woman)).count(),
                    genders.iter().filter(|g| g.is_some()).count(),
                ),
                DemographicCategory::Ethnicity(e) => (
                    ethnicities.iter().filter(|x| **x == Some(*e)).count(),
                    ethnicities.iter().filter(|x| x.is_some()).count(),
                ),
            };
            ProportionCount {
                group: OVERALL.to_string(),
                category: c.token().to_string(),
                k: k as u64,
                n: n as u64,
            }
        })
        .collect()
}

fn unique_value<T: Ord>(values: impl Iterator<Item = T>) -> Option<T> {
    let set: BTreeSet<T> = values.collect();
    if set.len() == 1 {
        set.into_iter().next()
    } else {
        None
    }
}

/// The pooled row: unique identities, unadjusted interval at `alpha`.
pub fn pooled_unique_proportions(
    inferences: &[ConsensusInference],
    identity_groups: &[Vec<RecordKey>],
    alpha: f64,
) -> Result<Vec<ProportionEstimate>, StatsError> {
    simultaneous_cis(&unique_counts(inferences, identity_groups), alpha, 1)
}

/// Per-group diversity proportions with simultaneous intervals, the
/// pooled row, and leave-one-out outlier tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicTable {
    pub alpha: f64,
    pub family_size: usize,
    pub variance: TestVariance,
    pub groups: Vec<String>,
    pub estimates: Vec<ProportionEstimate>,
    pub overall: Vec<ProportionEstimate>,
    pub outliers: Vec<OutlierResult>,
}

impl DemographicTable {
    pub fn estimate(&self, group: &str, category: DemographicCategory) -> Option<&ProportionEstimate> {
        let rows = if group == OVERALL { &self.overall } else { &self.estimates };
        rows.iter().find(|e| e.group == group && e.category == category.token())
    }

    pub fn outlier(&self, group: &str, category: DemographicCategory) -> Option<&OutlierResult> {
        self.outliers.iter().find(|o| o.group == group && o.category == category.token())
    }

    /// Columns `group,category,k,n,p_hat,ci_low,ci_high,alpha_effective,flag,raw_p,adjusted_p`.
    pub fn to_table(&self) -> RawTable {
        let mut t = RawTable::new(STATS_COLUMNS.iter().map(|s| s.to_string()).collect());
        let num = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        for e in self.estimates.iter().chain(&self.overall) {
            let o = self.outliers.iter().find(|o| o.group == e.group && o.category == e.category);
            t.push(vec![
                e.group.clone(),
                e.category.clone(),
                e.k.to_string(),
                e.n.to_string(),
                num(e.p_hat),
                num(e.ci_low),
                num(e.ci_high),
                format!("{:.6e}", e.alpha_effective),
                o.map(|o| o.direction.token().to_string()).unwrap_or_default(),
                num(o.map(|o| o.raw_p)),
                num(o.map(|o| o.adjusted_p)),
            ]);
        }
        t
    }
}

pub const STATS_COLUMNS: [&str; 11] = [
    "group",
    "category",
    "k",
    "n",
    "p_hat",
    "ci_low",
    "ci_high",
    "alpha_effective",
    "flag",
    "raw_p",
    "adjusted_p",
];

/// Builds the diversity table. `family_size` defaults to the number of
/// groups; the pooled row is never adjusted.
pub fn build_demographic_table(
    inferences: &[ConsensusInference],
    identity_groups: &[Vec<RecordKey>],
    alpha: f64,
    family_size: Option<usize>,
    variance: TestVariance,
) -> Result<DemographicTable, StatsError> {
    let mut by_group: BTreeMap<&str, Vec<&ConsensusInference>> = BTreeMap::new();
    for inf in inferences {
        by_group.entry(inf.key.collection_id.as_str()).or_default().push(inf);
    }
    let groups: Vec<String> = by_group.keys().map(|g| g.to_string()).collect();
    let m = family_size.unwrap_or(groups.len()).max(1);
    let counts: Vec<ProportionCount> = by_group
        .iter()
        .flat_map(|(g, recs)| counts_for(g, recs.iter().copied()))
        .collect();
    let estimates = simultaneous_cis(&counts, alpha, m)?;
    let overall = pooled_unique_proportions(inferences, identity_groups, alpha)?;

    let mut outliers = Vec::new();
    for c in DemographicCategory::ALL {
        let cells: Vec<(String, u64, u64)> = counts
            .iter()
            .filter(|x| x.category == c.token() && x.n > 0)
            .map(|x| (x.group.clone(), x.k, x.n))
            .collect();
        if cells.len() >= 2 {
            outliers.extend(leave_one_out_tests(c.token(), &cells, alpha, variance)?);
        }
    }
    Ok(DemographicTable {
        alpha,
        family_size: m,
        variance,
        groups,
        estimates,
        overall,
        outliers,
    })
}

/// Regional origin shares and mean decade-rounded birth year for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionRow {
    pub group: String,
    /// Records with a confident region.
    pub n_region: u64,
    pub region_counts: BTreeMap<Region, u64>,
    /// Records with a confident birth decade.
    pub n_birth: u64,
    pub avg_birth_year: Option<f64>,
}

impl MissionRow {
    pub fn proportion(&self, region: Region) -> Option<f64> {
        (self.n_region > 0).then(|| self.region_counts.get(&region).copied().unwrap_or(0) as f64 / self.n_region as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MissionTable {
    pub rows: Vec<MissionRow>,
}

pub fn build_mission_table(inferences: &[ConsensusInference]) -> MissionTable {
    let mut rows: BTreeMap<&str, (MissionRow, i64)> = BTreeMap::new();
    for inf in inferences {
        let (row, year_sum) = rows.entry(inf.key.collection_id.as_str()).or_insert_with(|| {
            (
                MissionRow {
                    group: inf.key.collection_id.clone(),
                    n_region: 0,
                    region_counts: BTreeMap::new(),
                    n_birth: 0,
                    avg_birth_year: None,
                },
                0,
            )
        });
        if let Some(r) = inf.region {
            row.n_region += 1;
            *row.region_counts.entry(r).or_default() += 1;
        }
        if let Some(d) = inf.birth_decade {
            row.n_birth += 1;
            *year_sum += d;
        }
    }
    MissionTable {
        rows: rows
            .into_values()
            .map(|(mut row, sum)| {
                row.avg_birth_year = (row.n_birth > 0).then(|| sum as f64 / row.n_birth as f64);
                row
            })
            .collect(),
    }
}

/// Everything the stats stage produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsOutput {
    pub demographics: DemographicTable,
    pub mission: MissionTable,
}

pub fn write_stats_csv(path: &Path, table: &DemographicTable) -> Result<(), IngestError> {
    write_table(path, &table.to_table())
}

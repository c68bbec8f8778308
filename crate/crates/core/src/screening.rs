//! Per-worker quality metrics, suspect flagging and exclusion lists.
//!
//! Flagging is advisory: `flag_suspects` proposes a list, and only lists
//! passed to `apply_exclusions` remove anything.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{infer_record, CampaignConfig, CountryLookup, IiaVerdict, RegionMap};
use crate::ingest::{read_table, write_table, AnnotationResponse, GenderAnswer, IiaAnswer, IngestError, RawTable, ResponsePool};

#[derive(Debug, Error)]
pub enum ScreeningError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("line {line}: unknown provenance `{value}`")]
    BadProvenance { line: usize, value: String },
    #[error("threshold `{name}` must lie in [0, 1], got {value}")]
    BadThreshold { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerProfile {
    pub worker_id: String,
    pub n_responses: usize,
    pub median_duration_secs: f64,
    pub mean_duration_secs: f64,
    pub fast_fraction: f64,
    pub consensus_agreement: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Manual,
    Flagged,
}

impl Provenance {
    pub fn token(self) -> &'static str {
        match self {
            Provenance::Manual => "manual",
            Provenance::Flagged => "flagged",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "manual" => Some(Provenance::Manual),
            "flagged" => Some(Provenance::Flagged),
            _ => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionList {
    pub worker_ids: BTreeSet<String>,
    pub provenance: Provenance,
}

impl ExclusionList {
    pub fn new(provenance: Provenance) -> Self {
        ExclusionList {
            worker_ids: BTreeSet::new(),
            provenance,
        }
    }

    pub fn manual<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ExclusionList {
            worker_ids: ids.into_iter().map(Into::into).collect(),
            provenance: Provenance::Manual,
        }
    }

    pub fn contains(&self, worker_id: &str) -> bool {
        self.worker_ids.contains(worker_id)
    }

    pub fn len(&self) -> usize {
        self.worker_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worker_ids.is_empty()
    }

    /// Turns a reviewed flag list into a confirmed one.
    pub fn confirm(self) -> Self {
        ExclusionList {
            provenance: Provenance::Manual,
            ..self
        }
    }
}

/// Thresholds for `flag_suspects`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlagThresholds {
    pub volume: usize,
    pub fast_fraction: f64,
    pub agreement: f64,
}

impl FlagThresholds {
    pub fn from_config(config: &CampaignConfig) -> Self {
        FlagThresholds {
            volume: config.volume_threshold,
            fast_fraction: config.fast_fraction_threshold,
            agreement: config.agreement_threshold,
        }
    }

    pub fn validate(&self) -> Result<(), ScreeningError> {
        for (name, value) in [("fast_fraction", self.fast_fraction), ("agreement", self.agreement)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ScreeningError::BadThreshold { name, value });
            }
        }
        Ok(())
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// One profile per worker, ordered by descending volume then worker id.
/// `consensus_agreement` is left empty; see [`score_agreement`].
pub fn profile_workers(pool: &ResponsePool, fast_cutoff_secs: f64) -> Vec<WorkerProfile> {
    let mut durations: HashMap<&str, Vec<f64>> = HashMap::new();
    for r in pool.responses() {
        durations.entry(r.worker_id.as_str()).or_default().push(r.duration_secs);
    }
    let mut profiles: Vec<WorkerProfile> = durations
        .into_par_iter()
        .map(|(id, mut ds)| {
            ds.sort_by(f64::total_cmp);
            let n = ds.len();
            let fast = ds.iter().filter(|d| **d <= fast_cutoff_secs).count();
            WorkerProfile {
                worker_id: id.to_string(),
                n_responses: n,
                median_duration_secs: median(&ds),
                mean_duration_secs: ds.iter().sum::<f64>() / n as f64,
                fast_fraction: fast as f64 / n as f64,
                consensus_agreement: None,
            }
        })
        .collect();
    profiles.sort_by(|a, b| b.n_responses.cmp(&a.n_responses).then_with(|| a.worker_id.cmp(&b.worker_id)));
    profiles
}

/// Mean completion time over every response in the pool.
pub fn mean_duration(pool: &ResponsePool) -> Option<f64> {
    let n = pool.response_count();
    (n > 0).then(|| pool.responses().map(|r| r.duration_secs).sum::<f64>() / n as f64)
}

fn is_duration_suspect(p: &WorkerProfile, t: &FlagThresholds) -> bool {
    p.n_responses >= t.volume && p.fast_fraction >= t.fast_fraction
}

/// Fills `consensus_agreement` for every profile.
///
/// The yardstick is the consensus of workers who do not already trip the
/// volume and speed gates. A worker's answer is compared wherever both the
/// worker and the yardstick committed to a value: the IIA verdict (yes/no
/// answers only), gender, single-category ethnicity and region.
pub fn score_agreement(
    profiles: &mut [WorkerProfile],
    pool: &ResponsePool,
    map: &RegionMap,
    config: &CampaignConfig,
) {
    let t = FlagThresholds::from_config(config);
    let suspects: BTreeSet<&str> = profiles
        .iter()
        .filter(|p| is_duration_suspect(p, &t))
        .map(|p| p.worker_id.as_str())
        .collect();
    let clean = pool.filter_responses(|r| !suspects.contains(r.worker_id.as_str()));

    let mut tally: HashMap<&str, (usize, usize)> = HashMap::new();
    for (key, all) in pool.iter() {
        let yard = clean.get(key).unwrap_or_default();
        if yard.is_empty() {
            continue;
        }
        let (inf, _) = infer_record(key, yard, map, config);
        for r in all {
            let (agree, total) = compare_response(r, &inf, map);
            let e = tally.entry(r.worker_id.as_str()).or_default();
            e.0 += agree;
            e.1 += total;
        }
    }
    for p in profiles.iter_mut() {
        p.consensus_agreement = tally
            .get(p.worker_id.as_str())
            .filter(|(_, total)| *total > 0)
            .map(|(agree, total)| *agree as f64 / *total as f64);
    }
}

fn compare_response(
    r: &AnnotationResponse,
    inf: &crate::consensus::ConsensusInference,
    map: &RegionMap,
) -> (usize, usize) {
    let mut agree = 0;
    let mut total = 0;
    let mut check = |same: bool| {
        total += 1;
        agree += usize::from(same);
    };
    match (r.iia, inf.iia) {
        (IiaAnswer::Yes, IiaVerdict::Iia) | (IiaAnswer::No, IiaVerdict::NonIia) => check(true),
        (IiaAnswer::Yes, IiaVerdict::NonIia) | (IiaAnswer::No, IiaVerdict::Iia) => check(false),
        _ => {}
    }
    if inf.iia != IiaVerdict::Iia || r.iia == IiaAnswer::No {
        return (agree, total);
    }
    if let (Some(g), Some(a)) = (inf.gender, &r.gender) {
        match a.value {
            GenderAnswer::Man => check(g == crate::consensus::Gender::Man),
            GenderAnswer::Woman => check(g == crate::consensus::Gender::Woman),
            _ => {}
        }
    }
    if let (Some(e), Some(a)) = (inf.ethnicity.and_then(|o| o.single()), &r.ethnicity) {
        if !a.categories.is_empty() {
            check(a.categories.iter().any(|c| c.collapse() == e));
        }
    }
    if let (Some(region), Some(a)) = (inf.region, &r.origin) {
        if let CountryLookup::Region(mine) = map.lookup(&a.value) {
            check(mine == region);
        }
    }
    (agree, total)
}

/// Workers at or above the volume gate who are either mostly fast or
/// disagree with the provisional consensus too often.
pub fn flag_suspects(profiles: &[WorkerProfile], thresholds: &FlagThresholds) -> ExclusionList {
    let mut list = ExclusionList::new(Provenance::Flagged);
    for p in profiles {
        let disagrees = p.consensus_agreement.is_some_and(|a| a < thresholds.agreement);
        if p.n_responses >= thresholds.volume && (p.fast_fraction >= thresholds.fast_fraction || disagrees) {
            list.worker_ids.insert(p.worker_id.clone());
        }
    }
    list
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalReport {
    pub excluded_workers: BTreeSet<String>,
    pub removed_total: usize,
    pub removed_per_worker: BTreeMap<String, usize>,
    /// Keyed by `collection_id:entity_id`.
    pub removed_per_record: BTreeMap<String, usize>,
    pub responses_before: usize,
    pub responses_after: usize,
}

impl RemovalReport {
    pub fn removed_share(&self) -> f64 {
        if self.responses_before == 0 {
            0.0
        } else {
            self.removed_total as f64 / self.responses_before as f64
        }
    }
}

/// Drops every response by a listed worker. Records stay in the pool even
/// when all of their responses go.
pub fn apply_exclusions(pool: &ResponsePool, lists: &[ExclusionList]) -> (ResponsePool, RemovalReport) {
    let excluded: BTreeSet<String> = lists.iter().flat_map(|l| l.worker_ids.iter().cloned()).collect();
    let mut report = RemovalReport {
        responses_before: pool.response_count(),
        ..Default::default()
    };
    for (key, rs) in pool.iter() {
        for r in rs.iter().filter(|r| excluded.contains(&r.worker_id)) {
            *report.removed_per_worker.entry(r.worker_id.clone()).or_default() += 1;
            *report.removed_per_record.entry(key.to_string()).or_default() += 1;
            report.removed_total += 1;
        }
    }
    let kept = pool.filter_responses(|r| !excluded.contains(&r.worker_id));
    report.responses_after = kept.response_count();
    report.excluded_workers = excluded;
    (kept, report)
}

/// Everything the screening stage produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub mean_duration_secs: Option<f64>,
    pub profiles: Vec<WorkerProfile>,
    pub flagged: ExclusionList,
    pub removal: RemovalReport,
}

pub const EXCLUSION_COLUMNS: [&str; 2] = ["worker_id", "provenance"];

pub fn exclusions_to_table(lists: &[ExclusionList]) -> RawTable {
    let mut rows: BTreeSet<(String, Provenance)> = BTreeSet::new();
    for l in lists {
        rows.extend(l.worker_ids.iter().map(|w| (w.clone(), l.provenance)));
    }
    let mut t = RawTable::new(EXCLUSION_COLUMNS.iter().map(|s| s.to_string()).collect());
    for (w, p) in rows {
        t.push(vec![w, p.token().into()]);
    }
    t
}

/// One list per provenance present in the table.
pub fn exclusions_from_table(table: &RawTable) -> Result<Vec<ExclusionList>, ScreeningError> {
    let idx = table.require_columns(&EXCLUSION_COLUMNS)?;
    let mut by: BTreeMap<Provenance, ExclusionList> = BTreeMap::new();
    for row in &table.rows {
        let id = row.cells[idx[0]].trim();
        if id.is_empty() {
            continue;
        }
        let raw = &row.cells[idx[1]];
        let prov = if raw.trim().is_empty() {
            Provenance::Manual
        } else {
            Provenance::parse(raw).ok_or_else(|| ScreeningError::BadProvenance {
                line: row.line,
                value: raw.clone(),
            })?
        };
        by.entry(prov)
            .or_insert_with(|| ExclusionList::new(prov))
            .worker_ids
            .insert(id.to_string());
    }
    Ok(by.into_values().collect())
}

pub fn read_exclusions(path: &Path) -> Result<Vec<ExclusionList>, ScreeningError> {
    exclusions_from_table(&read_table(path)?)
}

pub fn write_exclusions(path: &Path, lists: &[ExclusionList]) -> Result<(), ScreeningError> {
    Ok(write_table(path, &exclusions_to_table(lists))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Answer, Confidence, RecordKey};

    fn response(worker: &str, entity: &str, secs: f64) -> AnnotationResponse {
        AnnotationResponse {
            hit_id: format!("H{entity}"),
            worker_id: worker.into(),
            key: RecordKey::new("C", entity),
            duration_secs: secs,
            iia: IiaAnswer::Yes,
            gender: Some(Answer {
                value: GenderAnswer::Woman,
                confidence: Confidence::High,
            }),
            ethnicity: None,
            origin: None,
            birth: None,
        }
    }

    fn pool(rs: Vec<AnnotationResponse>) -> ResponsePool {
        let mut p = ResponsePool::default();
        for r in rs {
            p.entries.entry(r.key.clone()).or_default().push(r);
        }
        for v in p.entries.values_mut() {
            v.sort_by(|a, b| a.canonical_cmp(b));
        }
        p
    }

    fn profile(n: usize, fast: f64, agreement: Option<f64>) -> WorkerProfile {
        WorkerProfile {
            worker_id: "W".into(),
            n_responses: n,
            median_duration_secs: 10.0,
            mean_duration_secs: 10.0,
            fast_fraction: fast,
            consensus_agreement: agreement,
        }
    }

    #[test]
    fn median_and_fast_fraction() {
        let p = pool(vec![response("A", "1", 10.0), response("A", "2", 20.0), response("A", "3", 400.0)]);
        let prof = profile_workers(&p, 30.0);
        assert_eq!(prof.len(), 1);
        assert_eq!(prof[0].median_duration_secs, 20.0);
        assert!((prof[0].fast_fraction - 2.0 / 3.0).abs() < 1e-15);
        assert!((prof[0].mean_duration_secs - 430.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_is_inclusive_and_even_median_averages() {
        let p = pool(vec![response("A", "1", 30.0), response("A", "2", 31.0)]);
        let prof = profile_workers(&p, 30.0);
        assert_eq!(prof[0].fast_fraction, 0.5);
        assert_eq!(prof[0].median_duration_secs, 30.5);
    }

    #[test]
    fn profiles_sorted_by_volume_then_id() {
        let p = pool(vec![
            response("B", "1", 50.0),
            response("C", "1", 50.0),
            response("C", "2", 50.0),
            response("A", "1", 50.0),
        ]);
        let ids: Vec<_> = profile_workers(&p, 30.0).into_iter().map(|p| p.worker_id).collect();
        assert_eq!(ids, ["C", "A", "B"]);
    }

    #[test]
    fn flag_rule() {
        let t = FlagThresholds {
            volume: 581,
            fast_fraction: 0.5,
            agreement: 0.6,
        };
        assert_eq!(flag_suspects(&[profile(1391, 0.9, None)], &t).len(), 1);
        assert_eq!(flag_suspects(&[profile(10, 1.0, None)], &t).len(), 0);
        assert_eq!(flag_suspects(&[profile(600, 0.1, Some(0.3))], &t).len(), 1);
        assert_eq!(flag_suspects(&[profile(600, 0.1, Some(0.6))], &t).len(), 0);
        assert_eq!(flag_suspects(&[profile(600, 0.5, None)], &t).len(), 1);
        assert!(flag_suspects(&[], &t).is_empty());
        assert_eq!(flag_suspects(&[], &t).provenance, Provenance::Flagged);
    }

    #[test]
    fn thresholds_validated() {
        let mut t = FlagThresholds::from_config(&CampaignConfig::default());
        assert!(t.validate().is_ok());
        t.agreement = 1.5;
        assert!(t.validate().is_err());
    }

    #[test]
    fn exclusion_counts_and_idempotence() {
        let p = pool(vec![
            response("A", "1", 10.0),
            response("A", "2", 10.0),
            response("B", "1", 50.0),
        ]);
        let list = ExclusionList::manual(["A"]);
        let (once, report) = apply_exclusions(&p, std::slice::from_ref(&list));
        assert_eq!(report.removed_total, 2);
        assert_eq!(report.removed_per_worker["A"], 2);
        assert_eq!(report.removed_per_record["C:1"], 1);
        assert_eq!((report.responses_before, report.responses_after), (3, 1));
        assert_eq!(once.len(), 2);
        let (twice, again) = apply_exclusions(&once, &[list]);
        assert_eq!(once, twice);
        assert_eq!(again.removed_total, 0);
        let (same, _) = apply_exclusions(&p, &[]);
        assert_eq!(same, p);
    }

    #[test]
    fn agreement_uses_clean_yardstick() {
        let mut rs = Vec::new();
        for e in 0..4 {
            let e = e.to_string();
            for w in ["H1", "H2", "H3"] {
                rs.push(response(w, &e, 100.0));
            }
            let mut bad = response("S", &e, 5.0);
            bad.gender = Some(Answer {
                value: GenderAnswer::Man,
                confidence: Confidence::High,
            });
            rs.push(bad);
        }
        let p = pool(rs);
        let config = CampaignConfig {
            volume_threshold: 4,
            ..Default::default()
        };
        let mut prof = profile_workers(&p, config.fast_cutoff_secs);
        score_agreement(&mut prof, &p, &RegionMap::builtin(), &config);
        let s = prof.iter().find(|p| p.worker_id == "S").unwrap();
        // IIA agrees 4 times, gender disagrees 4 times
        assert_eq!(s.consensus_agreement, Some(0.5));
        let h = prof.iter().find(|p| p.worker_id == "H1").unwrap();
        assert_eq!(h.consensus_agreement, Some(1.0));
    }

    #[test]
    fn exclusion_table_round_trip() {
        let lists = vec![
            ExclusionList::manual(["W2", "W1"]),
            ExclusionList {
                worker_ids: ["W9".to_string()].into(),
                provenance: Provenance::Flagged,
            },
        ];
        let t = exclusions_to_table(&lists);
        assert_eq!(t.header, ["worker_id", "provenance"]);
        let back = exclusions_from_table(&t).unwrap();
        assert_eq!(back, lists);
    }
}

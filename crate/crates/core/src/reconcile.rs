//! Cross-collection identity linking, consistency checks, approved repairs
//! and comparison against external reference labels.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::consensus::{Attribute, ConsensusInference, EthnicityOutcome, Gender, Region};
use crate::ingest::{read_table, write_table, EntityRecord, Ethnicity, IngestError, RawTable, RecordKey};

#[derive(Debug, Error)]
pub enum ReconcileError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("repair targets {key} {attribute}, which is not in the inference table")]
    UnknownRepairTarget { key: RecordKey, attribute: String },
    #[error("`{value}` is not a valid {attribute} value")]
    BadValue { attribute: Attribute, value: String },
    #[error("line {line}: unknown attribute `{value}`")]
    UnknownAttribute { line: usize, value: String },
}

/// Exact-match identity: NFC, trimmed, internal whitespace collapsed,
/// lowercased.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IdentityKey(pub String);

impl IdentityKey {
    pub fn from_name(name: &str) -> Self {
        let nfc: String = name.nfc().collect();
        IdentityKey(nfc.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
    }
}

impl fmt::Display for IdentityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityGroup {
    pub identity: IdentityKey,
    pub members: Vec<RecordKey>,
}

/// Groups IIA records sharing an identity key. Only groups with two or
/// more members are returned, ordered by identity key.
pub fn link_duplicates(records: &[EntityRecord], inferences: &[ConsensusInference]) -> Vec<IdentityGroup> {
    let iia: BTreeSet<&RecordKey> = inferences.iter().filter(|i| i.is_iia()).map(|i| &i.key).collect();
    let mut by: BTreeMap<IdentityKey, BTreeSet<RecordKey>> = BTreeMap::new();
    for r in records.iter().filter(|r| iia.contains(&r.key)) {
        by.entry(IdentityKey::from_name(&r.display_name))
            .or_default()
            .insert(r.key.clone());
    }
    by.into_iter()
        .filter(|(_, m)| m.len() > 1)
        .map(|(identity, members)| IdentityGroup {
            identity,
            members: members.into_iter().collect(),
        })
        .collect()
}

pub fn group_keys(groups: &[IdentityGroup]) -> Vec<Vec<RecordKey>> {
    groups.iter().map(|g| g.members.clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyStatus {
    Consistent,
    Conflict,
    PartialMissing,
}

/// One proposed or approved change to a single inferred attribute.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Repair {
    pub key: RecordKey,
    pub attribute: Attribute,
    /// Token of the new value; empty clears the inference.
    pub new_value: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyEntry {
    pub identity: IdentityKey,
    pub attribute: Attribute,
    pub status: ConsistencyStatus,
    pub values: Vec<(RecordKey, Option<String>)>,
    pub proposals: Vec<Repair>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub entries: Vec<ConsistencyEntry>,
}

impl ConsistencyReport {
    pub fn count(&self, attribute: Attribute, status: ConsistencyStatus) -> usize {
        self.entries
            .iter()
            .filter(|e| e.attribute == attribute && e.status == status)
            .count()
    }

    pub fn proposals(&self) -> Vec<Repair> {
        self.entries.iter().flat_map(|e| e.proposals.iter().cloned()).collect()
    }
}

/// Classifies every (identity, attribute) pair. A group with no confident
/// value anywhere is `Consistent`.
pub fn check_consistency(groups: &[IdentityGroup], inferences: &[ConsensusInference]) -> ConsistencyReport {
    let by_key: HashMap<&RecordKey, &ConsensusInference> = inferences.iter().map(|i| (&i.key, i)).collect();
    let mut report = ConsistencyReport::default();
    for g in groups {
        let members: Vec<&ConsensusInference> = g.members.iter().filter_map(|k| by_key.get(k).copied()).collect();
        for attribute in Attribute::ALL {
            let values: Vec<(RecordKey, Option<String>)> = members
                .iter()
                .map(|i| (i.key.clone(), i.attribute_value(attribute)))
                .collect();
            let distinct: BTreeSet<&String> = values.iter().filter_map(|(_, v)| v.as_ref()).collect();
            let missing = values.iter().any(|(_, v)| v.is_none());
            let (status, proposals) = match distinct.len() {
                0 | 1 if !missing || distinct.is_empty() => (ConsistencyStatus::Consistent, Vec::new()),
                1 => {
                    let fill = distinct.into_iter().next().cloned().unwrap_or_default();
                    let proposals = values
                        .iter()
                        .filter(|(_, v)| v.is_none())
                        .map(|(k, _)| Repair {
                            key: k.clone(),
                            attribute,
                            new_value: fill.clone(),
                            reason: format!("fill from linked records of `{}`", g.identity),
                        })
                        .collect();
                    (ConsistencyStatus::PartialMissing, proposals)
                }
                _ => (ConsistencyStatus::Conflict, Vec::new()),
            };
            report.entries.push(ConsistencyEntry {
                identity: g.identity.clone(),
                attribute,
                status,
                values,
                proposals,
            });
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub key: RecordKey,
    pub attribute: Attribute,
    pub old_value: Option<String>,
    pub new_value: Option<String>,
    pub reason: String,
}

fn set_attribute(inf: &mut ConsensusInference, attribute: Attribute, value: &str) -> Result<(), ReconcileError> {
    let bad = || ReconcileError::BadValue {
        attribute,
        value: value.to_string(),
    };
    let v = value.trim();
    let empty = v.is_empty();
    match attribute {
        Attribute::Gender => inf.gender = if empty { None } else { Some(Gender::parse(v).ok_or_else(bad)?) },
        Attribute::Ethnicity => {
            inf.ethnicity = if empty { None } else { Some(EthnicityOutcome::parse(v).ok_or_else(bad)?) }
        }
        Attribute::Region => inf.region = if empty { None } else { Some(Region::parse(v).ok_or_else(bad)?) },
        Attribute::BirthDecade => {
            inf.birth_decade = if empty {
                None
            } else {
                let d: i64 = v.parse().map_err(|_| bad())?;
                if d % 10 != 0 {
                    return Err(bad());
                }
                Some(d)
            }
        }
    }
    Ok(())
}

/// Applies approved repairs in order. Fields other than the targeted
/// attribute are left untouched.
pub fn apply_repairs(
    inferences: &[ConsensusInference],
    repairs: &[Repair],
) -> Result<(Vec<ConsensusInference>, Vec<AuditEntry>), ReconcileError> {
    let mut out = inferences.to_vec();
    let index: HashMap<RecordKey, usize> = out.iter().enumerate().map(|(i, r)| (r.key.clone(), i)).collect();
    let mut audit = Vec::with_capacity(repairs.len());
    for r in repairs {
        let i = *index.get(&r.key).ok_or_else(|| ReconcileError::UnknownRepairTarget {
            key: r.key.clone(),
            attribute: r.attribute.token().to_string(),
        })?;
        let inf = &mut out[i];
        let old_value = inf.attribute_value(r.attribute);
        set_attribute(inf, r.attribute, &r.new_value)?;
        audit.push(AuditEntry {
            key: r.key.clone(),
            attribute: r.attribute,
            old_value,
            new_value: inf.attribute_value(r.attribute),
            reason: r.reason.clone(),
        });
    }
    Ok((out, audit))
}

pub const REPAIR_COLUMNS: [&str; 5] = ["collection_id", "entity_id", "attribute", "new_value", "reason"];

pub fn repairs_to_table(repairs: &[Repair]) -> RawTable {
    let mut t = RawTable::new(REPAIR_COLUMNS.iter().map(|s| s.to_string()).collect());
    for r in repairs {
        t.push(vec![
            r.key.collection_id.clone(),
            r.key.entity_id.clone(),
            r.attribute.token().into(),
            r.new_value.clone(),
            r.reason.clone(),
        ]);
    }
    t
}

pub fn repairs_from_table(table: &RawTable) -> Result<Vec<Repair>, ReconcileError> {
    let idx = table.require_columns(&REPAIR_COLUMNS[..4])?;
    let reason = table.column("reason");
    table
        .rows
        .iter()
        .map(|row| {
            let raw = &row.cells[idx[2]];
            let attribute = Attribute::parse(raw).ok_or_else(|| ReconcileError::UnknownAttribute {
                line: row.line,
                value: raw.clone(),
            })?;
            Ok(Repair {
                key: RecordKey::new(row.cells[idx[0]].trim(), row.cells[idx[1]].trim()),
                attribute,
                new_value: row.cells[idx[3]].trim().to_string(),
                reason: reason.map(|c| row.cells[c].clone()).unwrap_or_default(),
            })
        })
        .collect()
}

pub fn read_repairs(path: &Path) -> Result<Vec<Repair>, ReconcileError> {
    repairs_from_table(&read_table(path)?)
}

pub fn write_repairs(path: &Path, repairs: &[Repair]) -> Result<(), ReconcileError> {
    Ok(write_table(path, &repairs_to_table(repairs))?)
}

pub const AUDIT_COLUMNS: [&str; 6] = ["collection_id", "entity_id", "attribute", "old_value", "new_value", "reason"];

pub fn audit_to_table(audit: &[AuditEntry]) -> RawTable {
    let mut t = RawTable::new(AUDIT_COLUMNS.iter().map(|s| s.to_string()).collect());
    for a in audit {
        t.push(vec![
            a.key.collection_id.clone(),
            a.key.entity_id.clone(),
            a.attribute.token().into(),
            a.old_value.clone().unwrap_or_default(),
            a.new_value.clone().unwrap_or_default(),
            a.reason.clone(),
        ]);
    }
    t
}

/// Everything the reconcile stage produces.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconcileReport {
    pub groups: Vec<IdentityGroup>,
    pub consistency: ConsistencyReport,
    pub audit: Vec<AuditEntry>,
}

/// One row of an external reference file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceLabel {
    pub name_or_key: String,
    pub attribute: Attribute,
    pub label: String,
}

pub const REFERENCE_COLUMNS: [&str; 3] = ["name_or_key", "attribute", "label"];

pub fn reference_from_table(table: &RawTable) -> Result<Vec<ReferenceLabel>, ReconcileError> {
    let idx = table.require_columns(&REFERENCE_COLUMNS)?;
    table
        .rows
        .iter()
        .map(|row| {
            let raw = &row.cells[idx[1]];
            let attribute = Attribute::parse(raw).ok_or_else(|| ReconcileError::UnknownAttribute {
                line: row.line,
                value: raw.clone(),
            })?;
            Ok(ReferenceLabel {
                name_or_key: row.cells[idx[0]].trim().to_string(),
                attribute,
                label: row.cells[idx[2]].trim().to_string(),
            })
        })
        .collect()
}

pub fn read_reference(path: &Path) -> Result<Vec<ReferenceLabel>, ReconcileError> {
    reference_from_table(&read_table(path)?)
}

pub const NO_INFERENCE: &str = "unknown";
pub const NOT_SAMPLED: &str = "not_sampled";
pub const CONFLICTING: &str = "conflict";

/// Maps external label spellings onto inference tokens where possible.
pub fn normalize_label(attribute: Attribute, label: &str) -> String {
    let l = label.trim();
    let token = match attribute {
        Attribute::Gender => match l.to_lowercase().as_str() {
            "male" | "m" | "man" | "men" => Some("man".to_string()),
            "female" | "f" | "w" | "woman" | "women" => Some("woman".to_string()),
            _ => None,
        },
        Attribute::Ethnicity => Ethnicity::parse(&l.to_lowercase()).map(|e| e.token().to_string()),
        Attribute::Region => Region::parse(l).map(|r| r.token().to_string()),
        Attribute::BirthDecade => l.parse::<i64>().ok().map(|y| (y.div_euclid(10) * 10).to_string()),
    };
    token.unwrap_or_else(|| l.to_lowercase())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeComparison {
    /// reference label -> outcome -> count. Outcomes are inferred tokens,
    /// `unknown`, `not_sampled` or `conflict`.
    pub cells: BTreeMap<String, BTreeMap<String, usize>>,
    pub compared: usize,
    pub matched: usize,
}

impl AttributeComparison {
    pub fn cell(&self, reference: &str, outcome: &str) -> usize {
        self.cells
            .get(reference)
            .and_then(|m| m.get(outcome))
            .copied()
            .unwrap_or(0)
    }

    /// Matched confident cells over reference-labeled records.
    pub fn agreement_rate(&self) -> Option<f64> {
        (self.compared > 0).then(|| self.matched as f64 / self.compared as f64)
    }

    pub fn outcome_totals(&self) -> BTreeMap<String, usize> {
        let mut t = BTreeMap::new();
        for row in self.cells.values() {
            for (o, c) in row {
                *t.entry(o.clone()).or_default() += c;
            }
        }
        t
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceComparison {
    pub attributes: BTreeMap<Attribute, AttributeComparison>,
}

/// Cross-tabulates reference labels against inferences. A reference row
/// names either a record key (`collection:entity`) or an artist name; a
/// name matches every record with the same identity key.
pub fn compare_reference(
    records: &[EntityRecord],
    inferences: &[ConsensusInference],
    reference: &[ReferenceLabel],
) -> ReferenceComparison {
    let by_key: HashMap<String, &ConsensusInference> = inferences.iter().map(|i| (i.key.to_string(), i)).collect();
    let mut by_name: HashMap<IdentityKey, Vec<&ConsensusInference>> = HashMap::new();
    for r in records {
        if let Some(inf) = by_key.get(&r.key.to_string()) {
            by_name.entry(IdentityKey::from_name(&r.display_name)).or_default().push(inf);
        }
    }
    let mut out = ReferenceComparison::default();
    for row in reference {
        let matches: Vec<&ConsensusInference> = match by_key.get(&row.name_or_key) {
            Some(inf) => vec![*inf],
            None => by_name
                .get(&IdentityKey::from_name(&row.name_or_key))
                .cloned()
                .unwrap_or_default(),
        };
        let reference_label = normalize_label(row.attribute, &row.label);
        let outcome = if matches.is_empty() {
            NOT_SAMPLED.to_string()
        } else {
            let values: BTreeSet<String> = matches.iter().filter_map(|i| i.attribute_value(row.attribute)).collect();
            match values.len() {
                0 => NO_INFERENCE.to_string(),
                1 => values.into_iter().next().unwrap_or_default(),
                _ => CONFLICTING.to_string(),
            }
        };
        let cmp = out.attributes.entry(row.attribute).or_default();
        cmp.compared += 1;
        cmp.matched += usize::from(outcome == reference_label);
        *cmp.cells.entry(reference_label).or_default().entry(outcome).or_default() += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::IiaVerdict;
    use chrono::NaiveDate;

    fn record(c: &str, e: &str, name: &str) -> EntityRecord {
        EntityRecord {
            key: RecordKey::new(c, e),
            display_name: name.into(),
            source_url: Some(format!("https://example.org/{c}/{e}")),
            scrape_date: NaiveDate::from_ymd_opt(2018, 6, 1).unwrap(),
        }
    }

    fn inf(c: &str, e: &str, gender: Option<Gender>) -> ConsensusInference {
        let mut i = ConsensusInference::empty(RecordKey::new(c, e), IiaVerdict::Iia);
        i.gender = gender;
        i
    }

    fn lachowicz() -> (Vec<EntityRecord>, Vec<ConsensusInference>) {
        let records = vec![
            record("WMAA", "1", "Rachel Lachowicz"),
            record("MOCA", "7", "rachel  lachowicz "),
            record("DAM", "3", "Rachel Lachowicz"),
            record("DAM", "4", "Someone Else"),
        ];
        let infs = vec![
            inf("WMAA", "1", Some(Gender::Woman)),
            inf("MOCA", "7", Some(Gender::Woman)),
            inf("DAM", "3", None),
            inf("DAM", "4", Some(Gender::Man)),
        ];
        (records, infs)
    }

    #[test]
    fn identity_normalization() {
        assert_eq!(IdentityKey::from_name("  Rachel \t Lachowicz"), IdentityKey::from_name("rachel lachowicz"));
        // decomposed and precomposed forms agree after NFC
        assert_eq!(IdentityKey::from_name("E\u{301}lizabeth"), IdentityKey::from_name("\u{c9}lizabeth"));
        assert_ne!(IdentityKey::from_name("Rachel Lachowicz"), IdentityKey::from_name("Rachel Lachowitz"));
    }

    #[test]
    fn links_across_collections() {
        let (records, infs) = lachowicz();
        let groups = link_duplicates(&records, &infs);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].members.len(), 3);
        let distinct = vec![record("A", "1", "X"), record("B", "1", "Y")];
        assert!(link_duplicates(&distinct, &[inf("A", "1", None), inf("B", "1", None)]).is_empty());
    }

    #[test]
    fn non_iia_records_are_not_linked() {
        let (records, mut infs) = lachowicz();
        infs[2].iia = IiaVerdict::NonIia;
        assert_eq!(link_duplicates(&records, &infs)[0].members.len(), 2);
    }

    #[test]
    fn partial_missing_proposes_fill() {
        let (records, infs) = lachowicz();
        let groups = link_duplicates(&records, &infs);
        let report = check_consistency(&groups, &infs);
        let gender = report.entries.iter().find(|e| e.attribute == Attribute::Gender).unwrap();
        assert_eq!(gender.status, ConsistencyStatus::PartialMissing);
        assert_eq!(gender.proposals.len(), 1);
        assert_eq!(gender.proposals[0].key, RecordKey::new("DAM", "3"));
        assert_eq!(gender.proposals[0].new_value, "woman");
        // no region anywhere
        assert_eq!(report.count(Attribute::Region, ConsistencyStatus::Consistent), 1);
    }

    #[test]
    fn conflict_and_symmetry() {
        let records = vec![record("SFMOMA", "1", "Paul Pfeiffer"), record("RISDM", "2", "Paul Pfeiffer")];
        let mut a = inf("SFMOMA", "1", Some(Gender::Man));
        a.ethnicity = Some(EthnicityOutcome::Single(Ethnicity::Other));
        let mut b = inf("RISDM", "2", Some(Gender::Man));
        b.ethnicity = Some(EthnicityOutcome::Single(Ethnicity::White));
        let infs = vec![a, b];
        let groups = link_duplicates(&records, &infs);
        let report = check_consistency(&groups, &infs);
        assert_eq!(report.count(Attribute::Ethnicity, ConsistencyStatus::Conflict), 1);
        assert_eq!(report.count(Attribute::Gender, ConsistencyStatus::Consistent), 1);
        assert!(report.proposals().is_empty());
        let rev: Vec<_> = infs.iter().rev().cloned().collect();
        let r2 = check_consistency(&groups, &rev);
        let statuses = |r: &ConsistencyReport| r.entries.iter().map(|e| e.status).collect::<Vec<_>>();
        assert_eq!(statuses(&report), statuses(&r2));
    }

    #[test]
    fn repairs_apply_and_audit() {
        let (records, infs) = lachowicz();
        let report = check_consistency(&link_duplicates(&records, &infs), &infs);
        let (fixed, audit) = apply_repairs(&infs, &report.proposals()).unwrap();
        assert_eq!(fixed[2].gender, Some(Gender::Woman));
        assert_eq!(audit.len(), 1);
        assert_eq!(audit[0].old_value, None);
        assert_eq!(audit[0].new_value.as_deref(), Some("woman"));
        for i in [0, 1, 3] {
            assert_eq!(fixed[i], infs[i]);
        }
        let mut expected = infs[2].clone();
        expected.gender = Some(Gender::Woman);
        assert_eq!(fixed[2], expected);

        let (same, none) = apply_repairs(&infs, &[]).unwrap();
        assert_eq!(same, infs);
        assert!(none.is_empty());

        let bogus = Repair {
            key: RecordKey::new("NOPE", "1"),
            attribute: Attribute::Gender,
            new_value: "woman".into(),
            reason: String::new(),
        };
        assert!(matches!(
            apply_repairs(&infs, &[bogus]),
            Err(ReconcileError::UnknownRepairTarget { .. })
        ));
        let bad = Repair {
            key: RecordKey::new("DAM", "3"),
            attribute: Attribute::BirthDecade,
            new_value: "1835".into(),
            reason: String::new(),
        };
        assert!(matches!(apply_repairs(&infs, &[bad]), Err(ReconcileError::BadValue { .. })));
    }

    #[test]
    fn repairs_table_round_trip() {
        let repairs = vec![Repair {
            key: RecordKey::new("DAM", "3"),
            attribute: Attribute::Gender,
            new_value: "woman".into(),
            reason: "verified".into(),
        }];
        let t = repairs_to_table(&repairs);
        assert_eq!(t.header, REPAIR_COLUMNS);
        assert_eq!(repairs_from_table(&t).unwrap(), repairs);
    }

    fn nama_fixture(men: [usize; 3], women: [usize; 4]) -> (Vec<EntityRecord>, Vec<ConsensusInference>, Vec<ReferenceLabel>) {
        let mut records = Vec::new();
        let mut infs = Vec::new();
        let mut reference = Vec::new();
        let mut next = 0;
        let mut add = |label: &str, inferred: Option<Option<Gender>>, records: &mut Vec<EntityRecord>, infs: &mut Vec<ConsensusInference>| {
            next += 1;
            let name = format!("Artist {next}");
            if let Some(g) = inferred {
                records.push(record("NAMA", &next.to_string(), &name));
                infs.push(inf("NAMA", &next.to_string(), g));
            }
            reference.push(ReferenceLabel {
                name_or_key: name,
                attribute: Attribute::Gender,
                label: label.into(),
            });
        };
        for (count, g) in men.iter().zip([Some(Gender::Man), Some(Gender::Woman), None]) {
            for _ in 0..*count {
                add("male", Some(g), &mut records, &mut infs);
            }
        }
        for (count, g) in women.iter().zip([Some(Some(Gender::Woman)), Some(Some(Gender::Man)), Some(None), None]) {
            for _ in 0..*count {
                add("Female", g, &mut records, &mut infs);
            }
        }
        (records, infs, reference)
    }

    #[test]
    fn reference_cross_tab() {
        let (records, infs, reference) = nama_fixture([191, 0, 7], [43, 1, 11, 13]);
        let cmp = compare_reference(&records, &infs, &reference);
        let g = &cmp.attributes[&Attribute::Gender];
        assert_eq!(
            (g.cell("man", "man"), g.cell("man", "woman"), g.cell("man", NO_INFERENCE)),
            (191, 0, 7)
        );
        assert_eq!(
            (
                g.cell("woman", "woman"),
                g.cell("woman", "man"),
                g.cell("woman", NO_INFERENCE),
                g.cell("woman", NOT_SAMPLED)
            ),
            (43, 1, 11, 13)
        );
        assert_eq!(g.compared, 266);
        assert_eq!(g.matched, 234);
        let totals = g.outcome_totals();
        assert_eq!(totals.values().sum::<usize>(), 266);
        assert_eq!(totals["man"], 192);
    }

    #[test]
    fn empty_reference_gives_empty_table() {
        let (records, infs) = lachowicz();
        assert!(compare_reference(&records, &infs, &[]).attributes.is_empty());
    }

    #[test]
    fn reference_by_record_key_and_conflict() {
        let (records, mut infs) = lachowicz();
        infs[2].gender = Some(Gender::Man);
        let reference = vec![
            ReferenceLabel {
                name_or_key: "DAM:3".into(),
                attribute: Attribute::Gender,
                label: "woman".into(),
            },
            ReferenceLabel {
                name_or_key: "Rachel Lachowicz".into(),
                attribute: Attribute::Gender,
                label: "woman".into(),
            },
        ];
        let g = &compare_reference(&records, &infs, &reference).attributes[&Attribute::Gender];
        assert_eq!(g.cell("woman", "man"), 1);
        assert_eq!(g.cell("woman", CONFLICTING), 1);
        assert_eq!(g.agreement_rate(), Some(0.0));
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::consensus::{round_to_decade, Attribute, ConsensusInference, DecadeRounding, Gender, IiaVerdict, Region};
use crate::ingest::{read_table, write_table, Ethnicity, IngestError, RawTable, RecordKey};

pub const TRUTH_COLUMNS: [&str; 7] = [
    "collection_id",
    "entity_id",
    "iia",
    "gender",
    "ethnicity",
    "region",
    "birth_year",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueAttributes {
    pub gender: Gender,
    pub ethnicity: Ethnicity,
    pub region: Region,
    pub birth_year: i64,
}

/// Ground truth for one record; `attributes` is `None` for records that are
/// not individual, identifiable artists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRow {
    pub key: RecordKey,
    pub attributes: Option<TrueAttributes>,
}

impl TruthRow {
    /// The value an ideal inference would report, as a token.
    pub fn expected(&self, attr: Attribute, rounding: DecadeRounding) -> Option<String> {
        let t = self.attributes?;
        Some(match attr {
            Attribute::Gender => t.gender.token().to_string(),
            Attribute::Ethnicity => t.ethnicity.token().to_string(),
            Attribute::Region => t.region.token().to_string(),
            Attribute::BirthDecade => round_to_decade(Ratio::from_integer(t.birth_year), rounding).to_string(),
        })
    }
}

pub fn truth_to_table(rows: &[TruthRow]) -> RawTable {
    let mut sorted: Vec<&TruthRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    let mut t = RawTable::new(TRUTH_COLUMNS.iter().map(|s| s.to_string()).collect());
    for r in sorted {
        let mut cells = vec![r.key.collection_id.clone(), r.key.entity_id.clone()];
        match r.attributes {
            Some(a) => cells.extend([
                "yes".to_string(),
                a.gender.token().to_string(),
                a.ethnicity.token().to_string(),
                a.region.token().to_string(),
                a.birth_year.to_string(),
            ]),
            None => cells.extend(["no".to_string(), String::new(), String::new(), String::new(), String::new()]),
        }
        t.push(cells);
    }
    t
}

pub fn truth_from_table(table: &RawTable) -> Result<Vec<TruthRow>, IngestError> {
    let idx = table.require_columns(&TRUTH_COLUMNS)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let cell = |i: usize| row.cells[idx[i]].trim();
        let bad = |what: &str| IngestError::MalformedRow {
            line: row.line,
            message: format!("{what} `{}`", cell(TRUTH_COLUMNS.iter().position(|c| *c == what).unwrap_or(0))),
        };
        let key = RecordKey::new(cell(0), cell(1));
        let attributes = match cell(2) {
            "no" => None,
            "yes" => Some(TrueAttributes {
                gender: Gender::parse(cell(3)).ok_or_else(|| bad("gender"))?,
                ethnicity: Ethnicity::parse(cell(4)).ok_or_else(|| bad("ethnicity"))?,
                region: Region::parse(cell(5)).ok_or_else(|| bad("region"))?,
                birth_year: cell(6).parse().map_err(|_| bad("birth_year"))?,
            }),
            _ => return Err(bad("iia")),
        };
        out.push(TruthRow { key, attributes });
    }
    Ok(out)
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRow>, IngestError> {
    truth_from_table(&read_table(path)?)
}

pub fn write_truth(path: &Path, rows: &[TruthRow]) -> Result<(), IngestError> {
    write_table(path, &truth_to_table(rows))
}

/// Token used in confusion tables for "no confident inference".
pub const NOT_INFERRED: &str = "none";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributeScore {
    /// Records the attribute applies to.
    pub eligible: usize,
    /// Eligible records with a confident inference.
    pub inferred: usize,
    pub correct: usize,
    /// Confident inferences on records that are not individual artists.
    pub spurious: usize,
    /// Truth token -> inferred token (or `none`) -> count.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

impl AttributeScore {
    /// Fraction correct among inferred; absent when nothing was inferred.
    pub fn accuracy(&self) -> Option<f64> {
        (self.inferred > 0).then(|| self.correct as f64 / self.inferred as f64)
    }

    pub fn coverage(&self) -> f64 {
        if self.eligible == 0 {
            0.0
        } else {
            self.inferred as f64 / self.eligible as f64
        }
    }

    fn tally(&mut self, expected: String, got: Option<String>) {
        self.eligible += 1;
        if let Some(g) = &got {
            self.inferred += 1;
            if *g == expected {
                self.correct += 1;
            }
        }
        *self
            .confusion
            .entry(expected)
            .or_default()
            .entry(got.unwrap_or_else(|| NOT_INFERRED.to_string()))
            .or_default() += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthScore {
    pub records: usize,
    /// IIA verdicts over all records; undetermined counts as not inferred.
    pub iia: AttributeScore,
    pub attributes: BTreeMap<Attribute, AttributeScore>,
}

impl TruthScore {
    /// Correct over inferred, pooled across the four attributes.
    pub fn pooled_accuracy(&self) -> Option<f64> {
        let (c, n) = self
            .attributes
            .values()
            .fold((0, 0), |(c, n), s| (c + s.correct, n + s.inferred));
        (n > 0).then(|| c as f64 / n as f64)
    }

    pub fn pooled_coverage(&self) -> f64 {
        let (i, e) = self
            .attributes
            .values()
            .fold((0, 0), |(i, e), s| (i + s.inferred, e + s.eligible));
        if e == 0 {
            0.0
        } else {
            i as f64 / e as f64
        }
    }
}

/// Compares inferences with the truth. Both sides must cover the same keys.
pub fn score_against_truth(
    inferences: &[ConsensusInference],
    truth: &[TruthRow],
    rounding: DecadeRounding,
) -> Result<TruthScore, SynthError> {
    let by_key: BTreeMap<&RecordKey, &ConsensusInference> = inferences.iter().map(|i| (&i.key, i)).collect();
    let truth_keys: BTreeSet<&RecordKey> = truth.iter().map(|t| &t.key).collect();
    let missing: Vec<&RecordKey> = truth_keys.iter().filter(|k| !by_key.contains_key(*k)).copied().collect();
    let extra: Vec<&RecordKey> = by_key.keys().filter(|k| !truth_keys.contains(*k)).copied().collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(SynthError::KeyMismatch {
            missing: missing.len(),
            extra: extra.len(),
            first: (*missing.first().or(extra.first()).expect("one side nonempty")).clone(),
        });
    }
    let mut score = TruthScore {
        records: truth.len(),
        iia: AttributeScore::default(),
        attributes: Attribute::ALL.iter().map(|a| (*a, AttributeScore::default())).collect(),
    };
    for t in truth {
        let inf = by_key[&t.key];
        let expected = if t.attributes.is_some() { IiaVerdict::Iia } else { IiaVerdict::NonIia };
        let got = (inf.iia != IiaVerdict::Undetermined).then(|| inf.iia.token().to_string());
        score.iia.tally(expected.token().to_string(), got);
        for attr in Attribute::ALL {
            let s = score.attributes.get_mut(&attr).expect("all attributes present");
            match t.expected(attr, rounding) {
                Some(e) => s.tally(e, inf.attribute_value(attr)),
                None => s.spurious += usize::from(inf.attribute_value(attr).is_some()),
            }
        }
    }
    Ok(score)
}

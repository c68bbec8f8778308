//! Consensus inference: turns pooled responses into per-record IIA verdicts
//! and confident gender, ethnicity, region and birth-decade inferences.

mod config;
mod infer;
mod region;

pub use config::{
    CampaignConfig, ConfigError, DecadeRounding, Exact, Score, TestVariance, CONFIG_KEYS,
};
pub use infer::*;
pub use region::{normalize_country, CountryLookup, Region, RegionMap};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    read_table, write_table, AnnotationResponse, Ethnicity, IngestError, RawTable, RecordKey,
    ResponsePool,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Gender,
    Ethnicity,
    Region,
    BirthDecade,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [
        Attribute::Gender,
        Attribute::Ethnicity,
        Attribute::Region,
        Attribute::BirthDecade,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Attribute::Gender => "gender",
            Attribute::Ethnicity => "ethnicity",
            Attribute::Region => "region",
            Attribute::BirthDecade => "birth_decade",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        Attribute::ALL.into_iter().find(|a| a.token() == s)
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ConsensusError {
    #[error("no usable {0} responses")]
    NoUsableResponses(Attribute),
    #[error("unknown country `{0}`")]
    UnknownCountry(String),
}

/// Final per-record inference with the scores and support behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusInference {
    pub key: RecordKey,
    pub iia: IiaVerdict,
    pub n_responses: usize,
    pub n_retained: usize,
    pub gender: Option<Gender>,
    pub gender_score: Option<Exact>,
    pub n_gender: usize,
    pub ethnicity: Option<EthnicityOutcome>,
    pub ethnicity_scores: BTreeMap<Ethnicity, Exact>,
    pub n_ethnicity: usize,
    pub region: Option<Region>,
    pub region_scores: BTreeMap<Region, Exact>,
    pub n_region: usize,
    pub birth_decade: Option<i64>,
    pub birth_mean: Option<Exact>,
    pub n_birth: usize,
}

impl ConsensusInference {
    pub fn empty(key: RecordKey, iia: IiaVerdict) -> Self {
        ConsensusInference {
            key,
            iia,
            n_responses: 0,
            n_retained: 0,
            gender: None,
            gender_score: None,
            n_gender: 0,
            ethnicity: None,
            ethnicity_scores: BTreeMap::new(),
            n_ethnicity: 0,
            region: None,
            region_scores: BTreeMap::new(),
            n_region: 0,
            birth_decade: None,
            birth_mean: None,
            n_birth: 0,
        }
    }

    pub fn is_iia(&self) -> bool {
        self.iia == IiaVerdict::Iia
    }

    /// Confident value of one attribute rendered as a token, if any.
    /// `MultipleExcluded` ethnicity does not count as confident.
    pub fn attribute_value(&self, attr: Attribute) -> Option<String> {
        match attr {
            Attribute::Gender => self.gender.map(|g| g.token().to_string()),
            Attribute::Ethnicity => self
                .ethnicity
                .and_then(EthnicityOutcome::single)
                .map(|e| e.token().to_string()),
            Attribute::Region => self.region.map(|r| r.token().to_string()),
            Attribute::BirthDecade => self.birth_decade.map(|d| d.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordDiagnostic {
    pub key: RecordKey,
    pub attribute: Attribute,
    pub error: ConsensusError,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsensusOutput {
    pub inferences: Vec<ConsensusInference>,
    pub diagnostics: Vec<RecordDiagnostic>,
}

/// Runs the IIA rule and the four attribute rules for one record.
pub fn infer_record(
    key: &RecordKey,
    responses: &[AnnotationResponse],
    map: &RegionMap,
    config: &CampaignConfig,
) -> (ConsensusInference, Vec<RecordDiagnostic>) {
    let iia = infer_iia(responses, config);
    let mut out = ConsensusInference::empty(key.clone(), iia.verdict);
    out.n_responses = responses.len();
    out.n_retained = iia.retained.len();
    let mut diags = Vec::new();
    if iia.verdict != IiaVerdict::Iia {
        return (out, diags);
    }
    let retained = &iia.retained;
    let mut note = |attribute: Attribute, error: ConsensusError| {
        diags.push(RecordDiagnostic {
            key: key.clone(),
            attribute,
            error,
        })
    };

    match estimate_gender(retained.iter().copied(), config) {
        Ok(g) => {
            out.gender = g.inferred;
            out.gender_score = Some(Exact(g.score));
            out.n_gender = g.n;
        }
        Err(e) => note(Attribute::Gender, e),
    }
    match estimate_ethnicity(retained.iter().copied(), config) {
        Ok(e) => {
            out.ethnicity = e.outcome;
            out.n_ethnicity = e.categories.n;
            out.ethnicity_scores = e.categories.scores.into_iter().map(|(c, s)| (c, Exact(s))).collect();
        }
        Err(e) => note(Attribute::Ethnicity, e),
    }
    let region = estimate_region(retained.iter().copied(), map, config);
    for name in &region.unknown_countries {
        note(Attribute::Region, ConsensusError::UnknownCountry(name.clone()));
    }
    if region.regions.n == 0 {
        note(Attribute::Region, ConsensusError::NoUsableResponses(Attribute::Region));
    }
    out.region = region.inferred;
    out.n_region = region.regions.n;
    out.region_scores = region.regions.scores.into_iter().map(|(c, s)| (c, Exact(s))).collect();
    match estimate_birth_decade(retained.iter().copied(), config) {
        Ok(b) => {
            out.birth_decade = b.decade;
            out.birth_mean = b.weighted_mean.map(Exact);
            out.n_birth = b.n;
        }
        Err(e) => note(Attribute::BirthDecade, e),
    }
    (out, diags)
}

/// Infers every record in the pool, in canonical record order.
pub fn run_consensus(pool: &ResponsePool, map: &RegionMap, config: &CampaignConfig) -> ConsensusOutput {
    let entries: Vec<(&RecordKey, &[AnnotationResponse])> = pool.iter().collect();
    let results: Vec<_> = entries
        .par_iter()
        .map(|(k, rs)| infer_record(k, rs, map, config))
        .collect();
    let mut out = ConsensusOutput::default();
    for (inf, diags) in results {
        out.inferences.push(inf);
        out.diagnostics.extend(diags);
    }
    out
}

/// Per-collection counts of IIA records and confident inferences.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollectionTally {
    pub collection_id: String,
    pub records: usize,
    pub iia: usize,
    pub cgi: usize,
    pub cei: usize,
    pub cri: usize,
    pub cbi: usize,
}

impl CollectionTally {
    /// IIA as a share of records; the four C*I counts as shares of IIA.
    pub fn percentages(&self) -> [Option<f64>; 5] {
        let pct = |k: usize, n: usize| (n > 0).then(|| 100.0 * k as f64 / n as f64);
        [
            pct(self.iia, self.records),
            pct(self.cgi, self.iia),
            pct(self.cei, self.iia),
            pct(self.cri, self.iia),
            pct(self.cbi, self.iia),
        ]
    }

    fn add(&mut self, other: &CollectionTally) {
        self.records += other.records;
        self.iia += other.iia;
        self.cgi += other.cgi;
        self.cei += other.cei;
        self.cri += other.cri;
        self.cbi += other.cbi;
    }
}

/// Tallies by collection plus an overall row (the column sums).
pub fn tally_by_collection(inferences: &[ConsensusInference]) -> (Vec<CollectionTally>, CollectionTally) {
    let mut by: BTreeMap<&str, CollectionTally> = BTreeMap::new();
    for inf in inferences {
        let t = by
            .entry(inf.key.collection_id.as_str())
            .or_insert_with(|| CollectionTally {
                collection_id: inf.key.collection_id.clone(),
                ..Default::default()
            });
        t.records += 1;
        if inf.is_iia() {
            t.iia += 1;
            t.cgi += inf.gender.is_some() as usize;
            t.cei += inf.ethnicity.and_then(EthnicityOutcome::single).is_some() as usize;
            t.cri += inf.region.is_some() as usize;
            t.cbi += inf.birth_decade.is_some() as usize;
        }
    }
    let rows: Vec<CollectionTally> = by.into_values().collect();
    let mut overall = CollectionTally {
        collection_id: "Overall".into(),
        ..Default::default()
    };
    rows.iter().for_each(|r| overall.add(r));
    (rows, overall)
}

pub const INFERENCE_COLUMNS: [&str; 12] = [
    "collection_id",
    "entity_id",
    "iia",
    "gender",
    "gender_score",
    "ethnicity",
    "region",
    "birth_decade",
    "n_gender",
    "n_ethnicity",
    "n_region",
    "n_birth",
];

pub fn format_score(s: &Exact) -> String {
    format!("{:.4}", s.value().to_f64().unwrap_or(f64::NAN))
}

pub fn inferences_to_table(inferences: &[ConsensusInference]) -> RawTable {
    let mut t = RawTable::new(INFERENCE_COLUMNS.iter().map(|s| s.to_string()).collect());
    let mut sorted: Vec<&ConsensusInference> = inferences.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    for inf in sorted {
        t.push(vec![
            inf.key.collection_id.clone(),
            inf.key.entity_id.clone(),
            inf.iia.token().into(),
            inf.gender.map(|g| g.token().to_string()).unwrap_or_default(),
            inf.gender_score.as_ref().map(format_score).unwrap_or_default(),
            inf.ethnicity.map(|e| e.token().to_string()).unwrap_or_default(),
            inf.region.map(|r| r.token().to_string()).unwrap_or_default(),
            inf.birth_decade.map(|d| d.to_string()).unwrap_or_default(),
            inf.n_gender.to_string(),
            inf.n_ethnicity.to_string(),
            inf.n_region.to_string(),
            inf.n_birth.to_string(),
        ]);
    }
    t
}

/// Reads `inferences.csv`. Per-category score maps are not part of the
/// table and come back empty; the gender score is the rounded display value.
pub fn inferences_from_table(table: &RawTable) -> Result<Vec<ConsensusInference>, IngestError> {
    let idx = table.require_columns(&INFERENCE_COLUMNS)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let cell = |i: usize| row.cells[idx[i]].trim();
        let bad = |what: &str, v: &str| IngestError::MalformedRow {
            line: row.line,
            message: format!("{what} `{v}`"),
        };
        let opt = |i: usize| Some(cell(i)).filter(|s| !s.is_empty());
        let count = |i: usize| -> Result<usize, IngestError> {
            cell(i).parse().map_err(|_| bad(INFERENCE_COLUMNS[i], cell(i)))
        };
        let iia = IiaVerdict::parse(cell(2)).ok_or_else(|| bad("iia", cell(2)))?;
        let mut inf = ConsensusInference::empty(RecordKey::new(cell(0), cell(1)), iia);
        inf.gender = opt(3).map(|s| Gender::parse(s).ok_or_else(|| bad("gender", s))).transpose()?;
        inf.gender_score = opt(4)
            .map(|s| s.parse::<Exact>().map_err(|_| bad("gender_score", s)))
            .transpose()?;
        inf.ethnicity = opt(5)
            .map(|s| EthnicityOutcome::parse(s).ok_or_else(|| bad("ethnicity", s)))
            .transpose()?;
        inf.region = opt(6).map(|s| Region::parse(s).ok_or_else(|| bad("region", s))).transpose()?;
        inf.birth_decade = opt(7)
            .map(|s| s.parse::<i64>().map_err(|_| bad("birth_decade", s)))
            .transpose()?;
        inf.n_gender = count(8)?;
        inf.n_ethnicity = count(9)?;
        inf.n_region = count(10)?;
        inf.n_birth = count(11)?;
        out.push(inf);
    }
    Ok(out)
}

pub fn read_inferences(path: &Path) -> Result<Vec<ConsensusInference>, IngestError> {
    inferences_from_table(&read_table(path)?)
}

pub fn write_inferences(path: &Path, inferences: &[ConsensusInference]) -> Result<(), IngestError> {
    write_table(path, &inferences_to_table(inferences))
}

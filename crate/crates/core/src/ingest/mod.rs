//! On-disk data contracts: entity records, annotation responses and the
//! pooled per-record response lists.
//!
//! Records and responses are read from UTF-8 CSV with a fixed header, or
//! from a JSON array of objects using the same field names. Column order is
//! free; unknown extra columns are ignored.

mod table;
mod types;

pub use table::{read_table, write_table, RawTable};
pub use types::*;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

pub const RECORD_COLUMNS: [&str; 5] = [
    "collection_id",
    "entity_id",
    "display_name",
    "source_url",
    "scrape_date",
];

pub const RESPONSE_COLUMNS: [&str; 15] = [
    "hit_id",
    "worker_id",
    "collection_id",
    "entity_id",
    "duration_secs",
    "iia",
    "gender",
    "gender_conf",
    "ethnicities",
    "ethnicity_text",
    "ethnicity_conf",
    "country",
    "origin_conf",
    "birth_year",
    "birth_conf",
];

/// Marketplace qualification gates. Rows carrying these optional columns must
/// satisfy them; they are never computed here.
pub const MIN_PRIOR_HITS: u64 = 1_000;
pub const MIN_APPROVAL_RATE: f64 = 0.99;

/// Display-name markers identifying production firms rather than people.
pub const FIRM_MARKERS: [&str; 3] = ["company", "& co", "& sons"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("duplicate record key {0}")]
    DuplicateKey(RecordKey),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("response references unknown record {0}")]
    OrphanResponse(RecordKey),
    #[error("response hit `{hit_id}` by worker `{worker_id}` for {key} appears more than once")]
    DuplicateResponse {
        key: RecordKey,
        hit_id: String,
        worker_id: String,
    },
    #[error("line {line}: worker fails marketplace qualification ({message})")]
    QualificationViolation { line: usize, message: String },
    #[error("invalid JSON input: {0}")]
    Json(#[from] serde_json::Error),
}

fn malformed(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::MalformedRow {
        line,
        message: message.into(),
    }
}

/// Reads an entity-record table (CSV or JSON by extension).
pub fn parse_records(path: &Path) -> Result<Vec<EntityRecord>, IngestError> {
    records_from_table(&read_table(path)?)
}

pub fn records_from_table(table: &RawTable) -> Result<Vec<EntityRecord>, IngestError> {
    let idx = table.require_columns(&RECORD_COLUMNS)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let cell = |i: usize| row.cells[idx[i]].trim();
        let collection_id = cell(0);
        let entity_id = cell(1);
        if collection_id.is_empty() || entity_id.is_empty() {
            return Err(malformed(row.line, "empty collection_id or entity_id"));
        }
        let display_name = cell(2);
        if display_name.is_empty() {
            return Err(malformed(row.line, "empty display_name"));
        }
        let source_url = Some(cell(3)).filter(|s| !s.is_empty()).map(str::to_string);
        let scrape_date = NaiveDate::parse_from_str(cell(4), "%Y-%m-%d")
            .map_err(|e| malformed(row.line, format!("scrape_date `{}`: {e}", cell(4))))?;
        let key = RecordKey::new(collection_id, entity_id);
        if !seen.insert(key.clone()) {
            return Err(IngestError::DuplicateKey(key));
        }
        out.push(EntityRecord {
            key,
            display_name: display_name.to_string(),
            source_url,
            scrape_date,
        });
    }
    Ok(out)
}

/// Canonical serialization: fixed column order, rows sorted by record key.
pub fn records_to_table(records: &[EntityRecord]) -> RawTable {
    let mut sorted: Vec<&EntityRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    let mut table = RawTable::new(RECORD_COLUMNS.iter().map(|s| s.to_string()).collect());
    for r in sorted {
        table.push(vec![
            r.key.collection_id.clone(),
            r.key.entity_id.clone(),
            r.display_name.clone(),
            r.source_url.clone().unwrap_or_default(),
            r.scrape_date.format("%Y-%m-%d").to_string(),
        ]);
    }
    table
}

pub fn write_records(path: &Path, records: &[EntityRecord]) -> Result<(), IngestError> {
    write_table(path, &records_to_table(records))
}

/// Reads a response table (CSV or JSON by extension).
pub fn parse_responses(path: &Path) -> Result<Vec<AnnotationResponse>, IngestError> {
    responses_from_table(&read_table(path)?)
}

pub fn responses_from_table(table: &RawTable) -> Result<Vec<AnnotationResponse>, IngestError> {
    let idx = table.require_columns(&RESPONSE_COLUMNS)?;
    let hits_col = table.column("worker_hits_completed");
    let approval_col = table.column("worker_approval_rate");
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let line = row.line;
        let cell = |i: usize| row.cells[idx[i]].trim();

        if let Some(c) = hits_col {
            check_prior_hits(line, row.cells[c].trim())?;
        }
        if let Some(c) = approval_col {
            check_approval(line, row.cells[c].trim())?;
        }

        let hit_id = cell(0);
        let worker_id = cell(1);
        if hit_id.is_empty() || worker_id.is_empty() {
            return Err(malformed(line, "empty hit_id or worker_id"));
        }
        let duration_secs: f64 = cell(4)
            .parse()
            .map_err(|_| malformed(line, format!("duration_secs `{}`", cell(4))))?;
        if !(duration_secs >= 0.0) || !duration_secs.is_finite() {
            return Err(malformed(line, "duration_secs must be a nonnegative number"));
        }
        let iia = IiaAnswer::parse(cell(5))
            .ok_or_else(|| malformed(line, format!("iia `{}`", cell(5))))?;

        let gender = match cell(6) {
            "" => None,
            g => {
                let value = GenderAnswer::parse(g)
                    .ok_or_else(|| malformed(line, format!("gender `{g}`")))?;
                confidence_cell(line, cell(7))?.map(|confidence| Answer { value, confidence })
            }
        };

        let categories = parse_ethnicities(line, cell(8))?;
        let free_text = Some(cell(9)).filter(|s| !s.is_empty()).map(str::to_string);
        let ethnicity = if categories.is_empty() && free_text.is_none() {
            None
        } else {
            confidence_cell(line, cell(10))?.map(|confidence| EthnicityAnswer {
                categories,
                free_text,
                confidence,
            })
        };

        let origin = text_answer(line, cell(11), cell(12))?;
        let birth = text_answer(line, cell(13), cell(14))?;

        out.push(AnnotationResponse {
            hit_id: hit_id.to_string(),
            worker_id: worker_id.to_string(),
            key: RecordKey::new(cell(2), cell(3)),
            duration_secs,
            iia,
            gender,
            ethnicity,
            origin,
            birth,
        });
    }
    Ok(out)
}

fn check_prior_hits(line: usize, raw: &str) -> Result<(), IngestError> {
    if raw.is_empty() {
        return Ok(());
    }
    let hits: u64 = raw
        .parse()
        .map_err(|_| malformed(line, format!("worker_hits_completed `{raw}`")))?;
    if hits < MIN_PRIOR_HITS {
        return Err(IngestError::QualificationViolation {
            line,
            message: format!("{hits} prior HITs < {MIN_PRIOR_HITS}"),
        });
    }
    Ok(())
}

fn check_approval(line: usize, raw: &str) -> Result<(), IngestError> {
    if raw.is_empty() {
        return Ok(());
    }
    let rate: f64 = raw
        .parse()
        .map_err(|_| malformed(line, format!("worker_approval_rate `{raw}`")))?;
    // accept either a fraction or a percentage
    let rate = if rate > 1.0 { rate / 100.0 } else { rate };
    if rate < MIN_APPROVAL_RATE {
        return Err(IngestError::QualificationViolation {
            line,
            message: format!("approval rate {rate} < {MIN_APPROVAL_RATE}"),
        });
    }
    Ok(())
}

fn confidence_cell(line: usize, raw: &str) -> Result<Option<Confidence>, IngestError> {
    if raw.is_empty() {
        // an answer without a confidence grade is treated as unanswered
        return Ok(None);
    }
    let thirds: u8 = raw
        .parse()
        .map_err(|_| malformed(line, format!("confidence `{raw}`")))?;
    Confidence::from_thirds(thirds)
        .map(Some)
        .ok_or_else(|| malformed(line, format!("confidence `{raw}` not in 1|2|3")))
}

fn text_answer(line: usize, value: &str, conf: &str) -> Result<Option<Answer<String>>, IngestError> {
    if value.is_empty() {
        return Ok(None);
    }
    Ok(confidence_cell(line, conf)?.map(|confidence| Answer {
        value: value.to_string(),
        confidence,
    }))
}

fn parse_ethnicities(line: usize, raw: &str) -> Result<BTreeSet<EthnicityChoice>, IngestError> {
    raw.split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|tok| {
            EthnicityChoice::parse(tok)
                .ok_or_else(|| malformed(line, format!("ethnicity `{tok}` not in the fixed list")))
        })
        .collect()
}

/// Canonical serialization of responses in the documented column order.
pub fn responses_to_table(responses: &[AnnotationResponse]) -> RawTable {
    let mut sorted: Vec<&AnnotationResponse> = responses.iter().collect();
    sorted.sort_by(|a, b| a.canonical_cmp(b));
    let mut table = RawTable::new(RESPONSE_COLUMNS.iter().map(|s| s.to_string()).collect());
    for r in sorted {
        let conf = |c: Option<Confidence>| c.map(|c| c.thirds().to_string()).unwrap_or_default();
        let (gender, gender_conf) = match &r.gender {
            Some(a) => (a.value.token().to_string(), conf(Some(a.confidence))),
            None => (String::new(), String::new()),
        };
        let (eth, eth_text, eth_conf) = match &r.ethnicity {
            Some(a) => (
                a.categories
                    .iter()
                    .map(|c| c.token())
                    .collect::<Vec<_>>()
                    .join("|"),
                a.free_text.clone().unwrap_or_default(),
                conf(Some(a.confidence)),
            ),
            None => Default::default(),
        };
        let text = |a: &Option<Answer<String>>| match a {
            Some(a) => (a.value.clone(), conf(Some(a.confidence))),
            None => Default::default(),
        };
        let (country, origin_conf) = text(&r.origin);
        let (birth, birth_conf) = text(&r.birth);
        table.push(vec![
            r.hit_id.clone(),
            r.worker_id.clone(),
            r.key.collection_id.clone(),
            r.key.entity_id.clone(),
            format_duration(r.duration_secs),
            r.iia.token().to_string(),
            gender,
            gender_conf,
            eth,
            eth_text,
            eth_conf,
            country,
            origin_conf,
            birth,
            birth_conf,
        ]);
    }
    table
}

fn format_duration(secs: f64) -> String {
    if secs.fract() == 0.0 {
        format!("{}", secs as u64)
    } else {
        format!("{secs}")
    }
}

pub fn write_responses(path: &Path, responses: &[AnnotationResponse]) -> Result<(), IngestError> {
    write_table(path, &responses_to_table(responses))
}

/// Splits records into (kept, dropped) by the firm-name markers.
pub fn prefilter_firms(records: Vec<EntityRecord>) -> (Vec<EntityRecord>, Vec<EntityRecord>) {
    records.into_iter().partition(|r| !is_firm_name(&r.display_name))
}

pub fn is_firm_name(name: &str) -> bool {
    let lowered = name.to_lowercase();
    FIRM_MARKERS.iter().any(|m| lowered.contains(m))
}

/// Groups responses by record. Every record gets an entry, possibly empty;
/// responses from repeated deployments of one record land in the same list.
pub fn pool_responses(
    responses: Vec<AnnotationResponse>,
    records: &[EntityRecord],
) -> Result<ResponsePool, IngestError> {
    let mut entries: BTreeMap<RecordKey, Vec<AnnotationResponse>> = records
        .iter()
        .map(|r| (r.key.clone(), Vec::new()))
        .collect();
    for resp in responses {
        match entries.get_mut(&resp.key) {
            Some(list) => list.push(resp),
            None => return Err(IngestError::OrphanResponse(resp.key)),
        }
    }
    for (key, list) in entries.iter_mut() {
        list.sort_by(|a, b| a.canonical_cmp(b));
        if let Some(w) = list
            .windows(2)
            .find(|w| w[0].hit_id == w[1].hit_id && w[0].worker_id == w[1].worker_id)
        {
            return Err(IngestError::DuplicateResponse {
                key: key.clone(),
                hit_id: w[0].hit_id.clone(),
                worker_id: w[0].worker_id.clone(),
            });
        }
    }
    Ok(ResponsePool { entries })
}

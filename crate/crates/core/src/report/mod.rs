//! Table- and figure-ready artifacts assembled from stage outputs, and the
//! end-to-end runner.
//!
//! Nothing here recomputes a statistic: tables render counts, estimates and
//! test results exactly as the stages produced them.

mod figure;
mod pipeline;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{ClusterOutput, FeatureSet, Linkage, ProfileTable};
use crate::consensus::{tally_by_collection, CampaignConfig, CollectionTally, ConsensusInference, ConsensusOutput};
use crate::ingest::{write_table, EntityRecord, IngestError, PoolSummary, RawTable};
use crate::reconcile::ReconcileReport;
use crate::screening::ScreeningReport;
use crate::stats::{DemographicCategory, StatsOutput, OVERALL};

pub use figure::*;
pub use pipeline::*;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("the {0} stage has not run")]
    StageMissing(&'static str),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Where the clustering profiles come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    /// Built from this run's stats stage.
    Stats,
    /// The bundled published per-collection table.
    Published,
    /// A percent table on disk.
    File(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Some(TableFormat::Csv),
            "json" => Some(TableFormat::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunInputs {
    pub records: String,
    pub responses: String,
    pub exclusions: Option<String>,
    pub repairs: Option<String>,
    pub region_map: Option<String>,
    pub truth: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub mission_features: FeatureSet,
    pub mission_k: usize,
    pub diversity_features: FeatureSet,
    pub diversity_k: usize,
    pub linkage: Linkage,
    /// Bonferroni family size; the number of groups when absent.
    pub family_size: Option<usize>,
    /// Exclude flagged workers without a separate review step.
    pub apply_flagged: bool,
    /// Feed repaired inferences (rather than raw consensus) to the stats stage.
    pub use_repairs: bool,
    pub profiles: ProfileSource,
    pub format: TableFormat,
    /// Recorded for provenance; the pipeline itself draws no randomness.
    pub seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mission_features: FeatureSet::MissionA,
            mission_k: 5,
            diversity_features: FeatureSet::DiversityA,
            diversity_k: 4,
            linkage: Linkage::Upgma,
            family_size: None,
            apply_flagged: true,
            use_repairs: true,
            profiles: ProfileSource::Stats,
            format: TableFormat::Csv,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub records_read: usize,
    /// Records dropped by the firm pre-filter.
    pub firms_dropped: Vec<EntityRecord>,
    pub pool: PoolSummary,
}

/// One pipeline execution: inputs, the configuration snapshot and whatever
/// stages have completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub tool_version: String,
    pub timestamp: Option<String>,
    pub inputs: RunInputs,
    pub config: CampaignConfig,
    pub options: RunOptions,
    pub ingest: Option<IngestSummary>,
    pub screening: Option<ScreeningReport>,
    pub consensus: Option<ConsensusOutput>,
    pub reconcile: Option<ReconcileReport>,
    /// Inferences after approved repairs; these feed the stats stage.
    pub inferences: Option<Vec<ConsensusInference>>,
    pub stats: Option<StatsOutput>,
    pub profiles: Option<ProfileTable>,
    pub clusters: Option<ClusterOutput>,
}

impl PipelineRun {
    pub fn new(inputs: RunInputs, config: CampaignConfig, options: RunOptions) -> Self {
        PipelineRun {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
            inputs,
            config,
            options,
            ingest: None,
            screening: None,
            consensus: None,
            reconcile: None,
            inferences: None,
            stats: None,
            profiles: None,
            clusters: None,
        }
    }

    /// Final inferences: repaired when reconciliation ran, raw otherwise.
    pub fn final_inferences(&self) -> Option<&[ConsensusInference]> {
        self.inferences
            .as_deref()
            .or_else(|| self.consensus.as_ref().map(|c| c.inferences.as_slice()))
    }
}

pub const TABLE1_COLUMNS: [&str; 12] = [
    "group", "sampled", "iia", "iia_pct", "cgi", "cgi_pct", "cei", "cei_pct", "cri", "cri_pct", "cbi", "cbi_pct",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    /// Per collection, then the overall row.
    pub rows: Vec<CollectionTally>,
}

impl Table1 {
    pub fn overall(&self) -> &CollectionTally {
        self.rows.last().expect("overall row present")
    }

    pub fn to_table(&self) -> RawTable {
        let mut t = RawTable::new(TABLE1_COLUMNS.iter().map(|s| s.to_string()).collect());
        for r in &self.rows {
            let pct = r.percentages();
            let p = |i: usize| pct[i].map(|v| format!("{v:.1}")).unwrap_or_default();
            t.push(vec![
                r.collection_id.clone(),
                r.records.to_string(),
                r.iia.to_string(),
                p(0),
                r.cgi.to_string(),
                p(1),
                r.cei.to_string(),
                p(2),
                r.cri.to_string(),
                p(3),
                r.cbi.to_string(),
                p(4),
            ]);
        }
        t
    }
}

/// Coverage table: sampled records, IIA share and confident-inference
/// counts per collection, plus the overall row.
pub fn emit_table1(run: &PipelineRun) -> Result<Table1, ReportError> {
    let infs = run.final_inferences().ok_or(ReportError::StageMissing("infer"))?;
    let (mut rows, overall) = tally_by_collection(infs);
    rows.push(overall);
    Ok(Table1 { rows })
}

pub const TABLE2_COLUMNS: [&str; 8] = ["group", "category", "k", "n", "pct", "ci_low_pct", "ci_high_pct", "flag"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub group: String,
    pub category: String,
    pub k: u64,
    pub n: u64,
    /// Percentages rounded to two decimals; absent when n = 0.
    pub pct: Option<f64>,
    pub ci_low_pct: Option<f64>,
    pub ci_high_pct: Option<f64>,
    /// `higher`, `lower` or `none`.
    pub flag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2 {
    pub rows: Vec<Table2Row>,
}

fn pct2(x: Option<f64>) -> Option<f64> {
    x.map(|v| (v * 10_000.0).round() / 100.0)
}

impl Table2 {
    pub fn to_table(&self) -> RawTable {
        let mut t = RawTable::new(TABLE2_COLUMNS.iter().map(|s| s.to_string()).collect());
        let num = |x: Option<f64>| x.map(|v| format!("{v:.2}")).unwrap_or_default();
        for r in &self.rows {
            t.push(vec![
                r.group.clone(),
                r.category.clone(),
                r.k.to_string(),
                r.n.to_string(),
                num(r.pct),
                num(r.ci_low_pct),
                num(r.ci_high_pct),
                r.flag.clone(),
            ]);
        }
        t
    }

    pub fn from_table(table: &RawTable) -> Result<Self, IngestError> {
        let idx = table.require_columns(&TABLE2_COLUMNS)?;
        let mut rows = Vec::with_capacity(table.rows.len());
        for row in &table.rows {
            let cell = |i: usize| row.cells[idx[i]].trim();
            let bad = |i: usize| IngestError::MalformedRow {
                line: row.line,
                message: format!("{} `{}`", TABLE2_COLUMNS[i], cell(i)),
            };
            let count = |i: usize| cell(i).parse::<u64>().map_err(|_| bad(i));
            let opt = |i: usize| -> Result<Option<f64>, IngestError> {
                if cell(i).is_empty() {
                    Ok(None)
                } else {
                    cell(i).parse().map(Some).map_err(|_| bad(i))
                }
            };
            rows.push(Table2Row {
                group: cell(0).to_string(),
                category: cell(1).to_string(),
                k: count(2)?,
                n: count(3)?,
                pct: opt(4)?,
                ci_low_pct: opt(5)?,
                ci_high_pct: opt(6)?,
                flag: cell(7).to_string(),
            });
        }
        Ok(Table2 { rows })
    }

    /// Wide layout: one line per group, one `pct [low, high]` cell per
    /// category; `+` / `-` mark significantly higher / lower.
    pub fn to_wide_table(&self) -> RawTable {
        let mut header = vec!["group".to_string(), "n_gender".to_string()];
        header.extend(DemographicCategory::ALL.iter().map(|c| c.token().to_string()));
        let mut t = RawTable::new(header);
        let mut groups: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !groups.contains(&r.group.as_str()) {
                groups.push(&r.group);
            }
        }
        for g in groups {
            let find = |c: DemographicCategory| self.rows.iter().find(|r| r.group == g && r.category == c.token());
            let n = find(DemographicCategory::Women).map(|r| r.n.to_string()).unwrap_or_default();
            let mut cells = vec![g.to_string(), n];
            for c in DemographicCategory::ALL {
                cells.push(match find(c) {
                    Some(Table2Row {
                        pct: Some(p),
                        ci_low_pct: Some(lo),
                        ci_high_pct: Some(hi),
                        flag,
                        ..
                    }) => {
                        let mark = match flag.as_str() {
                            "higher" => "+",
                            "lower" => "-",
                            _ => "",
                        };
                        format!("{p:.1} [{lo:.1}, {hi:.1}]{mark}")
                    }
                    _ => String::new(),
                });
            }
            t.push(cells);
        }
        t
    }
}

/// Diversity table: percentages, simultaneous intervals and outlier flags
/// per group and category, then the pooled unique-artist row.
pub fn emit_table2(run: &PipelineRun) -> Result<Table2, ReportError> {
    let stats = run.stats.as_ref().ok_or(ReportError::StageMissing("stats"))?;
    let d = &stats.demographics;
    let rows = d
        .estimates
        .iter()
        .chain(&d.overall)
        .map(|e| {
            let flag = if e.group == OVERALL {
                None
            } else {
                d.outliers
                    .iter()
                    .find(|o| o.group == e.group && o.category == e.category)
                    .map(|o| o.direction.token().to_string())
            };
            Table2Row {
                group: e.group.clone(),
                category: e.category.clone(),
                k: e.k,
                n: e.n,
                pct: pct2(e.p_hat),
                ci_low_pct: pct2(e.ci_low),
                ci_high_pct: pct2(e.ci_high),
                flag: flag.unwrap_or_else(|| "none".to_string()),
            }
        })
        .collect();
    Ok(Table2 { rows })
}

/// Left-aligned fixed-width text rendering of a table.
pub fn render_aligned(table: &RawTable) -> String {
    let mut widths: Vec<usize> = table.header.iter().map(|h| h.chars().count()).collect();
    for row in &table.rows {
        for (w, c) in widths.iter_mut().zip(&row.cells) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}", w = *w))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&table.header);
    out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    for row in &table.rows {
        out.push_str(&line(&row.cells));
    }
    out
}

/// RFC 3339 UTC rendering of a Unix time, as taken from `SOURCE_DATE_EPOCH`.
pub fn timestamp_from_epoch(secs: i64) -> Option<String> {
    chrono::DateTime::from_timestamp(secs, 0).map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    std::fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

/// Writes `table` as `<dir>/<stem>.<csv|json>`.
pub(crate) fn write_formatted(dir: &Path, stem: &str, table: &RawTable, format: TableFormat) -> Result<(), ReportError> {
    write_table(&dir.join(format!("{stem}.{}", format.extension())), table)?;
    Ok(())
}

#[cfg(test)]
mod tests;

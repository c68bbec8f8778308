use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::*;
use crate::cluster::cluster_profiles;
use crate::consensus::{inferences_to_table, run_consensus, RegionMap};
use crate::ingest::{parse_records, parse_responses, pool_responses, prefilter_firms, records_to_table};
use crate::reconcile::{
    apply_repairs, audit_to_table, check_consistency, group_keys, link_duplicates, read_repairs, repairs_to_table,
};
use crate::screening::{
    apply_exclusions, exclusions_to_table, flag_suspects, mean_duration, profile_workers, read_exclusions,
    score_agreement, ExclusionList, FlagThresholds,
};
use crate::stats::{build_demographic_table, build_mission_table};
use crate::synth::{read_truth, score_against_truth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Screen,
    Infer,
    Reconcile,
    Stats,
    Cluster,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Config,
        Stage::Ingest,
        Stage::Screen,
        Stage::Infer,
        Stage::Reconcile,
        Stage::Stats,
        Stage::Cluster,
        Stage::Report,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Screen => "screen",
            Stage::Infer => "infer",
            Stage::Reconcile => "reconcile",
            Stage::Stats => "stats",
            Stage::Cluster => "cluster",
            Stage::Report => "report",
        }
    }

    /// Process exit code when this stage fails.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Ingest => 10,
            Stage::Screen => 11,
            Stage::Infer => 12,
            Stage::Reconcile => 13,
            Stage::Stats => 14,
            Stage::Cluster => 15,
            Stage::Report => 16,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl PipelineError {
    pub fn new(stage: Stage, source: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        PipelineError {
            stage,
            source: source.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<Box<dyn std::error::Error + Send + Sync>>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

/// Written to `run.json`: everything needed to reproduce the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub timestamp: Option<String>,
    pub inputs: RunInputs,
    /// `key = value` lines, re-loadable with `CampaignConfig::from_kv_str`.
    pub config: String,
    pub options: RunOptions,
    /// Paths relative to the output directory, in write order.
    pub artifacts: Vec<String>,
}

struct Writer {
    root: PathBuf,
    written: Vec<String>,
}

impl Writer {
    fn dir(&self, stage: Stage) -> Result<PathBuf, PipelineError> {
        let d = self.root.join(stage.token());
        std::fs::create_dir_all(&d)
            .map_err(|source| ReportError::Io {
                path: d.display().to_string(),
                source,
            })
            .at(stage)?;
        Ok(d)
    }

    fn note(&mut self, stage: Stage, file: &str) {
        self.written.push(format!("{}/{file}", stage.token()));
    }

    fn table(&mut self, stage: Stage, stem: &str, table: &RawTable, format: TableFormat) -> Result<(), PipelineError> {
        let d = self.dir(stage)?;
        write_formatted(&d, stem, table, format).at(stage)?;
        self.note(stage, &format!("{stem}.{}", format.extension()));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, stage: Stage, file: &str, value: &T) -> Result<(), PipelineError> {
        let d = self.dir(stage)?;
        write_json(&d.join(file), value).at(stage)?;
        self.note(stage, file);
        Ok(())
    }

    fn text(&mut self, stage: Stage, file: &str, text: &str) -> Result<(), PipelineError> {
        let d = self.dir(stage)?;
        write_text(&d.join(file), text).at(stage)?;
        self.note(stage, file);
        Ok(())
    }
}

/// Runs every stage in order, persisting each stage's outputs under
/// `out_dir/<stage>/` as soon as it completes, then writes `run.json` and
/// `config.txt` at the top level.
pub fn run_pipeline(
    inputs: RunInputs,
    config: CampaignConfig,
    options: RunOptions,
    out_dir: &Path,
    timestamp: Option<String>,
) -> Result<PipelineRun, PipelineError> {
    config.validate().at(Stage::Config)?;
    if options.mission_k == 0 || options.diversity_k == 0 {
        return Err(PipelineError::new(Stage::Config, "cluster counts must be positive"));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|source| ReportError::Io {
            path: out_dir.display().to_string(),
            source,
        })
        .at(Stage::Config)?;
    let mut w = Writer {
        root: out_dir.to_path_buf(),
        written: Vec::new(),
    };
    let fmt = options.format;
    let mut run = PipelineRun::new(inputs.clone(), config.clone(), options.clone());
    run.timestamp = timestamp;

    // ingest
    let records = parse_records(Path::new(&inputs.records)).at(Stage::Ingest)?;
    let responses = parse_responses(Path::new(&inputs.responses)).at(Stage::Ingest)?;
    let region_map = match &inputs.region_map {
        Some(p) => RegionMap::from_path(Path::new(p)).at(Stage::Ingest)?,
        None => RegionMap::builtin(),
    };
    let records_read = records.len();
    let (kept, firms) = prefilter_firms(records);
    let pool = pool_responses(responses, &kept).at(Stage::Ingest)?.sampled();
    let ingest = IngestSummary {
        records_read,
        firms_dropped: firms,
        pool: pool.summary(),
    };
    w.table(Stage::Ingest, "records", &records_to_table(&kept), fmt)?;
    w.table(Stage::Ingest, "firms_dropped", &records_to_table(&ingest.firms_dropped), fmt)?;
    w.json(Stage::Ingest, "pool_summary.json", &ingest.pool)?;
    run.ingest = Some(ingest);

    // screen
    let mut profiles = profile_workers(&pool, config.fast_cutoff_secs);
    score_agreement(&mut profiles, &pool, &region_map, &config);
    let flagged = flag_suspects(&profiles, &FlagThresholds::from_config(&config));
    let mut lists: Vec<ExclusionList> = match &inputs.exclusions {
        Some(p) => read_exclusions(Path::new(p)).at(Stage::Screen)?,
        None => Vec::new(),
    };
    if options.apply_flagged {
        lists.push(flagged.clone());
    }
    let mean_duration_secs = mean_duration(&pool);
    let (pool, removal) = apply_exclusions(&pool, &lists);
    let screening = ScreeningReport {
        mean_duration_secs,
        profiles,
        flagged,
        removal,
    };
    w.table(Stage::Screen, "exclusions", &exclusions_to_table(&lists), fmt)?;
    w.json(Stage::Screen, "screening.json", &screening)?;
    run.screening = Some(screening);

    // infer
    let consensus = run_consensus(&pool, &region_map, &config);
    w.table(Stage::Infer, "inferences", &inferences_to_table(&consensus.inferences), fmt)?;
    w.json(Stage::Infer, "diagnostics.json", &consensus.diagnostics)?;

    // reconcile
    let groups = link_duplicates(&kept, &consensus.inferences);
    let consistency = check_consistency(&groups, &consensus.inferences);
    let repairs = match &inputs.repairs {
        Some(p) => read_repairs(Path::new(p)).at(Stage::Reconcile)?,
        None => Vec::new(),
    };
    let (repaired, audit) = apply_repairs(&consensus.inferences, &repairs).at(Stage::Reconcile)?;
    let reconcile = ReconcileReport {
        groups,
        consistency,
        audit,
    };
    w.table(Stage::Reconcile, "proposals", &repairs_to_table(&reconcile.consistency.proposals()), fmt)?;
    w.table(Stage::Reconcile, "audit", &audit_to_table(&reconcile.audit), fmt)?;
    w.table(Stage::Reconcile, "inferences", &inferences_to_table(&repaired), fmt)?;
    w.json(Stage::Reconcile, "reconcile.json", &reconcile)?;
    let keys = group_keys(&reconcile.groups);
    run.inferences = Some(if options.use_repairs {
        repaired
    } else {
        consensus.inferences.clone()
    });
    run.consensus = Some(consensus);
    run.reconcile = Some(reconcile);

    // stats
    let infs = run.final_inferences().expect("inferences set");
    let demographics = build_demographic_table(infs, &keys, config.alpha, options.family_size, config.test_variance)
        .at(Stage::Stats)?;
    let stats = StatsOutput {
        mission: build_mission_table(infs),
        demographics,
    };
    w.table(Stage::Stats, "stats", &stats.demographics.to_table(), fmt)?;
    w.json(Stage::Stats, "stats.json", &stats)?;
    run.stats = Some(stats);

    // cluster
    let profiles = match &options.profiles {
        ProfileSource::Stats => {
            let s = run.stats.as_ref().expect("stats set");
            ProfileTable::from_stats(&s.demographics, &s.mission)
        }
        ProfileSource::Published => ProfileTable::published(),
        ProfileSource::File(p) => ProfileTable::from_path(Path::new(p)).at(Stage::Cluster)?,
    };
    let clusters = cluster_profiles(
        &profiles,
        options.mission_features,
        options.mission_k,
        options.diversity_features,
        options.diversity_k,
        options.linkage,
    )
    .at(Stage::Cluster)?;
    for (name, tree, part) in [
        ("mission", &clusters.mission, &clusters.mission_partition),
        ("diversity", &clusters.diversity, &clusters.diversity_partition),
    ] {
        w.json(Stage::Cluster, &format!("{name}_dendrogram.json"), &tree.to_nested_json())?;
        w.text(Stage::Cluster, &format!("{name}.newick"), &(tree.to_newick() + "\n"))?;
        w.table(Stage::Cluster, &format!("{name}_partition"), &part.to_table(), fmt)?;
    }
    w.table(Stage::Cluster, "cross_tab", &clusters.cross_tab.to_table(), fmt)?;
    w.json(Stage::Cluster, "clusters.json", &clusters)?;
    w.json(Stage::Cluster, "profiles.json", &profiles)?;
    run.profiles = Some(profiles);
    run.clusters = Some(clusters);

    // report
    write_report_stage(&run, &mut w)?;

    write_text(&out_dir.join("config.txt"), &config.to_kv_string()).at(Stage::Report)?;
    w.written.push("config.txt".into());
    let manifest = RunManifest {
        tool_version: run.tool_version.clone(),
        timestamp: run.timestamp.clone(),
        inputs,
        config: config.to_kv_string(),
        options,
        artifacts: w.written,
    };
    write_json(&out_dir.join("run.json"), &manifest).at(Stage::Report)?;
    Ok(run)
}

fn write_report_stage(run: &PipelineRun, w: &mut Writer) -> Result<(), PipelineError> {
    let fmt = run.options.format;
    let t1 = emit_table1(run).at(Stage::Report)?;
    let t2 = emit_table2(run).at(Stage::Report)?;
    let fig = emit_fig2_data(run).at(Stage::Report)?;
    w.table(Stage::Report, "table1", &t1.to_table(), fmt)?;
    w.text(Stage::Report, "table1.txt", &render_aligned(&t1.to_table()))?;
    w.table(Stage::Report, "table2", &t2.to_table(), fmt)?;
    w.text(Stage::Report, "table2.txt", &render_aligned(&t2.to_wide_table()))?;
    w.json(Stage::Report, "fig2.json", &fig)?;
    w.text(Stage::Report, "fig2.svg", &fig.to_svg())?;
    if let Some(p) = &run.inputs.truth {
        let truth = read_truth(Path::new(p)).at(Stage::Report)?;
        let infs = run.final_inferences().ok_or(ReportError::StageMissing("infer")).at(Stage::Report)?;
        let score = score_against_truth(infs, &truth, run.config.decade_rounding).at(Stage::Report)?;
        w.json(Stage::Report, "truth_score.json", &score)?;
    }
    Ok(())
}

/// Writes the report artifacts for an already assembled run under
/// `out_dir/report/` and returns their relative paths.
pub fn write_report(run: &PipelineRun, out_dir: &Path) -> Result<Vec<String>, PipelineError> {
    let mut w = Writer {
        root: out_dir.to_path_buf(),
        written: Vec::new(),
    };
    write_report_stage(run, &mut w)?;
    Ok(w.written)
}

//! `crowdcensus` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crowdcensus::cluster::{cluster_profiles, FeatureSet, Linkage, ProfileTable};
use crowdcensus::consensus::{read_inferences, run_consensus, write_inferences, CampaignConfig, RegionMap};
use crowdcensus::ingest::{
    parse_records, parse_responses, pool_responses, prefilter_firms, records_to_table, responses_to_table,
    write_table, RawTable, ResponsePool,
};
use crowdcensus::reconcile::{
    apply_repairs, audit_to_table, check_consistency, compare_reference, group_keys, link_duplicates,
    read_reference, read_repairs, repairs_to_table, ReconcileReport,
};
use crowdcensus::report::{
    render_aligned, run_pipeline, timestamp_from_epoch, write_report, PipelineError, PipelineRun, ProfileSource,
    RunInputs, RunOptions, Stage, TableFormat,
};
use crowdcensus::screening::{
    apply_exclusions, exclusions_to_table, flag_suspects, mean_duration, profile_workers, read_exclusions,
    score_agreement, FlagThresholds, ScreeningReport,
};
use crowdcensus::stats::{build_demographic_table, build_mission_table, plan_sample, PilotSummary, StatsOutput};
use crowdcensus::synth::{generate, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "crowdcensus", version, about = "Crowdsourced demographic inference pipeline")]
struct Cli {
    /// Flat `key = value` campaign configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    format: TableFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Inputs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    responses: PathBuf,
    /// Country-to-region table; the built-in map when absent.
    #[arg(long)]
    region_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Feature set of the primary clustering.
    #[arg(long, default_value = "missionA")]
    features: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Feature set of the secondary clustering, cross-tabulated against the primary.
    #[arg(long, default_value = "diversityA")]
    diversity_features: String,
    #[arg(long, default_value_t = 4)]
    diversity_k: usize,
    #[arg(long, default_value = "upgma")]
    linkage: String,
    /// Only `chebyshev` is supported.
    #[arg(long, default_value = "chebyshev")]
    metric: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse inputs, drop firm attributions and pool responses by record.
    Ingest(Inputs),
    /// Profile workers, flag suspects and apply exclusions.
    Screen {
        #[command(flatten)]
        inputs: Inputs,
        /// Exclusion list to apply (`worker_id,provenance`).
        #[arg(long)]
        exclusions: Option<PathBuf>,
        /// Also apply this run's flags without a separate review.
        #[arg(long)]
        apply_flagged: bool,
        #[arg(long)]
        fast_cutoff: Option<f64>,
        #[arg(long)]
        volume: Option<usize>,
        #[arg(long)]
        fast_frac: Option<f64>,
        #[arg(long)]
        agreement: Option<f64>,
    },
    /// Consensus inference per record.
    Infer(Inputs),
    /// Link cross-collection identities, check consistency, apply approved repairs.
    Reconcile {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        inferences: PathBuf,
        /// Approved repairs file.
        #[arg(long)]
        approve: Option<PathBuf>,
    },
    /// Cross-tabulate reference labels against inferences.
    CompareReference {
        reference: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        inferences: PathBuf,
    },
    /// Proportions, simultaneous intervals and outlier tests.
    Stats {
        #[arg(long)]
        inferences: PathBuf,
        /// Records for unique-identity pooling of the overall row.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        /// `auto` (number of groups) or a count.
        #[arg(long, default_value = "auto")]
        family_size: String,
    },
    /// Two-stage sample size plan.
    Plan {
        #[arg(long)]
        moe: Option<f64>,
        #[arg(long)]
        confidence: Option<f64>,
        /// Stage-1 draw; with --iia gives the IIA rate (1 when both absent).
        #[arg(long, default_value_t = 1)]
        draw: u64,
        #[arg(long, default_value_t = 1)]
        iia: u64,
        /// Pilot proportion; 0.5 when absent.
        #[arg(long)]
        proportion: Option<f64>,
        #[arg(long, default_value = "all")]
        group: String,
    },
    /// Hierarchical clustering of collection profiles.
    Cluster {
        /// `published`, a stats.json from the stats stage, or a percent table.
        #[arg(long, default_value = "published")]
        profiles: String,
        #[command(flatten)]
        args: ClusterArgs,
    },
    /// Tables and figure data from a directory of stage outputs.
    Report {
        /// Directory holding infer/, stats/ and cluster/ outputs; --out-dir when absent.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Synthetic campaign with retained ground truth.
    Synth {
        /// JSON synthesis spec; the default world when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Every stage end to end.
    Run {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        exclusions: Option<PathBuf>,
        /// Approved repairs file.
        #[arg(long)]
        approve: Option<PathBuf>,
        /// Ground truth to score the inferences against.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// `stats`, `published` or a percent table.
        #[arg(long, default_value = "stats")]
        profiles: String,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[arg(long, default_value = "auto")]
        family_size: String,
        /// Keep flagged workers unless listed in --exclusions.
        #[arg(long)]
        keep_flagged: bool,
        /// Feed raw consensus rather than repaired inferences to stats.
        #[arg(long)]
        no_repairs: bool,
        /// Run timestamp; defaults to SOURCE_DATE_EPOCH, else none.
        #[arg(long)]
        timestamp: Option<String>,
    },
}

fn parse_format(s: &str) -> Result<TableFormat, String> {
    TableFormat::parse(s).ok_or_else(|| format!("unknown format `{s}` (csv or json)"))
}

type Res<T> = Result<T, PipelineError>;

fn at<T, E: Into<Box<dyn std::error::Error + Send + Sync>>>(stage: Stage) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::new(stage, e)
}

fn stage_dir(out: &Path, stage: Stage) -> Res<PathBuf> {
    let d = out.join(stage.token());
    std::fs::create_dir_all(&d).map_err(at::<(), _>(stage))?;
    Ok(d)
}

fn put_table(dir: &Path, stem: &str, table: &RawTable, format: TableFormat, stage: Stage) -> Res<()> {
    write_table(&dir.join(format!("{stem}.{}", format.extension())), table).map_err(at::<(), _>(stage))
}

fn put_json<T: serde::Serialize>(path: &Path, value: &T, stage: Stage) -> Res<()> {
    let text = serde_json::to_string_pretty(value).map_err(at::<(), _>(stage))? + "\n";
    std::fs::write(path, text).map_err(at::<(), _>(stage))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, stage: Stage) -> Res<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::new(stage, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(at::<(), _>(stage))
}

fn load_config(path: Option<&Path>) -> Res<CampaignConfig> {
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| PipelineError::new(Stage::Config, format!("cannot read {}: {e}", p.display())))?;
            CampaignConfig::from_kv_str(&text).map_err(at::<(), _>(Stage::Config))?
        }
        None => CampaignConfig::default(),
    };
    cfg.validate().map_err(at::<(), _>(Stage::Config))?;
    Ok(cfg)
}

fn region_map(path: Option<&Path>) -> Res<RegionMap> {
    match path {
        Some(p) => RegionMap::from_path(p).map_err(at::<(), _>(Stage::Ingest)),
        None => Ok(RegionMap::builtin()),
    }
}

fn load_pool(inputs: &Inputs) -> Res<(Vec<crowdcensus::EntityRecord>, ResponsePool)> {
    let records = parse_records(&inputs.records).map_err(at::<(), _>(Stage::Ingest))?;
    let responses = parse_responses(&inputs.responses).map_err(at::<(), _>(Stage::Ingest))?;
    let (kept, _) = prefilter_firms(records);
    let pool = pool_responses(responses, &kept).map_err(at::<(), _>(Stage::Ingest))?.sampled();
    Ok((kept, pool))
}

fn family_size(s: &str) -> Res<Option<usize>> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Some(n)),
        _ => Err(PipelineError::new(Stage::Config, format!("family size `{s}` is not `auto` or a positive count"))),
    }
}

fn cluster_options(a: &ClusterArgs) -> Res<(FeatureSet, FeatureSet, Linkage)> {
    if !a.metric.eq_ignore_ascii_case("chebyshev") {
        return Err(PipelineError::new(Stage::Config, format!("unsupported metric `{}`", a.metric)));
    }
    let f = a.features.parse::<FeatureSet>().map_err(at::<(), _>(Stage::Config))?;
    let d = a.diversity_features.parse::<FeatureSet>().map_err(at::<(), _>(Stage::Config))?;
    let l = Linkage::parse(&a.linkage)
        .ok_or_else(|| PipelineError::new(Stage::Config, format!("unknown linkage `{}`", a.linkage)))?;
    Ok((f, d, l))
}

fn profile_source(s: &str) -> ProfileSource {
    match s {
        "stats" => ProfileSource::Stats,
        "published" => ProfileSource::Published,
        path => ProfileSource::File(path.to_string()),
    }
}

fn epoch_timestamp() -> Res<Option<String>> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => {
            let secs: i64 = v
                .trim()
                .parse()
                .map_err(|_| PipelineError::new(Stage::Config, format!("SOURCE_DATE_EPOCH `{v}` is not an integer")))?;
            timestamp_from_epoch(secs)
                .map(Some)
                .ok_or_else(|| PipelineError::new(Stage::Config, "SOURCE_DATE_EPOCH out of range"))
        }
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> Res<()> {
    let mut config = load_config(cli.config.as_deref())?;
    let out = cli.out_dir.as_path();
    let fmt = cli.format;
    match cli.command {
        Command::Ingest(inputs) => {
            let records = parse_records(&inputs.records).map_err(at::<(), _>(Stage::Ingest))?;
            let responses = parse_responses(&inputs.responses).map_err(at::<(), _>(Stage::Ingest))?;
            region_map(inputs.region_map.as_deref())?;
            let (kept, firms) = prefilter_firms(records);
            let pool = pool_responses(responses, &kept).map_err(at::<(), _>(Stage::Ingest))?.sampled();
            let d = stage_dir(out, Stage::Ingest)?;
            put_table(&d, "records", &records_to_table(&kept), fmt, Stage::Ingest)?;
            put_table(&d, "firms_dropped", &records_to_table(&firms), fmt, Stage::Ingest)?;
            let summary = pool.summary();
            put_table(&d, "responses", &responses_to_table(&pool.into_responses()), fmt, Stage::Ingest)?;
            put_json(&d.join("pool_summary.json"), &summary, Stage::Ingest)?;
            println!(
                "{} records ({} firms dropped), {} responses from {} workers",
                summary.records,
                firms.len(),
                summary.responses,
                summary.workers
            );
        }
        Command::Screen {
            inputs,
            exclusions,
            apply_flagged,
            fast_cutoff,
            volume,
            fast_frac,
            agreement,
        } => {
            let overrides = [
                ("fast_cutoff_secs", fast_cutoff.map(|v| v.to_string())),
                ("volume_threshold", volume.map(|v| v.to_string())),
                ("fast_fraction_threshold", fast_frac.map(|v| v.to_string())),
                ("agreement_threshold", agreement.map(|v| v.to_string())),
            ];
            for (k, v) in overrides {
                if let Some(v) = v {
                    config.set(k, &v).map_err(at::<(), _>(Stage::Config))?;
                }
            }
            config.validate().map_err(at::<(), _>(Stage::Config))?;
            let map = region_map(inputs.region_map.as_deref())?;
            let (_, pool) = load_pool(&inputs)?;
            let mut profiles = profile_workers(&pool, config.fast_cutoff_secs);
            score_agreement(&mut profiles, &pool, &map, &config);
            let flagged = flag_suspects(&profiles, &FlagThresholds::from_config(&config));
            let mut lists = match &exclusions {
                Some(p) => read_exclusions(p).map_err(at::<(), _>(Stage::Screen))?,
                None => Vec::new(),
            };
            if apply_flagged {
                lists.push(flagged.clone());
            }
            let mean = mean_duration(&pool);
            let (kept, removal) = apply_exclusions(&pool, &lists);
            let d = stage_dir(out, Stage::Screen)?;
            put_table(&d, "flagged", &exclusions_to_table(std::slice::from_ref(&flagged)), fmt, Stage::Screen)?;
            put_table(&d, "exclusions", &exclusions_to_table(&lists), fmt, Stage::Screen)?;
            put_table(&d, "responses", &responses_to_table(&kept.into_responses()), fmt, Stage::Screen)?;
            println!(
                "{} workers, {} flagged, {} responses removed",
                profiles.len(),
                flagged.len(),
                removal.removed_total
            );
            let report = ScreeningReport {
                mean_duration_secs: mean,
                profiles,
                flagged,
                removal,
            };
            put_json(&d.join("screening.json"), &report, Stage::Screen)?;
        }
        Command::Infer(inputs) => {
            let map = region_map(inputs.region_map.as_deref())?;
            let (_, pool) = load_pool(&inputs)?;
            let c = run_consensus(&pool, &map, &config);
            let d = stage_dir(out, Stage::Infer)?;
            write_inferences(&d.join(format!("inferences.{}", fmt.extension())), &c.inferences)
                .map_err(at::<(), _>(Stage::Infer))?;
            put_json(&d.join("diagnostics.json"), &c.diagnostics, Stage::Infer)?;
            let iia = c.inferences.iter().filter(|i| i.is_iia()).count();
            println!("{} records, {} IIA, {} diagnostics", c.inferences.len(), iia, c.diagnostics.len());
        }
        Command::Reconcile {
            records,
            inferences,
            approve,
        } => {
            let records = parse_records(&records).map_err(at::<(), _>(Stage::Reconcile))?;
            let infs = read_inferences(&inferences).map_err(at::<(), _>(Stage::Reconcile))?;
            let groups = link_duplicates(&records, &infs);
            let consistency = check_consistency(&groups, &infs);
            let d = stage_dir(out, Stage::Reconcile)?;
            put_table(&d, "proposals", &repairs_to_table(&consistency.proposals()), fmt, Stage::Reconcile)?;
            let mut audit = Vec::new();
            if let Some(p) = approve {
                let repairs = read_repairs(&p).map_err(at::<(), _>(Stage::Reconcile))?;
                let (repaired, a) = apply_repairs(&infs, &repairs).map_err(at::<(), _>(Stage::Reconcile))?;
                write_inferences(&d.join(format!("inferences.{}", fmt.extension())), &repaired)
                    .map_err(at::<(), _>(Stage::Reconcile))?;
                put_table(&d, "audit", &audit_to_table(&a), fmt, Stage::Reconcile)?;
                audit = a;
            }
            println!(
                "{} identity groups, {} repair proposals, {} repairs applied",
                groups.len(),
                consistency.proposals().len(),
                audit.len()
            );
            let report = ReconcileReport {
                groups,
                consistency,
                audit,
            };
            put_json(&d.join("reconcile.json"), &report, Stage::Reconcile)?;
        }
        Command::CompareReference {
            reference,
            records,
            inferences,
        } => {
            let reference = read_reference(&reference).map_err(at::<(), _>(Stage::Reconcile))?;
            let records = parse_records(&records).map_err(at::<(), _>(Stage::Reconcile))?;
            let infs = read_inferences(&inferences).map_err(at::<(), _>(Stage::Reconcile))?;
            let cmp = compare_reference(&records, &infs, &reference);
            let d = stage_dir(out, Stage::Reconcile)?;
            put_json(&d.join("reference_comparison.json"), &cmp, Stage::Reconcile)?;
            for (attr, c) in &cmp.attributes {
                let rate = c.agreement_rate().map(|r| format!("{:.1}%", 100.0 * r)).unwrap_or("n/a".into());
                println!("{attr}: {}/{} agree ({rate})", c.matched, c.compared);
            }
        }
        Command::Stats {
            inferences,
            records,
            alpha,
            family_size: fs,
        } => {
            if let Some(a) = alpha {
                config.set("alpha", &a.to_string()).map_err(at::<(), _>(Stage::Config))?;
                config.validate().map_err(at::<(), _>(Stage::Config))?;
            }
            let family = family_size(&fs)?;
            let infs = read_inferences(&inferences).map_err(at::<(), _>(Stage::Stats))?;
            let keys = match records {
                Some(p) => {
                    let records = parse_records(&p).map_err(at::<(), _>(Stage::Stats))?;
                    group_keys(&link_duplicates(&records, &infs))
                }
                None => Vec::new(),
            };
            let demographics = build_demographic_table(&infs, &keys, config.alpha, family, config.test_variance)
                .map_err(at::<(), _>(Stage::Stats))?;
            let stats = StatsOutput {
                mission: build_mission_table(&infs),
                demographics,
            };
            let d = stage_dir(out, Stage::Stats)?;
            put_table(&d, "stats", &stats.demographics.to_table(), fmt, Stage::Stats)?;
            put_json(&d.join("stats.json"), &stats, Stage::Stats)?;
            print!("{}", render_aligned(&stats.demographics.to_table()));
        }
        Command::Plan {
            moe,
            confidence,
            draw,
            iia,
            proportion,
            group,
        } => {
            let pilot = PilotSummary::from_counts(group, draw, iia, proportion).map_err(at::<(), _>(Stage::Stats))?;
            let plan = plan_sample(
                &pilot,
                moe.unwrap_or(config.sample_moe),
                confidence.unwrap_or(config.sample_confidence),
            )
            .map_err(at::<(), _>(Stage::Stats))?;
            std::fs::create_dir_all(out).map_err(at::<(), _>(Stage::Stats))?;
            put_json(&out.join("plan.json"), &plan, Stage::Stats)?;
            println!(
                "required IIA records: {}; raw records: {} (stage 2 draw {})",
                plan.required_iia, plan.required_raw, plan.stage2_draw
            );
        }
        Command::Cluster { profiles, args } => {
            let (f, dfs, linkage) = cluster_options(&args)?;
            let table = if profiles == "published" {
                ProfileTable::published()
            } else if profiles.ends_with(".json") {
                let s: StatsOutput = read_json(Path::new(&profiles), Stage::Cluster)?;
                ProfileTable::from_stats(&s.demographics, &s.mission)
            } else {
                ProfileTable::from_path(Path::new(&profiles)).map_err(at::<(), _>(Stage::Cluster))?
            };
            let c = cluster_profiles(&table, f, args.k, dfs, args.diversity_k, linkage)
                .map_err(at::<(), _>(Stage::Cluster))?;
            let d = stage_dir(out, Stage::Cluster)?;
            for (name, tree, part) in [
                ("mission", &c.mission, &c.mission_partition),
                ("diversity", &c.diversity, &c.diversity_partition),
            ] {
                put_json(&d.join(format!("{name}_dendrogram.json")), &tree.to_nested_json(), Stage::Cluster)?;
                std::fs::write(d.join(format!("{name}.newick")), tree.to_newick() + "\n")
                    .map_err(at::<(), _>(Stage::Cluster))?;
                put_table(&d, &format!("{name}_partition"), &part.to_table(), fmt, Stage::Cluster)?;
            }
            put_table(&d, "cross_tab", &c.cross_tab.to_table(), fmt, Stage::Cluster)?;
            put_json(&d.join("clusters.json"), &c, Stage::Cluster)?;
            put_json(&d.join("profiles.json"), &table, Stage::Cluster)?;
            for (i, members) in c.mission_partition.clusters().iter().enumerate() {
                println!("cluster {}: {}", i + 1, members.join(" "));
            }
        }
        Command::Report { from, truth } => {
            let from = from.unwrap_or_else(|| out.to_path_buf());
            let mut run = PipelineRun::new(RunInputs::default(), config, RunOptions {
                format: fmt,
                ..RunOptions::default()
            });
            run.inputs.truth = truth.map(|p| p.display().to_string());
            let infs = ["reconcile", "infer"]
                .iter()
                .flat_map(|s| ["csv", "json"].map(|e| from.join(s).join(format!("inferences.{e}"))))
                .find(|p| p.exists())
                .ok_or_else(|| PipelineError::new(Stage::Report, "no inferences found under infer/ or reconcile/"))?;
            run.inferences = Some(read_inferences(&infs).map_err(at::<(), _>(Stage::Report))?);
            let stats = from.join("stats/stats.json");
            if stats.exists() {
                run.stats = Some(read_json(&stats, Stage::Report)?);
            }
            let clusters = from.join("cluster/clusters.json");
            if clusters.exists() {
                run.clusters = Some(read_json(&clusters, Stage::Report)?);
                run.profiles = Some(read_json(&from.join("cluster/profiles.json"), Stage::Report)?);
            }
            for f in write_report(&run, out)? {
                println!("{}", out.join(f).display());
            }
        }
        Command::Synth { spec } => {
            let spec = match spec {
                Some(p) => SynthSpec::from_path(&p).map_err(at::<(), _>(Stage::Config))?,
                None => SynthSpec::default(),
            };
            let seed = cli.seed.unwrap_or(42);
            let data = generate(&spec, seed).map_err(at::<(), _>(Stage::Ingest))?;
            data.write(out).map_err(at::<(), _>(Stage::Ingest))?;
            println!(
                "{} records, {} responses, {} workers (seed {seed})",
                data.records.len(),
                data.responses.len(),
                data.workers.len()
            );
        }
        Command::Run {
            inputs,
            exclusions,
            approve,
            truth,
            profiles,
            cluster,
            family_size: fs,
            keep_flagged,
            no_repairs,
            timestamp,
        } => {
            let (mf, df, linkage) = cluster_options(&cluster)?;
            let s = |p: Option<PathBuf>| p.map(|p| p.display().to_string());
            let run_inputs = RunInputs {
                records: inputs.records.display().to_string(),
                responses: inputs.responses.display().to_string(),
                exclusions: s(exclusions),
                repairs: s(approve),
                region_map: s(inputs.region_map),
                truth: s(truth),
            };
            let options = RunOptions {
                mission_features: mf,
                mission_k: cluster.k,
                diversity_features: df,
                diversity_k: cluster.diversity_k,
                linkage,
                family_size: family_size(&fs)?,
                apply_flagged: !keep_flagged,
                use_repairs: !no_repairs,
                profiles: profile_source(&profiles),
                format: fmt,
                seed: cli.seed,
            };
            let timestamp = match timestamp {
                Some(t) => Some(t),
                None => epoch_timestamp()?,
            };
            let run = run_pipeline(run_inputs, config, options, out, timestamp)?;
            if let Some(r) = &run.screening {
                println!("excluded {} workers ({} responses)", r.removal.excluded_workers.len(), r.removal.removed_total);
            }
            let t1 = crowdcensus::report::emit_table1(&run).map_err(at::<(), _>(Stage::Report))?;
            print!("{}", render_aligned(&t1.to_table()));
            println!("outputs in {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

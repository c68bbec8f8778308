use std::collections::BTreeMap;

use super::*;
use crate::cluster::{cluster_profiles, published_table};
use crate::consensus::{EthnicityOutcome, Gender, IiaVerdict, Region};
use crate::ingest::{Ethnicity, RecordKey};
use crate::stats::{build_demographic_table, build_mission_table, TestVariance};
use crate::synth::{generate, SynthSpec, WorkerSpec, WorldSpec};

fn inf(c: &str, e: &str, iia: bool) -> ConsensusInference {
    let v = if iia { IiaVerdict::Iia } else { IiaVerdict::NonIia };
    ConsensusInference::empty(RecordKey::new(c, e), v)
}

/// Three records: two IIA in A (one fully inferred, one with gender only),
/// one non-IIA in B.
fn three_records() -> Vec<ConsensusInference> {
    let mut a1 = inf("A", "1", true);
    a1.gender = Some(Gender::Woman);
    a1.ethnicity = Some(EthnicityOutcome::Single(Ethnicity::White));
    a1.region = Some(Region::Europe);
    a1.birth_decade = Some(1900);
    let mut a2 = inf("A", "2", true);
    a2.gender = Some(Gender::Man);
    a2.ethnicity = Some(EthnicityOutcome::MultipleExcluded);
    vec![a1, a2, inf("B", "3", false)]
}

fn run_with(infs: Vec<ConsensusInference>) -> PipelineRun {
    let mut run = PipelineRun::new(RunInputs::default(), CampaignConfig::default(), RunOptions::default());
    run.inferences = Some(infs);
    run
}

#[test]
fn table1_columns_and_hand_percentages() {
    let t = emit_table1(&run_with(three_records())).unwrap();
    let raw = t.to_table();
    assert_eq!(raw.header.len(), 12);
    assert_eq!(raw.header, TABLE1_COLUMNS.map(String::from));
    let cells = |g: &str| raw.rows.iter().find(|r| r.cells[0] == g).unwrap().cells.clone();
    // A: 2 sampled, 2 IIA (100%), CGI 2/2, CEI 1/2, CRI 1/2, CBI 1/2
    assert_eq!(
        cells("A"),
        ["A", "2", "2", "100.0", "2", "100.0", "1", "50.0", "1", "50.0", "1", "50.0"].map(String::from)
    );
    // B: 1 sampled, 0 IIA, C*I percentages undefined
    assert_eq!(cells("B"), ["B", "1", "0", "0.0", "0", "", "0", "", "0", "", "0", ""].map(String::from));
    // overall: 3 sampled, 2 IIA = 66.7%
    assert_eq!(
        cells("Overall"),
        ["Overall", "3", "2", "66.7", "2", "100.0", "1", "50.0", "1", "50.0", "1", "50.0"].map(String::from)
    );
}

#[test]
fn table1_overall_is_column_sum() {
    let out = generate(
        &SynthSpec {
            world: WorldSpec::uniform(4, 40),
            workers: WorkerSpec::default(),
        },
        9,
    )
    .unwrap();
    let pool = crate::ingest::pool_responses(out.responses, &out.records).unwrap();
    let infs = crate::consensus::run_consensus(&pool, &crate::RegionMap::builtin(), &CampaignConfig::default()).inferences;
    let t = emit_table1(&run_with(infs)).unwrap();
    let (groups, overall) = t.rows.split_at(t.rows.len() - 1);
    let o = &overall[0];
    assert_eq!(groups.len(), 4);
    assert_eq!(o.records, groups.iter().map(|g| g.records).sum::<usize>());
    assert_eq!(o.iia, groups.iter().map(|g| g.iia).sum::<usize>());
    assert_eq!(o.cgi, groups.iter().map(|g| g.cgi).sum::<usize>());
    assert_eq!(o.cei, groups.iter().map(|g| g.cei).sum::<usize>());
    assert_eq!(o.cri, groups.iter().map(|g| g.cri).sum::<usize>());
    assert_eq!(o.cbi, groups.iter().map(|g| g.cbi).sum::<usize>());
    // the overall IIA share is the record-weighted mean of the group shares
    let weighted: f64 = groups.iter().map(|g| g.percentages()[0].unwrap() * g.records as f64).sum::<f64>()
        / o.records as f64;
    assert!((weighted - o.percentages()[0].unwrap()).abs() < 1e-9);
}

#[test]
fn stage_missing_errors() {
    let run = PipelineRun::new(RunInputs::default(), CampaignConfig::default(), RunOptions::default());
    assert!(matches!(emit_table1(&run), Err(ReportError::StageMissing("infer"))));
    assert!(matches!(emit_table2(&run), Err(ReportError::StageMissing("stats"))));
    assert!(matches!(emit_fig2_data(&run), Err(ReportError::StageMissing("cluster"))));
}

fn stats_run() -> PipelineRun {
    let mut infs = Vec::new();
    for (g, women, total) in [("A", 30, 40), ("B", 4, 40), ("C", 5, 40)] {
        for i in 0..total {
            let mut x = inf(g, &format!("{i}"), true);
            x.gender = Some(if i < women { Gender::Woman } else { Gender::Man });
            x.ethnicity = Some(EthnicityOutcome::Single(Ethnicity::White));
            infs.push(x);
        }
    }
    let mut run = run_with(infs);
    let infs = run.final_inferences().unwrap();
    run.stats = Some(StatsOutput {
        demographics: build_demographic_table(infs, &[], 0.05, None, TestVariance::Pooled).unwrap(),
        mission: build_mission_table(infs),
    });
    run
}

#[test]
fn table2_flags_come_from_outlier_results() {
    let run = stats_run();
    let t = emit_table2(&run).unwrap();
    let d = &run.stats.as_ref().unwrap().demographics;
    for o in &d.outliers {
        let row = t.rows.iter().find(|r| r.group == o.group && r.category == o.category).unwrap();
        assert_eq!(row.flag, o.direction.token());
    }
    let women = |g: &str| t.rows.iter().find(|r| r.group == g && r.category == "women").unwrap();
    assert_eq!(women("A").flag, "higher");
    assert_eq!(women("A").pct, Some(75.0));
    assert_eq!(women("Overall").flag, "none");
    assert_eq!(women("Overall").k, 39);
    assert_eq!(t.rows.len(), d.estimates.len() + d.overall.len());
}

#[test]
fn table2_round_trips_through_csv_reader() {
    let t = emit_table2(&stats_run()).unwrap();
    let csv = t.to_table().to_csv_string();
    let back = RawTable::from_csv_reader(csv.as_bytes()).unwrap();
    assert_eq!(Table2::from_table(&back).unwrap(), t);
    let wide = render_aligned(&t.to_wide_table());
    assert!(wide.lines().any(|l| l.starts_with("A ") && l.contains("75.0 [")));
}

fn fixture_fig() -> Fig2Data {
    let profiles = ProfileTable::published();
    let c = cluster_profiles(&profiles, FeatureSet::MissionA, 5, FeatureSet::DiversityA, 4, Linkage::Upgma).unwrap();
    fig2_from(&profiles, &c.mission_partition, &c.diversity_partition, &c.cross_tab)
}

#[test]
fn fig2_panels_on_fixture() {
    let f = fixture_fig();
    let wmaa = f.panel_a.points.iter().find(|p| p.group == "WMAA").unwrap();
    assert_eq!(wmaa.x, Some(0.847));
    assert_eq!(wmaa.y, Some(1932.0));
    let scaled: BTreeMap<_, _> = f.panel_a_scaled_year.iter().cloned().collect();
    assert!((scaled["WMAA"].unwrap() - 130.0 / 147.0).abs() < 1e-12);
    assert_eq!(f.panel_b.x_range, (0.0, 1.0));
    assert_eq!(f.panel_b.y_range, (0.0, 1.0));
    for p in &f.panel_b.points {
        assert!((0.0..=1.0).contains(&p.x.unwrap()) && (0.0..=1.0).contains(&p.y.unwrap()));
    }
    assert_eq!(f.panel_c.total(), 18);
    assert_eq!(f.panel_a.points.len(), 18);
    let svg = f.to_svg();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<circle").count(), 36);
}

#[test]
fn fig2_from_percent_file_matches_fixture() {
    let p = ProfileTable::from_percent_table(&published_table()).unwrap();
    assert_eq!(p, ProfileTable::published());
}

#[test]
fn cluster_letters() {
    assert_eq!(cluster_letter(1), "A");
    assert_eq!(cluster_letter(4), "D");
    assert_eq!(cluster_letter(27), "AA");
}

fn synth_inputs(dir: &Path) -> RunInputs {
    let spec = SynthSpec {
        world: WorldSpec::uniform(6, 60),
        workers: WorkerSpec::default(),
    };
    generate(&spec, 42).unwrap().write(dir).unwrap();
    let s = |f: &str| dir.join(f).display().to_string();
    RunInputs {
        records: s("records.csv"),
        responses: s("responses.csv"),
        truth: Some(s("truth.csv")),
        ..RunInputs::default()
    }
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn full_run_emits_artifacts_and_is_deterministic() {
    let data = tempfile::tempdir().unwrap();
    let inputs = synth_inputs(data.path());
    let (o1, o2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = run_pipeline(inputs.clone(), CampaignConfig::default(), RunOptions::default(), o1.path(), None).unwrap();
    run_pipeline(inputs, CampaignConfig::default(), RunOptions::default(), o2.path(), None).unwrap();
    let (a, b) = (files(o1.path()), files(o2.path()));
    assert_eq!(a, b);
    for f in [
        "run.json",
        "config.txt",
        "ingest/records.csv",
        "screen/exclusions.csv",
        "infer/inferences.csv",
        "reconcile/proposals.csv",
        "stats/stats.csv",
        "cluster/mission_partition.csv",
        "cluster/cross_tab.csv",
        "report/table1.csv",
        "report/table1.txt",
        "report/table2.csv",
        "report/fig2.json",
        "report/fig2.svg",
        "report/truth_score.json",
    ] {
        assert!(a.contains_key(f), "{f}");
    }
    let manifest: RunManifest = serde_json::from_slice(&a["run.json"]).unwrap();
    assert_eq!(CampaignConfig::from_kv_str(&manifest.config).unwrap(), CampaignConfig::default());
    assert_eq!(manifest.artifacts.len(), a.len() - 1);
    assert_eq!(run.clusters.unwrap().cross_tab.total(), 6);
    let t1 = crate::ingest::read_table(&o1.path().join("report/table1.csv")).unwrap();
    assert_eq!(t1.rows.len(), 7);
}

#[test]
fn json_format_writes_json_tables() {
    let data = tempfile::tempdir().unwrap();
    let inputs = synth_inputs(data.path());
    let out = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        format: TableFormat::Json,
        ..RunOptions::default()
    };
    run_pipeline(inputs, CampaignConfig::default(), opts, out.path(), None).unwrap();
    let t = crate::ingest::read_table(&out.path().join("report/table2.json")).unwrap();
    assert!(Table2::from_table(&t).is_ok());
}

#[test]
fn failing_stage_sets_exit_code() {
    let data = tempfile::tempdir().unwrap();
    let mut inputs = synth_inputs(data.path());
    let out = tempfile::tempdir().unwrap();
    inputs.responses = data.path().join("missing.csv").display().to_string();
    let e = run_pipeline(inputs.clone(), CampaignConfig::default(), RunOptions::default(), out.path(), None).unwrap_err();
    assert_eq!(e.stage, Stage::Ingest);
    assert_eq!(e.exit_code(), 10);

    let mut inputs = synth_inputs(data.path());
    let opts = RunOptions {
        mission_k: 7,
        ..RunOptions::default()
    };
    let e = run_pipeline(inputs.clone(), CampaignConfig::default(), opts, out.path(), None).unwrap_err();
    assert_eq!(e.stage, Stage::Cluster);

    inputs.repairs = Some(data.path().join("nope.csv").display().to_string());
    let e = run_pipeline(inputs, CampaignConfig::default(), RunOptions::default(), out.path(), None).unwrap_err();
    assert_eq!(e.exit_code(), Stage::Reconcile.exit_code());

    let codes: std::collections::BTreeSet<i32> = Stage::ALL.iter().map(|s| s.exit_code()).collect();
    assert_eq!(codes.len(), Stage::ALL.len());
    assert!(!codes.contains(&0));
}

#[test]
fn epoch_timestamps() {
    assert_eq!(timestamp_from_epoch(0).as_deref(), Some("1970-01-01T00:00:00Z"));
    assert_eq!(timestamp_from_epoch(1_700_000_000).as_deref(), Some("2023-11-14T22:13:20Z"));
}

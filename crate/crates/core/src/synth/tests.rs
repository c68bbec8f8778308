use super::*;
use crate::consensus::{run_consensus, Attribute, CampaignConfig, CountryLookup, DecadeRounding, IiaVerdict, RegionMap};
use crate::ingest::pool_responses;

fn small(records: usize, workers: WorkerSpec) -> SynthSpec {
    SynthSpec {
        world: WorldSpec::uniform(3, records),
        workers,
    }
}

fn infer(out: &SynthOutput) -> Vec<crate::ConsensusInference> {
    let pool = pool_responses(out.responses.clone(), &out.records).unwrap();
    run_consensus(&pool, &RegionMap::builtin(), &CampaignConfig::default()).inferences
}

#[test]
fn same_seed_same_output_and_seeds_differ() {
    let spec = SynthSpec::default();
    let a = generate(&spec, 7).unwrap();
    assert_eq!(a, generate(&spec, 7).unwrap());
    assert_ne!(a.responses, generate(&spec, 8).unwrap().responses);
    assert_eq!(a.records.len(), 1200);
    assert_eq!(a.responses.len(), 6000);
    let pool = pool_responses(a.responses.clone(), &a.records).unwrap();
    assert_eq!(pool.summary().duplicate_deployments, 0);
}

#[test]
fn files_are_byte_identical() {
    let spec = small(30, WorkerSpec::default());
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate(&spec, 3).unwrap().write(d1.path()).unwrap();
    generate(&spec, 3).unwrap().write(d2.path()).unwrap();
    for f in ["records.csv", "responses.csv", "truth.csv", "workers.csv"] {
        let a = std::fs::read(d1.path().join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, std::fs::read(d2.path().join(f)).unwrap(), "{f}");
    }
    let back = read_truth(&d1.path().join("truth.csv")).unwrap();
    assert_eq!(back, generate(&spec, 3).unwrap().truth);
}

#[test]
fn invalid_specs_rejected() {
    let mut s = SynthSpec::default();
    s.world.collections[0].ethnicity.insert(Ethnicity::White, 0.9);
    assert!(matches!(generate(&s, 1), Err(SynthError::InvalidSpec(_))));
    let mut s = SynthSpec::default();
    s.world.iia_rate = 1.2;
    assert!(matches!(generate(&s, 1), Err(SynthError::InvalidSpec(_))));
    let mut s = SynthSpec::default();
    s.workers.responses_per_record = 0;
    assert!(matches!(generate(&s, 1), Err(SynthError::InvalidSpec(_))));
    let mut s = SynthSpec::default();
    s.workers.groups[0].slot_share = 0.5;
    assert!(matches!(generate(&s, 1), Err(SynthError::InvalidSpec(_))));
    let mut s = SynthSpec::default();
    s.workers.groups[0].archetype = Archetype::Honest {
        accuracy: -0.1,
        calibration: 0.5,
    };
    assert!(matches!(generate(&s, 1), Err(SynthError::InvalidSpec(_))));
}

#[test]
fn noiseless_honest_campaign_is_recovered_exactly() {
    let spec = small(150, WorkerSpec::honest(20, 1.0, 5));
    let out = generate(&spec, 11).unwrap();
    let score = score_against_truth(&infer(&out), &out.truth, DecadeRounding::HalfDown).unwrap();
    assert_eq!(score.iia.correct, score.records);
    for attr in Attribute::ALL {
        let s = &score.attributes[&attr];
        assert!(s.eligible > 0);
        assert_eq!(s.correct, s.eligible, "{attr}");
        assert_eq!(s.spurious, 0);
    }
    assert_eq!(score.pooled_accuracy(), Some(1.0));
}

#[test]
fn durations_follow_archetype() {
    let spec = SynthSpec {
        world: WorldSpec::uniform(4, 1000),
        workers: WorkerSpec::default().with_group(Archetype::Spammer, 3, 0.1),
    };
    let out = generate(&spec, 5).unwrap();
    let spammers: BTreeSet<&str> = out
        .workers
        .iter()
        .filter(|w| w.archetype == "spammer")
        .map(|w| w.worker_id.as_str())
        .collect();
    assert_eq!(spammers.len(), 3);
    let (mut honest_sum, mut honest_n, mut spam_n) = (0.0, 0usize, 0usize);
    for r in &out.responses {
        if spammers.contains(r.worker_id.as_str()) {
            assert!(r.duration_secs <= 30.0);
            spam_n += 1;
        } else {
            assert!(r.duration_secs >= 30.0);
            honest_sum += r.duration_secs;
            honest_n += 1;
        }
    }
    let share = spam_n as f64 / out.responses.len() as f64;
    assert!((share - 0.1).abs() < 0.01, "{share}");
    // 30 s floor plus exponential with mean 76: mean 106, sd 76
    let mean = honest_sum / honest_n as f64;
    assert!((mean - 106.0).abs() < 4.0 * 76.0 / (honest_n as f64).sqrt() + 0.05, "{mean}");
}

#[test]
fn paired_runs_share_first_group_answers() {
    let clean = small(100, WorkerSpec::honest(30, 0.9, 5));
    let mut dirty = clean.clone();
    dirty.workers = dirty.workers.with_group(Archetype::Spammer, 2, 0.1);
    let a = generate(&clean, 21).unwrap();
    let b = generate(&dirty, 21).unwrap();
    assert_eq!(a.truth, b.truth);
    let spam: BTreeSet<&str> = b.workers.iter().filter(|w| w.archetype == "spammer").map(|w| w.worker_id.as_str()).collect();
    let mut kept = 0;
    for (x, y) in a.responses.iter().zip(&b.responses) {
        assert_eq!(x.key, y.key);
        if !spam.contains(y.worker_id.as_str()) {
            assert_eq!(x, y);
            kept += 1;
        }
    }
    assert!(kept > 1300 && kept < 1500, "{kept}");
}

#[test]
fn generated_countries_resolve() {
    let map = RegionMap::builtin();
    for r in Region::ALL {
        for c in region_countries(r) {
            assert_eq!(map.lookup(c), CountryLookup::Region(r), "{c}");
        }
    }
}

#[test]
fn duplicates_reuse_identity_and_truth() {
    let mut spec = small(40, WorkerSpec::default());
    spec.world.duplicate_rate = 1.0;
    spec.world.iia_rate = 1.0;
    let out = generate(&spec, 2).unwrap();
    let first: BTreeMap<&str, Option<TrueAttributes>> = out
        .records
        .iter()
        .zip(&out.truth)
        .filter(|(r, _)| r.key.collection_id == "C01")
        .map(|(r, t)| (r.display_name.as_str(), t.attributes))
        .collect();
    for (r, t) in out.records.iter().zip(&out.truth).filter(|(r, _)| r.key.collection_id != "C01") {
        assert_eq!(first.get(r.display_name.as_str()), Some(&t.attributes));
    }
    for c in ["C02", "C03"] {
        let names: BTreeSet<&str> = out.records.iter().filter(|r| r.key.collection_id == c).map(|r| r.display_name.as_str()).collect();
        assert_eq!(names.len(), 40);
    }
}

#[test]
fn no_confident_inferences_means_zero_coverage() {
    let out = generate(&small(5, WorkerSpec::default()), 1).unwrap();
    let infs: Vec<_> = out
        .truth
        .iter()
        .map(|t| crate::ConsensusInference::empty(t.key.clone(), IiaVerdict::Undetermined))
        .collect();
    let s = score_against_truth(&infs, &out.truth, DecadeRounding::HalfDown).unwrap();
    assert_eq!(s.iia.inferred, 0);
    assert_eq!(s.iia.coverage(), 0.0);
    assert_eq!(s.iia.accuracy(), None);
    assert_eq!(s.pooled_accuracy(), None);
    assert_eq!(s.pooled_coverage(), 0.0);
}

#[test]
fn key_mismatch_detected() {
    let out = generate(&small(5, WorkerSpec::default()), 1).unwrap();
    let mut infs = infer(&out);
    infs.pop();
    assert!(matches!(
        score_against_truth(&infs, &out.truth, DecadeRounding::HalfDown),
        Err(SynthError::KeyMismatch { missing: 1, extra: 0, .. })
    ));
}

#[test]
fn spec_json_round_trip_with_defaults() {
    let spec = SynthSpec::default();
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(serde_json::from_str::<SynthSpec>(&text).unwrap(), spec);
    let v: serde_json::Value = serde_json::json!({ "world": serde_json::to_value(&spec.world).unwrap() });
    let partial: SynthSpec = serde_json::from_value(v).unwrap();
    assert_eq!(partial.workers, WorkerSpec::default());
}


//! Synthetic campaigns with retained ground truth.
//!
//! Every record draws from its own ChaCha stream, and so does every response
//! slot, so output is identical for a fixed seed regardless of thread count.
//! Two worker specs that share their first group produce identical answers in
//! the slots that group keeps, which makes paired clean/contaminated runs
//! comparable record by record.

mod truth;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{Gender, Region};
use crate::ingest::{
    write_records, write_responses, write_table, AnnotationResponse, Answer, Confidence, EntityRecord, Ethnicity,
    EthnicityAnswer, EthnicityChoice, GenderAnswer, IiaAnswer, IngestError, RawTable, RecordKey,
};

pub use truth::*;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("inference and truth keys differ: {missing} truth records without inference, {extra} inferences without truth (first: {first})")]
    KeyMismatch {
        missing: usize,
        extra: usize,
        first: RecordKey,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("cannot read spec {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad spec JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec(msg.into())
}

/// True demographic mix of one collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionSpec {
    pub id: String,
    pub records: usize,
    /// Share of individual artists who are women; the rest are men.
    pub women: f64,
    pub ethnicity: BTreeMap<Ethnicity, f64>,
    pub region: BTreeMap<Region, f64>,
    pub birth_mean: f64,
    pub birth_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub collections: Vec<CollectionSpec>,
    /// Probability that a record is an individual, identifiable artist.
    pub iia_rate: f64,
    /// Probability that a record outside the first collection reuses an
    /// artist already drawn for an earlier collection.
    pub duplicate_rate: f64,
}

impl WorldSpec {
    /// `n` collections sharing one demographic mix.
    pub fn uniform(n: usize, records_per_collection: usize) -> Self {
        let ethnicity = BTreeMap::from([
            (Ethnicity::Asian, 0.08),
            (Ethnicity::Black, 0.05),
            (Ethnicity::Hispanic, 0.06),
            (Ethnicity::White, 0.75),
            (Ethnicity::Other, 0.06),
        ]);
        let region = BTreeMap::from([
            (Region::Africa, 0.02),
            (Region::AsiaPacific, 0.07),
            (Region::Europe, 0.35),
            (Region::LatinAmericaCaribbean, 0.05),
            (Region::NorthAmerica, 0.50),
            (Region::WestAsia, 0.01),
        ]);
        WorldSpec {
            collections: (1..=n)
                .map(|i| CollectionSpec {
                    id: format!("C{i:02}"),
                    records: records_per_collection,
                    women: 0.15,
                    ethnicity: ethnicity.clone(),
                    region: region.clone(),
                    birth_mean: 1900.0,
                    birth_sd: 60.0,
                })
                .collect(),
            iia_rate: 0.88,
            duplicate_rate: 0.05,
        }
    }

    pub fn record_count(&self) -> usize {
        self.collections.iter().map(|c| c.records).sum()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.collections.is_empty() {
            return Err(invalid("no collections"));
        }
        let mut ids = BTreeSet::new();
        for c in &self.collections {
            if c.id.trim().is_empty() || !ids.insert(c.id.as_str()) {
                return Err(invalid(format!("collection id `{}` empty or repeated", c.id)));
            }
            unit(&format!("{}.women", c.id), c.women)?;
            distribution(&format!("{}.ethnicity", c.id), c.ethnicity.values())?;
            distribution(&format!("{}.region", c.id), c.region.values())?;
            if !c.birth_mean.is_finite() || !(c.birth_sd.is_finite() && c.birth_sd >= 0.0) {
                return Err(invalid(format!("{}: birth mean/sd must be finite, sd ≥ 0", c.id)));
            }
        }
        unit("iia_rate", self.iia_rate)?;
        unit("duplicate_rate", self.duplicate_rate)
    }
}

fn unit(name: &str, v: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} is outside [0, 1]")))
    }
}

fn distribution<'a>(name: &str, probs: impl Iterator<Item = &'a f64>) -> Result<(), SynthError> {
    let mut total = 0.0;
    for p in probs {
        unit(name, *p)?;
        total += p;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Archetype {
    /// Correct with probability `accuracy`. A correct answer is graded High
    /// with probability `calibration`, else Medium; a wrong one Low or Medium.
    Honest { accuracy: f64, calibration: f64 },
    /// Uniformly random answers and confidences, durations at or under the
    /// fast cutoff.
    Spammer,
    /// Honest-looking timing, degraded accuracy, mostly Low confidence.
    Sloppy { accuracy: f64 },
}

impl Archetype {
    pub fn token(&self) -> &'static str {
        match self {
            Archetype::Honest { .. } => "honest",
            Archetype::Spammer => "spammer",
            Archetype::Sloppy { .. } => "sloppy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerGroup {
    pub archetype: Archetype,
    pub workers: usize,
    /// Share of response slots filled by this group.
    pub slot_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkerSpec {
    pub groups: Vec<WorkerGroup>,
    pub responses_per_record: usize,
    /// Standard deviation of birth-year answers around the truth.
    pub birth_sigma: f64,
    /// Probability of an extra ±1 on a birth-year answer.
    pub typo_rate: f64,
    pub duration_floor_secs: f64,
    pub duration_mean_extra_secs: f64,
    pub spammer_min_secs: f64,
    pub spammer_max_secs: f64,
}

impl Default for WorkerSpec {
    fn default() -> Self {
        WorkerSpec {
            groups: vec![WorkerGroup {
                archetype: Archetype::Honest {
                    accuracy: 0.95,
                    calibration: 0.95,
                },
                workers: 40,
                slot_share: 1.0,
            }],
            responses_per_record: 5,
            birth_sigma: 2.0,
            typo_rate: 0.05,
            duration_floor_secs: 30.0,
            duration_mean_extra_secs: 76.0,
            spammer_min_secs: 3.0,
            spammer_max_secs: 30.0,
        }
    }
}

impl WorkerSpec {
    /// One honest group whose calibration equals its accuracy; at accuracy 1
    /// every answer is correct, graded High, and birth years are exact.
    pub fn honest(workers: usize, accuracy: f64, responses_per_record: usize) -> Self {
        let noiseless = accuracy >= 1.0;
        WorkerSpec {
            groups: vec![WorkerGroup {
                archetype: Archetype::Honest {
                    accuracy,
                    calibration: accuracy,
                },
                workers,
                slot_share: 1.0,
            }],
            responses_per_record,
            birth_sigma: if noiseless { 0.0 } else { 2.0 },
            typo_rate: if noiseless { 0.0 } else { 0.05 },
            ..WorkerSpec::default()
        }
    }

    /// Adds a group taking `share` of all slots, shrinking the existing
    /// groups proportionally.
    pub fn with_group(mut self, archetype: Archetype, workers: usize, share: f64) -> Self {
        for g in &mut self.groups {
            g.slot_share *= 1.0 - share;
        }
        self.groups.push(WorkerGroup {
            archetype,
            workers,
            slot_share: share,
        });
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.groups.is_empty() {
            return Err(invalid("no worker groups"));
        }
        if self.groups.len() > STREAM_SUB_LIMIT || self.responses_per_record > STREAM_SUB_LIMIT {
            return Err(invalid("too many groups or responses per record"));
        }
        if self.responses_per_record == 0 {
            return Err(invalid("responses_per_record must be at least 1"));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.workers == 0 {
                return Err(invalid(format!("group {i} has no workers")));
            }
            match g.archetype {
                Archetype::Honest { accuracy, calibration } => {
                    unit("accuracy", accuracy)?;
                    unit("calibration", calibration)?;
                }
                Archetype::Sloppy { accuracy } => unit("accuracy", accuracy)?,
                Archetype::Spammer => {}
            }
        }
        distribution("slot_share", self.groups.iter().map(|g| &g.slot_share))?;
        unit("typo_rate", self.typo_rate)?;
        let nonneg = [
            ("birth_sigma", self.birth_sigma),
            ("duration_floor_secs", self.duration_floor_secs),
            ("spammer_min_secs", self.spammer_min_secs),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and ≥ 0")));
            }
        }
        if !(self.duration_mean_extra_secs.is_finite() && self.duration_mean_extra_secs > 0.0) {
            return Err(invalid("duration_mean_extra_secs must be positive"));
        }
        if !(self.spammer_max_secs.is_finite() && self.spammer_max_secs > self.spammer_min_secs) {
            return Err(invalid("spammer_max_secs must exceed spammer_min_secs"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub world: WorldSpec,
    #[serde(default)]
    pub workers: WorkerSpec,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            world: WorldSpec::uniform(6, 200),
            workers: WorkerSpec::default(),
        }
    }
}

impl SynthSpec {
    pub fn from_path(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.world.validate()?;
        self.workers.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerInfo {
    pub worker_id: String,
    pub archetype: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub records: Vec<EntityRecord>,
    pub responses: Vec<AnnotationResponse>,
    pub truth: Vec<TruthRow>,
    pub workers: Vec<WorkerInfo>,
}

pub const WORKER_COLUMNS: [&str; 2] = ["worker_id", "archetype"];

impl SynthOutput {
    /// Writes records.csv, responses.csv, truth.csv and workers.csv.
    pub fn write(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir).map_err(|source| SynthError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        write_records(&dir.join("records.csv"), &self.records)?;
        write_responses(&dir.join("responses.csv"), &self.responses)?;
        write_truth(&dir.join("truth.csv"), &self.truth)?;
        let mut t = RawTable::new(WORKER_COLUMNS.iter().map(|s| s.to_string()).collect());
        for w in &self.workers {
            t.push(vec![w.worker_id.clone(), w.archetype.clone()]);
        }
        write_table(&dir.join("workers.csv"), &t)?;
        Ok(())
    }
}

const STREAM_SUB_LIMIT: usize = 1 << 16;
const STREAM_TRUTH: u64 = 0;
const STREAM_ASSIGN: u64 = 1;
const STREAM_PERM: u64 = 2;
const STREAM_ANSWER: u64 = 3;

fn stream(seed: u64, kind: u64, record: usize, sub: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((record as u64) << 20) | ((sub as u64) << 4) | kind);
    rng
}

/// Resolvable country names per region.
pub fn region_countries(region: Region) -> &'static [&'static str] {
    match region {
        Region::Africa => &["Nigeria", "Egypt", "Algeria", "Cameroon"],
        Region::AsiaPacific => &["Japan", "China", "India", "Bangladesh"],
        Region::Europe => &["France", "Germany", "Italy", "Austria"],
        Region::LatinAmericaCaribbean => &["Mexico", "Brazil", "Argentina", "Chile"],
        Region::NorthAmerica => &["United States", "Canada", "USA"],
        Region::WestAsia => &["Lebanon", "Iraq", "Jordan", "Kuwait"],
        Region::Polar => &["Antarctica"],
    }
}

fn categorical<T: Copy>(rng: &mut ChaCha20Rng, dist: &BTreeMap<T, f64>) -> T {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (k, p) in dist {
        if *p > 0.0 {
            last = Some(*k);
        }
        acc += p;
        if u < acc && *p > 0.0 {
            return *k;
        }
    }
    last.expect("validated distribution has mass")
}

#[derive(Debug, Clone)]
struct Identity {
    name: String,
    truth: Option<TrueAttributes>,
    collection: usize,
}

fn draw_truth(rng: &mut ChaCha20Rng, c: &CollectionSpec, iia_rate: f64) -> Option<TrueAttributes> {
    if rng.random::<f64>() >= iia_rate {
        return None;
    }
    let gender = if rng.random::<f64>() < c.women { Gender::Woman } else { Gender::Man };
    let ethnicity = categorical(rng, &c.ethnicity);
    let region = categorical(rng, &c.region);
    let year = if c.birth_sd > 0.0 {
        Normal::new(c.birth_mean, c.birth_sd).expect("validated sd").sample(rng)
    } else {
        c.birth_mean
    };
    Some(TrueAttributes {
        gender,
        ethnicity,
        region,
        birth_year: (year.round() as i64).clamp(1200, 2005),
    })
}

fn scrape_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 6, 2).expect("valid date")
}

/// Builds a campaign: records, responses, ground truth and the worker roster.
pub fn generate(spec: &SynthSpec, seed: u64) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let world = &spec.world;

    let mut identities: Vec<Identity> = Vec::new();
    let mut records = Vec::with_capacity(world.record_count());
    let mut truth = Vec::with_capacity(world.record_count());
    let mut idx = 0usize;
    for (ci, c) in world.collections.iter().enumerate() {
        let mut used_here = BTreeSet::new();
        for j in 0..c.records {
            let mut rng = stream(seed, STREAM_TRUTH, idx, 0);
            let earlier: Vec<usize> = if ci > 0 && rng.random::<f64>() < world.duplicate_rate {
                identities
                    .iter()
                    .enumerate()
                    .filter(|(i, id)| id.collection < ci && id.truth.is_some() && !used_here.contains(i))
                    .map(|(i, _)| i)
                    .collect()
            } else {
                Vec::new()
            };
            let id = if earlier.is_empty() {
                let t = draw_truth(&mut rng, c, world.iia_rate);
                let n = identities.len() + 1;
                let name = if t.is_some() {
                    format!("Artist {n:05}")
                } else {
                    format!("Unidentified maker {n:05}")
                };
                identities.push(Identity {
                    name,
                    truth: t,
                    collection: ci,
                });
                identities.len() - 1
            } else {
                earlier[rng.random_range(0..earlier.len())]
            };
            used_here.insert(id);
            let key = RecordKey::new(c.id.clone(), format!("e{j:05}"));
            records.push(EntityRecord {
                key: key.clone(),
                display_name: identities[id].name.clone(),
                source_url: Some(format!("https://collections.example.org/{}/{j:05}", c.id.to_lowercase())),
                scrape_date: scrape_date(),
            });
            truth.push(TruthRow {
                key,
                attributes: identities[id].truth,
            });
            idx += 1;
        }
    }

    let workers = spec.workers.roster();
    let responses: Vec<AnnotationResponse> = truth
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, t)| record_responses(&spec.workers, &workers, seed, i, t))
        .collect();
    let roster = workers
        .iter()
        .enumerate()
        .flat_map(|(g, ids)| {
            let token = spec.workers.groups[g].archetype.token();
            ids.iter().map(move |id| WorkerInfo {
                worker_id: id.clone(),
                archetype: token.to_string(),
            })
        })
        .collect();
    Ok(SynthOutput {
        records,
        responses,
        truth,
        workers: roster,
    })
}

impl WorkerSpec {
    /// Worker ids per group, numbered consecutively across groups.
    fn roster(&self) -> Vec<Vec<String>> {
        let mut next = 0;
        self.groups
            .iter()
            .map(|g| {
                (0..g.workers)
                    .map(|_| {
                        next += 1;
                        format!("W{next:04}")
                    })
                    .collect()
            })
            .collect()
    }
}

fn record_responses(
    spec: &WorkerSpec,
    roster: &[Vec<String>],
    seed: u64,
    idx: usize,
    truth: &TruthRow,
) -> Vec<AnnotationResponse> {
    let slots = spec.responses_per_record;
    let perms: Vec<Vec<usize>> = spec
        .groups
        .iter()
        .enumerate()
        .map(|(g, group)| {
            let mut rng = stream(seed, STREAM_PERM, idx, g);
            sample(&mut rng, group.workers, group.workers.min(slots)).into_vec()
        })
        .collect();
    let mut assign = stream(seed, STREAM_ASSIGN, idx, 0);
    let mut seen = BTreeSet::new();
    (0..slots)
        .map(|j| {
            let u: f64 = assign.random();
            let mut acc = 0.0;
            let mut g = spec.groups.len() - 1;
            for (gi, group) in spec.groups.iter().enumerate() {
                acc += group.slot_share;
                if u < acc && group.slot_share > 0.0 {
                    g = gi;
                    break;
                }
            }
            let perm = &perms[g];
            let worker = &roster[g][perm[j % perm.len()]];
            // a worker drawn twice for one record took a reposted HIT
            let hit_id = if seen.insert(worker.as_str()) {
                format!("h{idx:06}")
            } else {
                format!("h{idx:06}r{j}")
            };
            let mut rng = stream(seed, STREAM_ANSWER, idx, j);
            respond(spec, spec.groups[g].archetype, truth, hit_id, worker.clone(), &mut rng)
        })
        .collect()
}

fn choice_for(e: Ethnicity, rng: &mut ChaCha20Rng) -> EthnicityChoice {
    match e {
        Ethnicity::Asian => EthnicityChoice::Asian,
        Ethnicity::Black => EthnicityChoice::BlackAfricanAmerican,
        Ethnicity::Hispanic => EthnicityChoice::HispanicLatinx,
        Ethnicity::White => EthnicityChoice::White,
        Ethnicity::Other => [
            EthnicityChoice::AmericanIndianAlaskaNative,
            EthnicityChoice::NativeHawaiianPacificIslander,
            EthnicityChoice::MiddleEasternNorthAfrican,
        ][rng.random_range(0..3)],
    }
}

fn pick<T: Copy>(rng: &mut ChaCha20Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

fn pick_other<T: Copy + PartialEq>(rng: &mut ChaCha20Rng, items: &[T], not: T) -> T {
    let rest: Vec<T> = items.iter().copied().filter(|x| *x != not).collect();
    pick(rng, &rest)
}

const GUESS_REGIONS: [Region; 6] = [
    Region::Africa,
    Region::AsiaPacific,
    Region::Europe,
    Region::LatinAmericaCaribbean,
    Region::NorthAmerica,
    Region::WestAsia,
];

fn country_in(rng: &mut ChaCha20Rng, region: Region) -> String {
    pick(rng, region_countries(region)).to_string()
}

fn respond(
    spec: &WorkerSpec,
    archetype: Archetype,
    truth: &TruthRow,
    hit_id: String,
    worker_id: String,
    rng: &mut ChaCha20Rng,
) -> AnnotationResponse {
    let duration = match archetype {
        Archetype::Spammer => rng.random_range(spec.spammer_min_secs..=spec.spammer_max_secs),
        _ => {
            let extra = Exp::new(1.0 / spec.duration_mean_extra_secs).expect("positive mean").sample(rng);
            spec.duration_floor_secs + extra
        }
    };
    let mut r = AnnotationResponse {
        hit_id,
        worker_id,
        key: truth.key.clone(),
        duration_secs: (duration * 10.0).round() / 10.0,
        iia: IiaAnswer::CannotDetermine,
        gender: None,
        ethnicity: None,
        origin: None,
        birth: None,
    };
    let accuracy = match archetype {
        Archetype::Honest { accuracy, .. } | Archetype::Sloppy { accuracy } => accuracy,
        Archetype::Spammer => {
            spam(&mut r, rng);
            return r;
        }
    };
    let conf = |rng: &mut ChaCha20Rng, correct: bool| match archetype {
        Archetype::Honest { calibration, .. } => {
            let u: f64 = rng.random();
            match (correct, u < calibration, u < 0.5) {
                (true, true, _) => Confidence::High,
                (true, false, _) | (false, _, false) => Confidence::Medium,
                (false, _, true) => Confidence::Low,
            }
        }
        _ => {
            if rng.random::<f64>() < 2.0 / 3.0 {
                Confidence::Low
            } else {
                Confidence::Medium
            }
        }
    };
    let correct = |rng: &mut ChaCha20Rng| rng.random::<f64>() < accuracy;
    let truth_answer = if truth.attributes.is_some() { IiaAnswer::Yes } else { IiaAnswer::No };
    let iia_ok = correct(rng);
    r.iia = if iia_ok {
        truth_answer
    } else {
        pick_other(rng, &[IiaAnswer::Yes, IiaAnswer::No, IiaAnswer::CannotDetermine], truth_answer)
    };
    match (r.iia, truth.attributes) {
        (IiaAnswer::Yes, Some(t)) => {
            let ok = correct(rng);
            let g = match (t.gender, ok) {
                (Gender::Man, true) | (Gender::Woman, false) => GenderAnswer::Man,
                _ => GenderAnswer::Woman,
            };
            r.gender = Some(Answer {
                value: g,
                confidence: conf(rng, ok),
            });
            let ok = correct(rng);
            let e = if ok { t.ethnicity } else { pick_other(rng, &Ethnicity::ALL, t.ethnicity) };
            let choice = choice_for(e, rng);
            r.ethnicity = Some(EthnicityAnswer {
                categories: BTreeSet::from([choice]),
                free_text: None,
                confidence: conf(rng, ok),
            });
            let ok = correct(rng);
            let region = if ok { t.region } else { pick_other(rng, &GUESS_REGIONS, t.region) };
            r.origin = Some(Answer {
                value: country_in(rng, region),
                confidence: conf(rng, ok),
            });
            let ok = correct(rng);
            let mut year = t.birth_year;
            if ok {
                if spec.birth_sigma > 0.0 {
                    let noise: f64 = Normal::new(0.0, spec.birth_sigma).expect("validated sigma").sample(rng);
                    year += noise.round() as i64;
                }
                if rng.random::<f64>() < spec.typo_rate {
                    year += pick(rng, &[-1, 1]);
                }
            } else {
                year += pick(rng, &[-1, 1]) * rng.random_range(20..=80);
            }
            r.birth = Some(Answer {
                value: year.clamp(100, 9999).to_string(),
                confidence: conf(rng, ok),
            });
        }
        (IiaAnswer::Yes, None) => guess(&mut r, rng, Confidence::Low),
        (IiaAnswer::No, _) => {
            r.gender = Some(Answer {
                value: GenderAnswer::NotIia,
                confidence: conf(rng, iia_ok),
            });
        }
        (IiaAnswer::CannotDetermine, _) => {}
    }
    r
}

/// Answers for a record the worker wrongly takes to be an individual.
fn guess(r: &mut AnnotationResponse, rng: &mut ChaCha20Rng, confidence: Confidence) {
    r.gender = Some(Answer {
        value: pick(rng, &[GenderAnswer::Man, GenderAnswer::Woman]),
        confidence,
    });
    r.ethnicity = Some(EthnicityAnswer {
        categories: BTreeSet::from([pick(rng, &EthnicityChoice::ALL)]),
        free_text: None,
        confidence,
    });
    let region = pick(rng, &GUESS_REGIONS);
    r.origin = Some(Answer {
        value: country_in(rng, region),
        confidence,
    });
    r.birth = Some(Answer {
        value: rng.random_range(1400..=2000).to_string(),
        confidence,
    });
}

fn spam(r: &mut AnnotationResponse, rng: &mut ChaCha20Rng) {
    r.iia = pick(rng, &[IiaAnswer::Yes, IiaAnswer::No, IiaAnswer::CannotDetermine]);
    if r.iia != IiaAnswer::Yes {
        return;
    }
    let confidence = pick(rng, &Confidence::ALL);
    guess(r, rng, confidence);
    if let Some(g) = &mut r.gender {
        g.value = pick(rng, &[GenderAnswer::Man, GenderAnswer::Woman, GenderAnswer::Nonbinary, GenderAnswer::Unknown]);
    }
}

#[cfg(test)]
mod tests;

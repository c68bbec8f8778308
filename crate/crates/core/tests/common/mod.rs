//! Independent reference implementations used by the integration tests
//! and the acceptance harness.
//!
//! Everything here is written from the published rules, not from the
//! library: scores are kept as integer sums of thirds and compared by
//! cross-multiplication, the clustering recomputes every average linkage
//! from the raw points at every step.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use crowdcensus::cluster::{Dendrogram, FeatureVector};
use crowdcensus::consensus::{CampaignConfig, CountryLookup, DecadeRounding, Gender, IiaVerdict, Region, RegionMap};
use crowdcensus::ingest::{
    Answer, Confidence, Ethnicity, EthnicityAnswer, EthnicityChoice, GenderAnswer, IiaAnswer,
};
use crowdcensus::{AnnotationResponse, ConsensusInference, RecordKey};
use rand::seq::IndexedRandom;
use rand::Rng;

// ---------------------------------------------------------------- consensus

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleEthnicity {
    None,
    Single(Ethnicity),
    Multiple,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleInference {
    pub iia: IiaVerdict,
    pub gender: Option<Gender>,
    /// Signed sum of thirds and the number of man / woman answers.
    pub gender_sum: (i64, i64),
    pub ethnicity: OracleEthnicity,
    pub n_ethnicity: usize,
    pub region: Option<Region>,
    pub n_region: usize,
    pub decade: Option<i64>,
    pub n_birth: usize,
}

fn thirds(c: Confidence) -> i64 {
    match c {
        Confidence::Low => 1,
        Confidence::Medium => 2,
        Confidence::High => 3,
    }
}

/// (numerator, denominator) of a threshold, reduced or not.
fn frac(x: &crowdcensus::consensus::Exact) -> (i128, i128) {
    let v = x.value();
    (*v.numer() as i128, *v.denom() as i128)
}

fn oracle_year(raw: &str) -> Option<i64> {
    let t = raw.trim();
    let digits = t.chars().all(|c| c.is_ascii_digit());
    if digits && (t.len() == 3 || t.len() == 4) {
        Some(t.chars().fold(0i64, |acc, c| acc * 10 + (c as i64 - '0' as i64)))
    } else {
        None
    }
}

fn fold_choice(c: EthnicityChoice) -> Ethnicity {
    use EthnicityChoice::*;
    match c {
        Asian => Ethnicity::Asian,
        BlackAfricanAmerican => Ethnicity::Black,
        HispanicLatinx => Ethnicity::Hispanic,
        White => Ethnicity::White,
        AmericanIndianAlaskaNative | NativeHawaiianPacificIslander | MiddleEasternNorthAfrican => Ethnicity::Other,
    }
}

/// Nearest multiple of ten to w / t (t > 0).
fn oracle_decade(w: i128, t: i128, rounding: DecadeRounding) -> i64 {
    let mut lo = (w / t).div_euclid(10) * 10;
    while lo * t > w {
        lo -= 10;
    }
    while (lo + 10) * t <= w {
        lo += 10;
    }
    let hi = lo + 10;
    let below = w - lo * t;
    let above = hi * t - w;
    let pick = match below.cmp(&above) {
        std::cmp::Ordering::Less => lo,
        std::cmp::Ordering::Greater => hi,
        std::cmp::Ordering::Equal => match rounding {
            DecadeRounding::HalfDown => lo,
            DecadeRounding::HalfUp => hi,
        },
    };
    pick as i64
}

pub fn oracle_infer(responses: &[AnnotationResponse], map: &RegionMap, cfg: &CampaignConfig) -> OracleInference {
    let min = cfg.min_support;
    let mut out = OracleInference {
        iia: IiaVerdict::Undetermined,
        gender: None,
        gender_sum: (0, 0),
        ethnicity: OracleEthnicity::None,
        n_ethnicity: 0,
        region: None,
        n_region: 0,
        decade: None,
        n_birth: 0,
    };
    if responses.len() < min {
        return out;
    }
    let yes = responses.iter().filter(|r| matches!(r.iia, IiaAnswer::Yes)).count();
    let no_or_other = responses.len() - yes;
    if yes <= no_or_other {
        out.iia = IiaVerdict::NonIia;
        return out;
    }
    out.iia = IiaVerdict::Iia;
    let kept: Vec<&AnnotationResponse> = responses.iter().filter(|r| !matches!(r.iia, IiaAnswer::No)).collect();

    // gender
    let (mut s, mut m) = (0i64, 0i64);
    for r in &kept {
        if let Some(a) = &r.gender {
            match a.value {
                GenderAnswer::Man => {
                    s -= thirds(a.confidence);
                    m += 1;
                }
                GenderAnswer::Woman => {
                    s += thirds(a.confidence);
                    m += 1;
                }
                _ => {}
            }
        }
    }
    out.gender_sum = (s, m);
    let (gp, gq) = frac(&cfg.gender_threshold);
    if m as usize >= min {
        // |s / 3m| >= p / q
        if (gq * (s as i128)) <= -(3 * m as i128 * gp) {
            out.gender = Some(Gender::Man);
        } else if gq * (s as i128) >= 3 * m as i128 * gp {
            out.gender = Some(Gender::Woman);
        }
    }

    // ethnicity
    let mut tot: BTreeMap<Ethnicity, (i128, usize)> = BTreeMap::new();
    let mut n = 0i128;
    for r in &kept {
        let Some(a) = &r.ethnicity else { continue };
        if a.categories.is_empty() {
            continue;
        }
        n += 1;
        for e in Ethnicity::ALL {
            if a.categories.iter().any(|c| fold_choice(*c) == e) {
                let t = tot.entry(e).or_insert((0, 0));
                t.0 += thirds(a.confidence) as i128;
                t.1 += 1;
            }
        }
    }
    out.n_ethnicity = n as usize;
    let (ep, eq) = frac(&cfg.ethnicity_threshold);
    let passing: Vec<Ethnicity> = tot
        .iter()
        .filter(|(_, (t, sup))| eq * t > 3 * n * ep && *sup >= min)
        .map(|(e, _)| *e)
        .collect();
    out.ethnicity = match passing.len() {
        0 => OracleEthnicity::None,
        1 => OracleEthnicity::Single(passing[0]),
        _ => OracleEthnicity::Multiple,
    };

    // region
    let mut per: BTreeMap<Region, (i128, usize)> = BTreeMap::new();
    let mut n = 0i128;
    for r in &kept {
        let Some(a) = &r.origin else { continue };
        if let CountryLookup::Region(reg) = map.lookup(&a.value) {
            n += 1;
            let t = per.entry(reg).or_insert((0, 0));
            t.0 += thirds(a.confidence) as i128;
            t.1 += 1;
        }
    }
    out.n_region = n as usize;
    let (rp, rq) = frac(&cfg.region_threshold);
    let passing: Vec<(Region, i128)> = per
        .iter()
        .filter(|(_, (t, sup))| rq * t >= 3 * n * rp && *sup >= min)
        .map(|(r, (t, _))| (*r, *t))
        .collect();
    if let Some(best) = passing.iter().map(|(_, t)| *t).max() {
        let top: Vec<Region> = passing.iter().filter(|(_, t)| *t == best).map(|(r, _)| *r).collect();
        if top.len() == 1 {
            out.region = Some(top[0]);
        }
    }

    // birth decade
    let years: Vec<(i128, i128)> = kept
        .iter()
        .filter_map(|r| {
            let a = r.birth.as_ref()?;
            Some((oracle_year(&a.value)? as i128, thirds(a.confidence) as i128))
        })
        .collect();
    let k = years.len() as i128;
    let total: i128 = years.iter().map(|(y, _)| y).sum();
    // d_i = k * (y_i - mean)
    let devs: Vec<i128> = years.iter().map(|(y, _)| k * y - total).collect();
    let ss: i128 = devs.iter().map(|d| d * d).sum();
    let (zp, zq) = frac(&cfg.z_cut);
    let (tp, tq) = frac(&cfg.typo_tolerance_years);
    let mut w = 0i128;
    let mut t = 0i128;
    let mut kept_years = 0usize;
    for ((y, c), d) in years.iter().zip(&devs) {
        // |y - mean| > z * sd  <=>  k d^2 > z^2 ss   (sd the population sd)
        let far = k > 2 && ss > 0 && k * d * d * zq * zq > zp * zp * ss;
        // |y - mean| > tol  <=>  |d| > tol k
        let not_typo = tq * d.abs() > tp * k;
        if !(far && not_typo) {
            w += y * c;
            t += c;
            kept_years += 1;
        }
    }
    out.n_birth = kept_years;
    if kept_years >= min && t > 0 {
        out.decade = Some(oracle_decade(w, t, cfg.decade_rounding));
    }
    out
}

/// Differences between the library inference and the oracle, empty when
/// they agree on every field.
pub fn compare(lib: &ConsensusInference, o: &OracleInference) -> Vec<String> {
    let mut diffs = Vec::new();
    let mut check = |name: &str, same: bool, detail: String| {
        if !same {
            diffs.push(format!("{}: {name} {detail}", lib.key));
        }
    };
    check("iia", lib.iia == o.iia, format!("{:?} vs {:?}", lib.iia, o.iia));
    if o.iia != IiaVerdict::Iia {
        return diffs;
    }
    check("gender", lib.gender == o.gender, format!("{:?} vs {:?}", lib.gender, o.gender));
    let (s, m) = o.gender_sum;
    check("n_gender", lib.n_gender as i64 == m, format!("{} vs {m}", lib.n_gender));
    if m > 0 {
        let score = lib.gender_score.as_ref().map(|x| x.value());
        let same = score.is_some_and(|v| *v.numer() as i128 * 3 * m as i128 == s as i128 * *v.denom() as i128);
        check("gender_score", same, format!("{score:?} vs {s}/{}", 3 * m));
    }
    let eth = match lib.ethnicity {
        None => OracleEthnicity::None,
        Some(e) => match e.single() {
            Some(x) => OracleEthnicity::Single(x),
            None => OracleEthnicity::Multiple,
        },
    };
    check("ethnicity", eth == o.ethnicity, format!("{eth:?} vs {:?}", o.ethnicity));
    check("n_ethnicity", lib.n_ethnicity == o.n_ethnicity, format!("{} vs {}", lib.n_ethnicity, o.n_ethnicity));
    check("region", lib.region == o.region, format!("{:?} vs {:?}", lib.region, o.region));
    check("n_region", lib.n_region == o.n_region, format!("{} vs {}", lib.n_region, o.n_region));
    check("decade", lib.birth_decade == o.decade, format!("{:?} vs {:?}", lib.birth_decade, o.decade));
    check("n_birth", lib.n_birth == o.n_birth, format!("{} vs {}", lib.n_birth, o.n_birth));
    diffs
}

const COUNTRIES: [&str; 14] = [
    "France", "USA", "Japan", "Nigeria", "Mexico", "Iran", "Canada", "Germany", "China", "Brazil", "Egypt",
    "Antarctica", "Atlantis", "unknown",
];

const BIRTH_JUNK: [&str; 7] = ["", "c. 1850", "18th century", "12345", "85", "1850s", "unknown"];

fn confidence<R: Rng>(rng: &mut R) -> Confidence {
    *Confidence::ALL.choose(rng).expect("nonempty")
}

/// Up to `max` responses for one record, correlated around a record-level
/// preference so that every rule fires on a fair share of records.
pub fn fuzz_record<R: Rng>(rng: &mut R, key: &RecordKey, max: usize) -> Vec<AnnotationResponse> {
    let count = rng.random_range(0..=max);
    let pref_gender = if rng.random_bool(0.5) { GenderAnswer::Man } else { GenderAnswer::Woman };
    let pref_eth = *EthnicityChoice::ALL.choose(rng).expect("nonempty");
    let pref_country = *COUNTRIES[..11].choose(rng).expect("nonempty");
    let pref_year: i64 = rng.random_range(1400..=2000);
    let yes_rate = rng.random_range(0.3..1.0);
    (0..count)
        .map(|i| {
            let iia = if rng.random_bool(yes_rate) {
                IiaAnswer::Yes
            } else if rng.random_bool(0.6) {
                IiaAnswer::No
            } else {
                IiaAnswer::CannotDetermine
            };
            let gender = (!rng.random_bool(0.1)).then(|| Answer {
                value: if rng.random_bool(0.75) {
                    pref_gender
                } else {
                    *[
                        GenderAnswer::Man,
                        GenderAnswer::Woman,
                        GenderAnswer::Nonbinary,
                        GenderAnswer::Unknown,
                        GenderAnswer::NotIia,
                    ]
                    .choose(rng)
                    .expect("nonempty")
                },
                confidence: confidence(rng),
            });
            let ethnicity = (!rng.random_bool(0.1)).then(|| {
                let roll: f64 = rng.random();
                let categories: BTreeSet<EthnicityChoice> = if roll < 0.65 {
                    BTreeSet::from([pref_eth])
                } else if roll < 0.9 {
                    EthnicityChoice::ALL.into_iter().filter(|_| rng.random_bool(0.3)).collect()
                } else {
                    BTreeSet::new()
                };
                EthnicityAnswer {
                    free_text: categories.is_empty().then(|| "mixed".to_string()),
                    categories,
                    confidence: confidence(rng),
                }
            });
            let origin = (!rng.random_bool(0.1)).then(|| Answer {
                value: if rng.random_bool(0.85) {
                    pref_country.to_string()
                } else {
                    COUNTRIES.choose(rng).expect("nonempty").to_string()
                },
                confidence: confidence(rng),
            });
            let birth = (!rng.random_bool(0.1)).then(|| {
                let roll: f64 = rng.random();
                let value = if roll < 0.6 {
                    (pref_year + rng.random_range(-2..=2)).to_string()
                } else if roll < 0.8 {
                    (pref_year + rng.random_range(-60..=60)).to_string()
                } else if roll < 0.9 {
                    format!(" {} ", rng.random_range(100..=2020))
                } else {
                    BIRTH_JUNK.choose(rng).expect("nonempty").to_string()
                };
                Answer {
                    value,
                    confidence: confidence(rng),
                }
            });
            AnnotationResponse {
                hit_id: "h".into(),
                worker_id: format!("w{i}"),
                key: key.clone(),
                duration_secs: 60.0,
                iia,
                gender,
                ethnicity,
                origin,
                birth,
            }
        })
        .collect()
}

// ---------------------------------------------------------------- clustering

/// One reference merge: the two member sets (smaller first leaf on the
/// left) and the UPGMA height.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMerge {
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub height: f64,
}

fn cheb(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// O(n³)-per-step UPGMA: every candidate pair's average linkage is
/// recomputed from the raw point distances.
pub fn oracle_upgma(points: &[FeatureVector]) -> Vec<OracleMerge> {
    let mut pts: Vec<&FeatureVector> = points.iter().collect();
    pts.sort_by(|a, b| a.label.cmp(&b.label));
    let mut clusters: Vec<Vec<usize>> = (0..pts.len()).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut sum = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        sum += cheb(&pts[i].values, &pts[j].values);
                    }
                }
                let avg = sum / (clusters[a].len() * clusters[b].len()) as f64;
                let (ma, mb) = (clusters[a][0], clusters[b][0]);
                let tie = (ma.min(mb), ma.max(mb));
                let take = match best {
                    None => true,
                    Some((d, t, _, _)) => avg < d || (avg == d && tie < t),
                };
                if take {
                    best = Some((avg, tie, a, b));
                }
            }
        }
        let (height, _, a, b) = best.expect("two clusters");
        let (l, r) = if clusters[a][0] < clusters[b][0] { (a, b) } else { (b, a) };
        let names = |c: &Vec<usize>| c.iter().map(|&i| pts[i].label.clone()).collect::<Vec<_>>();
        merges.push(OracleMerge {
            left: names(&clusters[l]),
            right: names(&clusters[r]),
            height,
        });
        let mut merged = clusters[a].clone();
        merged.extend(&clusters[b]);
        merged.sort_unstable();
        let (hi, lo) = (a.max(b), a.min(b));
        clusters.remove(hi);
        clusters.remove(lo);
        clusters.push(merged);
    }
    merges
}

/// Groups after applying the first n − k reference merges, numbered by
/// smallest member label.
pub fn oracle_cut(labels: &[String], merges: &[OracleMerge], k: usize) -> BTreeMap<String, usize> {
    let mut groups: Vec<BTreeSet<String>> = labels.iter().map(|l| BTreeSet::from([l.clone()])).collect();
    for m in &merges[..labels.len() - k] {
        let members: BTreeSet<String> = m.left.iter().chain(&m.right).cloned().collect();
        groups.retain(|g| g.is_disjoint(&members));
        groups.push(members);
    }
    groups.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
    groups
        .iter()
        .enumerate()
        .flat_map(|(i, g)| g.iter().map(move |l| (l.clone(), i + 1)))
        .collect()
}

pub fn dendrogram_matches(d: &Dendrogram, oracle: &[OracleMerge]) -> bool {
    d.merges.len() == oracle.len()
        && d.merges
            .iter()
            .zip(oracle)
            .all(|(m, o)| m.left_members == o.left && m.right_members == o.right && m.height == o.height)
}

/// n labeled points with small integer coordinates, so every linkage sum
/// is exact and ties are common.
pub fn grid_points<R: Rng>(rng: &mut R, n: usize, dims: usize) -> Vec<FeatureVector> {
    let names: Vec<String> = (0..dims).map(|d| format!("x{d}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    (0..n)
        .map(|i| {
            let values = (0..dims).map(|_| rng.random_range(0..=6) as f64).collect();
            FeatureVector::new(format!("g{i}"), &name_refs, values)
        })
        .collect()
}

// ---------------------------------------------------------------- stats

/// Wilson interval with the quantile taken from statrs.
pub fn oracle_wilson(k: u64, n: u64, alpha: f64) -> (f64, f64) {
    use statrs::distribution::{ContinuousCDF, Normal};
    let z = Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(1.0 - alpha / 2.0);
    let (kf, nf) = (k as f64, n as f64);
    let p = kf / nf;
    let z2 = z * z;
    let center = (kf + z2 / 2.0) / (nf + z2);
    let half = z * nf.sqrt() / (nf + z2) * (p * (1.0 - p) + z2 / (4.0 * nf)).sqrt();
    (center - half, center + half)
}

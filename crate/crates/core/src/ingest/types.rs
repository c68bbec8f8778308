use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// (collection, entity) pair identifying one scraped record.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordKey {
    pub collection_id: String,
    pub entity_id: String,
}

impl RecordKey {
    pub fn new(collection_id: impl Into<String>, entity_id: impl Into<String>) -> Self {
        RecordKey {
            collection_id: collection_id.into(),
            entity_id: entity_id.into(),
        }
    }
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.collection_id, self.entity_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub key: RecordKey,
    pub display_name: String,
    pub source_url: Option<String>,
    pub scrape_date: NaiveDate,
}

/// Worker-reported certainty. Weights are exact thirds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Confidence {
    Low,
    Medium,
    High,
}

impl Confidence {
    pub const ALL: [Confidence; 3] = [Confidence::Low, Confidence::Medium, Confidence::High];

    /// Weight numerator over a denominator of 3.
    pub fn thirds(self) -> i64 {
        match self {
            Confidence::Low => 1,
            Confidence::Medium => 2,
            Confidence::High => 3,
        }
    }

    pub fn weight(self) -> Ratio<i64> {
        Ratio::new(self.thirds(), 3)
    }

    pub fn from_thirds(thirds: u8) -> Option<Self> {
        match thirds {
            1 => Some(Confidence::Low),
            2 => Some(Confidence::Medium),
            3 => Some(Confidence::High),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IiaAnswer {
    Yes,
    No,
    CannotDetermine,
}

impl IiaAnswer {
    /// An empty cell counts as "cannot determine".
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" | "y" | "iia" | "true" | "1" => Some(IiaAnswer::Yes),
            "no" | "n" | "not_iia" | "false" | "0" => Some(IiaAnswer::No),
            "" | "cannot_determine" | "cd" | "unknown" => Some(IiaAnswer::CannotDetermine),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            IiaAnswer::Yes => "yes",
            IiaAnswer::No => "no",
            IiaAnswer::CannotDetermine => "cannot_determine",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GenderAnswer {
    Man,
    Woman,
    Nonbinary,
    Unknown,
    NotIia,
}

impl GenderAnswer {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "man" | "male" | "m" => Some(GenderAnswer::Man),
            "woman" | "female" | "w" | "f" => Some(GenderAnswer::Woman),
            "nonbinary" | "non-binary" => Some(GenderAnswer::Nonbinary),
            "unknown" | "cannot_determine" => Some(GenderAnswer::Unknown),
            "not_iia" | "notiia" => Some(GenderAnswer::NotIia),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            GenderAnswer::Man => "man",
            GenderAnswer::Woman => "woman",
            GenderAnswer::Nonbinary => "nonbinary",
            GenderAnswer::Unknown => "unknown",
            GenderAnswer::NotIia => "not_iia",
        }
    }
}

/// The fixed census-derived ethnicity list offered to workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EthnicityChoice {
    AmericanIndianAlaskaNative,
    Asian,
    BlackAfricanAmerican,
    HispanicLatinx,
    NativeHawaiianPacificIslander,
    White,
    MiddleEasternNorthAfrican,
}

impl EthnicityChoice {
    pub const ALL: [EthnicityChoice; 7] = [
        EthnicityChoice::AmericanIndianAlaskaNative,
        EthnicityChoice::Asian,
        EthnicityChoice::BlackAfricanAmerican,
        EthnicityChoice::HispanicLatinx,
        EthnicityChoice::NativeHawaiianPacificIslander,
        EthnicityChoice::White,
        EthnicityChoice::MiddleEasternNorthAfrican,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match norm.as_str() {
            "aian" | "americanindianoralaskanative" | "americanindianalaskanative" => {
                Some(EthnicityChoice::AmericanIndianAlaskaNative)
            }
            "asian" => Some(EthnicityChoice::Asian),
            "black" | "blackafricanamerican" | "africanamerican" => {
                Some(EthnicityChoice::BlackAfricanAmerican)
            }
            "hispanic" | "latinx" | "hispaniclatinx" | "latino" => {
                Some(EthnicityChoice::HispanicLatinx)
            }
            "nhpi" | "nativehawaiianorotherpacificislander" | "nativehawaiianpacificislander" => {
                Some(EthnicityChoice::NativeHawaiianPacificIslander)
            }
            "white" => Some(EthnicityChoice::White),
            "mena" | "middleeasternornorthafrican" | "middleeasternnorthafrican" => {
                Some(EthnicityChoice::MiddleEasternNorthAfrican)
            }
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            EthnicityChoice::AmericanIndianAlaskaNative => "aian",
            EthnicityChoice::Asian => "asian",
            EthnicityChoice::BlackAfricanAmerican => "black",
            EthnicityChoice::HispanicLatinx => "hispanic",
            EthnicityChoice::NativeHawaiianPacificIslander => "nhpi",
            EthnicityChoice::White => "white",
            EthnicityChoice::MiddleEasternNorthAfrican => "mena",
        }
    }

    /// Folds the three rare categories into `Other`.
    pub fn collapse(self) -> Ethnicity {
        match self {
            EthnicityChoice::Asian => Ethnicity::Asian,
            EthnicityChoice::BlackAfricanAmerican => Ethnicity::Black,
            EthnicityChoice::HispanicLatinx => Ethnicity::Hispanic,
            EthnicityChoice::White => Ethnicity::White,
            EthnicityChoice::AmericanIndianAlaskaNative
            | EthnicityChoice::NativeHawaiianPacificIslander
            | EthnicityChoice::MiddleEasternNorthAfrican => Ethnicity::Other,
        }
    }
}

/// The five analysis categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ethnicity {
    Asian,
    Black,
    Hispanic,
    White,
    Other,
}

impl Ethnicity {
    pub const ALL: [Ethnicity; 5] = [
        Ethnicity::Asian,
        Ethnicity::Black,
        Ethnicity::Hispanic,
        Ethnicity::White,
        Ethnicity::Other,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Ethnicity::Asian => "asian",
            Ethnicity::Black => "black",
            Ethnicity::Hispanic => "hispanic",
            Ethnicity::White => "white",
            Ethnicity::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        Ethnicity::ALL.into_iter().find(|e| e.token() == s)
    }

    pub fn label(self) -> &'static str {
        match self {
            Ethnicity::Asian => "Asian",
            Ethnicity::Black => "Black/African American",
            Ethnicity::Hispanic => "Hispanic/Latinx",
            Ethnicity::White => "White",
            Ethnicity::Other => "Other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer<T> {
    pub value: T,
    pub confidence: Confidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EthnicityAnswer {
    pub categories: BTreeSet<EthnicityChoice>,
    /// Kept for audit; never used in scoring.
    pub free_text: Option<String>,
    pub confidence: Confidence,
}

/// One worker's answers for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationResponse {
    pub hit_id: String,
    pub worker_id: String,
    pub key: RecordKey,
    pub duration_secs: f64,
    pub iia: IiaAnswer,
    pub gender: Option<Answer<GenderAnswer>>,
    pub ethnicity: Option<EthnicityAnswer>,
    pub origin: Option<Answer<String>>,
    pub birth: Option<Answer<String>>,
}

impl AnnotationResponse {
    /// Record key, then hit id, then worker id.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.key
            .cmp(&other.key)
            .then_with(|| self.hit_id.cmp(&other.hit_id))
            .then_with(|| self.worker_id.cmp(&other.worker_id))
    }
}

/// Responses grouped per record in canonical order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResponsePool {
    pub(crate) entries: BTreeMap<RecordKey, Vec<AnnotationResponse>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub records: usize,
    pub sampled_records: usize,
    pub responses: usize,
    pub workers: usize,
    /// Records whose responses arrived under more than one HIT id.
    pub duplicate_deployments: usize,
}

impl ResponsePool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &RecordKey) -> Option<&[AnnotationResponse]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RecordKey, &[AnnotationResponse])> {
        self.entries.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn responses(&self) -> impl Iterator<Item = &AnnotationResponse> {
        self.entries.values().flatten()
    }

    pub fn response_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn into_responses(self) -> Vec<AnnotationResponse> {
        self.entries.into_values().flatten().collect()
    }

    /// Drops records that never received a response.
    pub fn sampled(&self) -> ResponsePool {
        ResponsePool {
            entries: self
                .entries
                .iter()
                .filter(|(_, v)| !v.is_empty())
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Keeps only responses matching `keep`, preserving record entries.
    pub fn filter_responses(&self, mut keep: impl FnMut(&AnnotationResponse) -> bool) -> ResponsePool {
        ResponsePool {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().filter(|r| keep(r)).cloned().collect()))
                .collect(),
        }
    }

    pub fn summary(&self) -> PoolSummary {
        let workers: BTreeSet<&str> = self.responses().map(|r| r.worker_id.as_str()).collect();
        let duplicate_deployments = self
            .entries
            .values()
            .filter(|v| {
                let hits: BTreeSet<&str> = v.iter().map(|r| r.hit_id.as_str()).collect();
                hits.len() > 1
            })
            .count();
        PoolSummary {
            records: self.entries.len(),
            sampled_records: self.entries.values().filter(|v| !v.is_empty()).count(),
            responses: self.response_count(),
            workers: workers.len(),
            duplicate_deployments,
        }
    }
}

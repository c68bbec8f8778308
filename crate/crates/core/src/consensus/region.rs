//! Country name to GEO3 region lookup.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::ingest::{read_table, IngestError, RawTable};

const BUILTIN_MAP: &str = include_str!("../../data/geo3_map.csv");

/// The seven UN GEO3 regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    Africa,
    AsiaPacific,
    Europe,
    LatinAmericaCaribbean,
    NorthAmerica,
    WestAsia,
    Polar,
}

impl Region {
    pub const ALL: [Region; 7] = [
        Region::Africa,
        Region::AsiaPacific,
        Region::Europe,
        Region::LatinAmericaCaribbean,
        Region::NorthAmerica,
        Region::WestAsia,
        Region::Polar,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Region::Africa => "africa",
            Region::AsiaPacific => "asia_pacific",
            Region::Europe => "europe",
            Region::LatinAmericaCaribbean => "latin_america",
            Region::NorthAmerica => "north_america",
            Region::WestAsia => "west_asia",
            Region::Polar => "polar",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::Africa => "Africa",
            Region::AsiaPacific => "Asia and the Pacific",
            Region::Europe => "Europe",
            Region::LatinAmericaCaribbean => "Latin America and the Caribbean",
            Region::NorthAmerica => "North America",
            Region::WestAsia => "West Asia",
            Region::Polar => "Polar",
        }
    }

    /// Accepts tokens or full labels, case-insensitively.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        Region::ALL
            .into_iter()
            .find(|r| r.token().eq_ignore_ascii_case(s) || r.label().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Lookup from normalized country name (including aliases and historical
/// entities) to region. Names not in the table are explicit failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMap {
    entries: BTreeMap<String, Region>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CountryLookup {
    Region(Region),
    /// The worker declined to name a country ("unknown", "not IIA", ...).
    Abstained,
    Unknown(String),
}

const ABSTENTIONS: [&str; 9] = [
    "",
    "unknown",
    "not iia",
    "not_iia",
    "notiia",
    "cannot determine",
    "cannot_determine",
    "n/a",
    "none",
];

/// Trim, strip diacritics, case-fold, drop periods, `&` -> `and`, drop a
/// leading "the", collapse whitespace.
pub fn normalize_country(name: &str) -> String {
    let folded: String = name
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .collect::<String>()
        .to_lowercase()
        .replace('.', "")
        .replace('&', " and ")
        .replace(['\u{2019}', '`'], "'");
    let words: Vec<&str> = folded.split_whitespace().collect();
    let words = match words.first() {
        Some(&"the") if words.len() > 1 => &words[1..],
        _ => &words[..],
    };
    words.join(" ")
}

impl RegionMap {
    pub fn builtin() -> Self {
        let table = RawTable::from_csv_reader(BUILTIN_MAP.as_bytes()).expect("bundled map parses");
        Self::from_table(&table).expect("bundled map is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        Self::from_table(&read_table(path)?)
    }

    pub fn from_table(table: &RawTable) -> Result<Self, IngestError> {
        let idx = table.require_columns(&["country", "region"])?;
        let mut entries = BTreeMap::new();
        for row in &table.rows {
            let country = row.cells[idx[0]].trim();
            let region_raw = row.cells[idx[1]].trim();
            let region = Region::parse(region_raw).ok_or_else(|| IngestError::MalformedRow {
                line: row.line,
                message: format!("unknown region `{region_raw}`"),
            })?;
            let key = normalize_country(country);
            if key.is_empty() {
                return Err(IngestError::MalformedRow {
                    line: row.line,
                    message: "empty country".into(),
                });
            }
            if let Some(prev) = entries.insert(key.clone(), region) {
                if prev != region {
                    return Err(IngestError::MalformedRow {
                        line: row.line,
                        message: format!("`{country}` mapped to both {prev} and {region}"),
                    });
                }
            }
        }
        Ok(RegionMap { entries })
    }

    pub fn lookup(&self, country: &str) -> CountryLookup {
        let key = normalize_country(country);
        if ABSTENTIONS.contains(&key.as_str()) {
            return CountryLookup::Abstained;
        }
        match self.entries.get(&key) {
            Some(r) => CountryLookup::Region(*r),
            None => CountryLookup::Unknown(country.trim().to_string()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_table(&self) -> RawTable {
        let mut t = RawTable::new(vec!["country".into(), "region".into()]);
        for (k, r) in &self.entries {
            t.push(vec![k.clone(), r.token().into()]);
        }
        t
    }
}

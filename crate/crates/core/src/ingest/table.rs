use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde_json::Value;

use super::IngestError;

/// A header plus string cells, with 1-based source line numbers per row.
///
/// Both CSV and JSON inputs are normalized into this shape so that every
/// downstream parser sees the same representation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<RawRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRow {
    pub line: usize,
    pub cells: Vec<String>,
}

impl RawTable {
    pub fn new(header: Vec<String>) -> Self {
        RawTable {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        let line = self.rows.len() + 2;
        self.rows.push(RawRow { line, cells });
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h.trim() == name)
    }

    pub fn require_columns(&self, names: &[&str]) -> Result<Vec<usize>, IngestError> {
        names
            .iter()
            .map(|n| {
                self.column(n)
                    .ok_or_else(|| IngestError::MissingColumn(n.to_string()))
            })
            .collect()
    }

    /// Cell lookup by column name; `None` when the column is absent.
    pub fn get(&self, row: usize, column: &str) -> Option<&str> {
        self.column(column)
            .map(|c| self.rows[row].cells[c].as_str())
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| csv_error(e, 1))?
            .iter()
            .map(|h| h.trim_start_matches('\u{feff}').to_string())
            .collect();
        let mut table = RawTable::new(header);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                csv_error(e, line)
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            table.rows.push(RawRow {
                line,
                cells: rec.iter().map(str::to_string).collect(),
            });
        }
        Ok(table)
    }

    /// JSON input: an array of flat objects. Strings are taken verbatim,
    /// numbers and booleans are stringified, null is an empty cell. Row
    /// "line" numbers are 1-based array positions offset by the header.
    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self, IngestError> {
        let value: Value = serde_json::from_reader(reader)?;
        let items = value.as_array().ok_or_else(|| IngestError::MalformedRow {
            line: 1,
            message: "JSON input must be an array of objects".into(),
        })?;
        let mut header: Vec<String> = Vec::new();
        for item in items {
            if let Some(obj) = item.as_object() {
                for k in obj.keys() {
                    if !header.contains(k) {
                        header.push(k.clone());
                    }
                }
            }
        }
        let mut table = RawTable::new(header);
        for (i, item) in items.iter().enumerate() {
            let obj = item.as_object().ok_or_else(|| IngestError::MalformedRow {
                line: i + 2,
                message: "expected a JSON object".into(),
            })?;
            let cells = table
                .header
                .iter()
                .map(|h| match obj.get(h) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) => s.clone(),
                    Some(Value::Array(a)) => a
                        .iter()
                        .map(|v| v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string()))
                        .collect::<Vec<_>>()
                        .join("|"),
                    Some(other) => other.to_string(),
                })
                .collect();
            table.rows.push(RawRow { line: i + 2, cells });
        }
        Ok(table)
    }

    pub fn to_csv_string(&self) -> String {
        let mut wtr = csv::WriterBuilder::new().from_writer(Vec::new());
        wtr.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            wtr.write_record(&row.cells).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_json_value(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    Value::Object(
                        self.header
                            .iter()
                            .cloned()
                            .zip(row.cells.iter().map(|c| Value::String(c.clone())))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

fn csv_error(e: csv::Error, line: usize) -> IngestError {
    IngestError::MalformedRow {
        line,
        message: e.to_string(),
    }
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false)
}

/// Reads a CSV table, or a JSON array when the extension is `.json`.
pub fn read_table(path: &Path) -> Result<RawTable, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    if is_json(path) {
        RawTable::from_json_reader(reader)
    } else {
        RawTable::from_csv_reader(reader)
    }
}

pub fn write_table(path: &Path, table: &RawTable) -> Result<(), IngestError> {
    let body = if is_json(path) {
        serde_json::to_string_pretty(&table.to_json_value())? + "\n"
    } else {
        table.to_csv_string()
    };
    let mut f = File::create(path).map_err(|source| IngestError::Write {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(body.as_bytes())
        .map_err(|source| IngestError::Write {
            path: path.display().to_string(),
            source,
        })
}

//! CSV storage of published memory parameters.
//!
//! The first twelve columns are fixed. Six optional trailing columns carry
//! values that a source quotes directly (a device-limited clock cycle, an
//! external efficiency or a noise figure) and that override the computed ones.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use memsync_core::bench::{MemoryRecord, Provenance, Quoted, RecordProvenance};
use memsync_core::Error as CoreError;
use thiserror::Error;

/// Fixed leading columns.
pub const BASE_COLUMNS: [&str; 12] = [
    "label",
    "tau_p_s",
    "tau_s_s",
    "eta_int",
    "t_setup",
    "nu",
    "prov_tau_p",
    "prov_tau_s",
    "prov_eta",
    "prov_t",
    "prov_nu",
    "footnote",
];

/// Optional trailing columns, all present or all absent.
pub const QUOTED_COLUMNS: [&str; 6] = ["tau_c_s", "prov_tau_c", "eta0", "prov_eta0", "mu1", "prov_mu1"];

/// Environment variable naming a dataset to use instead of the bundled one.
pub const DATASET_ENV: &str = "MEMSYNC_DATASET";

/// The bundled dataset.
pub const BUNDLED_CSV: &str = include_str!("../data/memories.csv");

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("unexpected header `{found}`; expected `{}` optionally followed by `{}`", BASE_COLUMNS.join(","), QUOTED_COLUMNS.join(","))]
    Header { found: String },
    #[error("line {line}, column `{column}`: {message}")]
    Schema {
        line: u64,
        column: &'static str,
        message: String,
    },
    #[error("line {line}: duplicate label `{label}` (first seen on line {first_line})")]
    DuplicateLabel { label: String, line: u64, first_line: u64 },
}

/// Parsed records plus non-fatal remarks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<MemoryRecord>,
    pub warnings: Vec<String>,
}

/// Where a dataset was read from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    Bundled,
    File(PathBuf),
}

impl std::fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetSource::Bundled => f.write_str("bundled"),
            DatasetSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// Explicit path, else the environment override, else the bundled data.
pub fn resolve_source(explicit: Option<&Path>) -> DatasetSource {
    if let Some(p) = explicit {
        return DatasetSource::File(p.to_path_buf());
    }
    match std::env::var_os(DATASET_ENV) {
        Some(p) if !p.is_empty() => DatasetSource::File(PathBuf::from(p)),
        _ => DatasetSource::Bundled,
    }
}

pub fn load_source(source: &DatasetSource) -> Result<Dataset, DatasetError> {
    match source {
        DatasetSource::Bundled => parse_dataset(BUNDLED_CSV),
        DatasetSource::File(p) => load_dataset(p),
    }
}

pub fn load_bundled() -> Result<Dataset, DatasetError> {
    parse_dataset(BUNDLED_CSV)
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Dataset, DatasetError> {
    if text.trim().is_empty() {
        return Ok(Dataset {
            records: Vec::new(),
            warnings: vec!["dataset is empty".to_string()],
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_error)?.clone();
    let with_quoted = check_header(&header)?;
    let width = BASE_COLUMNS.len() + if with_quoted { QUOTED_COLUMNS.len() } else { 0 };

    let mut records: Vec<MemoryRecord> = Vec::new();
    let mut lines: Vec<u64> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != width {
            return Err(DatasetError::Csv {
                line,
                message: format!("expected {width} fields, found {}", row.len()),
            });
        }
        let rec = parse_row(&row, line, with_quoted)?;
        if let Some(i) = records.iter().position(|r| r.label == rec.label) {
            return Err(DatasetError::DuplicateLabel {
                label: rec.label,
                line,
                first_line: lines[i],
            });
        }
        records.push(rec);
        lines.push(line);
    }
    let mut warnings = Vec::new();
    if records.is_empty() {
        warnings.push("dataset has a header but no rows".to_string());
    }
    Ok(Dataset { records, warnings })
}

fn csv_error(e: csv::Error) -> DatasetError {
    DatasetError::Csv {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

fn check_header(header: &csv::StringRecord) -> Result<bool, DatasetError> {
    let cols: Vec<&str> = header.iter().collect();
    let base_ok = cols.len() >= BASE_COLUMNS.len() && cols[..BASE_COLUMNS.len()] == BASE_COLUMNS;
    let rest = &cols[BASE_COLUMNS.len().min(cols.len())..];
    match (base_ok, rest.len()) {
        (true, 0) => Ok(false),
        (true, _) if rest == QUOTED_COLUMNS => Ok(true),
        _ => Err(DatasetError::Header { found: cols.join(",") }),
    }
}

struct Row<'a> {
    row: &'a csv::StringRecord,
    line: u64,
}

impl Row<'_> {
    fn cell(&self, col: usize) -> &str {
        self.row.get(col).unwrap_or("")
    }

    fn name(col: usize) -> &'static str {
        if col < BASE_COLUMNS.len() {
            BASE_COLUMNS[col]
        } else {
            QUOTED_COLUMNS[col - BASE_COLUMNS.len()]
        }
    }

    fn error(&self, col: usize, message: impl Into<String>) -> DatasetError {
        DatasetError::Schema {
            line: self.line,
            column: Self::name(col),
            message: message.into(),
        }
    }

    fn number(&self, col: usize) -> Result<f64, DatasetError> {
        let s = self.cell(col);
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error(col, format!("`{s}` is not a finite number"))),
        }
    }

    fn provenance(&self, col: usize) -> Result<Provenance, DatasetError> {
        self.cell(col)
            .parse()
            .map_err(|e: memsync_core::bench::ParseProvenanceError| self.error(col, e.to_string()))
    }

    fn quoted(&self, col: usize) -> Result<Option<Quoted>, DatasetError> {
        let value = self.cell(col);
        let prov = self.provenance(col + 1)?;
        if value.is_empty() {
            if prov != Provenance::Unspecified {
                return Err(self.error(col + 1, "provenance given for an empty value"));
            }
            return Ok(None);
        }
        Ok(Some(Quoted {
            value: self.number(col)?,
            provenance: prov,
        }))
    }
}

fn parse_row(row: &csv::StringRecord, line: u64, with_quoted: bool) -> Result<MemoryRecord, DatasetError> {
    let r = Row { row, line };
    let label = r.cell(0).to_string();
    if label.is_empty() {
        return Err(r.error(0, "label is empty"));
    }
    let provenance = RecordProvenance {
        tau_p: r.provenance(6)?,
        tau_s: r.provenance(7)?,
        eta_int: r.provenance(8)?,
        t_setup: r.provenance(9)?,
        nu: r.provenance(10)?,
    };
    let t_setup = if provenance.t_setup.is_not_given() {
        match r.cell(4) {
            "" | "NG" => 1.0,
            _ => match r.number(4)? {
                v if v == 1.0 => v,
                v => return Err(r.error(4, format!("transmission marked NG must be 1, NG or empty, found {v}"))),
            },
        }
    } else {
        r.number(4)?
    };
    let mut rec = MemoryRecord {
        label,
        tau_p: r.number(1)?,
        tau_s: r.number(2)?,
        eta_int: r.number(3)?,
        t_setup,
        nu: r.number(5)?,
        provenance,
        footnotes: r.cell(11).to_string(),
        tau_c: None,
        eta0: None,
        mu1: None,
    };
    if with_quoted {
        rec.tau_c = r.quoted(12)?;
        rec.eta0 = r.quoted(14)?;
        rec.mu1 = r.quoted(16)?;
    }
    rec.validate().map_err(|e| match e {
        CoreError::InvalidParameter { name, value, reason } => r.error(column_of(name), format!("{value}: {reason}")),
        other => r.error(0, other.to_string()),
    })?;
    Ok(rec)
}

fn column_of(field: &str) -> usize {
    let name = match field {
        "tau_p" => "tau_p_s",
        "tau_s" => "tau_s_s",
        "tau_c" => "tau_c_s",
        other => other,
    };
    BASE_COLUMNS
        .iter()
        .chain(QUOTED_COLUMNS.iter())
        .position(|c| *c == name)
        .unwrap_or(0)
}

/// Writes records in the full eighteen-column layout. Numbers use the
/// shortest representation that parses back to the same value.
pub fn write_dataset<W: io::Write>(records: &[MemoryRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BASE_COLUMNS.iter().chain(QUOTED_COLUMNS.iter()))?;
    for r in records {
        let p = &r.provenance;
        let mut fields = vec![
            r.label.clone(),
            r.tau_p.to_string(),
            r.tau_s.to_string(),
            r.eta_int.to_string(),
            r.t_setup.to_string(),
            r.nu.to_string(),
            p.tau_p.to_string(),
            p.tau_s.to_string(),
            p.eta_int.to_string(),
            p.t_setup.to_string(),
            p.nu.to_string(),
            r.footnotes.clone(),
        ];
        for q in [&r.tau_c, &r.eta0, &r.mu1] {
            match q {
                Some(q) => fields.extend([q.value.to_string(), q.provenance.to_string()]),
                None => fields.extend([String::new(), String::new()]),
            }
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn dataset_to_string(records: &[MemoryRecord]) -> String {
    let mut buf = Vec::new();
    write_dataset(records, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "label,tau_p_s,tau_s_s,eta_int,t_setup,nu,prov_tau_p,prov_tau_s,prov_eta,prov_t,prov_nu,footnote";

    #[test]
    fn bundled_has_sixteen_rows() {
        let d = load_bundled().unwrap();
        assert_eq!(d.records.len(), 16);
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn empty_inputs_warn() {
        for text in ["", "  \n", HEADER] {
            let d = parse_dataset(text).unwrap();
            assert!(d.records.is_empty());
            assert_eq!(d.warnings.len(), 1);
        }
    }

    #[test]
    fn base_columns_only() {
        let text = format!("{HEADER}\nX,1e-9,1e-6,0.5,NG,0,MT,MT,MT,NG,,\n");
        let d = parse_dataset(&text).unwrap();
        let r = &d.records[0];
        assert_eq!(r.t_setup, 1.0);
        assert!(r.transmission_not_given());
        assert_eq!(r.tau_c, None);
    }

    #[test]
    fn negative_lifetime_is_located() {
        let text = format!("{HEADER}\nA,1e-9,1e-6,0.5,0.5,0,,,,,,\nB,1e-9,-1e-6,0.5,0.5,0,,,,,,\n");
        match parse_dataset(&text) {
            Err(DatasetError::Schema { line, column, .. }) => assert_eq!((line, column), (3, "tau_s_s")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_cells_are_located() {
        let text = format!("{HEADER}\nA,1e-9,1e-6,half,0.5,0,,,,,,\n");
        assert!(matches!(
            parse_dataset(&text),
            Err(DatasetError::Schema {
                line: 2,
                column: "eta_int",
                ..
            })
        ));
        let text = format!("{HEADER}\nA,1e-9,1e-6,0.5,0.5,0,XX,,,,,\n");
        assert!(matches!(
            parse_dataset(&text),
            Err(DatasetError::Schema {
                column: "prov_tau_p",
                ..
            })
        ));
        let text = format!("{HEADER}\nA,1e-9,1e-6,0.5,0.5\n");
        assert!(matches!(parse_dataset(&text), Err(DatasetError::Csv { line: 2, .. })));
        let text = format!("{HEADER}\nA,1e-9,1e-6,0.5,0.7,0,,,,NG,,\n");
        assert!(matches!(
            parse_dataset(&text),
            Err(DatasetError::Schema { column: "t_setup", .. })
        ));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let text = format!("{HEADER}\nA,1e-9,1e-6,0.5,0.5,0,,,,,,\nA,1e-9,1e-6,0.5,0.5,0,,,,,,\n");
        match parse_dataset(&text) {
            Err(DatasetError::DuplicateLabel {
                label,
                line,
                first_line,
            }) => {
                assert_eq!((label.as_str(), line, first_line), ("A", 3, 2))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(matches!(
            parse_dataset("label,tau\nA,1\n"),
            Err(DatasetError::Header { .. })
        ));
        let text = format!("{HEADER},tau_c_s\nA,1e-9,1e-6,0.5,0.5,0,,,,,,,\n");
        assert!(matches!(parse_dataset(&text), Err(DatasetError::Header { .. })));
    }

    #[test]
    fn explicit_path_wins() {
        assert_eq!(
            resolve_source(Some(Path::new("x.csv"))),
            DatasetSource::File("x.csv".into())
        );
    }
}

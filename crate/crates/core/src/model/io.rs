//! File formats: matrices and vectors as row-major CSV of decimal floats,
//! instance metadata as JSON.
//!
//! An instance file looks like
//!
//! ```json
//! {
//!   "design": "inst.design.csv",
//!   "beta_star": "inst.beta_star.csv",
//!   "noise": { "gaussian": { "sigma": 1.0, "seed": 7 } },
//!   "penalty": { "kind": "scaled_l1", "lam": 0.5 }
//! }
//! ```
//!
//! Relative paths are resolved against the directory of the JSON file.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{DesignMatrix, NoiseSpec, PenaltySpec, ProblemInstance, TargetVector};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    design: PathBuf,
    beta_star: PathBuf,
    noise: NoiseSpec,
    penalty: PenaltySpec,
}

/// Parses row-major CSV into a matrix. Every row must have the same number
/// of fields.
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut entries = Vec::new();
    let mut rows = 0usize;
    let mut cols = 0usize;
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if rows == 0 {
            cols = record.len();
        }
        for (k, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                column: k + 1,
                message: format!("not a decimal number: {field:?}"),
            })?;
            entries.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "empty matrix".into(),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &entries))
}

fn csv_error(e: &csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::UnequalLengths {
            pos,
            expected_len,
            len,
        } => Error::Parse {
            line: pos.as_ref().map(|p| p.line()).unwrap_or(0),
            column: (*len.min(expected_len) as usize) + 1,
            message: format!("ragged row: expected {expected_len} fields, found {len}"),
        },
        _ => Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            column: 0,
            message: e.to_string(),
        },
    }
}

/// A vector may be stored as one column or as one row.
pub fn parse_vector_csv(text: &str) -> Result<Vec<f64>> {
    let m = parse_matrix_csv(text)?;
    if m.ncols() == 1 || m.nrows() == 1 {
        // column-major storage of a single row/column is the vector itself
        Ok(m.as_slice().to_vec())
    } else {
        Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("expected a vector, found a {}x{} matrix", m.nrows(), m.ncols()),
        })
    }
}

pub fn format_matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One value per line.
pub fn format_vector_csv(v: &[f64]) -> String {
    let mut out = String::with_capacity(v.len() * 20);
    for x in v {
        out.push_str(&format!("{x}\n"));
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix_csv(&fs::read_to_string(path)?)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    parse_vector_csv(&fs::read_to_string(path)?)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    fs::write(path, format_vector_csv(v))?;
    Ok(())
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, format_matrix_csv(m))?;
    Ok(())
}

/// Maps a serde_json error to a schema error (it names missing fields).
pub(crate) fn schema_error(e: serde_json::Error) -> Error {
    if e.is_syntax() || e.is_eof() {
        Error::Parse {
            line: e.line() as u64,
            column: e.column(),
            message: e.to_string(),
        }
    } else {
        Error::Schema(e.to_string())
    }
}

/// Parses instance metadata. File references resolve against `base_dir`.
pub fn parse_instance(json: &str, base_dir: &Path) -> Result<ProblemInstance> {
    let file: InstanceFile = serde_json::from_str(json).map_err(schema_error)?;
    let design = DesignMatrix::new(read_matrix(&base_dir.join(&file.design))?)?;
    let beta = read_vector(&base_dir.join(&file.beta_star))?;
    ProblemInstance::new(design, TargetVector(beta), file.noise, file.penalty)
}

pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let json = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_instance(&json, base)
}

/// Writes `path` (JSON) plus `<stem>.design.csv` and `<stem>.beta_star.csv`
/// next to it.
pub fn save_instance(inst: &ProblemInstance, path: &Path) -> Result<()> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::arg(format!("bad instance path {}", path.display())))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let design_name = PathBuf::from(format!("{stem}.design.csv"));
    let beta_name = PathBuf::from(format!("{stem}.beta_star.csv"));
    write_matrix(&dir.join(&design_name), inst.design.matrix())?;
    write_vector(&dir.join(&beta_name), inst.beta_star.as_slice())?;
    let meta = InstanceFile {
        design: design_name,
        beta_star: beta_name,
        noise: inst.noise.clone(),
        penalty: inst.penalty.clone(),
    };
    fs::write(path, serde_json::to_string_pretty(&meta).expect("serializable"))?;
    Ok(())
}

/// Pretty JSON for any result record.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("result records are serializable")
}

//! Column and key layouts of every emitted file, and a checker run on each
//! file after it is written.

use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};

/// Version of the CSV/JSON layouts below. Carried in every JSON output.
pub const SCHEMA_VERSION: &str = "1";

pub const CELLS_COLUMNS: &[&str] = &[
    "r", "seed", "n_s", "n_t", "d_true", "d_inv", "sd_inv", "d_bay", "sd_bay", "crb_quantum",
    "crb_classical", "k_m_inv_db", "k_m_bay_db", "k_m_quantum_inv_db", "k_m_quantum_bay_db",
    "resources_inv", "resources_bay",
];

pub const SUMMARY_COLUMNS: &[&str] = &[
    "r", "n_s", "n_t", "d_true", "crb_quantum", "crb_classical", "n_cells", "d_inv_mean",
    "d_inv_spread", "sd_inv_mean", "d_bay_mean", "d_bay_spread", "sd_bay_mean",
    "k_m_inv_db_mean", "k_m_inv_db_spread", "k_m_bay_db_mean", "k_m_bay_db_spread",
    "k_m_quantum_inv_db_mean", "k_m_quantum_inv_db_spread", "k_m_quantum_bay_db_mean",
    "k_m_quantum_bay_db_spread",
];

pub const PLOT_COLUMNS: &[&str] = &["series", "r", "x_discord", "y_km_db", "y_spread_db"];

pub const BOUNDS_COLUMNS: &[&str] =
    &["r", "n_s", "n_t", "d_true", "crb_quantum", "crb_classical", "ratio_db"];

pub const ESTIMATE_KEYS: &[&str] = &[
    "schema_version", "d_hat", "var_d", "ns_hat", "nt_hat", "var_ns", "var_nt", "method",
    "resources_m",
];

pub const SIMULATE_KEYS: &[&str] =
    &["schema_version", "n_s", "n_t", "d_true", "m_q", "seed", "dataset", "metadata"];

pub const SWEEP_JSON_KEYS: &[&str] = &["schema_version", "rows", "summary"];

pub const MANIFEST_KEYS: &[&str] = &[
    "schema_version", "command", "config", "versions", "threads", "r_grid_note", "timings",
    "failures", "files",
];

/// Columns that hold text rather than numbers.
const TEXT_COLUMNS: &[&str] = &["series"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Cells,
    Summary,
    Plot,
    Bounds,
    SweepJson,
    Manifest,
    Estimate,
    SimulateReport,
    Dataset,
}

/// Checks `path` against the layout of `kind`.
pub fn validate_file(path: &Path, kind: OutputKind) -> Result<()> {
    match kind {
        OutputKind::Cells => validate_csv(path, CELLS_COLUMNS),
        OutputKind::Summary => validate_csv(path, SUMMARY_COLUMNS),
        OutputKind::Plot => validate_csv(path, PLOT_COLUMNS),
        OutputKind::Bounds => validate_csv(path, BOUNDS_COLUMNS),
        OutputKind::Estimate => validate_json(path, ESTIMATE_KEYS).map(drop),
        OutputKind::SimulateReport => validate_json(path, SIMULATE_KEYS).map(drop),
        OutputKind::Manifest => validate_json(path, MANIFEST_KEYS).map(drop),
        OutputKind::SweepJson => {
            let v = validate_json(path, SWEEP_JSON_KEYS)?;
            check_records(path, &v["rows"], CELLS_COLUMNS)?;
            check_records(path, &v["summary"], SUMMARY_COLUMNS)
        }
        OutputKind::Dataset => crate::homodyne::load_dataset(path).map(drop),
    }
}

fn schema_err(path: &Path, reason: String) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        reason,
    }
}

/// Exact header, full-width rows, finite numbers outside text columns.
pub fn validate_csv(path: &Path, columns: &[&str]) -> Result<()> {
    let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    check_csv(csv::ReaderBuilder::new().has_headers(true).from_reader(file), columns, path)
}

/// [`validate_csv`] on in-memory text; `label` names it in errors.
pub fn validate_csv_bytes(bytes: &[u8], columns: &[&str], label: &Path) -> Result<()> {
    check_csv(csv::ReaderBuilder::new().has_headers(true).from_reader(bytes), columns, label)
}

fn check_csv<R: std::io::Read>(mut reader: csv::Reader<R>, columns: &[&str], path: &Path) -> Result<()> {
    let header = reader.headers()?.clone();
    if header.iter().ne(columns.iter().copied()) {
        return Err(schema_err(
            path,
            format!("header {:?} does not match {:?}", header.iter().collect::<Vec<_>>(), columns),
        ));
    }
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != columns.len() {
            return Err(schema_err(path, format!("row {} has {} fields", i + 1, record.len())));
        }
        for (name, cell) in columns.iter().zip(record.iter()) {
            if TEXT_COLUMNS.contains(name) {
                if cell.is_empty() {
                    return Err(schema_err(path, format!("row {}: empty {name}", i + 1)));
                }
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => {}
                _ => {
                    return Err(schema_err(
                        path,
                        format!("row {}: {name} = {cell:?} is not a finite number", i + 1),
                    ))
                }
            }
        }
    }
    Ok(())
}

/// Object with every key in `keys` and the current schema version.
pub fn validate_json(path: &Path, keys: &[&str]) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let value: Value = serde_json::from_str(&text)?;
    let Some(obj) = value.as_object() else {
        return Err(schema_err(path, "top level is not an object".into()));
    };
    for key in keys {
        if !obj.contains_key(*key) {
            return Err(schema_err(path, format!("missing key {key:?}")));
        }
    }
    if let Some(v) = obj.get("schema_version") {
        if v.as_str() != Some(SCHEMA_VERSION) {
            return Err(schema_err(path, format!("schema_version {v} is not {SCHEMA_VERSION:?}")));
        }
    }
    Ok(value)
}

fn check_records(path: &Path, value: &Value, keys: &[&str]) -> Result<()> {
    let Some(items) = value.as_array() else {
        return Err(schema_err(path, "expected an array of records".into()));
    };
    for (i, item) in items.iter().enumerate() {
        for key in keys {
            if !item.get(*key).is_some_and(Value::is_number) {
                return Err(schema_err(path, format!("record {i}: missing numeric {key:?}")));
            }
        }
    }
    Ok(())
}

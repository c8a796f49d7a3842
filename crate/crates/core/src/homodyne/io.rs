//! Dataset files: `<name>.csv` with header `x0,x1,p0,p1`, one shot per row,
//! plus a `<name>.meta.json` sidecar.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{DatasetMeta, HomodyneDataset};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "1";
const HEADER: [&str; 4] = ["x0", "x1", "p0", "p1"];

/// `dir/name.csv` → `dir/name.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

/// Plain decimal with 17 significant digits, enough to round-trip any `f64`.
pub(crate) fn decimal17(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.16}", 0.0);
    }
    let exponent = x.abs().log10().floor() as i32;
    let precision = (16 - exponent).max(0) as usize;
    format!("{x:.precision$}")
}

pub fn save_dataset(ds: &HomodyneDataset, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    writeln!(w, "{}", HEADER.join(",")).map_err(io_err)?;
    for ([x0, x1], [p0, p1]) in ds.shots_x.iter().zip(&ds.shots_p) {
        let row = [*x0, *x1, *p0, *p1].map(decimal17);
        writeln!(w, "{}", row.join(",")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;

    let meta_path = sidecar_path(path);
    let json = serde_json::to_string_pretty(&ds.meta)?;
    fs::write(&meta_path, json + "\n").map_err(|e| Error::io(meta_path.display().to_string(), e))?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<HomodyneDataset> {
    let meta_path = sidecar_path(path);
    let meta_text =
        fs::read_to_string(&meta_path).map_err(|e| Error::io(meta_path.display().to_string(), e))?;
    let meta: DatasetMeta = serde_json::from_str(&meta_text)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            expected: FORMAT_VERSION.to_string(),
            found: meta.format_version,
        });
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path.display().to_string(), io),
            other => Error::Schema {
                path: path.to_path_buf(),
                reason: format!("{other:?}"),
            },
        })?;
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            reason: format!("expected header {:?}, found {:?}", HEADER, header),
        });
    }

    let mut shots_x = Vec::with_capacity(meta.m_q);
    let mut shots_p = Vec::with_capacity(meta.m_q);
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let malformed = |reason: String| Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            reason,
        };
        let record = record.map_err(|e| malformed(e.to_string()))?;
        if record.len() != 4 {
            return Err(malformed(format!("expected 4 fields, found {}", record.len())));
        }
        let mut v = [0.0; 4];
        for (slot, cell) in v.iter_mut().zip(record.iter()) {
            let x: f64 = cell
                .trim()
                .parse()
                .map_err(|_| malformed(format!("non-numeric cell {cell:?}")))?;
            if !x.is_finite() {
                return Err(malformed(format!("non-finite cell {cell:?}")));
            }
            *slot = x;
        }
        shots_x.push([v[0], v[1]]);
        shots_p.push([v[2], v[3]]);
    }
    if shots_x.len() != meta.m_q {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            reason: format!("metadata declares m_q = {} but file has {} rows", meta.m_q, shots_x.len()),
        });
    }
    HomodyneDataset::new(shots_x, shots_p, meta)
}

#[cfg(test)]
mod tests {
    use super::decimal17;

    #[test]
    fn decimal17_round_trips() {
        for x in [0.0, 1.0, -2.5, 1e-7, -3.3e-12, 123456.789, 0.1 + 0.2, f64::MIN_POSITIVE, 9.999999999999999e15] {
            let s = decimal17(x);
            assert!(!s.contains('e'), "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(decimal17(1.0), "1.0000000000000000");
    }
}

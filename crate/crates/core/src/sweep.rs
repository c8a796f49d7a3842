//! Bounds tables and the full `(r, seed)` sweep with its output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    bayesian_estimate, inversion_estimate, BayesConfig, GridSpec, InversionConfig,
    DEFAULT_BLOCKS, DEFAULT_MAX_REJECTION_RATE, DEFAULT_MC_TRIALS,
};
use crate::fisher::{crb_discord, noise_ratio_db, CrbResult, InfoKind};
use crate::homodyne::simulate_physical;
use crate::model::{effective_photons, sts_discord, PhysicalParams};
use crate::rng::{derive_seed, RNG_ALGORITHM};
use crate::schema::{self, OutputKind, SCHEMA_VERSION};

pub const DEFAULT_GAMMA: f64 = 0.73;
pub const DEFAULT_ETA: f64 = 0.62;
pub const DEFAULT_M_Q: usize = 20_000;

/// Written into every manifest: the default `r` grid is not the experiment's.
pub const R_GRID_NOTE: &str = "the pump-power grid of the experiment is unpublished; \
     the r values here are a stand-in chosen to span a comparable discord range";

/// Parses `start:stop:step` (inclusive of `stop`) or a comma-separated list.
pub fn parse_r_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::InvalidParameter(format!("r grid {spec:?}: {why}"));
    let parse = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| bad("not a number"))?;
        if v.is_finite() { Ok(v) } else { Err(bad("not finite")) }
    };
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad("expected start:stop:step"));
        };
        let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
        if step <= 0.0 {
            return Err(bad("step must be positive"));
        }
        if stop < start {
            return Err(bad("stop is below start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // Rounded to 12 decimals so 0.05·3 prints as 0.15.
        (0..n)
            .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        spec.split(',').map(parse).collect::<Result<Vec<f64>>>()?
    };
    if values.is_empty() {
        return Err(bad("empty"));
    }
    if values.iter().any(|&r| r < 0.0) {
        return Err(bad("negative r"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("values must be strictly increasing"));
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub r: f64,
    pub n_s: f64,
    pub n_t: f64,
    pub d_true: f64,
    pub crb_quantum: f64,
    pub crb_classical: f64,
    /// `10·log10(classical / quantum)`.
    pub ratio_db: f64,
}

/// A grid point without a row, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub r: f64,
    pub reason: String,
}

fn bounds_row(q: &PhysicalParams) -> Result<BoundsRow> {
    let p = effective_photons(q)?;
    let quantum = crb_discord(q, InfoKind::Quantum)?;
    let classical = crb_discord(q, InfoKind::Classical)?;
    Ok(BoundsRow {
        r: q.r(),
        n_s: p.n_s(),
        n_t: p.n_t(),
        d_true: sts_discord(&p),
        crb_quantum: quantum.var_bound_per_shot,
        crb_classical: classical.var_bound_per_shot,
        ratio_db: 10.0 * (classical.var_bound_per_shot / quantum.var_bound_per_shot).log10(),
    })
}

/// Per-shot discord bounds along `r_values`. Points where a bound is
/// singular (such as `r = 0`) are returned separately instead of failing.
pub fn bounds_table(r_values: &[f64], gamma: f64, eta: f64) -> Result<(Vec<BoundsRow>, Vec<SkippedPoint>)> {
    PhysicalParams::new(0.0, gamma, eta)?;
    let results: Vec<(f64, Result<BoundsRow>)> = r_values
        .par_iter()
        .map(|&r| (r, PhysicalParams::new(r, gamma, eta).and_then(|q| bounds_row(&q))))
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (r, res) in results {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => skipped.push(SkippedPoint { r, reason: e.to_string() }),
        }
    }
    Ok((rows, skipped))
}

/// The bounds table as CSV text, checked against its schema.
pub fn bounds_csv_string(rows: &[BoundsRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv_to(rows, schema::BOUNDS_COLUMNS, &mut buf)?;
    schema::validate_csv_bytes(&buf, schema::BOUNDS_COLUMNS, Path::new("<bounds>"))?;
    String::from_utf8(buf).map_err(|e| Error::Numeric(e.to_string()))
}

pub fn write_bounds_csv(rows: &[BoundsRow], path: &Path) -> Result<()> {
    write_csv(rows, schema::BOUNDS_COLUMNS, path)?;
    schema::validate_file(path, OutputKind::Bounds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub r_values: Vec<f64>,
    pub gamma: f64,
    pub eta: f64,
    pub m_q: usize,
    pub n_blocks: usize,
    pub mc_trials: u64,
    pub max_rejection_rate: f64,
    pub seeds: Vec<u64>,
    pub grid: GridSpec,
    pub output_dir: PathBuf,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            r_values: (1..=20).map(|k| k as f64 * 0.05).map(|r| (r * 1e12).round() / 1e12).collect(),
            gamma: DEFAULT_GAMMA,
            eta: DEFAULT_ETA,
            m_q: DEFAULT_M_Q,
            n_blocks: DEFAULT_BLOCKS,
            mc_trials: DEFAULT_MC_TRIALS,
            max_rejection_rate: DEFAULT_MAX_REJECTION_RATE,
            seeds: vec![1, 2, 3, 4, 5],
            grid: GridSpec::default(),
            output_dir: PathBuf::from("sweep-out"),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParameter(s));
        if self.r_values.is_empty() {
            return bad("no r values".into());
        }
        if self.r_values.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return bad("r values must be strictly positive".into());
        }
        if self.r_values.windows(2).any(|w| w[1] <= w[0]) {
            return bad("r values must be strictly increasing".into());
        }
        PhysicalParams::new(self.r_values[0], self.gamma, self.eta)?;
        if self.seeds.is_empty() {
            return bad("no seeds".into());
        }
        if self.n_blocks == 0 || self.m_q % self.n_blocks != 0 {
            return bad(format!("m_q = {} is not divisible into {} blocks", self.m_q, self.n_blocks));
        }
        Ok(())
    }

    fn bayes_config(&self) -> BayesConfig {
        BayesConfig {
            n_blocks: self.n_blocks,
            grid: self.grid,
            inversion: self.inversion_config(),
        }
    }

    fn inversion_config(&self) -> InversionConfig {
        InversionConfig {
            mc_trials: self.mc_trials,
            max_rejection_rate: self.max_rejection_rate,
        }
    }
}

/// One `(r, seed)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub seed: u64,
    pub n_s: f64,
    pub n_t: f64,
    pub d_true: f64,
    pub d_inv: f64,
    pub sd_inv: f64,
    pub d_bay: f64,
    pub sd_bay: f64,
    pub crb_quantum: f64,
    pub crb_classical: f64,
    pub k_m_inv_db: f64,
    pub k_m_bay_db: f64,
    pub k_m_quantum_inv_db: f64,
    pub k_m_quantum_bay_db: f64,
    pub resources_inv: u64,
    pub resources_bay: u64,
}

/// Mean and sample standard deviation across the seeds of one `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub r: f64,
    pub n_s: f64,
    pub n_t: f64,
    pub d_true: f64,
    pub crb_quantum: f64,
    pub crb_classical: f64,
    pub n_cells: usize,
    pub d_inv_mean: f64,
    pub d_inv_spread: f64,
    pub sd_inv_mean: f64,
    pub d_bay_mean: f64,
    pub d_bay_spread: f64,
    pub sd_bay_mean: f64,
    pub k_m_inv_db_mean: f64,
    pub k_m_inv_db_spread: f64,
    pub k_m_bay_db_mean: f64,
    pub k_m_bay_db_spread: f64,
    pub k_m_quantum_inv_db_mean: f64,
    pub k_m_quantum_inv_db_spread: f64,
    pub k_m_quantum_bay_db_mean: f64,
    pub k_m_quantum_bay_db_spread: f64,
}

/// One point of the `K_M` versus discord plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    /// `<estimator>_<bound>`, e.g. `bayes_quantum`.
    pub series: String,
    pub r: f64,
    pub x_discord: f64,
    pub y_km_db: f64,
    pub y_spread_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub r: f64,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub r: f64,
    pub seed: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<CellFailure>,
    pub timings: Vec<CellTiming>,
    pub total_seconds: f64,
}

impl SweepOutput {
    pub fn plot_points(&self) -> Vec<PlotPoint> {
        let mut out = Vec::with_capacity(4 * self.summary.len());
        for (series, pick) in [
            ("inversion_classical", Pick::InvClassical),
            ("bayes_classical", Pick::BayClassical),
            ("inversion_quantum", Pick::InvQuantum),
            ("bayes_quantum", Pick::BayQuantum),
        ] {
            for s in &self.summary {
                let (x, y, spread) = pick.of(s);
                out.push(PlotPoint {
                    series: series.to_string(),
                    r: s.r,
                    x_discord: x,
                    y_km_db: y,
                    y_spread_db: spread,
                });
            }
        }
        out
    }
}

#[derive(Clone, Copy)]
enum Pick {
    InvClassical,
    BayClassical,
    InvQuantum,
    BayQuantum,
}

impl Pick {
    fn of(self, s: &SummaryRow) -> (f64, f64, f64) {
        match self {
            Pick::InvClassical => (s.d_inv_mean, s.k_m_inv_db_mean, s.k_m_inv_db_spread),
            Pick::BayClassical => (s.d_bay_mean, s.k_m_bay_db_mean, s.k_m_bay_db_spread),
            Pick::InvQuantum => (s.d_inv_mean, s.k_m_quantum_inv_db_mean, s.k_m_quantum_inv_db_spread),
            Pick::BayQuantum => (s.d_bay_mean, s.k_m_quantum_bay_db_mean, s.k_m_quantum_bay_db_spread),
        }
    }
}

struct Bounds {
    quantum: CrbResult,
    classical: CrbResult,
}

fn run_cell(cfg: &SweepConfig, q: &PhysicalParams, bounds: &Bounds, seed: u64) -> Result<SweepRow> {
    let p = effective_photons(q)?;
    let ds = simulate_physical(q, cfg.m_q, seed)?;
    let inv = inversion_estimate(&ds, &cfg.inversion_config(), seed)?;
    let bay = bayesian_estimate(&ds, &cfg.bayes_config(), seed)?;
    let k = |var: f64, m: u64, b: &CrbResult| noise_ratio_db(var, m, b);
    Ok(SweepRow {
        r: q.r(),
        seed: 0,
        n_s: p.n_s(),
        n_t: p.n_t(),
        d_true: sts_discord(&p),
        d_inv: inv.d_hat,
        sd_inv: inv.var_d.sqrt(),
        d_bay: bay.d_hat,
        sd_bay: bay.var_d.sqrt(),
        crb_quantum: bounds.quantum.var_bound_per_shot,
        crb_classical: bounds.classical.var_bound_per_shot,
        k_m_inv_db: k(inv.var_d, inv.resources_m, &bounds.classical)?,
        k_m_bay_db: k(bay.var_d, bay.resources_m, &bounds.classical)?,
        k_m_quantum_inv_db: k(inv.var_d, inv.resources_m, &bounds.quantum)?,
        k_m_quantum_bay_db: k(bay.var_d, bay.resources_m, &bounds.quantum)?,
        resources_inv: inv.resources_m,
        resources_bay: bay.resources_m,
    })
}

fn mean_spread(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

fn summarize(rows: &[SweepRow]) -> SummaryRow {
    let first = rows[0];
    let col = |f: fn(&SweepRow) -> f64| mean_spread(rows.iter().map(f));
    let (d_inv_mean, d_inv_spread) = col(|r| r.d_inv);
    let (d_bay_mean, d_bay_spread) = col(|r| r.d_bay);
    let (k_inv, k_inv_sd) = col(|r| r.k_m_inv_db);
    let (k_bay, k_bay_sd) = col(|r| r.k_m_bay_db);
    let (kq_inv, kq_inv_sd) = col(|r| r.k_m_quantum_inv_db);
    let (kq_bay, kq_bay_sd) = col(|r| r.k_m_quantum_bay_db);
    SummaryRow {
        r: first.r,
        n_s: first.n_s,
        n_t: first.n_t,
        d_true: first.d_true,
        crb_quantum: first.crb_quantum,
        crb_classical: first.crb_classical,
        n_cells: rows.len(),
        d_inv_mean,
        d_inv_spread,
        sd_inv_mean: col(|r| r.sd_inv).0,
        d_bay_mean,
        d_bay_spread,
        sd_bay_mean: col(|r| r.sd_bay).0,
        k_m_inv_db_mean: k_inv,
        k_m_inv_db_spread: k_inv_sd,
        k_m_bay_db_mean: k_bay,
        k_m_bay_db_spread: k_bay_sd,
        k_m_quantum_inv_db_mean: kq_inv,
        k_m_quantum_inv_db_spread: kq_inv_sd,
        k_m_quantum_bay_db_mean: kq_bay,
        k_m_quantum_bay_db_spread: kq_bay_sd,
    }
}

/// Runs every `(r, seed)` cell in parallel. Cell `(i, s)` simulates and
/// estimates with seed `derive_seed(s, i)`; the output is ordered by
/// `(r, seed)` whatever the scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let start = Instant::now();

    let bounds: Vec<Result<Bounds>> = cfg
        .r_values
        .par_iter()
        .map(|&r| {
            let q = PhysicalParams::new(r, cfg.gamma, cfg.eta)?;
            Ok(Bounds {
                quantum: crb_discord(&q, InfoKind::Quantum)?,
                classical: crb_discord(&q, InfoKind::Classical)?,
            })
        })
        .collect();

    let cells: Vec<(usize, u64)> = (0..cfg.r_values.len())
        .flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<(Result<SweepRow>, f64)> = cells
        .par_iter()
        .map(|&(i, seed)| {
            let t0 = Instant::now();
            let res = match &bounds[i] {
                Ok(b) => PhysicalParams::new(cfg.r_values[i], cfg.gamma, cfg.eta)
                    .and_then(|q| run_cell(cfg, &q, b, derive_seed(seed, i as u64)))
                    .map(|row| SweepRow { seed, ..row }),
                Err(e) => Err(Error::Numeric(format!("bounds unavailable: {e}"))),
            };
            (res, t0.elapsed().as_secs_f64())
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    for (&(i, seed), (res, seconds)) in cells.iter().zip(results) {
        let r = cfg.r_values[i];
        timings.push(CellTiming { r, seed, seconds });
        match res {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(CellFailure { r, seed, error: e.to_string() }),
        }
    }

    let summary = cfg
        .r_values
        .iter()
        .filter_map(|&r| {
            let group: Vec<SweepRow> = rows.iter().filter(|row| row.r == r).copied().collect();
            (!group.is_empty()).then(|| summarize(&group))
        })
        .collect();

    Ok(SweepOutput {
        rows,
        summary,
        failures,
        timings,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

pub const CELLS_FILE: &str = "cells.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_FILE: &str = "plot_km.csv";
pub const TABLE_JSON_FILE: &str = "sweep.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize)]
struct TableJson<'a> {
    schema_version: &'a str,
    rows: &'a [SweepRow],
    summary: &'a [SummaryRow],
}

#[derive(Serialize)]
struct Timings<'a> {
    total_seconds: f64,
    cells: &'a [CellTiming],
}

#[derive(Serialize)]
struct Versions<'a> {
    stsdiscord: &'a str,
    rng: &'a str,
    dataset_format: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: &'a str,
    command: &'a str,
    config: &'a SweepConfig,
    versions: Versions<'a>,
    threads: usize,
    r_grid_note: &'a str,
    timings: Timings<'a>,
    failures: &'a [CellFailure],
    files: Vec<&'a str>,
}

/// Writes the cell table, per-`r` summary, plot table, JSON copy of the
/// tables and the run manifest into `cfg.output_dir`, validating each file.
pub fn write_sweep(cfg: &SweepConfig, out: &SweepOutput) -> Result<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;

    let cells = dir.join(CELLS_FILE);
    write_csv(&out.rows, schema::CELLS_COLUMNS, &cells)?;
    let summary = dir.join(SUMMARY_FILE);
    write_csv(&out.summary, schema::SUMMARY_COLUMNS, &summary)?;
    let plot = dir.join(PLOT_FILE);
    write_csv(&out.plot_points(), schema::PLOT_COLUMNS, &plot)?;

    let table = dir.join(TABLE_JSON_FILE);
    write_json(
        &TableJson {
            schema_version: SCHEMA_VERSION,
            rows: &out.rows,
            summary: &out.summary,
        },
        &table,
    )?;

    let manifest = dir.join(MANIFEST_FILE);
    write_json(
        &Manifest {
            schema_version: SCHEMA_VERSION,
            command: "sweep",
            config: cfg,
            versions: Versions {
                stsdiscord: env!("CARGO_PKG_VERSION"),
                rng: RNG_ALGORITHM,
                dataset_format: crate::homodyne::FORMAT_VERSION,
            },
            threads: rayon::current_num_threads(),
            r_grid_note: R_GRID_NOTE,
            timings: Timings {
                total_seconds: out.total_seconds,
                cells: &out.timings,
            },
            failures: &out.failures,
            files: vec![CELLS_FILE, SUMMARY_FILE, PLOT_FILE, TABLE_JSON_FILE],
        },
        &manifest,
    )?;

    schema::validate_file(&cells, OutputKind::Cells)?;
    schema::validate_file(&summary, OutputKind::Summary)?;
    schema::validate_file(&plot, OutputKind::Plot)?;
    schema::validate_file(&table, OutputKind::SweepJson)?;
    schema::validate_file(&manifest, OutputKind::Manifest)?;
    Ok(())
}

pub(crate) fn write_csv<T: Serialize>(rows: &[T], header: &[&str], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    write_csv_to(rows, header, file)
}

fn write_csv_to<T: Serialize, W: std::io::Write>(rows: &[T], header: &[&str], sink: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(sink);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("csv output", e))?;
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

//! `stsdiscord` command line: `simulate`, `estimate`, `bounds`, `sweep`.
//!
//! Exit status 0 on success, 1 on runtime failure, 2 on usage errors.
//! `STSDISCORD_THREADS` sets the worker count.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimation::{
    bayesian_estimate, inversion_estimate, BayesConfig, GridSpec, InversionConfig,
    DEFAULT_BLOCKS, DEFAULT_MAX_REJECTION_RATE, DEFAULT_MC_TRIALS,
};
use crate::homodyne::{self, simulate_dataset, simulate_physical, HomodyneDataset};
use crate::model::{sts_discord, PhysicalParams, StsParams};
use crate::schema::{self, OutputKind, SCHEMA_VERSION};
use crate::sweep::{self, SweepConfig, DEFAULT_ETA, DEFAULT_GAMMA, DEFAULT_M_Q};

pub const THREADS_ENV: &str = "STSDISCORD_THREADS";
pub const DATASET_FILE: &str = "dataset.csv";

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stsdiscord", version, about = "Gaussian discord of two-mode squeezed thermal states from homodyne data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a dual-homodyne dataset.
    Simulate(SimulateArgs),
    /// Estimate the discord of a dataset.
    Estimate(EstimateArgs),
    /// Tabulate quantum and classical discord bounds over a squeezing grid.
    Bounds(BoundsArgs),
    /// Simulate, estimate and compare against the bounds over an (r, seed) grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Squeezing parameter; with --gamma and --eta gives the state.
    #[arg(long, conflicts_with_all = ["ns", "nt"], required_unless_present_all = ["ns", "nt"])]
    r: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GAMMA, conflicts_with_all = ["ns", "nt"])]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_ETA, conflicts_with_all = ["ns", "nt"])]
    eta: f64,
    /// Squeezing photon number (with --nt).
    #[arg(long, requires = "nt")]
    ns: Option<f64>,
    /// Thermal photon number (with --ns).
    #[arg(long, requires = "ns")]
    nt: Option<f64>,
    /// Shots per quadrature setting.
    #[arg(long, default_value_t = DEFAULT_M_Q)]
    mq: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output `.csv` file, or a directory that receives `dataset.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Inversion,
    Bayes,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Dataset `.csv`, or a directory holding `dataset.csv`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MC_TRIALS)]
    mc_trials: u64,
    #[arg(long, default_value_t = DEFAULT_BLOCKS)]
    blocks: usize,
    /// Posterior grid as POINTS:WIDTH (points per axis, half-width in prior σ).
    #[arg(long, value_parser = parse_grid, default_value = "201:6")]
    grid: GridSpec,
    #[arg(long, default_value_t = DEFAULT_MAX_REJECTION_RATE)]
    max_rejection_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the JSON record here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// START:STOP:STEP or a comma-separated list.
    #[arg(long, value_parser = parse_r_grid)]
    r_grid: RGrid,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_parser = parse_r_grid, default_value = "0.05:1:0.05")]
    r_grid: RGrid,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    #[arg(long, default_value_t = DEFAULT_M_Q)]
    mq: usize,
    #[arg(long, default_value_t = DEFAULT_BLOCKS)]
    blocks: usize,
    #[arg(long, default_value_t = DEFAULT_MC_TRIALS)]
    mc_trials: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_REJECTION_RATE)]
    max_rejection_rate: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    #[arg(long, value_parser = parse_grid, default_value = "201:6")]
    grid: GridSpec,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone)]
struct RGrid(Vec<f64>);

fn parse_r_grid(s: &str) -> std::result::Result<RGrid, String> {
    sweep::parse_r_grid(s).map(RGrid).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let (points, width) = s.split_once(':').ok_or("expected POINTS:WIDTH")?;
    let points: usize = points.parse().map_err(|_| format!("bad point count {points:?}"))?;
    let width_sigma: f64 = width.parse().map_err(|_| format!("bad width {width:?}"))?;
    if points < 3 || !(width_sigma > 0.0 && width_sigma.is_finite()) {
        return Err("need at least 3 points and a positive width".into());
    }
    Ok(GridSpec { points, width_sigma })
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| Failure::Usage(e.to_string()))
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a, &mut out),
        Command::Estimate(a) => cmd_estimate(a, &mut out),
        Command::Bounds(a) => cmd_bounds(a, &mut out),
        Command::Sweep(a) => cmd_sweep(a, &mut out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    // Fails only if a pool already exists, in which case it is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dataset_path(p: &Path) -> PathBuf {
    if p.extension().is_some_and(|e| e == "csv") {
        p.to_path_buf()
    } else {
        p.join(DATASET_FILE)
    }
}

fn emit_json(out: &mut dyn Write, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}").map_err(|e| Error::io("standard output", e))
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    if a.mq < 2 {
        return Err(Failure::Usage("--mq must be at least 2".into()));
    }
    let ds: HomodyneDataset = match (a.r, a.ns, a.nt) {
        (Some(r), _, _) => {
            let q = usage(PhysicalParams::new(r, a.gamma, a.eta))?;
            simulate_physical(&q, a.mq, a.seed)?
        }
        (None, Some(ns), Some(nt)) => {
            let p = usage(StsParams::new(ns, nt))?;
            simulate_dataset(&p, a.mq, a.seed)?
        }
        _ => return Err(Failure::Usage("give --r or both --ns and --nt".into())),
    };
    let p = ds
        .meta()
        .generator
        .state()
        .ok_or_else(|| Error::Numeric("simulated dataset has no generating state".into()))?;
    let path = dataset_path(&a.out);
    homodyne::save_dataset(&ds, &path)?;
    schema::validate_file(&path, OutputKind::Dataset)?;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "n_s": p.n_s(),
        "n_t": p.n_t(),
        "d_true": sts_discord(&p),
        "m_q": ds.m_q(),
        "seed": a.seed,
        "dataset": path,
        "metadata": homodyne::sidecar_path(&path),
    });
    emit_json(out, &report)?;
    Ok(())
}

fn cmd_estimate(a: EstimateArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let path = dataset_path(&a.input);
    let ds = homodyne::load_dataset(&path)?;
    let inversion = InversionConfig {
        mc_trials: a.mc_trials,
        max_rejection_rate: a.max_rejection_rate,
    };
    let record = match a.method {
        MethodArg::Inversion => inversion_estimate(&ds, &inversion, a.seed)?,
        MethodArg::Bayes => bayesian_estimate(
            &ds,
            &BayesConfig {
                n_blocks: a.blocks,
                grid: a.grid,
                inversion,
            },
            a.seed,
        )?,
    };
    let mut value = serde_json::to_value(record).map_err(Error::from)?;
    value["schema_version"] = json!(SCHEMA_VERSION);
    if let Some(dest) = &a.out {
        sweep::write_json(&value, dest)?;
        schema::validate_file(dest, OutputKind::Estimate)?;
    }
    emit_json(out, &value)?;
    Ok(())
}

fn cmd_bounds(a: BoundsArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let (rows, skipped) = usage(sweep::bounds_table(&a.r_grid.0, a.gamma, a.eta))?;
    for s in &skipped {
        eprintln!("warning: skipping r = {}: {}", s.r, s.reason);
    }
    match &a.out {
        Some(dest) => sweep::write_bounds_csv(&rows, dest)?,
        None => {
            let text = sweep::bounds_csv_string(&rows)?;
            out.write_all(text.as_bytes()).map_err(|e| Error::io("standard output", e))?;
        }
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let cfg = SweepConfig {
        r_values: a.r_grid.0,
        gamma: a.gamma,
        eta: a.eta,
        m_q: a.mq,
        n_blocks: a.blocks,
        mc_trials: a.mc_trials,
        max_rejection_rate: a.max_rejection_rate,
        seeds: a.seeds,
        grid: a.grid,
        output_dir: a.out,
    };
    usage(cfg.validate())?;
    let result = sweep::run_sweep(&cfg)?;
    sweep::write_sweep(&cfg, &result)?;
    for f in &result.failures {
        eprintln!("warning: cell r = {}, seed = {} failed: {}", f.r, f.seed, f.error);
    }
    let report = json!({
        "output_dir": cfg.output_dir,
        "cells": result.rows.len(),
        "failures": result.failures.len(),
        "seconds": result.total_seconds,
    });
    emit_json(out, &report)?;
    Ok(())
}

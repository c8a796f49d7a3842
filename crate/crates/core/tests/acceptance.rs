//! Acceptance criteria. Runs without the libtest harness and prints one
//! `PASS`/`FAIL` line per criterion; exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{integrated_fisher, is_psd};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stsdiscord::estimation::{
    bayesian_estimate, invert_variances, inversion_estimate, sample_variance, BayesConfig,
    InversionConfig,
};
use stsdiscord::fisher::{cfi_combined, cfi_quadrature, qfi_ns_nt, Quadrature};
use stsdiscord::homodyne::{derive_quadratures, simulate_dataset};
use stsdiscord::model::{
    binary_entropy, cm_discord, discord_kappa_form, effective_photons, quadrature_variances,
    sts_covariance, sts_discord,
};
use stsdiscord::sweep::{bounds_table, run_sweep, write_sweep, SweepConfig};
use stsdiscord::{PhysicalParams, StsParams, VacuumUnit};

/// Discord threshold for the low-discord criteria, in nats.
const SMALL_DISCORD: f64 = 0.05;

type Outcome = Result<String, String>;

fn sts(ns: f64, nt: f64) -> StsParams {
    StsParams::new(ns, nt).unwrap()
}

/// 500 × 200 points, `N_s ∈ [0.01, 5]`, `N_t ∈ [0, 1.99]`.
fn grid() -> impl Iterator<Item = (f64, f64)> {
    (1..=500).flat_map(|i| (0..200).map(move |j| (0.01 * i as f64, 0.01 * j as f64)))
}

fn within(limit: Duration, started: Instant) -> Result<f64, String> {
    let secs = started.elapsed().as_secs_f64();
    if secs < limit.as_secs_f64() {
        Ok(secs)
    } else {
        Err(format!("took {secs:.2} s, limit {} s", limit.as_secs()))
    }
}

fn formula_concordance() -> Outcome {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for (ns, nt) in grid() {
        let p = sts(ns, nt);
        let sm = sts_discord(&p);
        let kappa = discord_kappa_form(&p);
        let cm = cm_discord(&sts_covariance(&p, VacuumUnit::Half)).map_err(|e| e.to_string())?;
        worst = worst.max((sm - kappa).abs()).max((sm - cm).abs()).max((kappa - cm).abs());
    }
    let secs = within(Duration::from_secs(10), t0)?;
    if worst <= 1e-10 {
        Ok(format!("max pairwise difference {worst:.2e} in {secs:.2} s"))
    } else {
        Err(format!("max pairwise difference {worst:.2e}"))
    }
}

fn exact_limits() -> Outcome {
    let mut worst = 0.0f64;
    for (ns, nt) in grid() {
        worst = worst.max(sts_discord(&sts(0.0, nt)).abs());
        let h = binary_entropy(ns + 0.5).map_err(|e| e.to_string())?;
        worst = worst.max((sts_discord(&sts(ns, 0.0)) - h).abs());
    }
    if worst <= 1e-12 {
        Ok(format!("max deviation {worst:.2e}"))
    } else {
        Err(format!("max deviation {worst:.2e}"))
    }
}

fn inversion_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    for (ns, nt) in grid() {
        let (s, a) = quadrature_variances(&sts(ns, nt));
        let back = invert_variances(s, a).map_err(|e| format!("({ns}, {nt}): {e}"))?;
        worst = worst.max((back.n_s() - ns).abs()).max((back.n_t() - nt).abs());
    }
    if worst <= 1e-10 {
        Ok(format!("max deviation {worst:.2e}"))
    } else {
        Err(format!("max deviation {worst:.2e}"))
    }
}

fn fisher_validation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(472);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (ns, nt) = (rng.random_range(0.05..3.0), rng.random_range(0.05..1.5));
        for which in [Quadrature::Squeezed, Quadrature::AntiSqueezed] {
            let closed = *cfi_quadrature(&sts(ns, nt), which).unwrap().matrix();
            let numeric = integrated_fisher(ns, nt, which);
            let scale = closed.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            for (c, n) in closed.iter().flatten().zip(numeric.iter().flatten()) {
                worst = worst.max((c - n).abs() / scale);
            }
        }
    }
    if worst > 1e-6 {
        return Err(format!("closed vs integrated Fisher differ by {worst:.2e} relative"));
    }
    for (ns, nt) in grid() {
        let f = *cfi_combined(&sts(ns, nt)).unwrap().matrix();
        if f[0][1] != 0.0 || f[1][0] != 0.0 {
            return Err(format!("off-diagonal {:e} at ({ns}, {nt})", f[0][1]));
        }
        if nt == 0.0 {
            continue; // quantum information diverges on this edge
        }
        let h = *qfi_ns_nt(&sts(ns, nt)).unwrap().matrix();
        let d = [[h[0][0] - f[0][0], h[0][1] - f[0][1]], [h[1][0] - f[1][0], h[1][1] - f[1][1]]];
        if !is_psd(&d, 1e-12) {
            return Err(format!("H - F not PSD at ({ns}, {nt})"));
        }
    }
    Ok(format!("integrated Fisher within {worst:.2e}; zero cross terms; H - F PSD"))
}

fn variance_law() -> Outcome {
    let t0 = Instant::now();
    let m_q = 20_000;
    let p = effective_photons(&PhysicalParams::new(0.3, 0.73, 0.62).unwrap()).unwrap();
    let (v_sq, v_asq) = quadrature_variances(&p);
    // Both pools normalised by their true variance: 400 values of σ̂²/σ².
    let mut ratios = Vec::with_capacity(400);
    for seed in 0..200 {
        let q = derive_quadratures(&simulate_dataset(&p, m_q, 10_000 + seed).unwrap());
        ratios.push(sample_variance(&q.squeezed_pool()).unwrap().value() / v_sq);
        ratios.push(sample_variance(&q.antisqueezed_pool()).unwrap().value() / v_asq);
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // 2σ⁴/(2 M_q) divided by σ⁴.
    let predicted = 1.0 / m_q as f64;
    let rel = var / predicted - 1.0;
    let secs = within(Duration::from_secs(60), t0)?;
    if rel.abs() <= 0.10 {
        Ok(format!("empirical/predicted variance {:.4} in {secs:.1} s", 1.0 + rel))
    } else {
        Err(format!("empirical/predicted variance {:.4}", 1.0 + rel))
    }
}

fn small_discord_grid() -> Vec<f64> {
    let cfg = SweepConfig::default();
    let (rows, _) = bounds_table(&cfg.r_values, cfg.gamma, cfg.eta).unwrap();
    rows.iter().filter(|r| r.d_true <= SMALL_DISCORD).map(|r| r.r).collect()
}

fn quantum_gap() -> Outcome {
    let t0 = Instant::now();
    let cfg = SweepConfig::default();
    let (rows, _) = bounds_table(&cfg.r_values, cfg.gamma, cfg.eta).map_err(|e| e.to_string())?;
    let small: Vec<_> = rows.iter().filter(|r| r.d_true <= SMALL_DISCORD).collect();
    if small.is_empty() {
        return Err("no grid point with small discord".into());
    }
    let listing = small
        .iter()
        .map(|r| format!("r={} D={:.4}: {:.2} dB", r.r, r.d_true, r.ratio_db))
        .collect::<Vec<_>>()
        .join(", ");
    let secs = within(Duration::from_secs(10), t0)?;
    if small.iter().all(|r| (7.0..=13.0).contains(&r.ratio_db)) {
        Ok(format!("{listing} ({secs:.2} s)"))
    } else {
        Err(format!("{listing}; expected every value in [7, 13] dB"))
    }
}

fn near_optimal_bayes() -> Outcome {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = SweepConfig {
        r_values: small_discord_grid(),
        seeds: (1..=20).collect(),
        output_dir: dir.path().to_path_buf(),
        ..Default::default()
    };
    let out = run_sweep(&cfg).map_err(|e| e.to_string())?;
    if !out.failures.is_empty() {
        return Err(format!("{} cells failed: {:?}", out.failures.len(), out.failures));
    }
    let secs = within(Duration::from_secs(600), t0)?;
    let mut ok = true;
    let mut listing = Vec::new();
    for s in &out.summary {
        ok &= s.n_cells >= 20 && s.k_m_bay_db_mean <= 3.0 && s.k_m_inv_db_mean > s.k_m_bay_db_mean;
        listing.push(format!(
            "r={}: bayes {:.2} dB, inversion {:.2} dB",
            s.r, s.k_m_bay_db_mean, s.k_m_inv_db_mean
        ));
    }
    let listing = listing.join(", ");
    if ok {
        Ok(format!("{listing} ({secs:.0} s)"))
    } else {
        Err(listing)
    }
}

fn determinism() -> Outcome {
    let in_pool = |threads: usize, dir: &std::path::Path| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            let p = sts(0.2, 0.1);
            let ds = simulate_dataset(&p, 20_000, 99).unwrap();
            let inv = inversion_estimate(&ds, &InversionConfig::default(), 99).unwrap();
            let bay = bayesian_estimate(&ds, &BayesConfig::default(), 99).unwrap();
            let cfg = SweepConfig {
                r_values: vec![0.1, 0.3],
                m_q: 2_000,
                n_blocks: 10,
                seeds: vec![1, 2],
                output_dir: dir.to_path_buf(),
                ..Default::default()
            };
            let sweep = run_sweep(&cfg).unwrap();
            write_sweep(&cfg, &sweep).unwrap();
            (ds, inv, bay)
        })
    };
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let a = in_pool(1, dirs[0].path());
    let b = in_pool(4, dirs[1].path());
    let c = in_pool(4, dirs[2].path());
    if a != b || b != c {
        return Err("datasets or estimates differ between runs".into());
    }
    for name in ["cells.csv", "summary.csv", "plot_km.csv", "sweep.json"] {
        let read = |i: usize| std::fs::read(dirs[i].path().join(name)).unwrap();
        if read(0) != read(1) || read(1) != read(2) {
            return Err(format!("{name} differs between runs"));
        }
    }
    Ok("dataset, estimates and sweep tables identical on 1 and 4 workers".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("formula concordance", formula_concordance),
        ("exact limits", exact_limits),
        ("inversion round trip", inversion_round_trip),
        ("fisher validation", fisher_validation),
        ("monte carlo variance law", variance_law),
        ("quantum vs homodyne gap", quantum_gap),
        ("near-optimal bayesian estimation", near_optimal_bayes),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

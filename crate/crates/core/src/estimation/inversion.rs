use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{invert_variances, sample_variance, EstimateRecord, Method, VarianceEstimate};
use crate::error::{Error, Result};
use crate::homodyne::{derive_quadratures, HomodyneDataset};
use crate::model;
use crate::rng::{self, Purpose};

/// Trials per RNG substream.
const TRIALS_PER_CHUNK: u64 = 1 << 14;
/// A chunk gives up after this many redraws per requested trial.
const MAX_REJECTIONS_PER_TRIAL: u64 = 1000;

pub const MIN_MC_TRIALS: u64 = 10_000;
pub const DEFAULT_MC_TRIALS: u64 = 1_000_000;
pub const DEFAULT_MAX_REJECTION_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub mc_trials: u64,
    /// Fraction of draws with `s_sq <= 0` or `s_sq > s_asq` tolerated
    /// before failing.
    pub max_rejection_rate: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            mc_trials: DEFAULT_MC_TRIALS,
            max_rejection_rate: DEFAULT_MAX_REJECTION_RATE,
        }
    }
}

/// Intermediate quantities of an inversion run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionDetail {
    pub squeezed: VarianceEstimate,
    pub antisqueezed: VarianceEstimate,
    /// Draws with `s_sq <= 0` or `s_sq > s_asq`; these count against
    /// `max_rejection_rate`.
    pub rejected_draws: u64,
    /// Draws whose variance product falls below vacuum (`N_t < 0`). They are
    /// redrawn as well, but are expected near `N_t = 0` and raise no alarm.
    pub subvacuum_draws: u64,
    pub record: EstimateRecord,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: [f64; 3],
    m2: [f64; 3],
}

impl Moments {
    fn push(&mut self, v: [f64; 3]) {
        self.n += 1;
        let n = self.n as f64;
        for k in 0..3 {
            let delta = v[k] - self.mean[k];
            self.mean[k] += delta / n;
            self.m2[k] += delta * (v[k] - self.mean[k]);
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for k in 0..3 {
            let delta = other.mean[k] - self.mean[k];
            self.mean[k] += delta * nb / n;
            self.m2[k] += other.m2[k] + delta * delta * na * nb / n;
        }
        self.n += other.n;
    }

    fn variance(&self, k: usize) -> f64 {
        self.m2[k] / (self.n - 1) as f64
    }
}

/// Estimates `(N_s, N_t, D)` by inverting the pooled quadrature variances,
/// with uncertainties from a Monte Carlo over the variance estimates.
pub fn inversion_estimate(
    ds: &HomodyneDataset,
    cfg: &InversionConfig,
    seed: u64,
) -> Result<EstimateRecord> {
    inversion_detail(ds, cfg, seed).map(|d| d.record)
}

pub fn inversion_detail(
    ds: &HomodyneDataset,
    cfg: &InversionConfig,
    seed: u64,
) -> Result<InversionDetail> {
    if cfg.mc_trials < MIN_MC_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_MC_TRIALS} Monte Carlo trials, got {}",
            cfg.mc_trials
        )));
    }
    let quads = derive_quadratures(ds);
    let squeezed = sample_variance(&quads.squeezed_pool())?;
    let antisqueezed = sample_variance(&quads.antisqueezed_pool())?;

    let (moments, Redraws { rejected, subvacuum }) = monte_carlo(&squeezed, &antisqueezed, cfg, seed)?;
    let attempts = cfg.mc_trials + rejected + subvacuum;
    let rate = rejected as f64 / attempts as f64;
    if rate > cfg.max_rejection_rate {
        return Err(Error::RejectionRate {
            rate,
            limit: cfg.max_rejection_rate,
        });
    }

    let record = EstimateRecord {
        ns_hat: moments.mean[0],
        nt_hat: moments.mean[1],
        d_hat: moments.mean[2],
        var_ns: moments.variance(0),
        var_nt: moments.variance(1),
        var_d: moments.variance(2),
        method: Method::Inversion,
        resources_m: 4 * ds.m_q() as u64,
    };
    Ok(InversionDetail {
        squeezed,
        antisqueezed,
        rejected_draws: rejected,
        subvacuum_draws: subvacuum,
        record,
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Redraws {
    rejected: u64,
    subvacuum: u64,
}

fn monte_carlo(
    sq: &VarianceEstimate,
    asq: &VarianceEstimate,
    cfg: &InversionConfig,
    seed: u64,
) -> Result<(Moments, Redraws)> {
    let chunks = cfg.mc_trials.div_ceil(TRIALS_PER_CHUNK);
    let (sd_sq, sd_asq) = (sq.var_of_estimate().sqrt(), asq.var_of_estimate().sqrt());

    let per_chunk: Vec<Result<(Moments, Redraws)>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * TRIALS_PER_CHUNK;
            let trials = TRIALS_PER_CHUNK.min(cfg.mc_trials - start);
            let mut rng = rng::substream(seed, Purpose::MonteCarlo, chunk);
            let mut acc = Moments::default();
            let mut redraws = Redraws::default();
            while acc.n < trials {
                let (z1, z2) = rng::normal_pair(&mut rng);
                let s = sq.value() + sd_sq * z1;
                let a = asq.value() + sd_asq * z2;
                match invert_variances(s, a) {
                    Ok(p) => {
                        acc.push([p.n_s(), p.n_t(), model::sts_discord(&p)]);
                        continue;
                    }
                    Err(Error::Inconsistent(_)) => redraws.subvacuum += 1,
                    Err(_) => redraws.rejected += 1,
                }
                if redraws.rejected + redraws.subvacuum > MAX_REJECTIONS_PER_TRIAL * trials {
                    return Err(Error::Inconsistent(format!(
                        "variance estimates ({}, {}) leave almost no physical Monte Carlo draws",
                        sq.value(),
                        asq.value()
                    )));
                }
            }
            Ok((acc, redraws))
        })
        .collect();

    // Reduce in chunk order so the result does not depend on scheduling.
    let mut total = Moments::default();
    let mut redraws = Redraws::default();
    for part in per_chunk {
        let (m, r) = part?;
        total.merge(&m);
        redraws.rejected += r.rejected;
        redraws.subvacuum += r.subvacuum;
    }
    Ok((total, redraws))
}

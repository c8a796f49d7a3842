//! Posterior-grid Bayesian estimation of `(N_s, N_t)`.
//!
//! The likelihood of zero-mean Gaussian homodyne outcomes depends on the data
//! only through the sample count and sum of squares of each pool, so blocks
//! are reduced to [`SufficientStats`] before the grid is evaluated. The whole
//! computation stays in the log domain and is normalised by max-shifting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inversion::{inversion_detail, InversionConfig};
use super::{combine_inverse_variance, EstimateRecord, Method};
use crate::error::{Error, Result};
use crate::homodyne::{derive_quadratures, HomodyneDataset};
use crate::model::{self, StsParams};
use crate::numdiff;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Largest posterior mass allowed in the outermost cell of an artificial
/// (non-physical) grid edge.
pub const EDGE_MASS_LIMIT: f64 = 1e-3;

pub const DEFAULT_BLOCKS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    /// Half-width of each axis in prior standard deviations.
    pub width_sigma: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 201,
            width_sigma: 6.0,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.points < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 3 points per axis, got {}",
                self.points
            )));
        }
        if !(self.width_sigma > 0.0 && self.width_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid width must be positive, got {}",
                self.width_sigma
            )));
        }
        Ok(())
    }
}

/// Gaussian prior, truncated to the physical half-line `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrior {
    pub mean: f64,
    pub var: f64,
}

impl GaussianPrior {
    fn validate(&self, what: &str) -> Result<()> {
        if !(self.var > 0.0 && self.var.is_finite() && self.mean.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{what} prior needs finite mean and positive variance ({self:?})"
            )));
        }
        Ok(())
    }

    #[inline]
    fn log_density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * d * d / self.var
    }
}

/// Counts and sums of squares of the squeezed and anti-squeezed pools.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SufficientStats {
    pub n_sq: usize,
    pub ss_sq: f64,
    pub n_asq: usize,
    pub ss_asq: f64,
}

impl SufficientStats {
    /// Channels in `Q1..Q4` order; `Q1`, `Q4` are squeezed.
    pub fn from_channels(channels: [&[f64]; 4]) -> Self {
        let ss = |c: &[f64]| c.iter().map(|x| x * x).sum::<f64>();
        Self {
            n_sq: channels[0].len() + channels[3].len(),
            ss_sq: ss(channels[0]) + ss(channels[3]),
            n_asq: channels[1].len() + channels[2].len(),
            ss_asq: ss(channels[1]) + ss(channels[2]),
        }
    }

    pub fn log_likelihood(&self, p: &StsParams) -> f64 {
        let (v_sq, v_asq) = model::quadrature_variances(p);
        -0.5 * self.n_sq as f64 * (LN_2PI + v_sq.ln()) - 0.5 * self.ss_sq / v_sq
            - 0.5 * self.n_asq as f64 * (LN_2PI + v_asq.ln())
            - 0.5 * self.ss_asq / v_asq
    }
}

/// `Σ_k Σ_j ln p_k(q_j | N_s, N_t)` over the four channels (`Q1..Q4`).
pub fn log_likelihood(channels: [&[f64]; 4], p: &StsParams) -> f64 {
    SufficientStats::from_channels(channels).log_likelihood(p)
}

/// Normalised log-posterior on a rectangular `(N_s, N_t)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    pub ns_axis: Vec<f64>,
    pub nt_axis: Vec<f64>,
    /// Row-major, `log_post[i * nt_axis.len() + j]` at `(ns_axis[i], nt_axis[j])`.
    pub log_post: Vec<f64>,
    /// `ln 𝒩` of the unnormalised posterior.
    pub normalizer: f64,
    ns_lower_physical: bool,
    nt_lower_physical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEstimate {
    pub ns: f64,
    pub var_ns: f64,
    pub nt: f64,
    pub var_nt: f64,
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let h = 0.5 * (axis[k + 1] - axis[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

/// Axis over `mean ± width·σ`, clipped at zero. Returns whether the lower
/// end sits on the physical boundary.
fn build_axis(prior: &GaussianPrior, spec: &GridSpec, what: &str) -> Result<(Vec<f64>, bool)> {
    let sd = prior.var.sqrt();
    let lo_raw = prior.mean - spec.width_sigma * sd;
    let lo = lo_raw.max(0.0);
    let hi = prior.mean + spec.width_sigma * sd;
    if !(hi > lo) {
        return Err(Error::GridCoverage(format!(
            "{what} axis is empty (prior {prior:?})"
        )));
    }
    let step = (hi - lo) / (spec.points - 1) as f64;
    let axis: Vec<f64> = (0..spec.points).map(|k| lo + step * k as f64).collect();
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::GridCoverage(format!(
            "{what} axis spacing {step:e} unresolvable at {}",
            prior.mean
        )));
    }
    Ok((axis, lo_raw <= 0.0))
}

impl PosteriorGrid {
    fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let (wi, wj) = (trapezoid_weights(&self.ns_axis), trapezoid_weights(&self.nt_axis));
        let nj = self.nt_axis.len();
        let mut m_ns = vec![0.0; self.ns_axis.len()];
        let mut m_nt = vec![0.0; nj];
        for (i, row) in self.log_post.chunks(nj).enumerate() {
            for (j, lp) in row.iter().enumerate() {
                let p = lp.exp();
                m_ns[i] += wj[j] * p;
                m_nt[j] += wi[i] * p;
            }
        }
        (m_ns, m_nt)
    }

    /// Total posterior mass by the trapezoidal rule (1 after normalisation).
    pub fn mass(&self) -> f64 {
        let (m_ns, _) = self.marginals();
        trapezoid_weights(&self.ns_axis)
            .iter()
            .zip(&m_ns)
            .map(|(w, m)| w * m)
            .sum()
    }

    pub fn moments(&self) -> BlockEstimate {
        let (m_ns, m_nt) = self.marginals();
        let (ns, var_ns) = axis_moments(&self.ns_axis, &m_ns);
        let (nt, var_nt) = axis_moments(&self.nt_axis, &m_nt);
        BlockEstimate { ns, var_ns, nt, var_nt }
    }

    /// Marginal mass in the outermost cell at each artificial grid edge.
    fn check_coverage(&self) -> Result<()> {
        let (m_ns, m_nt) = self.marginals();
        let edges = [
            ("N_s", &self.ns_axis, &m_ns, self.ns_lower_physical),
            ("N_t", &self.nt_axis, &m_nt, self.nt_lower_physical),
        ];
        for (name, axis, marginal, lower_physical) in edges {
            let n = axis.len();
            let low = 0.5 * (marginal[0] + marginal[1]) * (axis[1] - axis[0]);
            let high = 0.5 * (marginal[n - 2] + marginal[n - 1]) * (axis[n - 1] - axis[n - 2]);
            if !lower_physical && low > EDGE_MASS_LIMIT {
                return Err(Error::GridCoverage(format!(
                    "{name}: mass {low:.2e} at lower edge {}",
                    axis[0]
                )));
            }
            if high > EDGE_MASS_LIMIT {
                return Err(Error::GridCoverage(format!(
                    "{name}: mass {high:.2e} at upper edge {}",
                    axis[n - 1]
                )));
            }
        }
        Ok(())
    }
}

fn axis_moments(axis: &[f64], marginal: &[f64]) -> (f64, f64) {
    let w = trapezoid_weights(axis);
    let mass: f64 = w.iter().zip(marginal).map(|(w, m)| w * m).sum();
    let mean = w
        .iter()
        .zip(marginal)
        .zip(axis)
        .map(|((w, m), x)| w * m * x)
        .sum::<f64>()
        / mass;
    let var = w
        .iter()
        .zip(marginal)
        .zip(axis)
        .map(|((w, m), x)| w * m * (x - mean) * (x - mean))
        .sum::<f64>()
        / mass;
    (mean, var)
}

/// Evaluates and normalises the posterior for one block.
pub fn posterior_grid(
    stats: &SufficientStats,
    prior_ns: &GaussianPrior,
    prior_nt: &GaussianPrior,
    spec: &GridSpec,
) -> Result<PosteriorGrid> {
    spec.validate()?;
    prior_ns.validate("N_s")?;
    prior_nt.validate("N_t")?;
    let (ns_axis, ns_lower_physical) = build_axis(prior_ns, spec, "N_s")?;
    let (nt_axis, nt_lower_physical) = build_axis(prior_nt, spec, "N_t")?;

    // σ²_sq/asq = t / u and t · u with t = 1 + 2N_t, u = (√(1+N_s) + √N_s)².
    let u: Vec<f64> = ns_axis
        .iter()
        .map(|&ns| {
            let s = (1.0 + ns).sqrt() + ns.sqrt();
            s * s
        })
        .collect();
    let t: Vec<f64> = nt_axis.iter().map(|&nt| 1.0 + 2.0 * nt).collect();
    let (n_sq, n_asq) = (stats.n_sq as f64, stats.n_asq as f64);

    let nj = nt_axis.len();
    let mut log_post = vec![0.0; ns_axis.len() * nj];
    for (i, row) in log_post.chunks_mut(nj).enumerate() {
        let (ui, ln_u) = (u[i], u[i].ln());
        let prior_i = prior_ns.log_density(ns_axis[i]);
        for (j, cell) in row.iter_mut().enumerate() {
            let tj = t[j];
            let ln_t = tj.ln();
            let ll = -0.5 * n_sq * (LN_2PI + ln_t - ln_u) - 0.5 * stats.ss_sq * ui / tj
                - 0.5 * n_asq * (LN_2PI + ln_t + ln_u)
                - 0.5 * stats.ss_asq / (tj * ui);
            *cell = ll + prior_i + prior_nt.log_density(nt_axis[j]);
        }
    }

    let peak = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::Numeric("log-posterior has no finite maximum".into()));
    }
    let (wi, wj) = (trapezoid_weights(&ns_axis), trapezoid_weights(&nt_axis));
    let mut z = 0.0;
    for (i, row) in log_post.chunks(nj).enumerate() {
        let inner: f64 = row.iter().zip(&wj).map(|(lp, w)| w * (lp - peak).exp()).sum();
        z += wi[i] * inner;
    }
    let normalizer = peak + z.ln();
    for lp in &mut log_post {
        *lp -= normalizer;
    }
    Ok(PosteriorGrid {
        ns_axis,
        nt_axis,
        log_post,
        normalizer,
        ns_lower_physical,
        nt_lower_physical,
    })
}

/// Posterior means and variances for one block; fails with
/// [`Error::GridCoverage`] if the grid truncates the posterior.
pub fn bayesian_block_estimate(
    stats: &SufficientStats,
    prior_ns: &GaussianPrior,
    prior_nt: &GaussianPrior,
    spec: &GridSpec,
) -> Result<BlockEstimate> {
    let grid = posterior_grid(stats, prior_ns, prior_nt, spec)?;
    grid.check_coverage()?;
    Ok(grid.moments())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesConfig {
    pub n_blocks: usize,
    pub grid: GridSpec,
    /// Settings of the whole-data inversion that provides the priors.
    pub inversion: InversionConfig,
}

impl Default for BayesConfig {
    fn default() -> Self {
        Self {
            n_blocks: DEFAULT_BLOCKS,
            grid: GridSpec::default(),
            inversion: InversionConfig::default(),
        }
    }
}

fn block_with_widening(
    stats: &SufficientStats,
    prior_ns: &GaussianPrior,
    prior_nt: &GaussianPrior,
    spec: &GridSpec,
) -> Result<BlockEstimate> {
    match bayesian_block_estimate(stats, prior_ns, prior_nt, spec) {
        Err(Error::GridCoverage(_)) => {
            let wider = GridSpec {
                width_sigma: 2.0 * spec.width_sigma,
                ..*spec
            };
            bayesian_block_estimate(stats, prior_ns, prior_nt, &wider)
        }
        other => other,
    }
}

/// Block-wise Bayesian estimate with priors from the whole-data inversion,
/// blocks combined by inverse-variance weighting and the discord variance
/// propagated to first order.
pub fn bayesian_estimate(ds: &HomodyneDataset, cfg: &BayesConfig, seed: u64) -> Result<EstimateRecord> {
    let m_q = ds.m_q();
    if cfg.n_blocks == 0 || m_q % cfg.n_blocks != 0 {
        return Err(Error::InvalidParameter(format!(
            "m_q = {m_q} is not divisible into {} blocks",
            cfg.n_blocks
        )));
    }
    let block_len = m_q / cfg.n_blocks;
    if block_len < 1 {
        return Err(Error::InvalidParameter("empty blocks".into()));
    }

    let inv = inversion_detail(ds, &cfg.inversion, seed)?.record;
    let prior_ns = GaussianPrior {
        mean: inv.ns_hat,
        var: inv.var_ns,
    };
    let prior_nt = GaussianPrior {
        mean: inv.nt_hat,
        var: inv.var_nt,
    };

    let quads = derive_quadratures(ds);
    let blocks: Vec<Result<BlockEstimate>> = (0..cfg.n_blocks)
        .into_par_iter()
        .map(|b| {
            let range = b * block_len..(b + 1) * block_len;
            let stats = SufficientStats::from_channels([
                &quads.q[0][range.clone()],
                &quads.q[1][range.clone()],
                &quads.q[2][range.clone()],
                &quads.q[3][range],
            ]);
            block_with_widening(&stats, &prior_ns, &prior_nt, &cfg.grid)
                .map_err(|e| match e {
                    Error::GridCoverage(msg) => Error::GridCoverage(format!("block {b}: {msg}")),
                    other => other,
                })
        })
        .collect();
    let blocks = blocks.into_iter().collect::<Result<Vec<_>>>()?;

    let ns_parts: Vec<(f64, f64)> = blocks.iter().map(|b| (b.ns, b.var_ns)).collect();
    let nt_parts: Vec<(f64, f64)> = blocks.iter().map(|b| (b.nt, b.var_nt)).collect();
    let (ns, var_ns) = combine_inverse_variance(&ns_parts)?;
    let (nt, var_nt) = combine_inverse_variance(&nt_parts)?;

    let (d_hat, var_d) = propagate_discord(ns, var_ns, nt, var_nt);
    Ok(EstimateRecord {
        d_hat,
        var_d,
        ns_hat: ns,
        nt_hat: nt,
        var_ns,
        var_nt,
        method: Method::Bayes,
        resources_m: (cfg.n_blocks * 4 * m_q) as u64,
    })
}

/// First-order propagation of independent `(N_s, N_t)` uncertainties to `D`.
pub(crate) fn propagate_discord(ns: f64, var_ns: f64, nt: f64, var_nt: f64) -> (f64, f64) {
    let (ns, nt) = (ns.max(0.0), nt.max(0.0));
    let g_s = numdiff::bounded(|x| model::discord_raw(x, nt), ns, numdiff::default_step(ns), 0.0);
    let g_t = numdiff::bounded(|x| model::discord_raw(ns, x), nt, numdiff::default_step(nt), 0.0);
    (model::discord_raw(ns, nt), g_s * g_s * var_ns + g_t * g_t * var_nt)
}

//! Discord estimators: variance inversion with Monte Carlo uncertainty, and
//! block-wise Bayesian posterior-grid estimation.

mod bayes;
mod inversion;

pub use bayes::{
    bayesian_block_estimate, bayesian_estimate, log_likelihood, posterior_grid, BayesConfig,
    DEFAULT_BLOCKS, EDGE_MASS_LIMIT,
    BlockEstimate, GridSpec, GaussianPrior, PosteriorGrid, SufficientStats,
};
pub use inversion::{
    inversion_detail, inversion_estimate, InversionConfig, InversionDetail, DEFAULT_MAX_REJECTION_RATE,
    DEFAULT_MC_TRIALS, MIN_MC_TRIALS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RADICAND_TOLERANCE, StsParams};

/// Clamp window for slightly negative inverted photon numbers.
pub const INVERSION_TOLERANCE: f64 = 1e-9;

/// Second moment of zero-mean homodyne samples, with the Gaussian
/// sampling variance `2σ⁴/n` of that estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    value: f64,
    var_of_estimate: f64,
    n_samples: usize,
}

impl VarianceEstimate {
    pub fn new(value: f64, n_samples: usize) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Degenerate(format!("variance estimate {value} is not positive")));
        }
        if n_samples < 2 {
            return Err(Error::InvalidParameter("need at least two samples".into()));
        }
        Ok(Self {
            value,
            var_of_estimate: 2.0 * value * value / n_samples as f64,
            n_samples,
        })
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    pub fn var_of_estimate(&self) -> f64 {
        self.var_of_estimate
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
}

/// `⟨q²⟩` about zero; the homodyne likelihood has no mean parameter.
pub fn sample_variance(samples: &[f64]) -> Result<VarianceEstimate> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two samples, got {}",
            samples.len()
        )));
    }
    let second = samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
    if second == 0.0 {
        return Err(Error::Degenerate("all samples are zero".into()));
    }
    VarianceEstimate::new(second, samples.len())
}

/// Inverts the squeezed/anti-squeezed variance model for `(N_s, N_t)`.
pub fn invert_variances(s_sq: f64, s_asq: f64) -> Result<StsParams> {
    if !(s_sq > 0.0 && s_sq.is_finite() && s_asq.is_finite()) {
        return Err(Error::Domain(format!(
            "variances must be positive and finite (s_sq = {s_sq}, s_asq = {s_asq})"
        )));
    }
    if s_sq > s_asq {
        return Err(Error::Domain(format!(
            "squeezed variance {s_sq} exceeds anti-squeezed variance {s_asq}"
        )));
    }
    let geo = (s_sq * s_asq).sqrt();
    let nt = 0.5 * (geo - 1.0);
    let ns = 0.5 * ((s_sq + s_asq) / (2.0 * geo) - 1.0);
    let check = |v: f64, what: &str| -> Result<f64> {
        if v < -INVERSION_TOLERANCE {
            Err(Error::Inconsistent(format!(
                "{what} = {v:e} (variance product {:.6} below vacuum)",
                s_sq * s_asq
            )))
        } else {
            Ok(v.max(0.0))
        }
    };
    let nt = check(nt, "n_t")?;
    // AM-GM keeps this non-negative up to rounding.
    let ns = if ns < 0.0 && ns >= -RADICAND_TOLERANCE { 0.0 } else { check(ns, "n_s")? };
    StsParams::new(ns, nt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Inversion,
    Bayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub d_hat: f64,
    pub var_d: f64,
    pub ns_hat: f64,
    pub nt_hat: f64,
    pub var_ns: f64,
    pub var_nt: f64,
    pub method: Method,
    /// Resource count `M` used for noise ratios.
    pub resources_m: u64,
}

/// Inverse-variance weighted mean of `(mean, variance)` pairs.
pub fn combine_inverse_variance(parts: &[(f64, f64)]) -> Result<(f64, f64)> {
    if parts.is_empty() {
        return Err(Error::InvalidParameter("nothing to combine".into()));
    }
    let mut weight_sum = 0.0;
    let mut weighted = 0.0;
    for &(mean, var) in parts {
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::Degenerate(format!("block variance {var} is not positive")));
        }
        weight_sum += 1.0 / var;
        weighted += mean / var;
    }
    Ok((weighted / weight_sum, 1.0 / weight_sum))
}

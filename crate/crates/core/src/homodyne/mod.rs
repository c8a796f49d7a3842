//! Synthetic dual-homodyne records of an STS.
//!
//! Each shot yields one quadrature pair per mode: `(x0, x1)` on the X
//! setting and `(p0, p1)` on the P setting. Samples are in shot-noise units
//! (vacuum variance 1).

mod io;

pub use io::{load_dataset, save_dataset, sidecar_path, FORMAT_VERSION};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, PhysicalParams, StsParams, VacuumUnit};
use crate::rng::{self, Purpose};

/// Shots drawn from one RNG substream.
const SHOTS_PER_STREAM: usize = 4096;

/// What produced a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    Sts {
        n_s: f64,
        n_t: f64,
    },
    Physical {
        r: f64,
        gamma: f64,
        eta: f64,
        n_s: f64,
        n_t: f64,
    },
    External,
}

impl Generator {
    /// Generating state, when known.
    pub fn state(&self) -> Option<StsParams> {
        match *self {
            Generator::Sts { n_s, n_t } | Generator::Physical { n_s, n_t, .. } => {
                StsParams::new(n_s, n_t).ok()
            }
            Generator::External => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: String,
    pub seed: u64,
    pub m_q: usize,
    pub generator: Generator,
    /// Sampling algorithm identifier; see [`rng::RNG_ALGORITHM`].
    pub rng: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneDataset {
    shots_x: Vec<[f64; 2]>,
    shots_p: Vec<[f64; 2]>,
    meta: DatasetMeta,
}

impl HomodyneDataset {
    pub fn new(shots_x: Vec<[f64; 2]>, shots_p: Vec<[f64; 2]>, meta: DatasetMeta) -> Result<Self> {
        if shots_x.len() != meta.m_q || shots_p.len() != meta.m_q {
            return Err(Error::InvalidParameter(format!(
                "expected {} shots per setting, got {} (X) and {} (P)",
                meta.m_q,
                shots_x.len(),
                shots_p.len()
            )));
        }
        if shots_x.iter().chain(&shots_p).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("dataset contains non-finite samples".into()));
        }
        Ok(Self {
            shots_x,
            shots_p,
            meta,
        })
    }

    #[inline]
    pub fn m_q(&self) -> usize {
        self.meta.m_q
    }

    pub fn shots_x(&self) -> &[[f64; 2]] {
        &self.shots_x
    }

    pub fn shots_p(&self) -> &[[f64; 2]] {
        &self.shots_p
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }
}

/// The four joint quadratures, one sample per shot each.
///
/// `q[0]` and `q[3]` are the squeezed combinations `(x0+x1)/√2` and
/// `(p0−p1)/√2`; `q[1]` and `q[2]` are anti-squeezed.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratures {
    pub q: [Vec<f64>; 4],
}

impl Quadratures {
    /// `{Q1} ∪ {Q4}`, `2·m_q` values.
    pub fn squeezed_pool(&self) -> Vec<f64> {
        self.q[0].iter().chain(&self.q[3]).copied().collect()
    }

    /// `{Q2} ∪ {Q3}`, `2·m_q` values.
    pub fn antisqueezed_pool(&self) -> Vec<f64> {
        self.q[1].iter().chain(&self.q[2]).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.q[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.q[0].is_empty()
    }
}

pub fn derive_quadratures(ds: &HomodyneDataset) -> Quadratures {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q1 = ds.shots_x.iter().map(|[a, b]| (a + b) * s).collect();
    let q2 = ds.shots_x.iter().map(|[a, b]| (a - b) * s).collect();
    let q3 = ds.shots_p.iter().map(|[a, b]| (a + b) * s).collect();
    let q4 = ds.shots_p.iter().map(|[a, b]| (a - b) * s).collect();
    Quadratures {
        q: [q1, q2, q3, q4],
    }
}

/// Draws `m_q` shots per setting from the STS with parameters `p`.
pub fn simulate_dataset(p: &StsParams, m_q: usize, seed: u64) -> Result<HomodyneDataset> {
    simulate_with(p, m_q, seed, Generator::Sts {
        n_s: p.n_s(),
        n_t: p.n_t(),
    })
}

/// As [`simulate_dataset`], starting from the physical parameters.
pub fn simulate_physical(q: &PhysicalParams, m_q: usize, seed: u64) -> Result<HomodyneDataset> {
    let p = model::effective_photons(q)?;
    simulate_with(&p, m_q, seed, Generator::Physical {
        r: q.r(),
        gamma: q.gamma(),
        eta: q.eta(),
        n_s: p.n_s(),
        n_t: p.n_t(),
    })
}

fn simulate_with(p: &StsParams, m_q: usize, seed: u64, generator: Generator) -> Result<HomodyneDataset> {
    if m_q < 2 {
        return Err(Error::InvalidParameter(format!("m_q must be >= 2, got {m_q}")));
    }
    let cm = model::sts_covariance(p, VacuumUnit::One);
    // X pairs anti-correlate so that (x0 + x1)/√2 is squeezed; P pairs correlate.
    let shots_x = sample_pairs(cm.a(), -cm.c(), m_q, seed, Purpose::ShotsX);
    let shots_p = sample_pairs(cm.a(), cm.c(), m_q, seed, Purpose::ShotsP);
    HomodyneDataset::new(shots_x, shots_p, DatasetMeta {
        format_version: FORMAT_VERSION.to_string(),
        seed,
        m_q,
        generator,
        rng: rng::RNG_ALGORITHM.to_string(),
    })
}

/// Zero-mean pairs with `Var = var`, `Cov = cov`, via the Cholesky factor.
fn sample_pairs(var: f64, cov: f64, n: usize, seed: u64, purpose: Purpose) -> Vec<[f64; 2]> {
    let l00 = var.sqrt();
    let l10 = cov / l00;
    // var² ≥ cov² holds for physical states; guard the rounding residue.
    let l11 = (var - l10 * l10).max(0.0).sqrt();
    let mut out = vec![[0.0; 2]; n];
    out.par_chunks_mut(SHOTS_PER_STREAM)
        .enumerate()
        .for_each(|(chunk, shots)| {
            let mut rng = rng::substream(seed, purpose, chunk as u64);
            for shot in shots {
                let (z1, z2) = rng::normal_pair(&mut rng);
                *shot = [l00 * z1, l10 * z1 + l11 * z2];
            }
        });
    out
}

//! Two-mode squeezed thermal states (STS): parametrisation, Gaussian discord
//! and the homodyne quadrature-variance model.
//!
//! All entropies are in nats. Quadrature variances use shot-noise units in
//! which the vacuum variance is 1, unless a [`VacuumUnit`] says otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack allowed on radicands and physicality checks before a
/// rounding artefact is treated as a real violation.
pub const RADICAND_TOLERANCE: f64 = 1e-12;

/// Effective squeezing and thermal photon numbers `(N_s, N_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StsParams {
    n_s: f64,
    n_t: f64,
}

impl StsParams {
    pub fn new(n_s: f64, n_t: f64) -> Result<Self> {
        if !n_s.is_finite() || !n_t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "photon numbers must be finite (n_s = {n_s}, n_t = {n_t})"
            )));
        }
        if n_s < 0.0 || n_t < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "photon numbers must be non-negative (n_s = {n_s}, n_t = {n_t})"
            )));
        }
        Ok(Self { n_s, n_t })
    }

    pub fn vacuum() -> Self {
        Self { n_s: 0.0, n_t: 0.0 }
    }

    #[inline]
    pub fn n_s(&self) -> f64 {
        self.n_s
    }

    #[inline]
    pub fn n_t(&self) -> f64 {
        self.n_t
    }
}

/// Experimental knobs: squeezing strength `r`, relative parasite gain `gamma`
/// and overall homodyne efficiency `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    r: f64,
    gamma: f64,
    eta: f64,
}

impl PhysicalParams {
    pub fn new(r: f64, gamma: f64, eta: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidParameter(format!("r must be >= 0, got {r}")));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in (0, 1], got {eta}"
            )));
        }
        Ok(Self { r, gamma, eta })
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn with_r(&self, r: f64) -> Result<Self> {
        Self::new(r, self.gamma, self.eta)
    }
}

/// Vacuum-variance convention of a covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VacuumUnit {
    /// Vacuum quadrature variance 1 (shot-noise units).
    One,
    /// Vacuum quadrature variance 1/2.
    Half,
}

impl VacuumUnit {
    #[inline]
    pub fn vacuum_variance(self) -> f64 {
        match self {
            VacuumUnit::One => 1.0,
            VacuumUnit::Half => 0.5,
        }
    }
}

/// Symmetric two-mode covariance matrix
///
/// ```text
/// | a·1   c·σz |
/// | c·σz  a·1  |
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovMatrix2Mode {
    a: f64,
    c: f64,
    unit: VacuumUnit,
}

impl CovMatrix2Mode {
    pub fn new(a: f64, c: f64, unit: VacuumUnit) -> Result<Self> {
        let v = unit.vacuum_variance();
        if !a.is_finite() || !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "covariance entries must be finite with c >= 0 (a = {a}, c = {c})"
            )));
        }
        let slack = RADICAND_TOLERANCE * a.abs().max(1.0);
        if a < v - slack {
            return Err(Error::Domain(format!(
                "single-mode variance {a} below vacuum level {v}"
            )));
        }
        if a * a - c * c < v * v - slack * a.abs().max(1.0) {
            return Err(Error::Domain(format!(
                "unphysical covariance: a^2 - c^2 = {} < {}",
                a * a - c * c,
                v * v
            )));
        }
        Ok(Self { a, c, unit })
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn c(&self) -> f64 {
        self.c
    }

    #[inline]
    pub fn unit(&self) -> VacuumUnit {
        self.unit
    }

    /// `det Σ` of the full 4×4 matrix.
    pub fn determinant(&self) -> f64 {
        let d = self.a * self.a - self.c * self.c;
        d * d
    }
}

#[inline]
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `h(x) = (x+1/2) ln(x+1/2) - (x-1/2) ln(x-1/2)` for `x >= 1/2`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.5 {
        return Err(Error::Domain(format!("binary entropy needs x >= 1/2, got {x}")));
    }
    Ok(entropy_unchecked(x))
}

/// Same as [`binary_entropy`] but rounds arguments within
/// [`RADICAND_TOLERANCE`] below 1/2 up to 1/2.
fn entropy_tolerant(x: f64) -> Result<f64> {
    if x < 0.5 && x >= 0.5 - RADICAND_TOLERANCE {
        return Ok(0.0);
    }
    binary_entropy(x)
}

#[inline]
fn entropy_unchecked(x: f64) -> f64 {
    xlogx(x + 0.5) - xlogx(x - 0.5)
}

/// Gaussian discord of an STS in closed form (nats).
pub fn sts_discord(p: &StsParams) -> f64 {
    discord_raw(p.n_s, p.n_t)
}

/// Closed form in `(N_s, N_t)` without validation; callers guarantee
/// non-negative finite inputs. Used for finite differencing.
pub(crate) fn discord_raw(ns: f64, nt: f64) -> f64 {
    let cross = ns + nt + 2.0 * ns * nt;
    let s = 1.0 + cross;
    let thermal = nt * (nt + 1.0) / s;
    let upper = (ns + 2.0 * ns * nt + (1.0 + nt) * (1.0 + nt)) / s;
    let d = 2.0 * xlogx(nt) - 2.0 * xlogx(nt + 1.0) - xlogx(cross) - xlogx(thermal) + xlogx(s)
        + xlogx(upper);
    // Rounding can leave a ~1e-17 negative residue at the zero-discord boundary.
    d.max(0.0)
}

/// The same discord written through the three `κ` arguments,
/// `h(κ₁/2) − 2h(κ₂) + h(κ₃)`.
pub fn discord_kappa_form(p: &StsParams) -> f64 {
    let (ns, nt) = (p.n_s, p.n_t);
    let k1 = (1.0 + 2.0 * ns) * (1.0 + 2.0 * nt);
    let k2 = nt + 0.5;
    let k3 = (1.0 + ns + nt) * (nt + 0.5) / (1.0 + ns + nt + 2.0 * ns * nt);
    let d = entropy_unchecked(k1 / 2.0) - 2.0 * entropy_unchecked(k2)
        + entropy_unchecked(k3.max(0.5));
    d.max(0.0)
}

/// Variances of the squeezed and anti-squeezed joint quadratures,
/// `(1 + 2N_s ∓ 2√(N_s(1+N_s)))(1 + 2N_t)`.
pub fn quadrature_variances(p: &StsParams) -> (f64, f64) {
    let thermal = 1.0 + 2.0 * p.n_t;
    // (√(1+N_s) ∓ √N_s)², the squeezed branch in its cancellation-free form.
    let root_sum = (1.0 + p.n_s).sqrt() + p.n_s.sqrt();
    let asq = root_sum * root_sum;
    (thermal / asq, thermal * asq)
}

/// Maps `(r, γ, η)` onto the effective `(N_s, N_t)` of the detected state.
pub fn effective_photons(q: &PhysicalParams) -> Result<StsParams> {
    let (ns, nt) = effective_photons_raw(q.r, q.gamma, q.eta)?;
    StsParams::new(ns, nt)
}

pub(crate) fn effective_photons_raw(r: f64, gamma: f64, eta: f64) -> Result<(f64, f64)> {
    let (sh, ch) = (r.sinh(), r.cosh());
    let (sh2, ch2) = (sh * sh, ch * ch);
    let ch_rg = (r * gamma).cosh();
    let ch_2rg = (2.0 * r * gamma).cosh();

    let a = 1.0 - eta + eta * ch2 * ch_2rg + eta * sh2;
    let b = 1.0 - eta + eta * sh2;

    let radicand = eta * eta * ch2 * ch2 * ch_2rg * ch_2rg
        + b * b
        + 2.0 * eta * ch2 * (-2.0 * eta * ch_rg.powi(4) * sh2 + ch_2rg * b);
    let radicand = clamp_radicand(radicand, "squeezing-photon denominator")?;
    if radicand == 0.0 {
        return Err(Error::Numeric(
            "squeezing-photon denominator vanishes".to_string(),
        ));
    }
    let ns = 0.5 * (-1.0 + a / radicand.sqrt());

    let x = eta * ch_rg * ch_rg * (2.0 * r).sinh();
    let thermal_radicand = clamp_radicand((a - x) * (a + x), "thermal-photon radicand")?;
    let nt = 0.5 * (-1.0 + thermal_radicand.sqrt());

    Ok((
        clamp_photons(ns, "n_s")?,
        clamp_photons(nt, "n_t")?,
    ))
}

fn clamp_radicand(v: f64, what: &str) -> Result<f64> {
    if v.is_nan() {
        return Err(Error::Numeric(format!("{what} is NaN")));
    }
    if v < -RADICAND_TOLERANCE {
        return Err(Error::Numeric(format!("{what} is negative ({v:e})")));
    }
    Ok(v.max(0.0))
}

fn clamp_photons(v: f64, what: &str) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::Numeric(format!("{what} is not finite")));
    }
    if v < -RADICAND_TOLERANCE {
        return Err(Error::Numeric(format!("{what} is negative ({v:e})")));
    }
    Ok(v.max(0.0))
}

/// Covariance matrix of an STS in the requested vacuum convention.
pub fn sts_covariance(p: &StsParams, unit: VacuumUnit) -> CovMatrix2Mode {
    let thermal = 1.0 + 2.0 * p.n_t;
    let scale = unit.vacuum_variance();
    CovMatrix2Mode {
        a: scale * thermal * (1.0 + 2.0 * p.n_s),
        c: scale * 2.0 * thermal * (p.n_s * (p.n_s + 1.0)).sqrt(),
        unit,
    }
}

/// Gaussian A-discord from the symplectic invariants of a symmetric
/// covariance matrix. Only defined in the vacuum-½ convention.
pub fn cm_discord(cm: &CovMatrix2Mode) -> Result<f64> {
    if cm.unit != VacuumUnit::Half {
        return Err(Error::InvalidParameter(
            "cm_discord requires a covariance matrix in vacuum-1/2 units".to_string(),
        ));
    }
    let (a, c) = (cm.a, cm.c);
    let i1 = a * a;
    let i2 = a * a;
    let i3 = -c * c;
    let i4 = cm.determinant();

    let delta = i1 + i2 + 2.0 * i3;
    let disc = delta * delta - 4.0 * i4;
    // Scale-aware slack: both terms are O(a^4) and cancel exactly for STS.
    if disc < -RADICAND_TOLERANCE * (delta * delta).max(1.0) {
        return Err(Error::Domain(format!(
            "negative symplectic discriminant ({disc:e})"
        )));
    }
    let root = disc.max(0.0).sqrt();
    let d_minus = (0.5 * (delta - root)).max(0.0).sqrt();
    let d_plus = (0.5 * (delta + root)).sqrt();

    let sqrt_i1 = i1.sqrt();
    let sqrt_i2 = i2.sqrt();
    let conditional = (sqrt_i1 + 2.0 * (i1 * i2).sqrt() + 2.0 * i3) / (1.0 + 2.0 * sqrt_i2);

    let d = entropy_tolerant(sqrt_i2)? - entropy_tolerant(d_minus)? - entropy_tolerant(d_plus)?
        + entropy_tolerant(conditional)?;
    Ok(d.max(0.0))
}

//! Quantum and classical Fisher information for the STS family, the
//! reparametrisation chain `{N_s, N_t} → {r, γ} → {D, γ}` and the resulting
//! Cramér–Rao bounds on the discord.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, PhysicalParams, StsParams};
use crate::numdiff;

pub type Mat2 = [[f64; 2]; 2];

/// Below this many thermal photons the QFI pole is treated as "N_t known".
pub const THERMAL_POLE_CUTOFF: f64 = 1e-9;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const PSD_TOLERANCE: f64 = 1e-10;
const MIN_DETERMINANT: f64 = 1e-300;
const MIN_DISCORD_SLOPE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    NsNt,
    RGamma,
    DGamma,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::NsNt => "{N_s, N_t}",
            Basis::RGamma => "{r, gamma}",
            Basis::DGamma => "{D, gamma}",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfoKind {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    Squeezed,
    AntiSqueezed,
}

/// Symmetric positive-semidefinite 2×2 information matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoMatrix2 {
    m: Mat2,
    basis: Basis,
    kind: InfoKind,
}

impl InfoMatrix2 {
    pub fn new(m: Mat2, basis: Basis, kind: InfoKind) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite information matrix {m:?}")));
        }
        let scale = norm(&m).max(1.0);
        if (m[0][1] - m[1][0]).abs() > SYMMETRY_TOLERANCE * scale {
            return Err(Error::Numeric(format!("information matrix not symmetric: {m:?}")));
        }
        let (lo, _) = eigenvalues(&m);
        if lo < -PSD_TOLERANCE * scale {
            return Err(Error::Numeric(format!(
                "information matrix not positive semidefinite (min eigenvalue {lo:e})"
            )));
        }
        Ok(Self { m, basis, kind })
    }

    #[inline]
    pub fn matrix(&self) -> &Mat2 {
        &self.m
    }

    #[inline]
    pub fn basis(&self) -> Basis {
        self.basis
    }

    #[inline]
    pub fn kind(&self) -> InfoKind {
        self.kind
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        eigenvalues(&self.m)
    }

    pub fn inverse(&self) -> Result<Mat2> {
        invert(&self.m)
    }
}

/// Transfer matrix `J[μ][ν] = ∂λ_μ / ∂λ̃_ν`: rows index the old parameters
/// (`from`), columns the new ones (`to`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2 {
    j: Mat2,
    from: Basis,
    to: Basis,
}

impl Jacobian2 {
    pub fn new(j: Mat2, from: Basis, to: Basis) -> Result<Self> {
        if j.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite Jacobian {j:?}")));
        }
        Ok(Self { j, from, to })
    }

    pub fn identity(basis: Basis) -> Self {
        Self {
            j: [[1.0, 0.0], [0.0, 1.0]],
            from: basis,
            to: basis,
        }
    }

    #[inline]
    pub fn matrix(&self) -> &Mat2 {
        &self.j
    }

    #[inline]
    pub fn from_basis(&self) -> Basis {
        self.from
    }

    #[inline]
    pub fn to_basis(&self) -> Basis {
        self.to
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbResult {
    /// Lower bound on `M·σ²(D)`.
    pub var_bound_per_shot: f64,
    pub kind: InfoKind,
    pub at_params: PhysicalParams,
}

fn norm(m: &Mat2) -> f64 {
    m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn eigenvalues(m: &Mat2) -> (f64, f64) {
    let half_trace = 0.5 * (m[0][0] + m[1][1]);
    let off = 0.5 * (m[0][1] + m[1][0]);
    let half_gap = 0.5 * (m[0][0] - m[1][1]);
    let radius = half_gap.hypot(off);
    (half_trace - radius, half_trace + radius)
}

fn invert(m: &Mat2) -> Result<Mat2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !det.is_finite() || det.abs() < MIN_DETERMINANT {
        return Err(Error::NotInvertible { det });
    }
    Ok([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][k] + a[i][1] * b[1][k];
        }
    }
    out
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// QFI matrix of the STS family in `{N_s, N_t}`.
pub fn qfi_ns_nt(p: &StsParams) -> Result<InfoMatrix2> {
    let (ns, nt) = (p.n_s(), p.n_t());
    if ns == 0.0 {
        return Err(Error::Pole("N_s = 0 (squeezing entry of the QFI)".into()));
    }
    if nt == 0.0 {
        return Err(Error::Pole("N_t = 0 (thermal entry of the QFI)".into()));
    }
    let thermal = 1.0 + 2.0 * nt;
    let h_ss = thermal * thermal / (ns * (1.0 + ns) * (1.0 + 2.0 * nt + 2.0 * nt * nt));
    let h_tt = 1.0 / (nt * (1.0 + nt));
    InfoMatrix2::new([[h_ss, 0.0], [0.0, h_tt]], Basis::NsNt, InfoKind::Quantum)
}

/// Per-outcome Fisher information of homodyning one joint quadrature.
pub fn cfi_quadrature(p: &StsParams, which: Quadrature) -> Result<InfoMatrix2> {
    let (ns, nt) = (p.n_s(), p.n_t());
    if ns == 0.0 {
        return Err(Error::Pole("N_s = 0 (homodyne Fisher information)".into()));
    }
    let thermal = 1.0 + 2.0 * nt;
    let sign = match which {
        Quadrature::Squeezed => -1.0,
        Quadrature::AntiSqueezed => 1.0,
    };
    let f_ss = 1.0 / (2.0 * ns + 2.0 * ns * ns);
    let f_tt = 2.0 / (thermal * thermal);
    let f_st = sign / ((ns * (1.0 + ns)).sqrt() * thermal);
    InfoMatrix2::new([[f_ss, f_st], [f_st, f_tt]], Basis::NsNt, InfoKind::Classical)
}

/// Half squeezed, half anti-squeezed outcomes: `½(F_sq + F_asq)`.
pub fn cfi_combined(p: &StsParams) -> Result<InfoMatrix2> {
    let sq = cfi_quadrature(p, Quadrature::Squeezed)?;
    let asq = cfi_quadrature(p, Quadrature::AntiSqueezed)?;
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            m[i][k] = 0.5 * (sq.m[i][k] + asq.m[i][k]);
        }
    }
    // The ∓ cross terms are exact negatives of each other.
    m[0][1] = 0.0;
    m[1][0] = 0.0;
    InfoMatrix2::new(m, Basis::NsNt, InfoKind::Classical)
}

/// `∂{N_s, N_t}/∂{r, γ}` by central differences.
pub fn jacobian_b12(q: &PhysicalParams) -> Result<Jacobian2> {
    jacobian_b12_scaled(q, 1.0)
}

/// [`jacobian_b12`] with every finite-difference step multiplied by
/// `step_scale` (used for step-halving checks).
pub fn jacobian_b12_scaled(q: &PhysicalParams, step_scale: f64) -> Result<Jacobian2> {
    if q.r() <= 0.0 {
        return Err(Error::InvalidParameter("transfer matrix B12 needs r > 0".into()));
    }
    let (r, g, eta) = (q.r(), q.gamma(), q.eta());
    // Surface model errors at the evaluation point before differencing.
    model::effective_photons_raw(r, g, eta)?;
    let hr = numdiff::default_step(r) * step_scale;
    let hg = numdiff::default_step(g) * step_scale;

    let eval = |r: f64, g: f64| model::effective_photons_raw(r, g, eta);
    let (ns_rp, nt_rp) = eval(r + hr, g)?;
    let (ns_rm, nt_rm) = eval(r - hr, g)?;
    // The model depends on γ only through cosh, so γ - h < 0 is harmless.
    let (ns_gp, nt_gp) = eval(r, g + hg)?;
    let (ns_gm, nt_gm) = eval(r, g - hg)?;

    let j = [
        [(ns_rp - ns_rm) / (2.0 * hr), (ns_gp - ns_gm) / (2.0 * hg)],
        [(nt_rp - nt_rm) / (2.0 * hr), (nt_gp - nt_gm) / (2.0 * hg)],
    ];
    Jacobian2::new(j, Basis::NsNt, Basis::RGamma)
}

/// Discord as a function of the physical parameters at fixed `eta`.
pub(crate) fn discord_of_physical(r: f64, gamma: f64, eta: f64) -> Result<f64> {
    let (ns, nt) = model::effective_photons_raw(r, gamma, eta)?;
    Ok(model::discord_raw(ns, nt))
}

/// `∂{r, γ}/∂{D, γ}`, obtained by inverting `∂D/∂{r, γ}` at fixed γ.
pub fn jacobian_b23(q: &PhysicalParams) -> Result<Jacobian2> {
    jacobian_b23_scaled(q, 1.0)
}

pub fn jacobian_b23_scaled(q: &PhysicalParams, step_scale: f64) -> Result<Jacobian2> {
    let (r, g, eta) = (q.r(), q.gamma(), q.eta());
    if r == 0.0 {
        return Err(Error::SingularJacobian("dD/dr vanishes at r = 0".into()));
    }
    discord_of_physical(r, g, eta)?;
    let hr = numdiff::default_step(r) * step_scale;
    let hg = numdiff::default_step(g) * step_scale;
    let d_r = (discord_of_physical(r + hr, g, eta)? - discord_of_physical(r - hr, g, eta)?)
        / (2.0 * hr);
    let d_g = (discord_of_physical(r, g + hg, eta)? - discord_of_physical(r, g - hg, eta)?)
        / (2.0 * hg);
    if !(d_r.abs() >= MIN_DISCORD_SLOPE) {
        return Err(Error::SingularJacobian(format!(
            "|dD/dr| = {:e} below {MIN_DISCORD_SLOPE:e}",
            d_r.abs()
        )));
    }
    Jacobian2::new(
        [[1.0 / d_r, -d_g / d_r], [0.0, 1.0]],
        Basis::RGamma,
        Basis::DGamma,
    )
}

/// Expresses `m` in the new parametrisation of `b`: the congruence
/// `Jᵀ·M·J`, with `J` oriented old-rows/new-columns as in [`Jacobian2`].
pub fn reparametrize(m: &InfoMatrix2, b: &Jacobian2) -> Result<InfoMatrix2> {
    if m.basis != b.from {
        return Err(Error::BasisMismatch {
            expected: b.from.to_string(),
            found: m.basis.to_string(),
        });
    }
    let mut out = mul(&transpose(&b.j), &mul(&m.m, &b.j));
    // Symmetrise away rounding asymmetry of the triple product.
    let off = 0.5 * (out[0][1] + out[1][0]);
    out[0][1] = off;
    out[1][0] = off;
    InfoMatrix2::new(out, b.to, m.kind)
}

/// Per-shot variance bound on the discord at physical parameters `q`.
pub fn crb_discord(q: &PhysicalParams, kind: InfoKind) -> Result<CrbResult> {
    let p = model::effective_photons(q)?;
    if q.r() <= 0.0 {
        return Err(Error::Pole("r = 0 gives N_s = 0".into()));
    }

    if kind == InfoKind::Quantum && p.n_t() <= THERMAL_POLE_CUTOFF {
        return thermal_known_bound(q, &p);
    }

    let base = match kind {
        InfoKind::Quantum => qfi_ns_nt(&p)?,
        InfoKind::Classical => cfi_combined(&p)?,
    };
    let in_r_gamma = reparametrize(&base, &jacobian_b12(q)?)?;
    let in_d_gamma = reparametrize(&in_r_gamma, &jacobian_b23(q)?)?;
    let inv = in_d_gamma.inverse()?;
    finish(inv[0][0], kind, q)
}

// With N_t effectively known only the N_s block of the QFI remains, carried
// over to D at fixed N_t.
fn thermal_known_bound(q: &PhysicalParams, p: &StsParams) -> Result<CrbResult> {
    let ns = p.n_s();
    if ns == 0.0 {
        return Err(Error::Pole("N_s = 0 (squeezing entry of the QFI)".into()));
    }
    let nt = p.n_t();
    let thermal = 1.0 + 2.0 * nt;
    let h_ss = thermal * thermal / (ns * (1.0 + ns) * (1.0 + 2.0 * nt + 2.0 * nt * nt));
    let slope = numdiff::bounded(
        |x| model::discord_raw(x, nt),
        ns,
        numdiff::default_step(ns).min(0.5 * ns),
        0.0,
    );
    finish(slope * slope / h_ss, InfoKind::Quantum, q)
}

fn finish(var: f64, kind: InfoKind, q: &PhysicalParams) -> Result<CrbResult> {
    if !(var.is_finite() && var > 0.0) {
        return Err(Error::Numeric(format!("non-positive variance bound {var:e}")));
    }
    Ok(CrbResult {
        var_bound_per_shot: var,
        kind,
        at_params: *q,
    })
}

/// `K_M = M·σ²(D) / bound`, in decibels.
pub fn noise_ratio_db(var_d: f64, m: u64, bound: &CrbResult) -> Result<f64> {
    if !(var_d > 0.0 && var_d.is_finite()) {
        return Err(Error::Domain(format!("variance must be positive, got {var_d}")));
    }
    if m == 0 {
        return Err(Error::Domain("resource count must be >= 1".into()));
    }
    if !(bound.var_bound_per_shot > 0.0) {
        return Err(Error::Domain("bound must be positive".into()));
    }
    Ok(10.0 * (m as f64 * var_d / bound.var_bound_per_shot).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sts(ns: f64, nt: f64) -> StsParams {
        StsParams::new(ns, nt).unwrap()
    }

    #[test]
    fn qfi_example() {
        let h = qfi_ns_nt(&sts(1.0, 0.5)).unwrap();
        assert_relative_eq!(h.matrix()[0][0], 0.8, max_relative = 1e-15);
        assert_relative_eq!(h.matrix()[1][1], 4.0 / 3.0, max_relative = 1e-15);
        assert_eq!(h.matrix()[0][1], 0.0);
        assert!(matches!(qfi_ns_nt(&sts(1.0, 0.0)), Err(Error::Pole(_))));
        assert!(matches!(qfi_ns_nt(&sts(0.0, 1.0)), Err(Error::Pole(_))));
    }

    #[test]
    fn homodyne_fisher_examples() {
        let sq = cfi_quadrature(&sts(1.0, 0.5), Quadrature::Squeezed).unwrap();
        let off = 1.0 / (2f64.sqrt() * 2.0);
        assert_relative_eq!(sq.matrix()[0][0], 0.25);
        assert_relative_eq!(sq.matrix()[0][1], -off, max_relative = 1e-15);
        assert_relative_eq!(sq.matrix()[1][1], 0.5);
        let asq = cfi_quadrature(&sts(1.0, 0.5), Quadrature::AntiSqueezed).unwrap();
        assert_relative_eq!(asq.matrix()[1][0], off, max_relative = 1e-15);

        let comb = cfi_combined(&sts(1.0, 0.5)).unwrap();
        assert_eq!(*comb.matrix(), [[0.25, 0.0], [0.0, 0.5]]);
        let comb = cfi_combined(&sts(0.125, 0.0)).unwrap();
        assert_relative_eq!(comb.matrix()[0][0], 1.0 / 0.28125, max_relative = 1e-15);
        assert_relative_eq!(comb.matrix()[1][1], 2.0);
        assert!(matches!(cfi_combined(&sts(0.0, 0.3)), Err(Error::Pole(_))));
    }

    #[test]
    fn squeezing_only_bound_matches_sampling_variance() {
        for &ns in &[0.01, 0.3, 2.0] {
            let f = cfi_combined(&sts(ns, 0.2)).unwrap();
            assert_relative_eq!(1.0 / f.matrix()[0][0], 2.0 * ns * (1.0 + ns), max_relative = 1e-14);
        }
    }

    #[test]
    fn reparametrize_identity_and_diagonal() {
        let h = qfi_ns_nt(&sts(1.0, 0.5)).unwrap();
        let same = reparametrize(&h, &Jacobian2::identity(Basis::NsNt)).unwrap();
        assert_eq!(same.matrix(), h.matrix());

        let b = Jacobian2::new([[2.0, 0.0], [0.0, 3.0]], Basis::NsNt, Basis::RGamma).unwrap();
        let scaled = reparametrize(&h, &b).unwrap();
        assert_relative_eq!(scaled.matrix()[0][0], 4.0 * 0.8, max_relative = 1e-15);
        assert_relative_eq!(scaled.matrix()[1][1], 9.0 * 4.0 / 3.0, max_relative = 1e-15);
        assert_eq!(scaled.basis(), Basis::RGamma);
    }

    #[test]
    fn reparametrize_rejects_wrong_basis() {
        let h = qfi_ns_nt(&sts(1.0, 0.5)).unwrap();
        let b = Jacobian2::identity(Basis::RGamma);
        assert!(matches!(reparametrize(&h, &b), Err(Error::BasisMismatch { .. })));
    }

    #[test]
    fn b12_reduces_to_tmsv_derivative() {
        let q = PhysicalParams::new(0.5, 0.0, 1.0).unwrap();
        let b = jacobian_b12(&q).unwrap();
        assert_relative_eq!(b.matrix()[0][0], 1f64.sinh(), max_relative = 1e-8);
        assert!(b.matrix()[1][0].abs() < 1e-8);
    }

    #[test]
    fn b23_structure_and_tmsv_slope() {
        let q = PhysicalParams::new(0.5, 0.0, 1.0).unwrap();
        let b = jacobian_b23(&q).unwrap();
        assert_eq!(b.matrix()[1], [0.0, 1.0]);
        // d/dr h(sinh²r + ½) = sinh 2r · ln((N_s + 1)/N_s)
        let ns = 0.5f64.sinh().powi(2);
        let slope = 1f64.sinh() * ((ns + 1.0) / ns).ln();
        assert_relative_eq!(b.matrix()[0][0], 1.0 / slope, max_relative = 1e-8);

        let zero = PhysicalParams::new(0.0, 0.73, 0.62).unwrap();
        assert!(matches!(jacobian_b23(&zero), Err(Error::SingularJacobian(_))));
    }

    #[test]
    fn crb_classical_dominates_quantum() {
        for &r in &[0.05, 0.2, 0.5, 1.0] {
            let q = PhysicalParams::new(r, 0.73, 0.62).unwrap();
            let c = crb_discord(&q, InfoKind::Classical).unwrap();
            let h = crb_discord(&q, InfoKind::Quantum).unwrap();
            assert!(c.var_bound_per_shot >= h.var_bound_per_shot, "r = {r}");
        }
    }

    #[test]
    fn crb_pole_policy_uses_squeezing_block() {
        // γ = 0 and η = 1 give a pure TMSV: N_t = 0 exactly.
        let q = PhysicalParams::new(0.4, 0.0, 1.0).unwrap();
        let b = crb_discord(&q, InfoKind::Quantum).unwrap();
        let ns = 0.4f64.sinh().powi(2);
        let slope = ((ns + 1.0) / ns).ln();
        let expected = slope * slope * ns * (1.0 + ns);
        assert_relative_eq!(b.var_bound_per_shot, expected, max_relative = 1e-6);
    }

    #[test]
    fn crb_at_zero_squeezing_is_an_error() {
        let q = PhysicalParams::new(0.0, 0.73, 0.62).unwrap();
        assert!(crb_discord(&q, InfoKind::Classical).is_err());
        assert!(crb_discord(&q, InfoKind::Quantum).is_err());
    }

    #[test]
    fn noise_ratio_examples() {
        let q = PhysicalParams::new(0.3, 0.73, 0.62).unwrap();
        let bound = CrbResult {
            var_bound_per_shot: 2.0,
            kind: InfoKind::Classical,
            at_params: q,
        };
        assert_eq!(noise_ratio_db(0.02, 100, &bound).unwrap(), 0.0);
        assert_relative_eq!(noise_ratio_db(0.2, 100, &bound).unwrap(), 10.0, max_relative = 1e-14);
        assert!(noise_ratio_db(0.0, 100, &bound).is_err());
        assert!(noise_ratio_db(0.1, 0, &bound).is_err());
    }

    #[test]
    fn info_matrix_validation() {
        let bad = InfoMatrix2::new([[1.0, 2.0], [2.0, 1.0]], Basis::NsNt, InfoKind::Quantum);
        assert!(bad.is_err());
        let asym = InfoMatrix2::new([[1.0, 0.1], [0.2, 1.0]], Basis::NsNt, InfoKind::Quantum);
        assert!(asym.is_err());
        assert!(invert(&[[1.0, 1.0], [1.0, 1.0]]).is_err());
    }
}

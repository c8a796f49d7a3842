//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use stsdiscord::fisher::Quadrature;
use stsdiscord::model::quadrature_variances;
use stsdiscord::StsParams;

pub fn variance(ns: f64, nt: f64, which: Quadrature) -> f64 {
    let (s, a) = quadrature_variances(&StsParams::new(ns, nt).unwrap());
    match which {
        Quadrature::Squeezed => s,
        Quadrature::AntiSqueezed => a,
    }
}

/// `∫ p ∂_i ln p ∂_j ln p dq` for one zero-mean Gaussian quadrature, with
/// the score from central differences of `ln p` and Simpson's rule.
pub fn integrated_fisher(ns: f64, nt: f64, which: Quadrature) -> [[f64; 2]; 2] {
    let log_p = |q: f64, ns: f64, nt: f64| {
        let v = variance(ns, nt, which);
        -0.5 * (std::f64::consts::TAU * v).ln() - 0.5 * q * q / v
    };
    let (hs, ht) = (1e-5 * ns.max(1e-3), 1e-5 * nt.max(1e-3));
    let sd = variance(ns, nt, which).sqrt();
    let (lo, hi, n) = (-14.0 * sd, 14.0 * sd, 40_000usize);
    let dx = (hi - lo) / n as f64;
    let mut f = [[0.0; 2]; 2];
    for k in 0..=n {
        let q = lo + k as f64 * dx;
        let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        let p = log_p(q, ns, nt).exp();
        let s_s = (log_p(q, ns + hs, nt) - log_p(q, ns - hs, nt)) / (2.0 * hs);
        let s_t = (log_p(q, ns, nt + ht) - log_p(q, ns, nt - ht)) / (2.0 * ht);
        let score = [s_s, s_t];
        for i in 0..2 {
            for j in 0..2 {
                f[i][j] += w * p * score[i] * score[j];
            }
        }
    }
    f.map(|row| row.map(|v| v * dx / 3.0))
}

pub fn is_psd(m: &[[f64; 2]; 2], tol: f64) -> bool {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    tr >= -tol && det >= -tol * tr.abs().max(1.0)
}

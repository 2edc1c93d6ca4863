//! Gram-matrix certificates for the bounded-polynomial constraint.
//!
//! For a fixed `H̄`, finds a Hermitian `Q` with `Σ_n Q[n, n+m] = δ_m` and
//! `[[Q, H̄], [H̄ᴴ, I]] ⪰ 0`, i.e. `Q - H̄H̄ᴴ ⪰ 0`, by alternating projections
//! between the affine trace set and the shifted cone `Q - H̄H̄ᴴ ⪰ margin·I`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cone::{hermitian_eigenvalues, psd_project};
use crate::error::{dim_err, domain_err, Result};
use crate::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GramConfig {
    /// Lower bound enforced on the eigenvalues of `Q - H̄H̄ᴴ` by the cone step.
    pub margin: f64,
    pub max_iter: usize,
    /// Stop once the two projections are this close in Frobenius norm.
    pub tol: f64,
}

impl Default for GramConfig {
    fn default() -> Self {
        Self { margin: 1e-6, max_iter: 20_000, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramCertificate {
    pub q: CMat,
    /// Smallest eigenvalue of the assembled block.
    pub min_eigenvalue: f64,
    /// Largest deviation of a diagonal sum of `Q` from its target.
    pub trace_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl GramCertificate {
    /// `true` when the block is PSD and the trace constraints hold to `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol && self.trace_residual <= tol
    }
}

/// Largest deviation of `Σ_n q[n, n+m]` from `δ_m` over `m = 0..M-1`.
pub fn trace_deviation(q: &CMat) -> f64 {
    let m = q.nrows();
    (0..m)
        .map(|d| {
            let s: Complex64 = (0..m - d).map(|n| q[(n, n + d)]).sum();
            let target = if d == 0 { 1.0 } else { 0.0 };
            (s - target).norm()
        })
        .fold(0.0, f64::max)
}

/// Shifts every diagonal of a Hermitian `p` so its upper sums equal `targets`.
fn project_diagonal_sums(p: &mut CMat, targets: &[Complex64]) {
    let m = p.nrows();
    for (d, t) in targets.iter().enumerate() {
        let len = (m - d) as f64;
        let s: Complex64 = (0..m - d).map(|n| p[(n, n + d)]).sum();
        let shift = (t - s) / len;
        for n in 0..m - d {
            p[(n, n + d)] += shift;
            if d > 0 {
                p[(n + d, n)] += shift.conj();
            }
        }
    }
}

fn block(q: &CMat, hbar: &CMat) -> CMat {
    let (m, j) = hbar.shape();
    let mut b = CMat::identity(m + j, m + j);
    b.view_mut((0, 0), (m, m)).copy_from(q);
    b.view_mut((0, m), (m, j)).copy_from(hbar);
    b.view_mut((m, 0), (j, m)).copy_from(&hbar.adjoint());
    b
}

/// Searches for `Q` certifying `max_f ‖H̄ᴴa(f)‖ ≤ 1`. The result always
/// satisfies the trace constraints exactly; its validity as a certificate is
/// read off `min_eigenvalue`.
pub fn gram_certificate(hbar: &CMat, config: &GramConfig) -> Result<GramCertificate> {
    let (m, _) = hbar.shape();
    if m == 0 {
        return Err(dim_err!("H̄ has no rows"));
    }
    if !(config.margin >= 0.0) || !(config.tol > 0.0) {
        return Err(domain_err!("margin must be >= 0 and tol > 0"));
    }
    let gram = hbar * hbar.adjoint();
    let targets: Vec<Complex64> = (0..m)
        .map(|d| {
            let s: Complex64 = (0..m - d).map(|n| gram[(n, n + d)]).sum();
            Complex64::new(if d == 0 { 1.0 } else { 0.0 }, 0.0) - s
        })
        .collect();
    let shift = CMat::identity(m, m) * Complex64::new(config.margin, 0.0);

    let mut p = CMat::identity(m, m) * Complex64::new(targets[0].re / m as f64, 0.0);
    project_diagonal_sums(&mut p, &targets);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        let cone = psd_project(&(&p - &shift))? + &shift;
        let mut next = cone.clone();
        project_diagonal_sums(&mut next, &targets);
        let step = (&next - &cone).norm();
        p = next;
        if step <= config.tol {
            converged = true;
            break;
        }
    }
    let q = gram + p;
    let min_eigenvalue = hermitian_eigenvalues(&block(&q, hbar)).into_iter().fold(f64::INFINITY, f64::min);
    Ok(GramCertificate { trace_residual: trace_deviation(&q), q, min_eigenvalue, iterations, converged })
}

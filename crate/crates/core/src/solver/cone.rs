use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};
use crate::{CMat, RMat};

/// `(W + Wᴴ) / 2`.
pub fn hermitian_part(w: &CMat) -> CMat {
    (w + w.adjoint()) * Complex64::new(0.5, 0.0)
}

fn eigen(w: CMat) -> Result<SymmetricEigen<Complex64, nalgebra::Dyn>> {
    let n = w.nrows();
    SymmetricEigen::try_new(w, f64::EPSILON, 1000 * n.max(1)).ok_or_else(|| {
        Error::Numerical(format!("Hermitian eigendecomposition of a {n}x{n} block did not converge"))
    })
}

/// Eigenvalues of the Hermitian part of `w`, ascending.
pub fn hermitian_eigenvalues(w: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = match eigen(hermitian_part(w)) {
        Ok(e) => e.eigenvalues.iter().copied().collect(),
        Err(_) => vec![f64::NAN; w.nrows()],
    };
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Frobenius-nearest positive semidefinite matrix, by clipping negative
/// eigenvalues of the Hermitian part.
pub fn psd_project(w: &CMat) -> Result<CMat> {
    if !w.is_square() {
        return Err(dim_err!("PSD projection needs a square matrix, got {:?}", w.shape()));
    }
    let herm = hermitian_part(w);
    let e = eigen(herm.clone())?;
    let n = w.nrows();
    let negatives = e.eigenvalues.iter().filter(|l| **l < 0.0).count();
    // sum over whichever side of the spectrum has fewer terms
    let mut out = if negatives <= n / 2 {
        herm
    } else {
        CMat::zeros(n, n)
    };
    for (i, &l) in e.eigenvalues.iter().enumerate() {
        let take = if negatives <= n / 2 { l < 0.0 } else { l > 0.0 };
        if !take {
            continue;
        }
        let weight = if negatives <= n / 2 { -l } else { l };
        let v = e.eigenvectors.column(i);
        for c in 0..n {
            let vc = v[c].conj() * weight;
            for r in 0..n {
                out[(r, c)] += v[r] * vc;
            }
        }
    }
    Ok(hermitian_part(&out))
}

/// `[[Re W, -Im W], [Im W, Re W]]`.
pub fn complex_to_real_embed(w: &CMat) -> RMat {
    let n = w.nrows();
    RMat::from_fn(2 * n, 2 * n, |r, c| {
        let v = w[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    })
}

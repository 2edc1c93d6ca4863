//! Rotational signal subspace (RSS) focusing followed by MUSIC.
//!
//! Each subband is rotated onto the reference band by the unitary matrix
//! closest to mapping the steering vectors of a set of initial angles, the
//! focused snapshots are averaged into one covariance, and MUSIC picks the
//! `K` strongest directions.

use nalgebra::Dyn;
use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, domain_err, Error, Result};
use crate::model::{steering_vector, ArrayConfig, SubbandData};
use crate::recovery::EstimateReport;
use crate::CMat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssConfig {
    /// Known number of sources.
    pub k: usize,
    pub init_angles: Vec<f64>,
    /// MUSIC grid step in degrees.
    pub music_grid: f64,
}

impl RssConfig {
    pub fn new(k: usize, init_angles: Vec<f64>, music_grid: f64) -> Result<Self> {
        if init_angles.len() != k {
            return Err(dim_err!("{} initial angles for {k} sources", init_angles.len()));
        }
        if !(music_grid > 0.0) {
            return Err(domain_err!("MUSIC grid step must be positive, got {music_grid}"));
        }
        Ok(Self { k, init_angles, music_grid })
    }
}

/// Adds independent `Uniform(-max_err, max_err)` offsets to every angle.
pub fn perturb_initial(true_angles: &[f64], max_err_deg: f64, seed: u64) -> Result<Vec<f64>> {
    if !(max_err_deg >= 0.0 && max_err_deg.is_finite()) {
        return Err(domain_err!("maximum error must be >= 0, got {max_err_deg}"));
    }
    if max_err_deg == 0.0 {
        return Ok(true_angles.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(true_angles
        .iter()
        .map(|a| a + rng.random_range(-max_err_deg..=max_err_deg))
        .collect())
}

fn steering_matrix(alpha: f64, angles: &[f64], m: usize) -> CMat {
    let mut phi = CMat::zeros(m, angles.len());
    for (k, a) in angles.iter().enumerate() {
        let f = 0.5 * a.to_radians().sin();
        phi.set_column(k, &steering_vector(alpha * f, m));
    }
    phi
}

fn hermitian_eigen(w: CMat) -> Result<(Vec<f64>, CMat)> {
    let n = w.nrows();
    let e = SymmetricEigen::<Complex64, Dyn>::try_new(crate::solver::hermitian_part(&w), f64::EPSILON, 1000 * n.max(1))
        .ok_or_else(|| Error::Numerical("Hermitian eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    Ok((values, e.eigenvectors.select_columns(&order)))
}

/// Unitary polar factor `B (BᴴB)^(-1/2)` of a square matrix.
fn polar_factor(b: &CMat) -> Result<CMat> {
    let (values, vectors) = hermitian_eigen(b.adjoint() * b)?;
    let floor = 1e-14 * values.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    if values.iter().any(|v| *v <= floor) {
        log::warn!("polar factor of a singular matrix; null directions are not unique");
    }
    let inv_sqrt = values.iter().map(|v| Complex64::new(1.0 / v.max(floor).sqrt(), 0.0));
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(values.len(), inv_sqrt));
    Ok(b * &vectors * d * vectors.adjoint())
}

/// Unitary `T` maximizing `Re tr(T C)`, i.e. `V Uᴴ` for `C = U Σ Vᴴ`.
///
/// On the null space of `C` the maximizer is not unique; there `T` is the
/// unitary map between the two null spaces closest to the identity, which
/// makes `T = I` whenever `C` is Hermitian positive semidefinite.
fn procrustes(c: &CMat) -> Result<CMat> {
    let m = c.nrows();
    let (values, v) = hermitian_eigen(c.adjoint() * c)?;
    let top = values[0].max(0.0);
    if top == 0.0 {
        return Ok(CMat::identity(m, m));
    }
    let rank = values.iter().take_while(|l| **l > 1e-12 * top).count();
    let vr = v.columns(0, rank).into_owned();
    let mut ur = c * &vr;
    for (i, l) in values.iter().take(rank).enumerate() {
        let sigma = l.sqrt();
        ur.column_mut(i).iter_mut().for_each(|x| *x /= sigma);
    }
    let mut t = &vr * ur.adjoint();
    if rank < m {
        let vn = v.columns(rank, m - rank).into_owned();
        let complement = CMat::identity(m, m) - &ur * ur.adjoint();
        let (_, w) = hermitian_eigen(complement)?;
        let un = w.columns(0, m - rank).into_owned();
        let x = polar_factor(&(vn.adjoint() * &un))?;
        t += vn * x * un.adjoint();
    }
    Ok(t)
}

/// Unitary `T_j = V Uᴴ` from `Φ(α_j) Φ(1)ᴴ = U Σ Vᴴ`, for frequency ratios `alphas`.
pub fn rss_focusing_from_ratios(alphas: &[f64], m: usize, init_angles: &[f64]) -> Result<Vec<CMat>> {
    if init_angles.is_empty() {
        return Err(domain_err!("RSS focusing needs at least one initial angle"));
    }
    let reference = steering_matrix(1.0, init_angles, m);
    alphas
        .iter()
        .map(|&alpha| procrustes(&(steering_matrix(alpha, init_angles, m) * reference.adjoint())))
        .collect()
}

/// RSS focusing matrices for subband frequencies `omegas` relative to `cfg.omega1`.
pub fn rss_focusing_matrices(cfg: &ArrayConfig, omegas: &[f64], init_angles: &[f64]) -> Result<Vec<CMat>> {
    let alphas: Vec<f64> = omegas.iter().map(|w| w / cfg.omega1()).collect();
    rss_focusing_from_ratios(&alphas, cfg.sensors(), init_angles)
}

/// MUSIC pseudo-spectrum `1 / ‖E_nᴴ a(θ)‖²` on a grid of angles in degrees.
pub fn music_spectrum(covariance: &CMat, k: usize, grid_deg: &[f64]) -> Result<Vec<f64>> {
    let m = covariance.nrows();
    if !covariance.is_square() {
        return Err(dim_err!("covariance is {:?}", covariance.shape()));
    }
    if k >= m {
        return Err(domain_err!("MUSIC needs K < M, got K = {k}, M = {m}"));
    }
    let herm = crate::solver::hermitian_part(covariance);
    let eig = SymmetricEigen::<Complex64, Dyn>::try_new(herm, f64::EPSILON, 1000 * m)
        .ok_or_else(|| Error::Numerical("covariance eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let noise = eig.eigenvectors.select_columns(&order[..m - k]);
    Ok(grid_deg
        .iter()
        .map(|theta| {
            let a = steering_vector(0.5 * theta.to_radians().sin(), m);
            let proj = noise.adjoint() * a;
            1.0 / proj.norm_squared().max(f64::MIN_POSITIVE)
        })
        .collect())
}

/// Angles from `-90 + step` to `90 - step`.
pub fn music_grid(step_deg: f64) -> Vec<f64> {
    let n = (180.0 / step_deg).round() as usize;
    (1..n).map(|i| -90.0 + i as f64 * step_deg).collect()
}

/// Largest `k` local maxima of a spectrum sampled on `grid`, each refined by
/// a parabola through its neighbours, in increasing angle.
pub fn spectrum_peaks(spectrum: &[f64], grid: &[f64], k: usize) -> Vec<f64> {
    let n = spectrum.len();
    let mut peaks: Vec<(usize, f64)> = (1..n.saturating_sub(1))
        .filter(|&i| spectrum[i] >= spectrum[i - 1] && spectrum[i] > spectrum[i + 1])
        .map(|i| (i, spectrum[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut out: Vec<f64> = peaks
        .into_iter()
        .take(k)
        .map(|(i, _)| {
            let (l, c, r) = (spectrum[i - 1].ln(), spectrum[i].ln(), spectrum[i + 1].ln());
            let curvature = l - 2.0 * c + r;
            let shift = if curvature < 0.0 { 0.5 * (l - r) / curvature } else { 0.0 };
            grid[i] + shift.clamp(-0.5, 0.5) * (grid[i + 1] - grid[i - 1]) / 2.0
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Focused sample covariance `(1/J) sum_j T_j y_j y_jᴴ T_jᴴ`.
pub fn focused_covariance(data: &SubbandData, matrices: &[CMat]) -> Result<CMat> {
    let (m, j) = data.y.shape();
    if matrices.len() != j {
        return Err(dim_err!("{} focusing matrices for {j} subbands", matrices.len()));
    }
    let mut r = CMat::zeros(m, m);
    for (col, t) in matrices.iter().enumerate() {
        let z = t * data.y.column(col);
        r += &z * z.adjoint();
    }
    Ok(r / Complex64::new(j as f64, 0.0))
}

/// RSS direction estimates; at most `K` angles, fewer only when the
/// spectrum has fewer local maxima.
pub fn rss_estimate(data: &SubbandData, cfg: &RssConfig) -> Result<Vec<f64>> {
    let (m, j) = data.y.shape();
    if cfg.init_angles.len() != cfg.k {
        return Err(dim_err!("{} initial angles for {} sources", cfg.init_angles.len(), cfg.k));
    }
    if j < cfg.k + 1 {
        return Err(domain_err!("{j} subbands cannot support a rank-{} signal subspace", cfg.k));
    }
    if cfg.k == 0 {
        return Ok(Vec::new());
    }
    let matrices = rss_focusing_from_ratios(data.alphas(), m, &cfg.init_angles)?;
    let r = focused_covariance(data, &matrices)?;
    let grid = music_grid(cfg.music_grid);
    let spectrum = music_spectrum(&r, cfg.k, &grid)?;
    Ok(spectrum_peaks(&spectrum, &grid, cfg.k))
}

/// JSON form of an RSS estimate.
pub fn rss_report(thetas: &[f64]) -> EstimateReport {
    EstimateReport {
        method: "RSS".into(),
        angles_deg: thetas.to_vec(),
        fs: thetas.iter().map(|t| 0.5 * t.to_radians().sin()).collect(),
        khat: thetas.len(),
        betas: None,
        c_magnitudes: None,
        diagnostics: None,
    }
}

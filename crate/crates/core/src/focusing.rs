//! Sinc interpolation focusing matrices and the focusing error they leave.
//!
//! `T_j(m, m') = sinc(alpha_j (m - 1) - (m' - 1))` maps the reference-band
//! steering vector `a(f)` onto an approximation of `a(alpha_j f)`, the
//! response of the same arrival in subband `j`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{dim_err, domain_err, Result};
use crate::model::steering_vector;
use crate::{CMat, CVec, RMat};

/// Normalized sinc, `sin(pi x) / (pi x)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

pub fn focusing_matrix(alpha: f64, m: usize) -> Result<RMat> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(domain_err!("focusing ratio {alpha} outside (0, 1]"));
    }
    if m < 2 {
        return Err(domain_err!("focusing needs at least 2 sensors, got {m}"));
    }
    Ok(DMatrix::from_fn(m, m, |r, c| {
        let x = alpha * r as f64 - c as f64;
        // exact integers hit the zeros of sinc; keep them exact
        if x == x.round() && x != 0.0 {
            0.0
        } else {
            sinc(x)
        }
    }))
}

/// Real matrix times complex vector.
pub fn apply_real(t: &RMat, v: &CVec) -> CVec {
    CVec::from_fn(t.nrows(), |r, _| {
        (0..t.ncols()).map(|c| v[c] * t[(r, c)]).sum()
    })
}

/// Transposed real matrix times complex vector, i.e. `Tᴴ v` for real `T`.
pub fn apply_real_transpose(t: &RMat, v: &CVec) -> CVec {
    CVec::from_fn(t.ncols(), |c, _| {
        (0..t.nrows()).map(|r| v[r] * t[(r, c)]).sum()
    })
}

/// The focusing matrices of every subband.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusingSet {
    matrices: Vec<RMat>,
    alphas: Vec<f64>,
}

impl FocusingSet {
    pub fn new(alphas: &[f64], m: usize) -> Result<Self> {
        let matrices = alphas
            .iter()
            .map(|&a| focusing_matrix(a, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { matrices, alphas: alphas.to_vec() })
    }

    pub fn matrices(&self) -> &[RMat] {
        &self.matrices
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn sensors(&self) -> usize {
        self.matrices.first().map_or(0, |t| t.nrows())
    }

    pub fn subbands(&self) -> usize {
        self.matrices.len()
    }

    /// `T_j a(f)` for every subband, as the columns of an `M x J` matrix.
    pub fn focused_steering(&self, f: f64) -> CMat {
        let a = steering_vector(f, self.sensors());
        let mut out = CMat::zeros(self.sensors(), self.subbands());
        for (j, t) in self.matrices.iter().enumerate() {
            out.set_column(j, &apply_real(t, &a));
        }
        out
    }

    /// `H̄ = [T_1ᴴ h_1, ..., T_Jᴴ h_J]`.
    pub fn adjoint_map(&self, h: &CMat) -> CMat {
        let mut out = CMat::zeros(h.nrows(), h.ncols());
        for (j, t) in self.matrices.iter().enumerate() {
            out.set_column(j, &apply_real_transpose(t, &h.column(j).into_owned()));
        }
        out
    }

    /// Focusing error matrix `E = [ė_1, ..., ė_J]` with
    /// `ė_j = sum_k e_j(f_k) s_k(omega_j)` for `K x J` spectra.
    pub fn error_matrix(&self, fs: &[f64], spectra: &CMat) -> Result<CMat> {
        let (m, j) = (self.sensors(), self.subbands());
        if spectra.nrows() != fs.len() || spectra.ncols() != j {
            return Err(dim_err!(
                "spectra are {}x{}, expected {}x{}",
                spectra.nrows(),
                spectra.ncols(),
                fs.len(),
                j
            ));
        }
        let mut e = CMat::zeros(m, j);
        for (k, &f) in fs.iter().enumerate() {
            let a = steering_vector(f, m);
            for (col, (t, &alpha)) in self.matrices.iter().zip(&self.alphas).enumerate() {
                let err = steering_vector(alpha * f, m) - apply_real(t, &a);
                let s = spectra[(k, col)];
                for r in 0..m {
                    e[(r, col)] += err[r] * s;
                }
            }
        }
        Ok(e)
    }

    /// Writes every matrix as CSV, each preceded by a `# alpha=` line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (t, a) in self.matrices.iter().zip(&self.alphas) {
            writeln!(w, "# alpha={a}")?;
            for r in 0..t.nrows() {
                let row: Vec<String> = t.row(r).iter().map(|v| v.to_string()).collect();
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

/// `e(f) = a(alpha f) - T a(f)` with its Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusingError {
    pub vector: CVec,
    pub norm: f64,
}

pub fn focusing_error(alpha: f64, f: f64, m: usize) -> Result<FocusingError> {
    let t = focusing_matrix(alpha, m)?;
    let vector = steering_vector(alpha * f, m) - apply_real(&t, &steering_vector(f, m));
    let norm = vector.norm();
    Ok(FocusingError { vector, norm })
}

/// How the noise-plus-focusing-error budget `gamma` is obtained.
#[derive(Debug, Clone, Copy)]
pub enum GammaMode<'a> {
    /// Exact `‖N‖_F² + ‖E‖_F²` from known realizations.
    Oracle { noise: &'a CMat, focusing_error: &'a CMat },
    /// `M J sigma² + ε̂_E` from the data and a noise variance.
    Blind { y: &'a CMat, noise_variance: f64, focusing: &'a FocusingSet },
}

pub fn gamma_bound(mode: GammaMode<'_>) -> Result<f64> {
    match mode {
        GammaMode::Oracle { noise, focusing_error } => {
            if noise.shape() != focusing_error.shape() {
                return Err(dim_err!("noise and focusing error shapes differ"));
            }
            Ok(noise.norm_squared() + focusing_error.norm_squared())
        }
        GammaMode::Blind { y, noise_variance, focusing } => {
            blind_gamma(y, noise_variance, focusing)
        }
    }
}

const BLIND_GRID: usize = 64;

/// Heuristic budget when the realizations are unknown.
///
/// Per band, the energy above the noise floor is spread over a 64-point
/// frequency grid in proportion to the Bartlett spectrum of that band, and
/// each share is weighted by the focusing error power at its grid point.
fn blind_gamma(y: &CMat, noise_variance: f64, focusing: &FocusingSet) -> Result<f64> {
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        return Err(domain_err!("noise variance must be >= 0, got {noise_variance}"));
    }
    let (m, j) = y.shape();
    if m != focusing.sensors() || j != focusing.subbands() {
        return Err(dim_err!("data is {m}x{j}, focusing set is {}x{}", focusing.sensors(), focusing.subbands()));
    }
    let grid: Vec<f64> = (0..BLIND_GRID)
        .map(|k| crate::trig::grid_point(k, BLIND_GRID))
        .collect();
    let mut eps = 0.0;
    for (col, &alpha) in focusing.alphas().iter().enumerate() {
        let yj = y.column(col);
        let signal = (yj.norm_squared() - m as f64 * noise_variance).max(0.0);
        if signal == 0.0 {
            continue;
        }
        let bartlett: Vec<f64> = grid
            .iter()
            .map(|&f| steering_vector(alpha * f, m).dotc(&yj).norm_sqr())
            .collect();
        let total: f64 = bartlett.iter().sum();
        if total == 0.0 {
            continue;
        }
        for (&f, b) in grid.iter().zip(&bartlett) {
            let err = focusing_error(alpha, f, m)?.norm;
            eps += err * err * (b / total) * signal / m as f64;
        }
    }
    Ok((m * j) as f64 * noise_variance + eps)
}

/// Mean power of samples known to hold only noise, e.g. out-of-band bins.
pub fn estimate_noise_variance(noise_only: &CMat) -> Result<f64> {
    if noise_only.is_empty() {
        return Err(domain_err!("no noise-only samples supplied"));
    }
    Ok(noise_only.norm_squared() / noise_only.len() as f64)
}

/// Convenience: zero complex matrix of the given shape.
pub fn zeros_like(m: &CMat) -> CMat {
    CMat::from_element(m.nrows(), m.ncols(), Complex64::new(0.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{complex_gaussian, noise_variance_for_snr};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_ratio_gives_identity() {
        for m in 2..=64 {
            let t = focusing_matrix(1.0, m).unwrap();
            assert_eq!(t, RMat::identity(m, m));
        }
    }

    #[test]
    fn half_ratio_two_sensors() {
        let t = focusing_matrix(0.5, 2).unwrap();
        // sinc(0.5) = sinc(-0.5) = 2 / pi, evaluated directly
        let s = (PI * 0.5).sin() / (PI * 0.5);
        assert_eq!(t[(0, 0)], 1.0);
        assert_eq!(t[(0, 1)], 0.0);
        assert_abs_diff_eq!(t[(1, 0)], 2.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(t[(1, 1)], s, epsilon = 1e-15);
    }

    #[test]
    fn integer_offsets_are_exact_zeros() {
        let t = focusing_matrix(0.5, 8).unwrap();
        // alpha (m - 1) - (m' - 1) = 0.5 * 4 - 0 = 2
        assert_eq!(t[(4, 0)], 0.0);
        assert_eq!(t[(6, 1)], 0.0);
        for c in 1..8 {
            assert_eq!(t[(0, c)], 0.0);
        }
        assert!(focusing_matrix(0.0, 4).is_err());
        assert!(focusing_matrix(1.01, 4).is_err());
    }

    #[test]
    fn error_vanishes_at_reference_band() {
        let e = focusing_error(1.0, 0.31, 12).unwrap();
        assert_eq!(e.norm, 0.0);
    }

    #[test]
    fn error_matches_direct_evaluation() {
        // independent route: explicit double loop with its own sinc and phasors
        let (alpha, f, m) = (0.9, 0.3, 16);
        let mut sq = 0.0;
        for r in 0..m {
            let target = Complex64::cis(-2.0 * PI * alpha * f * r as f64);
            let mut interp = Complex64::new(0.0, 0.0);
            for c in 0..m {
                let x = alpha * r as f64 - c as f64;
                let s = if x.abs() < 1e-300 { 1.0 } else { (PI * x).sin() / (PI * x) };
                interp += Complex64::cis(-2.0 * PI * f * c as f64) * s;
            }
            sq += (target - interp).norm_sqr();
        }
        let got = focusing_error(alpha, f, m).unwrap();
        assert!((got.norm - sq.sqrt()).abs() < 1e-12);
        assert!((got.norm - got.vector.norm()).abs() == 0.0);
    }

    #[test]
    fn error_respects_triangle_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let alpha = rng.random_range(0.3..1.0);
            let f = rng.random_range(-0.5..0.5);
            let m = rng.random_range(2..24);
            let t = focusing_matrix(alpha, m).unwrap();
            let spectral = t.singular_values().max();
            let e = focusing_error(alpha, f, m).unwrap();
            let bound = (m as f64).sqrt() * (1.0 + spectral);
            assert!(e.norm <= bound + 1e-12);
        }
    }

    #[test]
    fn error_grows_away_from_reference_band() {
        let m = 16;
        let alphas = [0.55, 0.7, 0.85, 1.0];
        for k in 0..201 {
            let f = -0.5 + k as f64 / 200.0;
            let norms: Vec<f64> = alphas
                .iter()
                .map(|a| focusing_error(*a, f, m).unwrap().norm / (m as f64).sqrt())
                .collect();
            for w in norms.windows(2) {
                assert!(w[1] <= w[0] * 1.1 + 1e-12, "f={f}: {norms:?}");
            }
        }
    }

    #[test]
    fn set_is_deterministic_and_order_independent() {
        let alphas = [1.0, 0.9, 0.8, 0.7];
        let a = FocusingSet::new(&alphas, 10).unwrap();
        let b = FocusingSet::new(&alphas, 10).unwrap();
        assert_eq!(a, b);
        let rev: Vec<f64> = alphas.iter().rev().copied().collect();
        let c = FocusingSet::new(&rev, 10).unwrap();
        for (i, t) in a.matrices().iter().enumerate() {
            assert_eq!(t, &c.matrices()[3 - i]);
        }
        assert_eq!(a.matrices()[0], RMat::identity(10, 10));
    }

    #[test]
    fn gamma_examples() {
        let z = CMat::zeros(4, 3);
        assert_eq!(gamma_bound(GammaMode::Oracle { noise: &z, focusing_error: &z }).unwrap(), 0.0);
        let set = FocusingSet::new(&[1.0, 0.9, 0.8], 4).unwrap();
        assert_eq!(
            gamma_bound(GammaMode::Blind { y: &z, noise_variance: 0.0, focusing: &set }).unwrap(),
            0.0
        );
        assert!(gamma_bound(GammaMode::Blind { y: &z, noise_variance: -1.0, focusing: &set }).is_err());
    }

    #[test]
    fn oracle_gamma_is_residual_energy() {
        let m = 8;
        let alphas = [1.0, 0.9, 0.8, 0.7];
        let set = FocusingSet::new(&alphas, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let fs = [0.1, -0.27];
        let spectra = complex_gaussian(2, 4, 1.0, &mut rng);
        let noise = complex_gaussian(m, 4, 0.1, &mut rng);
        let e = set.error_matrix(&fs, &spectra).unwrap();
        let mut xstar = CMat::zeros(m, 4);
        for (k, &f) in fs.iter().enumerate() {
            let foc = set.focused_steering(f);
            for j in 0..4 {
                for r in 0..m {
                    xstar[(r, j)] += foc[(r, j)] * spectra[(k, j)];
                }
            }
        }
        let y = &xstar + &noise + &e;
        let g = gamma_bound(GammaMode::Oracle { noise: &noise, focusing_error: &e }).unwrap();
        let direct = (&y - &xstar).norm_squared();
        // ‖N + E‖² differs from ‖N‖² + ‖E‖² only by the cross term
        let cross = 2.0 * noise.iter().zip(e.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        assert!((g + cross - direct).abs() <= 1e-10 * direct);
        let g0 = gamma_bound(GammaMode::Oracle { noise: &zeros_like(&e), focusing_error: &e }).unwrap();
        let y0 = &xstar + &e;
        assert!((g0 - (&y0 - &xstar).norm_squared()).abs() <= 1e-10 * g0);
    }

    #[test]
    fn blind_gamma_tracks_oracle() {
        let (m, j) = (16, 10);
        let alphas: Vec<f64> = (0..j).map(|i| (20 - i) as f64 / 20.0).collect();
        let set = FocusingSet::new(&alphas, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut worst: f64 = 1.0;
        for _ in 0..100 {
            let k = rng.random_range(1..4);
            let fs: Vec<f64> = (0..k).map(|_| 0.5 * rng.random_range(-1.2f64..1.2).sin()).collect();
            let spectra = complex_gaussian(k, j, 1.0, &mut rng);
            let mut clean = CMat::zeros(m, j);
            for (kk, &f) in fs.iter().enumerate() {
                for (c, &a) in alphas.iter().enumerate() {
                    let v = steering_vector(a * f, m);
                    for r in 0..m {
                        clean[(r, c)] += v[r] * spectra[(kk, c)];
                    }
                }
            }
            let var = noise_variance_for_snr(clean.norm_squared(), m, j, 10.0);
            let noise = complex_gaussian(m, j, var, &mut rng);
            let e = set.error_matrix(&fs, &spectra).unwrap();
            let y = &clean + &noise;
            let oracle = gamma_bound(GammaMode::Oracle { noise: &noise, focusing_error: &e }).unwrap();
            let blind = gamma_bound(GammaMode::Blind { y: &y, noise_variance: var, focusing: &set }).unwrap();
            let ratio = (blind / oracle).max(oracle / blind);
            worst = worst.max(ratio);
        }
        assert!(worst < 3.0, "worst blind/oracle ratio {worst}");
    }

    #[test]
    fn csv_dump_has_one_block_per_band() {
        let set = FocusingSet::new(&[1.0, 0.75], 3).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(text.starts_with("# alpha=1\n1,0,0\n"));
    }
}

//! Evaluation of the vector trigonometric polynomial `f -> H̄ᴴ a(f)` and a
//! derivative-free one-dimensional maximizer.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{CMat, CVec};

/// `H̄ᴴ a(f)`: entry `j` is `sum_m conj(h̄[m, j]) exp(-i 2 pi f m)`.
pub fn adjoint_response(hbar: &CMat, f: f64) -> CVec {
    let (m, j) = hbar.shape();
    let phases: Vec<Complex64> = (0..m)
        .map(|i| Complex64::cis(-2.0 * PI * f * i as f64))
        .collect();
    CVec::from_fn(j, |col, _| {
        phases
            .iter()
            .enumerate()
            .map(|(i, p)| hbar[(i, col)].conj() * p)
            .sum()
    })
}

/// `‖H̄ᴴ a(f)‖₂`.
pub fn response_norm(hbar: &CMat, f: f64) -> f64 {
    adjoint_response(hbar, f).norm()
}

/// The uniform grid `f_k = -1/2 + k / n`, `k = 0..n`.
pub fn grid_point(k: usize, n: usize) -> f64 {
    -0.5 + k as f64 / n as f64
}

/// `‖H̄ᴴ a(f_k)‖₂` on the uniform grid of `n` points, by zero-padded FFT.
///
/// Requires `n >= M`.
pub fn response_norm_on_grid(hbar: &CMat, n: usize) -> Vec<f64> {
    let (m, j) = hbar.shape();
    assert!(n >= m, "grid of {n} points is coarser than the polynomial degree {m}");
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut power = vec![0.0; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..j {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        // exp(-i 2 pi (-1/2) m) = (-1)^m shifts the grid start to f = -1/2
        for i in 0..m {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            buf[i] = hbar[(i, col)].conj() * sign;
        }
        fft.process(&mut buf);
        for (p, v) in power.iter_mut().zip(&buf) {
            *p += v.norm_sqr();
        }
    }
    power.into_iter().map(f64::sqrt).collect()
}

/// Result of a bracketed one-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// Width of the final bracket.
    pub bracket: f64,
}

/// Golden-section ascent of a unimodal function on `[lo, hi]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Maximum {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
        if x1 >= x2 {
            break;
        }
    }
    let (x, value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    Maximum { x, value, bracket: hi - lo }
}

/// Wraps a frequency into `[-1/2, 1/2)`.
pub fn wrap_frequency(f: f64) -> f64 {
    let w = (f + 0.5).rem_euclid(1.0) - 0.5;
    if w >= 0.5 {
        -0.5
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::steering_vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cmat(r: usize, c: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(r, c, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn grid_evaluation_matches_direct_sum() {
        let h = random_cmat(7, 3, 1);
        let n = 4096;
        let fast = response_norm_on_grid(&h, n);
        for k in (0..n).step_by(37) {
            let f = grid_point(k, n);
            let mut sq = 0.0;
            for col in 0..3 {
                let a = steering_vector(f, 7);
                let v: Complex64 = (0..7).map(|i| h[(i, col)].conj() * a[i]).sum();
                sq += v.norm_sqr();
            }
            assert!((fast[k] * fast[k] - sq).abs() < 1e-12 * (1.0 + sq));
        }
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let m = golden_section_max(|x| -(x - 0.123).powi(2), -1.0, 1.0, 1e-10);
        assert!((m.x - 0.123).abs() < 1e-9);
        assert!(m.bracket <= 1e-10);
    }

    #[test]
    fn wrap_into_half_open_interval() {
        assert_eq!(wrap_frequency(0.25), 0.25);
        assert!((wrap_frequency(0.75) + 0.25).abs() < 1e-15);
        assert_eq!(wrap_frequency(0.5), -0.5);
        assert!((wrap_frequency(-0.6) - 0.4).abs() < 1e-15);
    }
}

//! Coherent gridless-sparse direction-of-arrival estimation for wideband
//! sources on a uniform linear array.
//!
//! The pipeline focuses every subband onto the reference band with sinc
//! interpolation matrices, solves the dual of an atomic-norm denoising
//! problem as a semidefinite program, and reads the arrival angles off the
//! peaks of the resulting dual polynomial.

pub mod anm;
pub mod baselines;
pub mod error;
pub mod focusing;
pub mod model;
pub mod nnls;
pub mod recovery;
pub mod solver;
pub mod trig;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

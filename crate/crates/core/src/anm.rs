//! Atoms of the focused wideband model, atomic-norm certificates, the dual
//! atomic norm and assembly of the dual semidefinite program.
//!
//! An atom `A(f, c) = [T_1 a(f), ..., T_J a(f)] diag(c)` couples one spatial
//! frequency with a unit vector of per-subband coefficients. The dual of
//! atomic-norm denoising reads
//!
//! ```text
//! maximize   Re tr(Yᴴ H) - sqrt(gamma) ‖H‖_F
//! subject to [[Q, H̄], [H̄ᴴ, I_J]] ⪰ 0,  H̄ = [T_1ᴴ h_1, ..., T_Jᴴ h_J],
//!            sum_n Q[n, n + m] = δ(m),  m = 0..M-1
//! ```
//!
//! and [`assemble_dual_sdp`] packages exactly this program for the solver.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, domain_err, Error, Result};
use crate::focusing::FocusingSet;
use crate::trig::{golden_section_max, grid_point, response_norm, response_norm_on_grid};
use crate::{CMat, CVec, RMat};

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub f: f64,
    pub c: CVec,
    pub matrix: CMat,
}

pub fn build_atom(f: f64, c: &CVec, focusing: &FocusingSet) -> Result<Atom> {
    if c.len() != focusing.subbands() {
        return Err(dim_err!(
            "coefficient vector has {} entries, focusing set has {} subbands",
            c.len(),
            focusing.subbands()
        ));
    }
    let norm = c.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(domain_err!("atom coefficients must be a nonzero finite vector"));
    }
    let c = c.unscale(norm);
    let mut matrix = focusing.focused_steering(f);
    for (j, cj) in c.iter().enumerate() {
        matrix.column_mut(j).iter_mut().for_each(|v| *v *= cj);
    }
    Ok(Atom { f, c, matrix })
}

/// A nonnegative combination of atoms and the matrix it sums to.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicDecomposition {
    pub terms: Vec<(f64, Atom)>,
    pub matrix: CMat,
}

impl AtomicDecomposition {
    pub fn new(terms: Vec<(f64, Atom)>, m: usize, j: usize) -> Result<Self> {
        let mut matrix = CMat::zeros(m, j);
        for (i, (beta, atom)) in terms.iter().enumerate() {
            if !(*beta > 0.0) {
                return Err(domain_err!("atom weight {beta} must be positive"));
            }
            if atom.matrix.shape() != (m, j) {
                return Err(dim_err!("atom {i} is not {m}x{j}"));
            }
            if terms[..i].iter().any(|(_, a)| a.f == atom.f) {
                return Err(domain_err!("repeated atom frequency {}", atom.f));
            }
            matrix += &atom.matrix * Complex64::new(*beta, 0.0);
        }
        Ok(Self { terms, matrix })
    }

    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|(b, _)| b).sum()
    }
}

/// `X* = sum_k beta_k A(f_k, c_k)` with `beta_k = ‖s_k‖₂` and `c_k = s_k / beta_k`.
///
/// Sources whose spectrum is identically zero are dropped.
pub fn noiseless_matrix(
    fs: &[f64],
    spectra: &CMat,
    focusing: &FocusingSet,
) -> Result<AtomicDecomposition> {
    if spectra.nrows() != fs.len() || spectra.ncols() != focusing.subbands() {
        return Err(dim_err!(
            "spectra are {}x{}, expected {}x{}",
            spectra.nrows(),
            spectra.ncols(),
            fs.len(),
            focusing.subbands()
        ));
    }
    let mut terms = Vec::with_capacity(fs.len());
    for (k, &f) in fs.iter().enumerate() {
        let s: CVec = spectra.row(k).transpose();
        let beta = s.norm();
        if beta == 0.0 {
            log::warn!("source {k} at f={f} has an all-zero spectrum; dropped");
            continue;
        }
        terms.push((beta, build_atom(f, &s, focusing)?));
    }
    AtomicDecomposition::new(terms, focusing.sensors(), focusing.subbands())
}

/// Certified upper bound `sum beta_k` on `‖X‖_A` from a decomposition of `X`.
pub fn atomic_norm_upper(x: &CMat, decomposition: &AtomicDecomposition) -> Result<f64> {
    if x.shape() != decomposition.matrix.shape() {
        return Err(dim_err!("decomposition shape differs from X"));
    }
    let residual = (x - &decomposition.matrix).norm();
    if residual > 1e-6 * x.norm() {
        return Err(Error::InvalidCertificate(format!(
            "decomposition misses X by {residual:.3e} (‖X‖_F = {:.3e})",
            x.norm()
        )));
    }
    Ok(decomposition.weight_sum())
}

/// Value of `max_f ‖H̄ᴴ a(f)‖₂` with its maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualNorm {
    pub value: f64,
    pub argmax: f64,
    /// Width of the refinement bracket around `argmax`.
    pub bracket: f64,
}

/// Maximum of `‖H̄ᴴ a(f)‖₂` for `H̄ = [T_jᴴ h_j]`: a grid scan followed by
/// golden-section ascent inside the best grid cell.
pub fn dual_atomic_norm(h: &CMat, focusing: &FocusingSet, grid_size: usize) -> Result<DualNorm> {
    if h.shape() != (focusing.sensors(), focusing.subbands()) {
        return Err(dim_err!("H is {:?}, focusing set expects {}x{}", h.shape(), focusing.sensors(), focusing.subbands()));
    }
    let hbar = focusing.adjoint_map(h);
    polynomial_max(&hbar, grid_size)
}

/// Grid-plus-refinement maximum of `‖H̄ᴴ a(f)‖₂` for an explicit `H̄`.
pub fn polynomial_max(hbar: &CMat, grid_size: usize) -> Result<DualNorm> {
    let m = hbar.nrows();
    if grid_size < 4 * m {
        return Err(domain_err!("grid of {grid_size} points needs at least 4M = {}", 4 * m));
    }
    let values = response_norm_on_grid(hbar, grid_size);
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let step = 1.0 / grid_size as f64;
    let center = grid_point(best, grid_size);
    let refined = golden_section_max(|f| response_norm(hbar, f), center - step, center + step, 1e-12);
    let (value, argmax) = if refined.value >= values[best] {
        (refined.value, crate::trig::wrap_frequency(refined.x))
    } else {
        (values[best], center)
    };
    Ok(DualNorm { value, argmax, bracket: refined.bracket })
}

/// Measurements, focusing matrices and the budget `gamma` of one estimation.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub y: CMat,
    pub focusing: FocusingSet,
    pub gamma: f64,
}

impl ConicProblem {
    pub fn new(y: CMat, focusing: FocusingSet, gamma: f64) -> Result<Self> {
        if y.shape() != (focusing.sensors(), focusing.subbands()) {
            return Err(dim_err!(
                "Y is {}x{}, focusing set is {}x{}",
                y.nrows(),
                y.ncols(),
                focusing.sensors(),
                focusing.subbands()
            ));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(domain_err!("gamma must be >= 0, got {gamma}"));
        }
        Ok(Self { y, focusing, gamma })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.y.shape()
    }
}

/// `sum_{n} Q[n, n + offset] = rhs`; complex-valued unless `offset == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConstraint {
    pub offset: usize,
    pub rhs: f64,
    pub complex: bool,
}

/// The dual program in solver-ready form.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSdp {
    pub y: CMat,
    pub gamma: f64,
    /// `T_j`; the linear map is `h_j -> T_jᴴ h_j`.
    pub maps: Vec<RMat>,
    pub trace_constraints: Vec<TraceConstraint>,
}

pub fn assemble_dual_sdp(problem: &ConicProblem) -> Result<DualSdp> {
    if !(problem.gamma >= 0.0) {
        return Err(domain_err!("gamma must be >= 0, got {}", problem.gamma));
    }
    let (m, _) = problem.dims();
    let trace_constraints = (0..m)
        .map(|offset| TraceConstraint {
            offset,
            rhs: if offset == 0 { 1.0 } else { 0.0 },
            complex: offset > 0,
        })
        .collect();
    Ok(DualSdp {
        y: problem.y.clone(),
        gamma: problem.gamma,
        maps: problem.focusing.matrices().to_vec(),
        trace_constraints,
    })
}

impl DualSdp {
    pub fn sensors(&self) -> usize {
        self.y.nrows()
    }

    pub fn subbands(&self) -> usize {
        self.y.ncols()
    }

    /// Side of the PSD block, `M + J`.
    pub fn block_size(&self) -> usize {
        self.sensors() + self.subbands()
    }

    pub fn hbar(&self, h: &CMat) -> CMat {
        let mut out = CMat::zeros(h.nrows(), h.ncols());
        for (j, t) in self.maps.iter().enumerate() {
            out.set_column(j, &crate::focusing::apply_real_transpose(t, &h.column(j).into_owned()));
        }
        out
    }

    /// `Re tr(Yᴴ H) - sqrt(gamma) ‖H‖_F`.
    pub fn objective(&self, h: &CMat) -> f64 {
        self.y.dotc(h).re - self.gamma.sqrt() * h.norm()
    }

    /// `[[Q, H̄], [H̄ᴴ, I]]`.
    pub fn block(&self, h: &CMat, q: &CMat) -> CMat {
        let (m, j) = (self.sensors(), self.subbands());
        let hbar = self.hbar(h);
        let mut b = CMat::zeros(m + j, m + j);
        b.view_mut((0, 0), (m, m)).copy_from(q);
        b.view_mut((0, m), (m, j)).copy_from(&hbar);
        b.view_mut((m, 0), (j, m)).copy_from(&hbar.adjoint());
        for i in 0..j {
            b[(m + i, m + i)] = Complex64::new(1.0, 0.0);
        }
        b
    }

    /// Largest absolute violation of the trace constraints by `Q`.
    pub fn trace_residual(&self, q: &CMat) -> f64 {
        self.trace_constraints
            .iter()
            .map(|c| {
                let s: Complex64 = (0..self.sensors() - c.offset).map(|n| q[(n, n + c.offset)]).sum();
                (s - Complex64::new(c.rhs, 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the LMI block.
    pub fn lmi_min_eigenvalue(&self, h: &CMat, q: &CMat) -> f64 {
        let b = self.block(h, q);
        crate::solver::hermitian_eigenvalues(&b)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Serialize, Deserialize)]
struct ArraySpec {
    name: String,
    dtype: String,
    shape: Vec<usize>,
    offset: usize,
    order: String,
}

#[derive(Serialize, Deserialize)]
struct SdpManifest {
    format: String,
    version: u32,
    sensors: usize,
    subbands: usize,
    gamma: f64,
    block_size: usize,
    objective: String,
    trace_constraints: Vec<TraceConstraint>,
    arrays: Vec<ArraySpec>,
}

const SDP_FORMAT: &str = "wgs-dual-sdp";

impl DualSdp {
    /// Writes a JSON manifest describing the program and a little-endian
    /// binary blob holding `Y` (complex128, row-major) followed by the
    /// focusing maps (float64, `J x M x M`, row-major).
    pub fn write<W1: Write, W2: Write>(&self, manifest: W1, mut blob: W2) -> Result<()> {
        let (m, j) = (self.sensors(), self.subbands());
        let arrays = vec![
            ArraySpec {
                name: "Y".into(),
                dtype: "complex128".into(),
                shape: vec![m, j],
                offset: 0,
                order: "row-major".into(),
            },
            ArraySpec {
                name: "T".into(),
                dtype: "float64".into(),
                shape: vec![j, m, m],
                offset: 16 * m * j,
                order: "row-major".into(),
            },
        ];
        let man = SdpManifest {
            format: SDP_FORMAT.into(),
            version: 1,
            sensors: m,
            subbands: j,
            gamma: self.gamma,
            block_size: m + j,
            objective: "maximize Re tr(Y^H H) - sqrt(gamma) ||H||_F".into(),
            trace_constraints: self.trace_constraints.clone(),
            arrays,
        };
        serde_json::to_writer_pretty(manifest, &man)?;
        for r in 0..m {
            for c in 0..j {
                blob.write_all(&self.y[(r, c)].re.to_le_bytes())?;
                blob.write_all(&self.y[(r, c)].im.to_le_bytes())?;
            }
        }
        for t in &self.maps {
            for r in 0..m {
                for c in 0..m {
                    blob.write_all(&t[(r, c)].to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read<R1: Read, R2: Read>(manifest: R1, mut blob: R2) -> Result<Self> {
        let man: SdpManifest = serde_json::from_reader(manifest)?;
        if man.format != SDP_FORMAT || man.version != 1 {
            return Err(Error::Format(format!("unsupported program format {} v{}", man.format, man.version)));
        }
        let (m, j) = (man.sensors, man.subbands);
        let mut bytes = Vec::new();
        blob.read_to_end(&mut bytes)?;
        let need = 16 * m * j + 8 * j * m * m;
        if bytes.len() != need {
            return Err(Error::Format(format!("blob holds {} bytes, expected {need}", bytes.len())));
        }
        let f = |i: usize| f64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
        let y = CMat::from_fn(m, j, |r, c| {
            let i = 2 * (r * j + c);
            Complex64::new(f(i), f(i + 1))
        });
        let base = 2 * m * j;
        let maps = (0..j)
            .map(|k| RMat::from_fn(m, m, |r, c| f(base + k * m * m + r * m + c)))
            .collect();
        Ok(Self { y, gamma: man.gamma, maps, trace_constraints: man.trace_constraints })
    }

    pub fn save(&self, manifest: &Path, blob: &Path) -> Result<()> {
        self.write(std::fs::File::create(manifest)?, std::fs::File::create(blob)?)
    }

    pub fn load(manifest: &Path, blob: &Path) -> Result<Self> {
        Self::read(std::fs::File::open(manifest)?, std::fs::File::open(blob)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{complex_gaussian, steering_vector};
    use crate::trig::adjoint_response;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(alphas: &[f64], m: usize) -> FocusingSet {
        FocusingSet::new(alphas, m).unwrap()
    }

    #[test]
    fn single_band_atom_is_rank_one_steering() {
        let fs = set(&[1.0], 6);
        let c = CVec::from_element(1, Complex64::new(0.0, 2.0));
        let atom = build_atom(0.17, &c, &fs).unwrap();
        let a = steering_vector(0.17, 6);
        for r in 0..6 {
            assert!((atom.matrix[(r, 0)] - a[r] * Complex64::new(0.0, 1.0)).norm() < 1e-15);
        }
        assert!((atom.c.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_coefficients_select_first_column() {
        let fs = set(&[1.0, 0.9, 0.8], 5);
        let mut c = CVec::zeros(3);
        c[0] = Complex64::new(1.0, 0.0);
        let atom = build_atom(-0.2, &c, &fs).unwrap();
        let a = steering_vector(-0.2, 5);
        for r in 0..5 {
            assert!((atom.matrix[(r, 0)] - a[r]).norm() < 1e-15);
            assert_eq!(atom.matrix[(r, 1)], Complex64::new(0.0, 0.0));
            assert_eq!(atom.matrix[(r, 2)], Complex64::new(0.0, 0.0));
        }
        assert!(build_atom(0.0, &CVec::zeros(3), &fs).is_err());
    }

    #[test]
    fn atom_matches_direct_loop() {
        let (m, j) = (8, 4);
        let alphas = [1.0, 0.9, 0.75, 0.6];
        let fs = set(&alphas, m);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let f = rng.random_range(-0.5..0.5);
            let raw = complex_gaussian(j, 1, 1.0, &mut rng).column(0).into_owned();
            let c = raw.unscale(raw.norm());
            let atom = build_atom(f, &c, &fs).unwrap();
            let mut fro = 0.0;
            for col in 0..j {
                let mut col_sq = 0.0;
                for r in 0..m {
                    let mut v = Complex64::new(0.0, 0.0);
                    for k in 0..m {
                        let x = alphas[col] * r as f64 - k as f64;
                        let s = if x == 0.0 { 1.0 } else { (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x) };
                        v += Complex64::cis(-2.0 * std::f64::consts::PI * f * k as f64) * s;
                    }
                    col_sq += v.norm_sqr();
                    assert!((atom.matrix[(r, col)] - c[col] * v).norm() < 1e-12);
                }
                fro += c[col].norm_sqr() * col_sq;
            }
            assert!((atom.matrix.norm() - fro.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_unit_source() {
        let fs = set(&[1.0, 0.9, 0.8, 0.7], 6);
        let spectra = CMat::from_element(1, 4, Complex64::new(1.0, 0.0));
        let dec = noiseless_matrix(&[0.1], &spectra, &fs).unwrap();
        assert!((dec.terms[0].0 - 2.0).abs() < 1e-15);
        for v in dec.terms[0].1.c.iter() {
            assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn noiseless_matrix_is_homogeneous_and_drops_silent_sources() {
        let fs = set(&[1.0, 0.8, 0.6], 6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut spectra = complex_gaussian(3, 3, 1.0, &mut rng);
        spectra.row_mut(1).fill(Complex64::new(0.0, 0.0));
        let a = noiseless_matrix(&[0.1, 0.2, -0.3], &spectra, &fs).unwrap();
        assert_eq!(a.terms.len(), 2);
        let b = noiseless_matrix(&[0.1, 0.2, -0.3], &(spectra * Complex64::new(2.0, 0.0)), &fs).unwrap();
        for ((ba, aa), (bb, ab)) in a.terms.iter().zip(&b.terms) {
            assert!((2.0 * ba - bb).abs() < 1e-12);
            assert!((&aa.c - &ab.c).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_residual_is_focusing_error_matrix() {
        use crate::model::{synthesize_scene, ArrayConfig, SubbandGrid, WidebandScene};
        let grid = SubbandGrid::from_dft_bins(60, 20, 10).unwrap();
        let cfg = ArrayConfig::new(16, 1500.0, grid.omegas()[0]).unwrap();
        let fs = set(grid.alphas(), 16);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let spectra = complex_gaussian(3, 10, 1.0, &mut rng);
        let scene = WidebandScene::new(vec![-5.0, 15.0, 40.0], spectra.clone(), 0.0, 0).unwrap();
        let y = synthesize_scene(&cfg, &scene, &grid).unwrap();
        let freqs = scene.spatial_frequencies();
        let dec = noiseless_matrix(&freqs, &spectra, &fs).unwrap();
        let e = fs.error_matrix(&freqs, &spectra).unwrap();
        let resid = &y.y - &dec.matrix;
        assert!((&resid - &e).norm() <= 1e-10 * e.norm().max(1.0));
    }

    #[test]
    fn atomic_norm_certificates() {
        let fs = set(&[1.0, 0.9], 4);
        let c = CVec::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        let atom = build_atom(0.3, &c, &fs).unwrap();
        let x = &atom.matrix * Complex64::new(2.5, 0.0);
        let dec = AtomicDecomposition::new(vec![(2.5, atom.clone())], 4, 2).unwrap();
        assert!((atomic_norm_upper(&x, &dec).unwrap() - 2.5).abs() < 1e-15);
        let empty = AtomicDecomposition::new(vec![], 4, 2).unwrap();
        assert_eq!(atomic_norm_upper(&CMat::zeros(4, 2), &empty).unwrap(), 0.0);
        assert!(matches!(atomic_norm_upper(&x, &empty), Err(Error::InvalidCertificate(_))));
    }

    #[test]
    fn dual_norm_zero_and_homogeneous() {
        let fs = set(&[1.0, 0.85], 6);
        assert_eq!(dual_atomic_norm(&CMat::zeros(6, 2), &fs, 64).unwrap().value, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = complex_gaussian(6, 2, 1.0, &mut rng);
        let a = dual_atomic_norm(&h, &fs, 8192).unwrap().value;
        let b = dual_atomic_norm(&(&h * Complex64::new(2.0, 0.0)), &fs, 8192).unwrap().value;
        assert!((b - 2.0 * a).abs() <= 1e-12 * b);
        assert!(dual_atomic_norm(&h, &fs, 16).is_err());
    }

    #[test]
    fn dual_norm_bounds_atom_correlation() {
        let fs = set(&[1.0, 0.9, 0.8], 6);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let h = complex_gaussian(6, 3, 1.0, &mut rng);
            let dn = dual_atomic_norm(&h, &fs, 8192).unwrap().value;
            let c = complex_gaussian(3, 1, 1.0, &mut rng).column(0).into_owned();
            let atom = build_atom(rng.random_range(-0.5..0.5), &c, &fs).unwrap();
            assert!(atom.matrix.dotc(&h).re <= dn + 1e-12);
            // the best coefficient vector attains the bound at the maximizer
            let hbar = fs.adjoint_map(&h);
            let best = build_atom(
                dual_atomic_norm(&h, &fs, 8192).unwrap().argmax,
                &adjoint_response(&hbar, dual_atomic_norm(&h, &fs, 8192).unwrap().argmax).map(|v| v.conj()),
                &fs,
            )
            .unwrap();
            assert!((best.matrix.dotc(&h).re - dn).abs() < 1e-9 * dn);
        }
    }

    #[test]
    fn assembled_program_structure() {
        let m = 5;
        let fs = set(&[1.0, 1.0, 1.0], m);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = complex_gaussian(m, 3, 1.0, &mut rng);
        let prob = ConicProblem::new(y, fs, 0.5).unwrap();
        let sdp = assemble_dual_sdp(&prob).unwrap();
        assert_eq!(sdp.trace_constraints.len(), m);
        assert!(!sdp.trace_constraints[0].complex);
        assert!(sdp.trace_constraints[1..].iter().all(|c| c.complex && c.rhs == 0.0));
        let h = complex_gaussian(m, 3, 1.0, &mut rng);
        assert_eq!(sdp.hbar(&h), h);
        let q = CMat::identity(m, m) / Complex64::new(m as f64, 0.0);
        let h0 = CMat::zeros(m, 3);
        assert_eq!(sdp.trace_residual(&q), 0.0);
        assert!(sdp.lmi_min_eigenvalue(&h0, &q) >= 0.0);
        assert!(ConicProblem::new(CMat::zeros(m, 3), set(&[1.0, 1.0, 1.0], m), -1.0).is_err());
        assert!(ConicProblem::new(CMat::zeros(m, 2), set(&[1.0, 1.0, 1.0], m), 1.0).is_err());
    }

    #[test]
    fn program_serialization_roundtrip() {
        let m = 4;
        let fs = set(&[1.0, 0.7], m);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prob = ConicProblem::new(complex_gaussian(m, 2, 1.0, &mut rng), fs, 0.25).unwrap();
        let sdp = assemble_dual_sdp(&prob).unwrap();
        let mut man = Vec::new();
        let mut blob = Vec::new();
        sdp.write(&mut man, &mut blob).unwrap();
        let text = String::from_utf8(man.clone()).unwrap();
        assert!(text.contains("\"format\": \"wgs-dual-sdp\""));
        let back = DualSdp::read(man.as_slice(), blob.as_slice()).unwrap();
        assert_eq!(back, sdp);
        assert!(DualSdp::read(man.as_slice(), &blob[..10]).is_err());
    }
}

//! Reading arrival directions off the dual optimum.
//!
//! Frequencies are the points where `P(f) = ‖H̄ᴴ a(f)‖₂` reaches one, the
//! coefficient vectors are the normalized values of `H̄ᴴ a(f)` there, and the
//! amplitudes come from a nonnegative fit of the located atoms.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::anm::{assemble_dual_sdp, build_atom, ConicProblem};
use crate::error::{dim_err, domain_err, Error, Result};
use crate::focusing::FocusingSet;
use crate::model::{f_value_to_theta, SubbandData};
use crate::nnls::nnls;
use crate::solver::{solve, ConicSolution, SolveStatus, SolverConfig};
use crate::trig::{
    adjoint_response, golden_section_max, grid_point, response_norm, response_norm_on_grid,
    wrap_frequency,
};
use crate::{CMat, CVec, RMat};

/// `P(f) = ‖H̄ᴴ a(f)‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPolynomial {
    hbar: CMat,
}

impl DualPolynomial {
    pub fn new(hbar: CMat) -> Self {
        Self { hbar }
    }

    pub fn hbar(&self) -> &CMat {
        &self.hbar
    }

    pub fn sensors(&self) -> usize {
        self.hbar.nrows()
    }

    pub fn evaluate(&self, f: f64) -> f64 {
        response_norm(&self.hbar, f)
    }

    /// `H̄ᴴ a(f)`.
    pub fn response(&self, f: f64) -> CVec {
        adjoint_response(&self.hbar, f)
    }

    /// Values on the grid `-1/2 + k/n`.
    pub fn on_grid(&self, n: usize) -> Vec<f64> {
        response_norm_on_grid(&self.hbar, n)
    }
}

pub fn dual_polynomial(solution: &ConicSolution) -> Result<DualPolynomial> {
    if solution.status != SolveStatus::Optimal {
        return Err(Error::NotOptimal(format!(
            "solver stopped with status {:?} after {} iterations (primal {:.2e}, dual {:.2e}, gap {:.2e})",
            solution.status,
            solution.iterations,
            solution.residuals.primal,
            solution.residuals.dual,
            solution.residuals.rel_gap
        )));
    }
    Ok(DualPolynomial::new(solution.hbar.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub f: f64,
    pub value: f64,
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Local maxima of `P` with `P >= 1 - peak_tol`, refined to a bracket of
/// 1e-9 and thinned to `min_separation`, in increasing `f`.
pub fn locate_peaks(
    poly: &DualPolynomial,
    peak_tol: f64,
    min_separation: f64,
    grid_size: usize,
) -> Result<Vec<Peak>> {
    if !(peak_tol > 0.0 && peak_tol < 0.5) {
        return Err(domain_err!("peak tolerance {peak_tol} outside (0, 0.5)"));
    }
    if grid_size < 4 * poly.sensors() {
        return Err(domain_err!("grid of {grid_size} points needs at least 4M = {}", 4 * poly.sensors()));
    }
    if !(min_separation >= 0.0) {
        return Err(domain_err!("minimum separation must be >= 0"));
    }
    let values = poly.on_grid(grid_size);
    let n = grid_size;
    let step = 1.0 / n as f64;
    let threshold = 1.0 - peak_tol;
    let mut candidates = Vec::new();
    for k in 0..n {
        let prev = values[(k + n - 1) % n];
        let next = values[(k + 1) % n];
        let v = values[k];
        if v >= threshold && v >= prev && v > next {
            let center = grid_point(k, n);
            let m = golden_section_max(|f| poly.evaluate(f), center - step, center + step, 1e-9);
            let (f, value) = if m.value >= v { (wrap_frequency(m.x), m.value) } else { (center, v) };
            candidates.push(Peak { f, value });
        }
    }
    candidates.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.f.total_cmp(&b.f)));
    let mut kept: Vec<Peak> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| circular_distance(k.f, c.f) >= min_separation) {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.f.total_cmp(&b.f));
    Ok(kept)
}

/// Peaks closer than this after refinement are the same maximum.
const DUPLICATE_PEAK: f64 = 1e-7;

/// Single-linkage clusters of `peaks` (sorted by `f`, on the circle) at
/// distance below `min_separation`, each replaced by its `betas`-weighted
/// centroid, or by its highest peak when all weights vanish.
fn merge_close_peaks(peaks: &[Peak], betas: &[f64], min_separation: f64) -> Vec<f64> {
    let n = peaks.len();
    if n == 0 {
        return Vec::new();
    }
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..n {
        if peaks[i].f - peaks[i - 1].f < min_separation {
            groups.last_mut().expect("nonempty").push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    if groups.len() > 1 && circular_distance(peaks[n - 1].f, peaks[0].f) < min_separation {
        let first = groups.remove(0);
        groups.last_mut().expect("nonempty").extend(first);
    }
    let mut out: Vec<f64> = groups
        .iter()
        .map(|g| {
            let anchor = *g
                .iter()
                .max_by(|&&a, &&b| betas[a].total_cmp(&betas[b]).then(peaks[a].value.total_cmp(&peaks[b].value)))
                .expect("nonempty");
            let weight: f64 = g.iter().map(|&i| betas[i]).sum();
            if g.len() == 1 || weight <= 0.0 {
                return peaks[anchor].f;
            }
            let r = peaks[anchor].f;
            let offset: f64 = g
                .iter()
                .map(|&i| betas[i] * ((peaks[i].f - r + 0.5).rem_euclid(1.0) - 0.5))
                .sum::<f64>()
                / weight;
            wrap_frequency(r + offset)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

pub fn locate_frequencies(
    poly: &DualPolynomial,
    peak_tol: f64,
    min_separation: f64,
    grid_size: usize,
) -> Result<Vec<f64>> {
    Ok(locate_peaks(poly, peak_tol, min_separation, grid_size)?
        .into_iter()
        .map(|p| p.f)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    /// Unit-norm coefficient vector.
    pub c: CVec,
    /// Norm before renormalization, equal to `P(f)`.
    pub raw_norm: f64,
}

impl Coefficient {
    /// Peaks this far below one do not certify an atom.
    pub fn is_reliable(&self) -> bool {
        self.raw_norm >= 0.5
    }
}

/// `ĉ = conj(H̄ᴴ a(f̂))`, renormalized to unit length.
pub fn recover_coefficients(poly: &DualPolynomial, fs: &[f64]) -> Result<Vec<Coefficient>> {
    fs.iter()
        .map(|&f| {
            let r = poly.response(f).map(|v| v.conj());
            let raw_norm = r.norm();
            if raw_norm == 0.0 {
                return Err(domain_err!("dual polynomial vanishes at f = {f}"));
            }
            if raw_norm < 0.5 {
                log::warn!("unreliable peak at f = {f}: coefficient norm {raw_norm:.3}");
            }
            Ok(Coefficient { c: r.unscale(raw_norm), raw_norm })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeFit {
    pub betas: Vec<f64>,
    /// `‖target - sum β̂_k A_k‖_F`.
    pub residual: f64,
    /// Whether the ridge fallback was needed.
    pub ridge: bool,
}

const GRAM_CONDITION_LIMIT: f64 = 1e10;

/// Nonnegative least-squares weights of the atoms `A(f_k, c_k)` fitted to `target`.
pub fn recover_amplitudes(
    target: &CMat,
    fs: &[f64],
    cs: &[CVec],
    focusing: &FocusingSet,
) -> Result<AmplitudeFit> {
    if fs.len() != cs.len() {
        return Err(dim_err!("{} frequencies but {} coefficient vectors", fs.len(), cs.len()));
    }
    if target.shape() != (focusing.sensors(), focusing.subbands()) {
        return Err(dim_err!("target is {:?}, focusing set expects {}x{}", target.shape(), focusing.sensors(), focusing.subbands()));
    }
    if fs.is_empty() {
        return Ok(AmplitudeFit { betas: Vec::new(), residual: target.norm(), ridge: false });
    }
    let len = target.len();
    let k = fs.len();
    // real embedding: [Re vec A; Im vec A] β ≈ [Re vec Y; Im vec Y]
    let mut a = RMat::zeros(2 * len, k);
    for (col, (&f, c)) in fs.iter().zip(cs).enumerate() {
        let atom = build_atom(f, c, focusing)?;
        for (i, v) in atom.matrix.iter().enumerate() {
            a[(i, col)] = v.re;
            a[(len + i, col)] = v.im;
        }
    }
    let mut b = DVector::zeros(2 * len);
    for (i, v) in target.iter().enumerate() {
        b[i] = v.re;
        b[len + i] = v.im;
    }

    let sv = a.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
    let ridge = condition > GRAM_CONDITION_LIMIT;
    let sol = if ridge {
        log::warn!("atom Gram condition {condition:.2e}; using ridge fallback");
        let lambda = 1e-8 * a.norm_squared();
        let mut aug = RMat::zeros(2 * len + k, k);
        aug.view_mut((0, 0), (2 * len, k)).copy_from(&a);
        for i in 0..k {
            aug[(2 * len + i, i)] = lambda.sqrt();
        }
        let mut baug = DVector::zeros(2 * len + k);
        baug.rows_mut(0, 2 * len).copy_from(&b);
        nnls(&aug, &baug)?
    } else {
        nnls(&a, &b)?
    };
    let residual = (b - &a * &sol.x).norm();
    Ok(AmplitudeFit { betas: sol.x.iter().copied().collect(), residual, ridge })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub solver: SolverConfig,
    pub peak_tol: f64,
    /// Minimum peak separation in `f`; `0.5 / M` when absent.
    pub min_separation: Option<f64>,
    pub grid_size: usize,
    /// Atoms whose amplitude is below this fraction of the largest one are dropped.
    pub min_relative_amplitude: f64,
    /// Atoms whose amplitude is below this fraction of `‖Y‖_F` are dropped.
    pub min_absolute_amplitude: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            peak_tol: 0.05,
            min_separation: None,
            grid_size: 8192,
            min_relative_amplitude: 0.1,
            min_absolute_amplitude: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub dual_objective: f64,
    /// `|sum β̂ - dual objective|` over every located peak.
    pub duality_gap: f64,
    pub relative_gap: f64,
    /// `P(f̂_k)` of the reported atoms.
    pub peak_values: Vec<f64>,
    /// Located peaks removed by the amplitude thresholds.
    pub pruned: usize,
    /// Reported atoms whose coefficient norm fell below 0.5.
    pub unreliable: Vec<usize>,
    pub fit_residual: f64,
    pub ridge: bool,
    pub iterations: usize,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    pub fs: Vec<f64>,
    pub thetas: Vec<f64>,
    pub cs: Vec<CVec>,
    pub betas: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl DoaEstimate {
    pub fn khat(&self) -> usize {
        self.fs.len()
    }

    /// Angles of the `k` strongest atoms, in increasing order.
    pub fn strongest(&self, k: usize) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..self.khat()).collect();
        idx.sort_by(|&a, &b| self.betas[b].total_cmp(&self.betas[a]));
        let mut out: Vec<f64> = idx.into_iter().take(k).map(|i| self.thetas[i]).collect();
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn report(&self) -> EstimateReport {
        EstimateReport {
            method: "WGS".into(),
            angles_deg: self.thetas.clone(),
            fs: self.fs.clone(),
            khat: self.khat(),
            betas: Some(self.betas.clone()),
            c_magnitudes: Some(
                self.cs.iter().map(|c| c.iter().map(|v| v.norm()).collect()).collect(),
            ),
            diagnostics: Some(self.diagnostics.clone()),
        }
    }
}

/// JSON form of an estimate, shared by every method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: String,
    pub angles_deg: Vec<f64>,
    pub fs: Vec<f64>,
    pub khat: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub betas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c_magnitudes: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostics: Option<Diagnostics>,
}

/// Full pipeline: focusing, dual program, solve, peaks, coefficients,
/// amplitudes and angles.
///
/// Amplitudes are fitted to the denoised matrix `Y - sqrt(gamma) H / ‖H‖_F`
/// rather than to `Y`, which keeps noise-driven side peaks near zero weight.
///
/// Near-unit peaks closer than the minimum separation are fitted separately
/// and then replaced by their amplitude-weighted centroid, followed by a refit
/// on the merged frequencies.
pub fn estimate_doa(data: &SubbandData, gamma: f64, config: &EstimatorConfig) -> Result<DoaEstimate> {
    let m = data.sensors();
    let focusing = FocusingSet::new(data.alphas(), m)?;
    let program = assemble_dual_sdp(&ConicProblem::new(data.y.clone(), focusing.clone(), gamma)?)?;
    let solution = solve(&program, &config.solver)?;
    let poly = dual_polynomial(&solution)?;
    let min_sep = config.min_separation.unwrap_or(0.5 / m as f64);
    if !(min_sep >= 0.0) {
        return Err(domain_err!("minimum separation must be >= 0"));
    }
    let target = solution.primal_estimate(&data.y);

    let raw = locate_peaks(&poly, config.peak_tol, DUPLICATE_PEAK, config.grid_size)?;
    let raw_fs: Vec<f64> = raw.iter().map(|p| p.f).collect();
    let raw_cs: Vec<CVec> = recover_coefficients(&poly, &raw_fs)?.into_iter().map(|c| c.c).collect();
    let raw_fit = recover_amplitudes(&target, &raw_fs, &raw_cs, &focusing)?;

    let beta_sum: f64 = raw_fit.betas.iter().sum();
    let duality_gap = (beta_sum - solution.objective).abs();
    let relative_gap = duality_gap / solution.objective.abs().max(beta_sum).max(f64::MIN_POSITIVE);

    let merged = merge_close_peaks(&raw, &raw_fit.betas, min_sep);
    let (fs, coefficients, fit) = if merged.len() == raw.len() {
        (raw_fs, recover_coefficients(&poly, &merged)?, raw_fit)
    } else {
        let coefficients = recover_coefficients(&poly, &merged)?;
        let cs: Vec<CVec> = coefficients.iter().map(|c| c.c.clone()).collect();
        let fit = recover_amplitudes(&target, &merged, &cs, &focusing)?;
        (merged, coefficients, fit)
    };
    let cs: Vec<CVec> = coefficients.iter().map(|c| c.c.clone()).collect();

    let largest = fit.betas.iter().copied().fold(0.0, f64::max);
    let floor = (config.min_relative_amplitude * largest).max(config.min_absolute_amplitude * data.y.norm());
    let keep: Vec<usize> = (0..fs.len()).filter(|&i| fit.betas[i] > 0.0 && fit.betas[i] >= floor).collect();

    let thetas = keep
        .iter()
        .map(|&i| f_value_to_theta(fs[i]))
        .collect::<Result<Vec<_>>>()?;
    let unreliable = keep
        .iter()
        .enumerate()
        .filter(|(_, &i)| !coefficients[i].is_reliable())
        .map(|(pos, _)| pos)
        .collect();
    Ok(DoaEstimate {
        fs: keep.iter().map(|&i| fs[i]).collect(),
        thetas,
        cs: keep.iter().map(|&i| cs[i].clone()).collect(),
        betas: keep.iter().map(|&i| fit.betas[i]).collect(),
        diagnostics: Diagnostics {
            dual_objective: solution.objective,
            duality_gap,
            relative_gap,
            peak_values: keep.iter().map(|&i| poly.evaluate(fs[i])).collect(),
            pruned: fs.len() - keep.len(),
            unreliable,
            fit_residual: fit.residual,
            ridge: fit.ridge,
            iterations: solution.iterations,
            status: solution.status,
        },
    })
}

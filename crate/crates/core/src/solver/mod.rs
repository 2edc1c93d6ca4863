//! First-order conic solver for the dual atomic-norm program.
//!
//! ADMM on the splitting `W = Z`, where `W = [[Q, H̄], [H̄ᴴ, I]]` ranges over
//! the affine set cut out by the trace constraints and the focusing map and
//! carries the objective, and `Z` ranges over the PSD cone. Each iteration:
//!
//! 1. prox step: minimize `-Re tr(Yᴴ H) + sqrt(gamma) ‖H‖_F + ρ/2 ‖W - (Z - U)‖²`
//!    over the affine set, which splits into a per-diagonal shift for `Q` and
//!    a generalized group shrinkage for `H`,
//! 2. over-relaxation and projection of `W + U` onto the PSD cone,
//! 3. scaled dual update.
//!
//! Data are normalized to `‖Y‖_F = 1` internally; the optimal `H` does not
//! depend on that scale and the objective is mapped back on return.

mod cone;
mod gram;

use std::io::Write;
use std::path::PathBuf;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::anm::DualSdp;
use crate::error::{domain_err, Error, Result};
use crate::{CMat, RMat};

pub use cone::{complex_to_real_embed, hermitian_eigenvalues, hermitian_part, psd_project};
pub use gram::{gram_certificate, trace_deviation, GramCertificate, GramConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Bound on the relative duality gap required for `Optimal`.
    pub eps_gap: f64,
    /// Initial penalty parameter.
    pub rho: f64,
    /// Residual balancing of `rho`.
    pub adaptive_rho: bool,
    /// Iterations between two `rho` updates.
    pub rho_interval: usize,
    /// Ratio of the residuals that triggers an update.
    pub rho_balance: f64,
    /// Factor applied to `rho` on update.
    pub rho_scale: f64,
    /// Over-relaxation parameter in `(0, 2)`.
    pub relaxation: f64,
    pub verbosity: u8,
    /// Iteration log destination, written when `verbosity > 0`.
    pub log_path: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            eps_abs: 1e-7,
            eps_rel: 1e-6,
            eps_gap: 1e-5,
            rho: 1.0,
            adaptive_rho: true,
            rho_interval: 25,
            rho_balance: 10.0,
            rho_scale: 2.0,
            relaxation: 1.6,
            verbosity: 0,
            log_path: None,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(domain_err!("max_iter must be at least 1"));
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0 && self.eps_gap > 0.0) {
            return Err(domain_err!("tolerances must be positive"));
        }
        if !(self.rho > 0.0 && self.rho_scale > 1.0 && self.rho_balance > 1.0) {
            return Err(domain_err!("penalty parameters out of range"));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(domain_err!("relaxation must lie in (0, 2)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `max(0, -λ_min)` of the returned LMI block relative to `1 + ‖block‖_F`.
    pub psd_violation: f64,
    /// Largest trace-constraint or focusing-map residual of the returned point.
    pub eq_violation: f64,
    /// Relative gap between the objective and the bound implied by the
    /// multiplier of the PSD constraint.
    pub rel_gap: f64,
    /// `‖W - Z‖_F` at the last iteration (normalized units).
    pub primal: f64,
    /// `ρ ‖Z - Z_prev‖_F` at the last iteration (normalized units).
    pub dual: f64,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub h: CMat,
    pub hbar: CMat,
    pub q: CMat,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub status: SolveStatus,
    /// `sqrt(gamma)` of the solved program, kept for primal reconstruction.
    pub sqrt_gamma: f64,
}

impl ConicSolution {
    /// Primal point `X = Y - sqrt(gamma) H / ‖H‖_F` paired with `H` by the
    /// optimality conditions; `Y` itself when `H` or `gamma` vanishes.
    pub fn primal_estimate(&self, y: &CMat) -> CMat {
        let hn = self.h.norm();
        if hn == 0.0 || self.sqrt_gamma == 0.0 {
            return y.clone();
        }
        y - &self.h * Complex64::new(self.sqrt_gamma / hn, 0.0)
    }
}

struct Prepared {
    m: usize,
    j: usize,
    maps: Vec<RMat>,
    /// Eigenpairs of `T_j T_jᵀ`.
    gram_vectors: Vec<RMat>,
    gram_values: Vec<DVector<f64>>,
    y: CMat,
    sqrt_gamma: f64,
}

enum HStep {
    Solved(CMat),
    Unbounded,
}

impl Prepared {
    fn new(program: &DualSdp, scale: f64) -> Self {
        let (m, j) = (program.sensors(), program.subbands());
        let mut gram_vectors = Vec::with_capacity(j);
        let mut gram_values = Vec::with_capacity(j);
        for t in &program.maps {
            let e = (t * t.transpose()).symmetric_eigen();
            gram_values.push(e.eigenvalues.map(|v| v.max(0.0)));
            gram_vectors.push(e.eigenvectors);
        }
        let s = if scale > 0.0 { scale } else { 1.0 };
        Self {
            m,
            j,
            maps: program.maps.clone(),
            gram_vectors,
            gram_values,
            y: &program.y / Complex64::new(s, 0.0),
            sqrt_gamma: program.gamma.sqrt() / s,
        }
    }

    fn hbar(&self, h: &CMat) -> CMat {
        let mut out = CMat::zeros(self.m, self.j);
        for (col, t) in self.maps.iter().enumerate() {
            out.set_column(col, &crate::focusing::apply_real_transpose(t, &h.column(col).into_owned()));
        }
        out
    }

    /// Minimizer of `obj(H) + ρ ‖T^H H - target‖²` with `obj` the negated
    /// dual objective, or the least-squares fit when `with_objective` is off.
    fn h_step(&self, target: &CMat, rho: f64, with_objective: bool) -> HStep {
        let (m, j) = (self.m, self.j);
        // rotate into the eigenbasis of T_j T_jᵀ: r̃ = Uᵀ (y_j + 2ρ T_j v_j)
        let mut rt = CMat::zeros(m, j);
        let mut dmax: f64 = 0.0;
        for col in 0..j {
            let tv = crate::focusing::apply_real(&self.maps[col], &target.column(col).into_owned());
            let mut r = tv * Complex64::new(2.0 * rho, 0.0);
            if with_objective {
                r += self.y.column(col);
            }
            let rot = crate::focusing::apply_real_transpose(&self.gram_vectors[col], &r);
            rt.set_column(col, &rot);
            dmax = dmax.max(self.gram_values[col].max());
        }
        let zero_tol = 1e-13 * dmax.max(1e-300);
        let denom = |col: usize, i: usize| 2.0 * rho * self.gram_values[col][i];

        let sg = if with_objective { self.sqrt_gamma } else { 0.0 };
        let lambda = if sg == 0.0 {
            0.0
        } else {
            let total = rt.norm();
            if total <= sg {
                return HStep::Solved(CMat::zeros(m, j));
            }
            let mut null_sq = 0.0;
            for col in 0..j {
                for i in 0..m {
                    if self.gram_values[col][i] <= zero_tol {
                        null_sq += rt[(i, col)].norm_sqr();
                    }
                }
            }
            if null_sq > sg * sg {
                return HStep::Unbounded;
            }
            // phi(λ)² = sum |r̃|² λ² / (2ρd + λ)² is increasing; solve phi(λ) = sqrt(gamma)
            let g = |lam: f64| -> (f64, f64) {
                let mut val = 0.0;
                let mut der = 0.0;
                for col in 0..j {
                    for i in 0..m {
                        let c = denom(col, i);
                        let w = rt[(i, col)].norm_sqr();
                        let q = lam / (c + lam);
                        val += w * q * q;
                        der += w * 2.0 * q * c / ((c + lam) * (c + lam));
                    }
                }
                (val - sg * sg, der)
            };
            let mut lo = 0.0;
            let mut hi = 2.0 * rho * dmax * sg / (total - sg);
            let mut lam = hi;
            for _ in 0..200 {
                let (v, d) = g(lam);
                if v.abs() <= 1e-15 * sg * sg {
                    break;
                }
                if v > 0.0 {
                    hi = lam;
                } else {
                    lo = lam;
                }
                let newton = lam - v / d;
                lam = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                if hi - lo <= 1e-16 * hi {
                    break;
                }
            }
            lam
        };

        let mut h = CMat::zeros(m, j);
        for col in 0..j {
            let mut scaled = rt.column(col).into_owned();
            for i in 0..m {
                let c = denom(col, i) + lambda;
                if c <= zero_tol * 2.0 * rho && lambda == 0.0 {
                    if with_objective && scaled[i].norm() > 0.0 {
                        return HStep::Unbounded;
                    }
                    scaled[i] = Complex64::new(0.0, 0.0);
                } else {
                    scaled[i] /= c;
                }
            }
            h.set_column(col, &crate::focusing::apply_real(&self.gram_vectors[col], &scaled));
        }
        HStep::Solved(h)
    }

    /// Projection of a Hermitian block onto the trace constraints.
    fn q_step(&self, v11: &CMat) -> CMat {
        let m = self.m;
        let mut q = hermitian_part(v11);
        for offset in 0..m {
            let len = m - offset;
            let s: Complex64 = (0..len).map(|n| q[(n, n + offset)]).sum();
            let rhs = if offset == 0 { 1.0 } else { 0.0 };
            let shift = (s - Complex64::new(rhs, 0.0)) / len as f64;
            for n in 0..len {
                q[(n, n + offset)] -= shift;
                if offset > 0 {
                    q[(n + offset, n)] = q[(n, n + offset)].conj();
                }
            }
        }
        for n in 0..m {
            q[(n, n)].im = 0.0;
        }
        q
    }

    fn objective(&self, h: &CMat) -> f64 {
        self.y.dotc(h).re - self.sqrt_gamma * h.norm()
    }

    /// Gap between the objective and the bound `tr(Λ11)/M + tr(Λ22)` from
    /// the PSD multiplier `Λ = -ρU`.
    fn relative_gap(&self, h: &CMat, u: &CMat, rho: f64) -> f64 {
        let m = self.m;
        let n = m + self.j;
        let lower: f64 = (0..m).map(|i| u[(i, i)].re).sum::<f64>() / m as f64;
        let upper: f64 = (m..n).map(|i| u[(i, i)].re).sum();
        let bound = -rho * (lower + upper);
        let obj = self.objective(h);
        (obj - bound).abs() / (1.0 + obj.abs())
    }

    fn off_diagonal_target(&self, v: &CMat) -> CMat {
        let (m, j) = (self.m, self.j);
        let upper = v.view((0, m), (m, j));
        let lower = v.view((m, 0), (j, m));
        (upper + lower.adjoint()) * Complex64::new(0.5, 0.0)
    }

    fn assemble(&self, hbar: &CMat, q: &CMat) -> CMat {
        let (m, j) = (self.m, self.j);
        let mut b = CMat::zeros(m + j, m + j);
        b.view_mut((0, 0), (m, m)).copy_from(q);
        b.view_mut((0, m), (m, j)).copy_from(hbar);
        b.view_mut((m, 0), (j, m)).copy_from(&hbar.adjoint());
        for i in 0..j {
            b[(m + i, m + i)] = Complex64::new(1.0, 0.0);
        }
        b
    }
}

/// Euclidean projection of an `(M + J)`-square Hermitian block onto the
/// affine set of the program: trace constraints on the `Q` block, the
/// off-diagonal block in the range of the focusing map, identity lower right.
pub fn affine_project(block: &CMat, program: &DualSdp) -> Result<CMat> {
    let n = program.block_size();
    if block.shape() != (n, n) {
        return Err(crate::error::dim_err!("block is {:?}, expected {n}x{n}", block.shape()));
    }
    let prep = Prepared::new(program, 1.0);
    let m = prep.m;
    let q = prep.q_step(&block.view((0, 0), (m, m)).into_owned());
    let target = prep.off_diagonal_target(block);
    let h = match prep.h_step(&target, 1.0, false) {
        HStep::Solved(h) => h,
        HStep::Unbounded => unreachable!("least-squares step is always bounded"),
    };
    Ok(prep.assemble(&prep.hbar(&h), &q))
}

struct IterationLog {
    out: Option<std::io::BufWriter<std::fs::File>>,
}

impl IterationLog {
    fn open(config: &SolverConfig) -> Result<Self> {
        let out = match (&config.log_path, config.verbosity) {
            (Some(p), v) if v > 0 => {
                let mut w = std::io::BufWriter::new(std::fs::File::create(p)?);
                writeln!(w, "iteration,objective,primal_residual,dual_residual,rho")?;
                Some(w)
            }
            _ => None,
        };
        Ok(Self { out })
    }

    fn record(&mut self, it: usize, obj: f64, rp: f64, rd: f64, rho: f64) -> Result<()> {
        if let Some(w) = self.out.as_mut() {
            writeln!(w, "{it},{obj:e},{rp:e},{rd:e},{rho:e}")?;
        }
        Ok(())
    }
}

/// Solves the assembled dual program.
pub fn solve(program: &DualSdp, config: &SolverConfig) -> Result<ConicSolution> {
    config.validate()?;
    let (m, j) = (program.sensors(), program.subbands());
    if program.maps.len() != j || program.maps.iter().any(|t| t.shape() != (m, m)) {
        return Err(crate::error::dim_err!("focusing maps do not match a {m}x{j} program"));
    }
    if !(program.gamma >= 0.0) {
        return Err(domain_err!("gamma must be >= 0"));
    }
    let scale = program.y.norm();
    let prep = Prepared::new(program, scale);
    let n = m + j;
    let mut log = IterationLog::open(config)?;

    let q0 = CMat::identity(m, m) / Complex64::new(m as f64, 0.0);
    let mut z = prep.assemble(&CMat::zeros(m, j), &q0);
    let mut u = CMat::zeros(n, n);
    let mut rho = config.rho;
    let alpha = config.relaxation;

    let mut h = CMat::zeros(m, j);
    let mut q = q0.clone();
    let mut status = SolveStatus::MaxIter;
    let (mut rp, mut rd) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;

    if scale == 0.0 {
        // Y = 0: the objective is -sqrt(gamma) ‖H‖_F, maximized by H = 0
        status = SolveStatus::Optimal;
        rp = 0.0;
        rd = 0.0;
    }

    while status == SolveStatus::MaxIter && iterations < config.max_iter {
        iterations += 1;
        let v = &z - &u;
        q = prep.q_step(&v.view((0, 0), (m, m)).into_owned());
        h = match prep.h_step(&prep.off_diagonal_target(&v), rho, true) {
            HStep::Solved(h) => h,
            HStep::Unbounded => {
                status = SolveStatus::Infeasible;
                break;
            }
        };
        let w = prep.assemble(&prep.hbar(&h), &q);
        let relaxed = &w * Complex64::new(alpha, 0.0) + &z * Complex64::new(1.0 - alpha, 0.0);
        let z_prev = z;
        z = psd_project(&(&relaxed + &u))?;
        u += &relaxed - &z;

        rp = (&w - &z).norm();
        rd = rho * (&z - &z_prev).norm();
        let eps_p = config.eps_abs * n as f64 + config.eps_rel * w.norm().max(z.norm());
        let eps_d = config.eps_abs * n as f64 + config.eps_rel * rho * u.norm();
        if config.verbosity > 0 {
            let obj = prep.objective(&h);
            log.record(iterations, obj * scale, rp, rd, rho)?;
        }
        if !(rp.is_finite() && rd.is_finite()) {
            return Err(Error::Numerical(format!("ADMM iterates diverged at iteration {iterations}")));
        }
        if rp <= eps_p && rd <= eps_d && prep.relative_gap(&h, &u, rho) <= config.eps_gap {
            status = SolveStatus::Optimal;
            break;
        }
        if config.adaptive_rho && iterations % config.rho_interval == 0 {
            if rp > config.rho_balance * rd {
                rho *= config.rho_scale;
                u /= Complex64::new(config.rho_scale, 0.0);
            } else if rd > config.rho_balance * rp {
                rho /= config.rho_scale;
                u *= Complex64::new(config.rho_scale, 0.0);
            }
        }
    }

    let hbar = prep.hbar(&h);
    let block = prep.assemble(&hbar, &q);
    let min_eig = hermitian_eigenvalues(&block).first().copied().unwrap_or(0.0);
    let psd_violation = (-min_eig).max(0.0) / (1.0 + block.norm());
    let eq_violation = program.trace_residual(&q);
    let objective_n = prep.objective(&h);
    let rel_gap = if scale == 0.0 { 0.0 } else { prep.relative_gap(&h, &u, rho) };

    if config.verbosity > 1 {
        log::info!(
            "ADMM {status:?} after {iterations} iterations: objective {:.6e}, primal {rp:.2e}, dual {rd:.2e}, gap {rel_gap:.2e}",
            objective_n * scale
        );
    }

    Ok(ConicSolution {
        hbar: program.hbar(&h),
        h,
        q,
        objective: objective_n * scale,
        residuals: Residuals { psd_violation, eq_violation, rel_gap, primal: rp, dual: rd },
        iterations,
        status,
        sqrt_gamma: program.gamma.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anm::{assemble_dual_sdp, build_atom, ConicProblem};
    use crate::focusing::FocusingSet;
    use crate::model::complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use crate::CVec;

    fn program(m: usize, alphas: &[f64], y: CMat, gamma: f64) -> DualSdp {
        let fs = FocusingSet::new(alphas, m).unwrap();
        assemble_dual_sdp(&ConicProblem::new(y, fs, gamma).unwrap()).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_dual() {
        let p = program(5, &[1.0, 0.9], CMat::zeros(5, 2), 0.3);
        let s = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.h.norm(), 0.0);
    }

    #[test]
    fn affine_projection_keeps_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = program(4, &[1.0, 0.8, 0.6], complex_gaussian(4, 3, 1.0, &mut rng), 0.1);
        let h = complex_gaussian(4, 3, 1.0, &mut rng);
        let q = CMat::identity(4, 4) / Complex64::new(4.0, 0.0);
        let b = p.block(&h, &q);
        let pb = affine_project(&b, &p).unwrap();
        assert!((&pb - &b).norm() < 1e-12);
    }

    #[test]
    fn affine_projection_rescales_diagonal() {
        let m = 5;
        let p = program(m, &[1.0, 0.7], CMat::zeros(m, 2), 0.0);
        let mut b = CMat::identity(m + 2, m + 2);
        for i in 0..m {
            b[(i, i)] = Complex64::new(2.0, 0.0);
        }
        let pb = affine_project(&b, &p).unwrap();
        for i in 0..m {
            assert!((pb[(i, i)] - Complex64::new(1.0 / m as f64, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn solution_invariants_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = program(6, &[1.0, 0.9, 0.8], complex_gaussian(6, 3, 1.0, &mut rng), 0.5);
        let s = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((&s.hbar - p.hbar(&s.h)).norm() < 1e-10);
        assert!((&s.q - s.q.adjoint()).norm() < 1e-12);
        assert!(s.residuals.eq_violation < 1e-12);
        assert!(s.residuals.psd_violation < 1e-5);
    }

    fn single_atom_program(gamma: f64) -> (DualSdp, f64) {
        let fs = FocusingSet::new(&[1.0, 0.9, 0.8], 8).unwrap();
        let c = CVec::from_vec(vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.48),
            Complex64::new(-0.64, 0.0),
        ]);
        let atom = build_atom(0.13, &c, &fs).unwrap();
        let beta = 2.5;
        let y = &atom.matrix * Complex64::new(beta, 0.0);
        (assemble_dual_sdp(&ConicProblem::new(y, fs, gamma).unwrap()).unwrap(), beta)
    }

    #[test]
    fn single_atom_objective_equals_amplitude() {
        let (p, beta) = single_atom_program(1e-8);
        let s = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - beta).abs() <= 1e-3 * beta, "{} vs {beta}", s.objective);
    }

    #[test]
    fn tighter_tolerances_agree() {
        let (p, _) = single_atom_program(1e-8);
        let loose = SolverConfig { eps_abs: 1e-6, eps_rel: 1e-6, ..SolverConfig::default() };
        let tight = SolverConfig { eps_abs: 1e-8, eps_rel: 1e-8, eps_gap: 1e-7, ..SolverConfig::default() };
        let a = solve(&p, &loose).unwrap();
        let b = solve(&p, &tight).unwrap();
        assert_eq!(a.status, SolveStatus::Optimal);
        assert!(b.residuals.primal < a.residuals.primal && b.residuals.dual < a.residuals.dual);
        assert!((a.objective - b.objective).abs() <= 1e-5 * b.objective.abs());
    }

    #[test]
    fn psd_projection_matches_embedded_eigen_clip() {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = hermitian_part(&complex_gaussian(12, 12, 1.0, &mut rng));
            let p = psd_project(&w).unwrap();
            // clip through the real symmetric embedding and read back the complex blocks
            let e = complex_to_real_embed(&w).symmetric_eigen();
            let clipped = e.eigenvalues.map(|l| l.max(0.0));
            let r = &e.eigenvectors * RMat::from_diagonal(&clipped) * e.eigenvectors.transpose();
            let oracle = CMat::from_fn(12, 12, |i, k| Complex64::new(r[(i, k)], r[(i + 12, k)]));
            assert!((&p - &oracle).norm() <= 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn embedding_doubles_the_spectrum() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = hermitian_part(&complex_gaussian(7, 7, 1.0, &mut rng));
            let ev = hermitian_eigenvalues(&w);
            let mut doubled: Vec<f64> = ev.iter().flat_map(|v| [*v, *v]).collect();
            doubled.sort_by(|a, b| a.total_cmp(b));
            let mut re: Vec<f64> = complex_to_real_embed(&w).symmetric_eigenvalues().iter().copied().collect();
            re.sort_by(|a, b| a.total_cmp(b));
            for (a, b) in doubled.iter().zip(&re) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn affine_projection_is_orthogonal_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = program(5, &[1.0, 0.85, 0.7], CMat::zeros(5, 3), 0.0);
        for _ in 0..100 {
            let x = complex_gaussian(8, 8, 1.0, &mut rng);
            let x = hermitian_part(&x);
            let px = affine_project(&x, &p).unwrap();
            let ppx = affine_project(&px, &p).unwrap();
            assert!((&ppx - &px).norm() <= 1e-12);
            assert!(p.trace_residual(&px.view((0, 0), (5, 5)).into_owned()) < 1e-13);

            // x - P(x) is orthogonal to every direction inside the affine set
            let h = complex_gaussian(5, 3, 1.0, &mut rng);
            let q = CMat::identity(5, 5) / Complex64::new(5.0, 0.0);
            let z = p.block(&h, &q);
            let inner = (&x - &px).dotc(&(&z - &px));
            assert!(inner.re.abs() <= 1e-10 * (1.0 + x.norm() * z.norm()));
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = program(6, &[1.0, 0.9], complex_gaussian(6, 2, 1.0, &mut rng), 0.2);
        let a = solve(&p, &SolverConfig::default()).unwrap();
        let b = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(a.h, b.h);
        assert_eq!(a.q, b.q);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn residuals_trend_downwards() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("iters.csv");
        for seed in 0..4 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = program(8, &[1.0, 0.9, 0.8, 0.7], complex_gaussian(8, 4, 1.0, &mut rng), 0.5);
            let cfg = SolverConfig {
                eps_abs: 1e-12,
                eps_rel: 1e-12,
                max_iter: 2000,
                verbosity: 1,
                log_path: Some(log.clone()),
                ..SolverConfig::default()
            };
            solve(&p, &cfg).unwrap();
            let text = std::fs::read_to_string(&log).unwrap();
            let combined: Vec<f64> = text
                .lines()
                .skip(1)
                .map(|l| {
                    let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
                    v[2] + v[3]
                })
                .collect();
            for k in 50..combined.len() / 10 {
                assert!(combined[10 * k - 1] < combined[k - 1], "seed {seed}, k {k}");
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        let p = program(4, &[1.0], CMat::zeros(4, 1), 0.0);
        let cfg = SolverConfig { max_iter: 0, ..SolverConfig::default() };
        assert!(solve(&p, &cfg).is_err());
        let cfg = SolverConfig { eps_abs: 0.0, ..SolverConfig::default() };
        assert!(solve(&p, &cfg).is_err());
    }
}

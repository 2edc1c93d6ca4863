//! Nonnegative least squares by the Lawson–Hanson active-set method.

use nalgebra::DVector;

use crate::error::{dim_err, Result};
use crate::RMat;

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    /// `‖A x - b‖₂`.
    pub residual: f64,
    pub iterations: usize,
}

/// Minimizes `‖A x - b‖₂` subject to `x >= 0`.
pub fn nnls(a: &RMat, b: &DVector<f64>) -> Result<NnlsSolution> {
    let (rows, n) = a.shape();
    if b.len() != rows {
        return Err(dim_err!("right-hand side has {} entries, matrix has {rows} rows", b.len()));
    }
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 10.0 * f64::EPSILON * a.norm().max(1.0) * (rows.max(n) as f64);
    let max_outer = 3 * n + 10;
    let mut iterations = 0;

    loop {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&i| !passive[i] && w[i] > tol)
            .max_by(|&i, &k| w[i].total_cmp(&w[k]));
        let Some(enter) = candidate else { break };
        if iterations >= max_outer {
            break;
        }
        iterations += 1;
        passive[enter] = true;

        loop {
            let z = solve_passive(a, b, &passive);
            if (0..n).all(|i| !passive[i] || z[i] > 0.0) {
                x = z;
                break;
            }
            let mut step = f64::INFINITY;
            for i in 0..n {
                if passive[i] && z[i] <= 0.0 {
                    let s = x[i] / (x[i] - z[i]);
                    step = step.min(s);
                }
            }
            x += (z - &x) * step;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    let residual = (b - a * &x).norm();
    Ok(NnlsSolution { x, residual, iterations })
}

fn solve_passive(a: &RMat, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let sub = a.select_columns(&idx);
    let sol = sub
        .clone()
        .svd(true, true)
        .solve(b, 1e-14 * sub.norm().max(1e-300))
        .unwrap_or_else(|_| DVector::zeros(idx.len()));
    let mut z = DVector::zeros(passive.len());
    for (k, &i) in idx.iter().enumerate() {
        z[i] = sol[k];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recovers_nonnegative_solution() {
        let a = RMat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, 3.0, 5.0]);
        let s = nnls(&a, &b).unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 3.0).abs() < 1e-12);
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn clamps_negative_direction() {
        let a = RMat::identity(2, 2);
        let b = DVector::from_vec(vec![1.0, -4.0]);
        let s = nnls(&a, &b).unwrap();
        assert_eq!(s.x[1], 0.0);
        assert!((s.x[0] - 1.0).abs() < 1e-14);
        assert!((s.residual - 4.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn kkt_conditions(vals in proptest::collection::vec(-1.0f64..1.0, 24), rhs in proptest::collection::vec(-1.0f64..1.0, 6)) {
            let a = RMat::from_row_slice(6, 4, &vals);
            let b = DVector::from_vec(rhs);
            let s = nnls(&a, &b).unwrap();
            let g = a.transpose() * (&a * &s.x - &b);
            for i in 0..4 {
                prop_assert!(s.x[i] >= 0.0);
                prop_assert!(g[i] >= -1e-9);
                if s.x[i] > 1e-9 {
                    prop_assert!(g[i].abs() < 1e-8);
                }
            }
        }
    }
}

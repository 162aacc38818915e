//! Preconditioned fixed-point iteration with DIIS extrapolation, and the
//! explicit pseudoinverse reference solve.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct DiisOptions {
    /// Convergence threshold δ on `‖b − Aλ‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
    pub depth: usize,
}

impl Default for DiisOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 100, depth: 8 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResponseSolution {
    pub lambda: Vec<f64>,
    /// `‖r‖_∞` at every residual evaluation, starting from λ = 0.
    pub residual_history: Vec<f64>,
    /// Number of preconditioned updates taken.
    pub iterations: usize,
    pub converged: bool,
    /// Component of b outside the range of A (pseudoinverse route only).
    pub null_space_residual: Option<f64>,
}

impl ResponseSolution {
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::ResponseNotConverged {
                iterations: self.iterations,
                residual: self.residual_history.last().copied().unwrap_or(f64::NAN),
            })
        }
    }
}

/// `|d|`, or 1 where `|d| < floor`.
pub fn condition_preconditioner(diag: &[f64], floor: f64) -> Vec<f64> {
    diag.iter().map(|d| if d.abs() < floor { 1.0 } else { d.abs() }).collect()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `Aλ = b`:
///
/// 1. λ = 0
/// 2. r = b − Aλ
/// 3. stop if ‖r‖_∞ < δ
/// 4. d = P⁻¹r
/// 5. λ ← λ + d
/// 6. push (λ, r) into the DIIS history
/// 7. λ ← DIIS extrapolation
/// 8. repeat from 2, failing after `max_iter` updates.
pub fn solve_response_diis(
    mut matvec: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    precond: &[f64],
    opts: &DiisOptions,
) -> Result<ResponseSolution> {
    let n = b.len();
    if precond.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: precond.len() });
    }
    let mut lambda = vec![0.0; n];
    let mut history: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut residual_history = Vec::new();
    let mut iterations = 0;
    loop {
        // σ(0) = 0 for any linear operator; skip the call so a zero trial
        // vector never reaches a matrix-free product.
        let sigma = if lambda.iter().all(|v| *v == 0.0) { vec![0.0; n] } else { matvec(&lambda)? };
        if sigma.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sigma.len() });
        }
        if sigma.iter().any(|v| v.is_nan()) {
            return Err(Error::NaN("Hessian-vector product"));
        }
        let r: Vec<f64> = b.iter().zip(&sigma).map(|(bi, si)| bi - si).collect();
        let rnorm = max_norm(&r);
        residual_history.push(rnorm);
        if rnorm < opts.tol {
            return Ok(ResponseSolution { lambda, residual_history, iterations, converged: true, null_space_residual: None });
        }
        if iterations == opts.max_iter {
            return Ok(ResponseSolution { lambda, residual_history, iterations, converged: false, null_space_residual: None });
        }
        iterations += 1;
        for ((l, ri), p) in lambda.iter_mut().zip(&r).zip(precond) {
            *l += ri / p;
        }
        if history.len() == opts.depth {
            history.remove(0);
        }
        history.push((lambda.clone(), r));
        lambda = extrapolate(&mut history);
    }
}

/// Minimizes ‖Σ c_i e_i‖ subject to Σ c_i = 1 and returns Σ c_i x_i. Oldest
/// entries are dropped while the bordered system is singular.
fn extrapolate(history: &mut Vec<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    loop {
        let m = history.len();
        if m == 1 {
            return history[0].0.clone();
        }
        let mut bmat = DMatrix::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..=i {
                let v: f64 = history[i].1.iter().zip(&history[j].1).map(|(a, b)| a * b).sum();
                bmat[(i, j)] = v;
                bmat[(j, i)] = v;
            }
            bmat[(i, m)] = -1.0;
            bmat[(m, i)] = -1.0;
        }
        // Scale the error block so conditioning does not depend on ‖r‖.
        let scale = (0..m).map(|i| bmat[(i, i)]).fold(0.0, f64::max);
        if scale > 0.0 {
            for i in 0..m {
                for j in 0..m {
                    bmat[(i, j)] /= scale;
                }
            }
        }
        let mut rhs = DVector::zeros(m + 1);
        rhs[m] = -1.0;
        let svd = bmat.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin > 1e-14 * smax {
            if let Some(c) = bmat.lu().solve(&rhs) {
                let n = history[0].0.len();
                let mut out = vec![0.0; n];
                for (i, (x, _)) in history.iter().enumerate() {
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o += c[i] * xi;
                    }
                }
                return out;
            }
        }
        history.remove(0);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PseudoinverseSolution {
    pub lambda: Vec<f64>,
    pub rank: usize,
    /// `‖b − Aλ‖_∞`: the part of b the range of A cannot reach.
    pub null_space_residual: f64,
}

/// `λ = A⁺b` by symmetric eigendecomposition, dropping eigenvalues with
/// `|e| < cutoff · max|e|`.
pub fn pseudoinverse_solve(a: &DMatrix<f64>, b: &[f64], cutoff: f64) -> Result<PseudoinverseSolution> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.nrows() });
    }
    if n == 0 {
        return Ok(PseudoinverseSolution { lambda: vec![], rank: 0, null_space_residual: 0.0 });
    }
    let eig = a.clone().symmetric_eigen();
    let emax = eig.eigenvalues.amax();
    let bv = DVector::from_column_slice(b);
    let mut lambda = DVector::zeros(n);
    let mut rank = 0;
    for k in 0..n {
        let e = eig.eigenvalues[k];
        if e.abs() > cutoff * emax && e != 0.0 {
            let u = eig.eigenvectors.column(k);
            lambda += u * (u.dot(&bv) / e);
            rank += 1;
        }
    }
    let r = &bv - a * &lambda;
    Ok(PseudoinverseSolution { lambda: lambda.iter().copied().collect(), rank, null_space_residual: r.amax() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 + i as f64 } else { 0.3 / (1.0 + (i + j) as f64) })
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let a = spd(3);
        let s = solve_response_diis(
            |x| Ok((&a * DVector::from_column_slice(x)).as_slice().to_vec()),
            &[0.0; 3],
            &[1.0; 3],
            &Default::default(),
        )
        .unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 0);
        assert_eq!(s.lambda, vec![0.0; 3]);
    }

    #[test]
    fn matches_pseudoinverse_on_indefinite_system() {
        let mut a = spd(5);
        a[(2, 2)] = -1.7;
        let b = [0.3, -0.1, 0.8, 0.05, -0.4];
        let pre = condition_preconditioner(a.diagonal().as_slice(), 1e-8);
        let opts = DiisOptions { tol: 1e-13, ..Default::default() };
        let s = solve_response_diis(|x| Ok((&a * DVector::from_column_slice(x)).as_slice().to_vec()), &b, &pre, &opts).unwrap();
        assert!(s.converged, "{:?}", s.residual_history);
        let p = pseudoinverse_solve(&a, &b, 1e-10).unwrap();
        assert_eq!(p.rank, 5);
        for (x, y) in s.lambda.iter().zip(&p.lambda) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let a = spd(4);
        let opts = DiisOptions { tol: 1e-14, max_iter: 1, depth: 8 };
        let s =
            solve_response_diis(|x| Ok((&a * DVector::from_column_slice(x)).as_slice().to_vec()), &[1.0; 4], &[100.0; 4], &opts)
                .unwrap();
        assert!(!s.converged);
        assert!(matches!(s.into_converged(), Err(Error::ResponseNotConverged { iterations: 1, .. })));
    }

    #[test]
    fn nan_matvec_is_an_error() {
        let r = solve_response_diis(|x| Ok(vec![f64::NAN; x.len()]), &[1.0, 1.0], &[1.0, 1.0], &Default::default());
        assert!(matches!(r, Err(Error::NaN(_))));
    }

    #[test]
    fn preconditioner_rule() {
        assert_eq!(condition_preconditioner(&[0.0, 0.0], 1e-8), vec![1.0, 1.0]);
        assert_eq!(condition_preconditioner(&[2.0, -3.0, 1e-12], 1e-8), vec![2.0, 3.0, 1.0]);
    }

    #[test]
    fn pseudoinverse_reports_null_space() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let p = pseudoinverse_solve(&a, &[2.0, 0.5], 1e-10).unwrap();
        assert_eq!(p.rank, 1);
        assert_eq!(p.lambda, vec![2.0, 0.0]);
        assert!((p.null_space_residual - 0.5).abs() < 1e-15);
    }
}

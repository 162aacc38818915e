//! SA-VQE Hessian: explicit double parameter shift and matrix-free
//! finite-difference products.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mcvqe::McVqeProblem;
use crate::shift::{FdStencil, ShiftRule};

/// `∂²Ē/∂θ_g∂θ_h = Σ_P Σ_Q v_P v_Q Ē(θ + t_P e_g + t_Q e_h)`.
fn double_shift(problem: &McVqeProblem, theta: &[f64], g: usize, h: usize) -> Result<f64> {
    let rg = ShiftRule::for_gate(problem.layout().param_kind(g));
    let rh = ShiftRule::for_gate(problem.layout().param_kind(h));
    let mut shifted = theta.to_vec();
    let mut acc = 0.0;
    for &(tp, vp) in &rg.stencil {
        for &(tq, vq) in &rh.stencil {
            shifted.copy_from_slice(theta);
            shifted[g] += tp;
            shifted[h] += tq;
            acc += vp * vq * problem.sa_energy(&shifted)?;
        }
    }
    Ok(acc)
}

fn check_len(problem: &McVqeProblem, theta: &[f64]) -> Result<()> {
    if theta.len() != problem.n_params() {
        return Err(Error::ParameterLength { expected: problem.n_params(), got: theta.len() });
    }
    Ok(())
}

/// Explicit symmetric Hessian of Ē.
pub fn sa_hessian_exact(problem: &McVqeProblem, theta: &[f64]) -> Result<DMatrix<f64>> {
    check_len(problem, theta)?;
    let n = theta.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|g| (0..=g).map(move |h| (g, h))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(g, h)| Ok(0.5 * (double_shift(problem, theta, g, h)? + double_shift(problem, theta, h, g)?)))
        .collect::<Result<_>>()?;
    let mut a = DMatrix::zeros(n, n);
    for (&(g, h), v) in pairs.iter().zip(values) {
        a[(g, h)] = v;
        a[(h, g)] = v;
    }
    Ok(a)
}

/// Diagonal of the Hessian only, `𝒪(N_θ)` double shifts.
pub fn sa_hessian_diagonal(problem: &McVqeProblem, theta: &[f64]) -> Result<Vec<f64>> {
    check_len(problem, theta)?;
    (0..theta.len()).into_par_iter().map(|g| double_shift(problem, theta, g, g)).collect()
}

/// `σ[x] ≈ ‖x‖₂ Σ_P ṽ_P ∇Ē(θ⁰ + t̃_P x/‖x‖₂)`, the parameter-shift gradient of
/// a finite-difference directional derivative.
pub fn sa_hessian_matvec_fd(problem: &McVqeProblem, theta: &[f64], x: &[f64], stencil: &FdStencil) -> Result<Vec<f64>> {
    check_len(problem, theta)?;
    check_len(problem, x)?;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroTrialVector);
    }
    let grads: Vec<Vec<f64>> = stencil
        .stencil
        .par_iter()
        .map(|&(t, _)| {
            let point: Vec<f64> = theta.iter().zip(x).map(|(th, xi)| th + t * xi / norm).collect();
            problem.sa_gradient(&point)
        })
        .collect::<Result<_>>()?;
    let mut sigma = vec![0.0; theta.len()];
    for (&(_, w), grad) in stencil.stencil.iter().zip(&grads) {
        for (s, gv) in sigma.iter_mut().zip(grad) {
            *s += w * gv * norm;
        }
    }
    if sigma.iter().any(|v| v.is_nan()) {
        return Err(Error::NaN("Hessian-vector product"));
    }
    Ok(sigma)
}

//! Interchangeable ways of solving the response equations `Aλ = b`,
//! registered by name.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::diis::{condition_preconditioner, pseudoinverse_solve, solve_response_diis, DiisOptions, ResponseSolution};
use super::hessian::{sa_hessian_diagonal, sa_hessian_exact, sa_hessian_matvec_fd};
use crate::error::{Error, Result};
use crate::mcvqe::McVqeProblem;
use crate::shift::FdStencil;

#[derive(Debug, Clone, Copy)]
pub struct ResponseSettings {
    pub diis: DiisOptions,
    pub n_fd: usize,
    pub delta_fd: f64,
    pub precond_floor: f64,
    pub pinv_cutoff: f64,
    /// Use the conditioned Hessian diagonal (otherwise the identity).
    pub precondition: bool,
}

impl Default for ResponseSettings {
    fn default() -> Self {
        Self { diis: DiisOptions::default(), n_fd: 4, delta_fd: 0.2, precond_floor: 1e-8, pinv_cutoff: 1e-10, precondition: true }
    }
}

/// The problem at its SA-VQE stationary point, with the explicit Hessian
/// built on first use and shared between strategies.
pub struct ResponseContext<'a> {
    pub problem: &'a McVqeProblem,
    pub theta: &'a [f64],
    exact: OnceLock<DMatrix<f64>>,
}

impl<'a> ResponseContext<'a> {
    pub fn new(problem: &'a McVqeProblem, theta: &'a [f64]) -> Self {
        Self { problem, theta, exact: OnceLock::new() }
    }

    pub fn exact_hessian(&self) -> Result<&DMatrix<f64>> {
        if let Some(a) = self.exact.get() {
            return Ok(a);
        }
        let a = sa_hessian_exact(self.problem, self.theta)?;
        Ok(self.exact.get_or_init(|| a))
    }

    pub fn hessian_diagonal(&self) -> Result<Vec<f64>> {
        match self.exact.get() {
            Some(a) => Ok(a.diagonal().iter().copied().collect()),
            None => sa_hessian_diagonal(self.problem, self.theta),
        }
    }

    fn preconditioner(&self, settings: &ResponseSettings) -> Result<Vec<f64>> {
        if settings.precondition {
            Ok(condition_preconditioner(&self.hessian_diagonal()?, settings.precond_floor))
        } else {
            Ok(vec![1.0; self.theta.len()])
        }
    }
}

pub trait HessianStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn solve(&self, ctx: &ResponseContext<'_>, b: &[f64], settings: &ResponseSettings) -> Result<ResponseSolution>;
}

struct ExactPseudoinverse;
struct DiisExactMatvec;
struct DiisFdMatvec;

impl HessianStrategy for ExactPseudoinverse {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn describe(&self) -> &'static str {
        "explicit Hessian, eigendecomposition pseudoinverse"
    }

    fn solve(&self, ctx: &ResponseContext<'_>, b: &[f64], settings: &ResponseSettings) -> Result<ResponseSolution> {
        let p = pseudoinverse_solve(ctx.exact_hessian()?, b, settings.pinv_cutoff)?;
        if p.null_space_residual >= settings.diis.tol {
            log::warn!(
                "response right-hand side has a component of {:e} outside the Hessian range (rank {} of {})",
                p.null_space_residual,
                p.rank,
                b.len()
            );
        }
        Ok(ResponseSolution {
            lambda: p.lambda,
            residual_history: vec![p.null_space_residual],
            iterations: 0,
            converged: true,
            null_space_residual: Some(p.null_space_residual),
        })
    }
}

impl HessianStrategy for DiisExactMatvec {
    fn name(&self) -> &'static str {
        "matvec"
    }

    fn describe(&self) -> &'static str {
        "DIIS with exact Hessian-vector products"
    }

    fn solve(&self, ctx: &ResponseContext<'_>, b: &[f64], settings: &ResponseSettings) -> Result<ResponseSolution> {
        let a = ctx.exact_hessian()?;
        let pre = ctx.preconditioner(settings)?;
        solve_response_diis(|x| Ok((a * DVector::from_column_slice(x)).iter().copied().collect()), b, &pre, &settings.diis)
    }
}

impl HessianStrategy for DiisFdMatvec {
    fn name(&self) -> &'static str {
        "matvec-fd"
    }

    fn describe(&self) -> &'static str {
        "DIIS with finite-difference Hessian-vector products"
    }

    fn solve(&self, ctx: &ResponseContext<'_>, b: &[f64], settings: &ResponseSettings) -> Result<ResponseSolution> {
        let stencil = FdStencil::new(settings.n_fd, settings.delta_fd)?;
        let pre = ctx.preconditioner(settings)?;
        solve_response_diis(|x| sa_hessian_matvec_fd(ctx.problem, ctx.theta, x, &stencil), b, &pre, &settings.diis)
    }
}

static STRATEGIES: [&dyn HessianStrategy; 3] = [&ExactPseudoinverse, &DiisExactMatvec, &DiisFdMatvec];

pub fn registry() -> &'static [&'static dyn HessianStrategy] {
    &STRATEGIES
}

/// Looks up a strategy by name; "matvec-exact" is accepted for "matvec".
pub fn strategy(name: &str) -> Result<&'static dyn HessianStrategy> {
    let name = if name == "matvec-exact" { "matvec" } else { name };
    STRATEGIES.iter().copied().find(|s| s.name() == name).ok_or_else(|| Error::UnknownStrategy(name.to_string()))
}

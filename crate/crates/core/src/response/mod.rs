//! Response-relaxed MC-VQE gradients.
//!
//! For state Θ the Lagrangian `𝓛 = E^Θ + Σ_g λ_g ∂Ē/∂θ_g` is made stationary
//! in θ by solving `Aλ = b` with `A` the SA-VQE Hessian and `b = −∂E^Θ/∂θ`.
//! Its derivative with respect to a Hamiltonian matrix element is then a
//! contraction with the relaxed densities `γ̄ = γ + γ̃`.

mod diis;
mod hessian;
mod strategy;

pub use diis::{
    condition_preconditioner, pseudoinverse_solve, solve_response_diis, DiisOptions, PseudoinverseSolution, ResponseSolution,
};
pub use hessian::{sa_hessian_diagonal, sa_hessian_exact, sa_hessian_matvec_fd};
pub use strategy::{registry, strategy, HessianStrategy, ResponseContext, ResponseSettings};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{relaxed_densities, DensityFlavor, DensityPair};
use crate::error::{Error, Result};
use crate::integrals::{ActiveSpaceIntegrals, ElementId};
use crate::mcvqe::{McVqeProblem, McVqeSolution};
use crate::shift::ShiftRule;
use crate::statevector::Statevector;

/// `b_g = −∂E^Θ/∂θ_g` with the subspace eigenvectors held fixed.
pub fn state_gradient_rhs(problem: &McVqeProblem, theta: &[f64], v: &DMatrix<f64>, state: usize) -> Result<Vec<f64>> {
    let omega = problem.rotated_reference(v, state)?;
    let g = problem.parameter_gradient(|t| problem.entangled_energy(&omega, t), theta)?;
    Ok(g.into_iter().map(|x| -x).collect())
}

/// Densities of a state measured through Pauli-word expectation values and
/// backtransformed to the orbital basis.
pub fn measured_densities(problem: &McVqeProblem, psi: &Statevector) -> Result<DensityPair> {
    let jw = problem.jw();
    jw.backtransform(&jw.word_expectations(psi)?)
}

/// Unrelaxed densities of `|Ψ^Θ⟩ = Û(θ)|Ω^Θ⟩`.
pub fn unrelaxed_densities(problem: &McVqeProblem, theta: &[f64], v: &DMatrix<f64>, state: usize) -> Result<DensityPair> {
    let omega = problem.rotated_reference(v, state)?;
    measured_densities(problem, &problem.layout().apply(&omega, theta)?)
}

/// `Σ_Θ w_Θ γ(Û(θ)Φ^Θ)`.
pub fn sa_densities(problem: &McVqeProblem, theta: &[f64]) -> Result<DensityPair> {
    let mut out = DensityPair::zeros(problem.integrals().n_orb(), DensityFlavor::Unrelaxed);
    for (w, phi) in problem.weights().iter().zip(problem.reference_states()) {
        if *w != 0.0 {
            let d = measured_densities(problem, &problem.layout().apply(phi, theta)?)?;
            out.add_scaled(&d, *w);
        }
    }
    Ok(out)
}

/// `γ̃ = Σ_g λ_g ∂_{θ_g} γ^{SA}(θ)` by one parameter-shift application per g.
pub fn response_densities(problem: &McVqeProblem, theta: &[f64], lambda: &[f64]) -> Result<DensityPair> {
    if lambda.len() != problem.n_params() {
        return Err(Error::ParameterLength { expected: problem.n_params(), got: lambda.len() });
    }
    let n = problem.integrals().n_orb();
    let parts: Vec<DensityPair> = (0..lambda.len())
        .into_par_iter()
        .filter(|&g| lambda[g] != 0.0)
        .map(|g| {
            let rule = ShiftRule::for_gate(problem.layout().param_kind(g));
            let mut acc = DensityPair::zeros(n, DensityFlavor::Response);
            let mut shifted = theta.to_vec();
            for &(t, w) in &rule.stencil {
                shifted[g] = theta[g] + t;
                acc.add_scaled(&sa_densities(problem, &shifted)?, w * lambda[g]);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut out = DensityPair::zeros(n, DensityFlavor::Response);
    for p in &parts {
        out.add_scaled(p, 1.0);
    }
    Ok(out)
}

/// Derivatives of E^Θ with respect to the Hamiltonian matrix elements.
#[derive(Debug, Clone, Serialize)]
pub struct GradientRecord {
    /// dE/dE_ext.
    pub d_e_ext: f64,
    /// dE/d(p|h|q) treating each (p, q) as independent: γ̄_pq.
    #[serde(serialize_with = "serialize_matrix")]
    pub one_body: DMatrix<f64>,
    /// dE/d(pq|rs) per independent element: ½Γ̄_pqrs, `[p][q][r][s]` order.
    pub eri: Vec<f64>,
    /// Total derivative along each canonical element's symmetry orbit, the
    /// quantity `integrals.perturb` displaces.
    pub orbits: Vec<(ElementId, f64)>,
}

fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

impl GradientRecord {
    pub fn orbit(&self, elem: ElementId) -> Option<f64> {
        let c = elem.canonical();
        self.orbits.iter().find(|(e, _)| *e == c).map(|(_, v)| *v)
    }

    /// Largest orbit-derivative deviation, E_ext included.
    pub fn max_deviation(&self, other_orbits: &[(ElementId, f64)], other_e_ext: f64) -> f64 {
        let mut worst = (self.d_e_ext - other_e_ext).abs();
        for (e, v) in other_orbits {
            let mine = self.orbit(*e).unwrap_or(f64::NAN);
            worst = worst.max((mine - v).abs());
        }
        worst
    }
}

/// Reads the matrix-element gradient off relaxed densities.
pub fn matrix_element_gradient(relaxed: &DensityPair, ints: &ActiveSpaceIntegrals) -> Result<GradientRecord> {
    if relaxed.flavor != DensityFlavor::Relaxed {
        return Err(Error::FlavorMismatch(format!("gradient needs relaxed densities, got {:?}", relaxed.flavor)));
    }
    if relaxed.n_orb() != ints.n_orb() {
        return Err(Error::DimensionMismatch { expected: ints.n_orb(), got: relaxed.n_orb() });
    }
    let orbits = ints.canonical_elements().into_iter().map(|e| (e, relaxed.orbit_derivative(e))).collect();
    Ok(GradientRecord {
        d_e_ext: 1.0,
        one_body: relaxed.opdm.clone(),
        eri: relaxed.tpdm.iter().map(|g| 0.5 * g).collect(),
        orbits,
    })
}

/// Everything the gradient procedure produces for one state.
#[derive(Debug, Clone)]
pub struct StateGradient {
    pub state: usize,
    pub energy: f64,
    pub rhs: Vec<f64>,
    pub response: ResponseSolution,
    pub strategy: &'static str,
    pub unrelaxed: DensityPair,
    pub response_densities: DensityPair,
    pub relaxed: DensityPair,
    pub gradient: GradientRecord,
    /// Gradient from unrelaxed densities alone (λ = 0).
    pub bare_gradient: GradientRecord,
    /// `E^Θ + Σ_g λ_g ∂Ē/∂θ_g` at θ*.
    pub lagrangian: f64,
}

/// Runs the gradient procedure for `state` on a converged solution.
pub fn state_gradient(
    problem: &McVqeProblem,
    solution: &McVqeSolution,
    state: usize,
    ctx: &ResponseContext<'_>,
    strategy: &dyn HessianStrategy,
    settings: &ResponseSettings,
) -> Result<StateGradient> {
    let theta = solution.theta();
    let v = &solution.subspace.eigenvectors;
    if state >= problem.n_states() {
        return Err(Error::InvalidProblem(format!("state {state} out of range ({} states)", problem.n_states())));
    }
    let rhs = state_gradient_rhs(problem, theta, v, state)?;
    let response = strategy.solve(ctx, &rhs, settings)?.into_converged()?;
    let unrelaxed = unrelaxed_densities(problem, theta, v, state)?;
    let resp = response_densities(problem, theta, &response.lambda)?;
    let relaxed = relaxed_densities(&unrelaxed, &resp)?;
    let ints = problem.integrals();
    let gradient = matrix_element_gradient(&relaxed, ints)?;
    let mut bare = unrelaxed.clone();
    bare.flavor = DensityFlavor::Relaxed;
    let bare_gradient = matrix_element_gradient(&bare, ints)?;
    let sa_grad = &solution.optimization.gradient;
    let lagrangian = solution.subspace.energies[state] + response.lambda.iter().zip(sa_grad).map(|(l, g)| l * g).sum::<f64>();
    Ok(StateGradient {
        state,
        energy: solution.subspace.energies[state],
        rhs,
        response,
        strategy: strategy.name(),
        unrelaxed,
        response_densities: resp,
        relaxed,
        gradient,
        bare_gradient,
        lagrangian,
    })
}

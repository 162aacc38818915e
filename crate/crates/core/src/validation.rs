//! Internal consistency suites for a converged MC-VQE solution.
//!
//! Each check compares two independent routes to the same quantity and
//! reports the largest deviation against a fixed tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::fci::{fci_solve, fd_total_gradient, FD_STEP};
use crate::jw::map_number_operators;
use crate::mcvqe::{McVqeProblem, McVqeSolution};
use crate::optimize::LbfgsOptions;
use crate::response::{
    pseudoinverse_solve, state_gradient, state_gradient_rhs, HessianStrategy, ResponseContext, ResponseSettings,
};
use crate::shift::ShiftRule;
use crate::statevector::{apply_hamiltonian_direct, direct_densities};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &'static str, max_deviation: f64, tolerance: f64) -> Self {
        Self { name, max_deviation, tolerance, pass: max_deviation <= tolerance }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    pub seed: u64,
    /// Random parameter points for the Hamiltonian and shift-rule checks.
    pub n_points: usize,
    /// Re-solve the pipeline at displaced integrals (the expensive check).
    pub fd_gradient: bool,
    pub fd_options: LbfgsOptions,
}

fn random_theta(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}

pub fn validate_solution(
    problem: &McVqeProblem,
    solution: &McVqeSolution,
    strategy: &dyn HessianStrategy,
    settings: &ResponseSettings,
    opts: &ValidationOptions,
) -> Result<ValidationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let theta = solution.theta();
    let v = &solution.subspace.eigenvectors;
    let ints = problem.integrals();
    let n_orb = ints.n_orb();
    let sector = problem.sector();
    let mut checks = Vec::new();

    // Pauli route vs second-quantized route for Ĥ|ψ⟩.
    let mut worst: f64 = 0.0;
    for _ in 0..opts.n_points {
        let th = random_theta(&mut rng, problem.n_params());
        for phi in problem.reference_states() {
            let psi = problem.layout().apply(phi, &th)?;
            let a = problem.hamiltonian().apply(&psi)?;
            let b = apply_hamiltonian_direct(ints, &psi)?;
            worst = worst.max(a.max_abs_diff(&b));
        }
    }
    checks.push(Check::new("hamiltonian_routes", worst, 1e-12));

    let (na, nb, s2) = map_number_operators(n_orb);
    let mut worst: f64 = 0.0;
    for k in 0..problem.n_states() {
        let psi = problem.layout().apply(&problem.rotated_reference(v, k)?, theta)?;
        worst = worst
            .max((na.expectation(&psi)? - sector.n_alpha as f64).abs())
            .max((nb.expectation(&psi)? - sector.n_beta as f64).abs())
            .max((s2.expectation(&psi)? - sector.s2_eigenvalue()).abs());
    }
    checks.push(Check::new("quantum_numbers", worst, 1e-12));

    let a = problem.subspace_hamiltonian(theta)?;
    let b = problem.subspace_hamiltonian_direct(theta)?;
    checks.push(Check::new("subspace_interference_vs_overlap", (a - b).amax(), 1e-12));

    let mut routes: f64 = 0.0;
    let mut trace: f64 = 0.0;
    for k in 0..problem.n_states() {
        let psi = problem.layout().apply(&problem.rotated_reference(v, k)?, theta)?;
        let direct = direct_densities(&psi)?;
        let measured = problem.jw().backtransform(&problem.jw().word_expectations(&psi)?)?;
        routes = routes.max(direct.max_abs_diff(&measured));
        trace = trace.max((measured.energy(ints) - solution.energies()[k]).abs());
    }
    checks.push(Check::new("density_routes", routes, 1e-12));
    checks.push(Check::new("density_trace_formula", trace, 1e-10));

    let mut worst: f64 = 0.0;
    let h = 1e-6;
    for _ in 0..opts.n_points {
        let th = random_theta(&mut rng, problem.n_params());
        let grad = problem.sa_gradient(&th)?;
        for (g, dg) in grad.iter().enumerate() {
            let mut tp = th.clone();
            let mut tm = th.clone();
            tp[g] += h;
            tm[g] -= h;
            let fd = (problem.sa_energy(&tp)? - problem.sa_energy(&tm)?) / (2.0 * h);
            worst = worst.max((dg - fd).abs());
        }
    }
    // Every gate kind in use has a rule that passed construction-time tomography.
    for g in 0..problem.n_params() {
        ShiftRule::for_gate(problem.layout().param_kind(g));
    }
    checks.push(Check::new("shift_rule_vs_fd", worst, 1e-8));

    let fci = fci_solve(ints, sector, problem.n_states())?;
    let violation = solution.energies().iter().zip(&fci.energies).map(|(e, f)| f - e).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("variational_bound", violation.max(0.0), 1e-10));

    let ctx = ResponseContext::new(problem, theta);
    let mut worst_lambda: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for k in 0..problem.n_states() {
        let rhs = state_gradient_rhs(problem, theta, v, k)?;
        let tight = ResponseSettings { diis: crate::response::DiisOptions { tol: 1e-13, ..settings.diis }, ..*settings };
        let diis = crate::response::strategy("matvec")?.solve(&ctx, &rhs, &tight)?.into_converged()?;
        let pinv = pseudoinverse_solve(ctx.exact_hessian()?, &rhs, settings.pinv_cutoff)?;
        for (x, y) in diis.lambda.iter().zip(&pinv.lambda) {
            worst_lambda = worst_lambda.max((x - y).abs());
        }
        if opts.fd_gradient {
            let g = state_gradient(problem, solution, k, &ctx, strategy, settings)?;
            let fd = fd_total_gradient(problem, k, theta, FD_STEP, &opts.fd_options)?;
            worst_grad = worst_grad.max(g.gradient.max_deviation(&fd.orbits, fd.d_e_ext));
        }
    }
    checks.push(Check::new("diis_vs_pseudoinverse", worst_lambda, 1e-11));
    if opts.fd_gradient {
        checks.push(Check::new("analytic_vs_fd_gradient", worst_grad, 1e-7));
    }

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport { checks, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fix_c;
    use crate::mcvqe::initial_parameters;
    use crate::response::strategy;

    #[test]
    fn converged_solution_passes_cheap_checks() {
        let fx = fix_c();
        let p = McVqeProblem::with_lowest_references(fx.ints, fx.sector, 2, 1, None).unwrap();
        let sol = p.solve(&initial_parameters(p.n_params(), Some(2)), &LbfgsOptions::default()).unwrap();
        let opts = ValidationOptions { seed: 5, n_points: 2, fd_gradient: false, fd_options: LbfgsOptions::default() };
        let report = validate_solution(&p, &sol, strategy("exact").unwrap(), &ResponseSettings::default(), &opts).unwrap();
        assert_eq!(report.checks.len(), 8);
        assert!(report.all_pass, "{:?}", report.checks);
    }
}

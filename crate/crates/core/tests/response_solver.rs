mod common;

use common::*;
use mcvqe_core::fixtures::{fix_b, fix_c};
use mcvqe_core::mcvqe::{initial_parameters, McVqeProblem, McVqeSolution};
use mcvqe_core::response::*;
use mcvqe_core::shift::FdStencil;
use mcvqe_core::LbfgsOptions;
use nalgebra::{DMatrix, DVector};

fn converged(fx: &mcvqe_core::fixtures::Fixture, n_states: usize) -> (McVqeProblem, McVqeSolution) {
    let p = McVqeProblem::with_lowest_references(fx.ints.clone(), fx.sector, n_states, fx.n_layers, None).unwrap();
    let sol = p.solve(&initial_parameters(p.n_params(), Some(1)), &LbfgsOptions::default()).unwrap();
    (p, sol)
}

#[test]
fn exact_hessian_matches_fd_of_shift_gradient() {
    for fx in [fix_b(), fix_c()] {
        let (p, sol) = converged(&fx, 2);
        let th = sol.theta();
        let a = sa_hessian_exact(&p, th).unwrap();
        let h = 1e-5;
        for g in 0..p.n_params() {
            let mut tp = th.to_vec();
            let mut tm = th.to_vec();
            tp[g] += h;
            tm[g] -= h;
            let gp = p.sa_gradient(&tp).unwrap();
            let gm = p.sa_gradient(&tm).unwrap();
            for k in 0..p.n_params() {
                let fd = (gp[k] - gm[k]) / (2.0 * h);
                assert!((a[(k, g)] - fd).abs() < 1e-6, "{} H[{k},{g}] {} vs {fd}", fx.name, a[(k, g)]);
            }
        }
        let diag = sa_hessian_diagonal(&p, th).unwrap();
        for (k, d) in diag.iter().enumerate() {
            assert!((d - a[(k, k)]).abs() < 1e-12);
        }
    }
}

#[test]
fn fd_matvec_columns_converge_to_exact_hessian() {
    let fx = fix_c();
    let (p, sol) = converged(&fx, 2);
    let th = sol.theta();
    let a = sa_hessian_exact(&p, th).unwrap();
    let mut prev = f64::INFINITY;
    for n in [2, 4, 6, 8, 10] {
        let st = FdStencil::new(n, 0.2).unwrap();
        let mut worst: f64 = 0.0;
        for g in 0..p.n_params() {
            let mut e = vec![0.0; p.n_params()];
            e[g] = 2.5;
            let col = sa_hessian_matvec_fd(&p, th, &e, &st).unwrap();
            for k in 0..p.n_params() {
                worst = worst.max((col[k] / 2.5 - a[(k, g)]).abs());
            }
        }
        assert!(worst < prev, "n={n}: {worst:e} not below {prev:e}");
        prev = worst;
    }
    assert!(prev < 1e-8);
    let zero = vec![0.0; p.n_params()];
    assert!(sa_hessian_matvec_fd(&p, th, &zero, &FdStencil::new(4, 0.2).unwrap()).is_err());
}

#[test]
fn lagrangian_equals_state_energy_at_stationary_point() {
    let fx = fix_c();
    let (p, sol) = converged(&fx, 2);
    let ctx = ResponseContext::new(&p, sol.theta());
    let settings = ResponseSettings::default();
    for state in 0..2 {
        let g = state_gradient(&p, &sol, state, &ctx, strategy("matvec").unwrap(), &settings).unwrap();
        assert!((g.lagrangian - g.energy).abs() < 1e-9);
        assert!((g.relaxed.energy(p.integrals()) - g.energy).abs() < 1e-9);
        assert!(g.response_densities.trace().abs() < 1e-10);
    }
}

#[test]
fn strategies_agree_and_registry_is_complete() {
    let names: Vec<&str> = registry().iter().map(|s| s.name()).collect();
    assert_eq!(names, ["exact", "matvec", "matvec-fd"]);
    assert!(strategy("nope").is_err());
    let fx = fix_c();
    let (p, sol) = converged(&fx, 2);
    let ctx = ResponseContext::new(&p, sol.theta());
    let settings = ResponseSettings { diis: DiisOptions { tol: 1e-12, ..Default::default() }, n_fd: 10, ..Default::default() };
    let grads: Vec<GradientRecord> =
        names.iter().map(|n| state_gradient(&p, &sol, 1, &ctx, strategy(n).unwrap(), &settings).unwrap().gradient).collect();
    for g in &grads[1..] {
        assert!(g.max_deviation(&grads[0].orbits, grads[0].d_e_ext) < 1e-9);
    }
}

#[test]
fn preconditioning_does_not_slow_convergence() {
    let fx = fix_c();
    let (p, sol) = converged(&fx, 2);
    let ctx = ResponseContext::new(&p, sol.theta());
    let b = state_gradient_rhs(&p, sol.theta(), &sol.subspace.eigenvectors, 0).unwrap();
    let on = ResponseSettings::default();
    let off = ResponseSettings { precondition: false, ..on };
    let s_on = strategy("matvec").unwrap().solve(&ctx, &b, &on).unwrap();
    let s_off = strategy("matvec").unwrap().solve(&ctx, &b, &off).unwrap();
    assert!(s_on.converged && s_off.converged);
    assert!(s_on.iterations <= s_off.iterations, "{} vs {}", s_on.iterations, s_off.iterations);
}

#[test]
fn diis_matches_dense_solve_on_random_spd_systems() {
    let mut r = rng(4);
    for n in [3, 6, 10] {
        let m = DMatrix::from_fn(n, n, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
        let a = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let pre = condition_preconditioner(a.diagonal().as_slice(), 1e-8);
        let opts = DiisOptions { tol: 1e-12, ..Default::default() };
        let s = solve_response_diis(|x| Ok((&a * DVector::from_column_slice(x)).as_slice().to_vec()), &b, &pre, &opts).unwrap();
        let exact = a.clone().lu().solve(&DVector::from_column_slice(&b)).unwrap();
        assert!(s.converged);
        assert!((DVector::from_column_slice(&s.lambda) - exact).amax() < 1e-10);
    }
}

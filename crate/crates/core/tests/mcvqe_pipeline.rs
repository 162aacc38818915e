mod common;

use common::*;
use mcvqe_core::fixtures::{fix_b, fix_c};
use mcvqe_core::mcvqe::{initial_parameters, select_references, McVqeProblem};
use mcvqe_core::{LbfgsOptions, SectorSpec};
use rand::Rng;

fn random_theta(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(-1.5..1.5)).collect()
}

#[test]
fn interference_subspace_matches_direct_overlaps() {
    let fx = fix_c();
    let p = McVqeProblem::with_lowest_references(fx.ints.clone(), fx.sector, 3, 2, None).unwrap();
    for seed in 0..5 {
        let th = random_theta(p.n_params(), seed);
        let a = p.subspace_hamiltonian(&th).unwrap();
        let b = p.subspace_hamiltonian_direct(&th).unwrap();
        assert!((&a - &b).amax() < 1e-12, "seed {seed}: {:e}", (&a - &b).amax());
        assert!((&a - a.transpose()).amax() == 0.0);
    }
}

#[test]
fn energies_bounded_by_fci_spectrum() {
    let fx = fix_c();
    let exact = dense_fci(&fx.ints, fx.sector);
    let p = McVqeProblem::with_lowest_references(fx.ints.clone(), fx.sector, 3, 1, None).unwrap();
    for seed in 0..5 {
        let sub = p.subspace_at(&random_theta(p.n_params(), 100 + seed)).unwrap();
        // Cauchy interlacing: the k-th subspace eigenvalue lies above the k-th exact one.
        for (e, f) in sub.energies.iter().zip(&exact) {
            assert!(*e >= f - 1e-10, "{e} < {f}");
        }
    }
}

#[test]
fn rotated_references_reproduce_subspace_energies() {
    let fx = fix_c();
    let p = McVqeProblem::with_lowest_references(fx.ints.clone(), fx.sector, fx.n_states, fx.n_layers, None).unwrap();
    let sol = p.solve(&initial_parameters(p.n_params(), Some(3)), &LbfgsOptions::default()).unwrap();
    let v = &sol.subspace.eigenvectors;
    for k in 0..p.n_states() {
        let e = p.state_energy(v, k, sol.theta()).unwrap();
        assert!((e - sol.energies()[k]).abs() < 1e-12);
    }
    // Orthonormal eigenvectors, largest component positive.
    assert!((v.transpose() * v - nalgebra::DMatrix::identity(2, 2)).amax() < 1e-14);
    for col in v.column_iter() {
        let big = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        assert!(big > 0.0);
    }
    let sa: f64 = sol.energies().iter().sum::<f64>() / 2.0;
    assert!((sa - sol.optimization.sa_energy).abs() < 1e-12);
}

#[test]
fn reference_selection_is_sector_consistent_and_sorted() {
    let fx = fix_c();
    let refs = select_references(&fx.ints, fx.sector, 4).unwrap();
    let p = McVqeProblem::new(fx.ints.clone(), fx.sector, 1, refs.clone(), None).unwrap();
    let theta0 = vec![0.0; p.n_params()];
    let diag = p.subspace_hamiltonian(&theta0).unwrap().diagonal();
    for w in diag.as_slice().windows(2) {
        assert!(w[0] <= w[1] + 1e-10);
    }
    assert_eq!(refs, select_references(&fx.ints, fx.sector, 4).unwrap());
    assert!(select_references(&fx.ints, SectorSpec::singlet(5), 1).is_err());
}

#[test]
fn deeper_fabric_reaches_fci_on_two_orbitals() {
    let fx = fix_b();
    let exact = dense_fci(&fx.ints, fx.sector);
    let p = McVqeProblem::with_lowest_references(fx.ints.clone(), fx.sector, 2, 3, None).unwrap();
    let sol = p.solve(&initial_parameters(p.n_params(), Some(5)), &LbfgsOptions::default()).unwrap();
    for (e, f) in sol.energies().iter().zip(&exact) {
        assert!((e - f).abs() < 1e-8, "{e} vs {f}");
    }
}

#[test]
fn solve_is_deterministic() {
    let fx = fix_c();
    let p = McVqeProblem::with_lowest_references(fx.ints.clone(), fx.sector, 2, 1, None).unwrap();
    let th0 = initial_parameters(p.n_params(), Some(9));
    let a = p.solve(&th0, &LbfgsOptions::default()).unwrap();
    let b = p.solve(&th0, &LbfgsOptions::default()).unwrap();
    assert_eq!(a.theta(), b.theta());
    assert_eq!(a.energies(), b.energies());
}

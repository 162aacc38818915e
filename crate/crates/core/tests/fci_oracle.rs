mod common;

use common::*;
use mcvqe_core::fci::{apply_s2, fci_solve, fci_solve_with_limit, s2_expectation, SectorBasis};
use mcvqe_core::statevector::direct_densities;
use mcvqe_core::SectorSpec;

#[test]
fn sector_fci_matches_full_fock_diagonalization() {
    for (n, sector) in [(2, SectorSpec::singlet(1)), (3, SectorSpec::singlet(1)), (3, SectorSpec::new(2, 1, 1))] {
        for seed in 0..3 {
            let ints = random_integrals(n, 40 + seed);
            let oracle = dense_fci(&ints, sector);
            let k = oracle.len().min(3);
            let res = fci_solve(&ints, sector, k).unwrap();
            for (e, f) in res.energies.iter().zip(&oracle) {
                assert!((e - f).abs() < 1e-10, "M={n} {sector:?}: {e} vs {f}");
            }
        }
    }
}

#[test]
fn lanczos_matches_dense() {
    let ints = random_integrals(4, 9);
    let sector = SectorSpec::singlet(2);
    let dense = fci_solve(&ints, sector, 3).unwrap();
    let iterative = fci_solve_with_limit(&ints, sector, 3, 1).unwrap();
    for (a, b) in dense.energies.iter().zip(&iterative.energies) {
        assert!((a - b).abs() < 1e-10);
    }
    for (a, b) in dense.densities.iter().zip(&iterative.densities) {
        assert!(a.max_abs_diff(b) < 1e-7);
    }
}

#[test]
fn eigenstates_are_spin_pure_with_consistent_densities() {
    let ints = random_integrals(3, 2);
    let sector = SectorSpec::singlet(1);
    let res = fci_solve(&ints, sector, 3).unwrap();
    for (k, psi) in res.states.iter().enumerate() {
        assert!(s2_expectation(psi).abs() < 1e-10);
        assert!(apply_s2(psi).norm() < 1e-7);
        let d = direct_densities(psi).unwrap();
        assert!((d.energy(&ints) - res.energies[k]).abs() < 1e-10);
        assert!((d.trace() - 2.0).abs() < 1e-12);
    }
}

#[test]
fn s2_operator_matches_oracle() {
    let (_, _, s2) = number_ops(3);
    for seed in 0..4 {
        let psi = random_sector_state(3, 2, 1, seed);
        let a = to_real(&apply_s2(&psi));
        let b = &s2 * to_real(&psi);
        assert!((a - b).amax() < 1e-13);
    }
}

#[test]
fn basis_dimensions() {
    assert_eq!(SectorBasis::new(4, SectorSpec::singlet(2)).unwrap().len(), 36);
    assert_eq!(SectorBasis::new(6, SectorSpec::new(3, 2, 1)).unwrap().len(), 300);
    assert!(SectorBasis::new(2, SectorSpec::singlet(3)).is_err());
}

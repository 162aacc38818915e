mod common;

use common::*;
use mcvqe_core::integrals::{parse_fcidump, ElementId};
use mcvqe_core::jw::map_hamiltonian;
use mcvqe_core::pauli::{PauliOperator, PauliWord};
use mcvqe_core::{ActiveSpaceIntegrals, SectorSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn word_dense(w: &PauliWord) -> DMatrix<Complex64> {
    let mut op = PauliOperator::zero(w.n_qubits());
    op.add_term(*w, 1.0);
    op.to_dense()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_products_match_dense(x1 in 0u64..64, z1 in 0u64..64, x2 in 0u64..64, z2 in 0u64..64) {
        let a = PauliWord::from_masks(6, x1, z1);
        let b = PauliWord::from_masks(6, x2, z2);
        let (phase, c) = a.multiply(&b).unwrap();
        let lhs = word_dense(&a) * word_dense(&b);
        let rhs = word_dense(&c) * phase.to_complex();
        prop_assert!((lhs - rhs).iter().all(|d| d.norm() < 1e-14));
    }

    #[test]
    fn fcidump_round_trip(n in 1usize..5, seed in 0u64..1000) {
        let ints = random_integrals(n, seed);
        let sector = SectorSpec::singlet(n.div_ceil(2));
        let (back, sec) = parse_fcidump(&ints.to_fcidump(&sector)).unwrap();
        prop_assert_eq!(sec, sector);
        prop_assert!((back.e_ext() - ints.e_ext()).abs() < 1e-15);
        prop_assert!((back.one_body() - ints.one_body()).amax() < 1e-15);
        let worst = back.eri_dense().iter().zip(ints.eri_dense()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-15);
    }

    #[test]
    fn dense_round_trip_and_symmetry(n in 1usize..5, seed in 0u64..1000) {
        let ints = random_integrals(n, seed);
        let again = ActiveSpaceIntegrals::from_dense(ints.e_ext(), ints.one_body().clone(), &ints.eri_dense()).unwrap();
        prop_assert!((again.one_body() - ints.one_body()).amax() == 0.0);
        let worst = again.eri_dense().iter().zip(ints.eri_dense()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-15);
        for elem in ints.canonical_elements() {
            if let ElementId::Eri(p, q, r, s) = elem {
                for [a, b, c, d] in elem.orbit() {
                    prop_assert_eq!(ints.eri(a, b, c, d), ints.eri(p, q, r, s));
                }
            }
        }
    }

    #[test]
    fn perturbation_moves_whole_orbit(n in 2usize..4, seed in 0u64..200, pick in 0usize..1000) {
        let ints = random_integrals(n, seed);
        let elems = ints.canonical_elements();
        let elem = elems[pick % elems.len()];
        let moved = ints.perturb(elem, 0.25).unwrap();
        prop_assert!((moved.value(elem) - ints.value(elem) - 0.25).abs() < 1e-15);
        // Hamiltonian is linear in the integrals.
        let dh = map_hamiltonian(&moved).to_dense() - map_hamiltonian(&ints).to_dense();
        let oracle = fock_hamiltonian(&moved) - fock_hamiltonian(&ints);
        prop_assert!((dh.map(|c| c.re) - oracle).amax() < 1e-12);
    }
}

#[test]
fn asymmetric_input_is_symmetrized() {
    let mut h = DMatrix::zeros(2, 2);
    h[(0, 1)] = 0.1;
    let mut eri = [0.0; 16];
    eri[1] = 0.4; // (00|01)
    let ints = ActiveSpaceIntegrals::from_dense(0.0, h, &eri).unwrap();
    assert_eq!(ints.one_body()[(0, 1)], 0.05);
    assert_eq!(ints.one_body()[(1, 0)], 0.05);
    assert_eq!(ints.eri(0, 1, 0, 0), 0.1);
    assert_eq!(ints.eri(0, 0, 1, 0), 0.1);
}

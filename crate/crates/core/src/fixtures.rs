//! Seeded model systems used by tests, validation runs and examples.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::integrals::{ActiveSpaceIntegrals, SectorSpec};

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub ints: ActiveSpaceIntegrals,
    pub sector: SectorSpec,
    pub n_states: usize,
    pub n_layers: usize,
}

/// Integrals with a chemistry-like shape: diagonal one-body energies rising
/// from −2 in steps of ½, weak off-diagonal couplings, and ERIs
/// `(pq|rs) = Σ_L B^L_pq B^L_rs` from symmetric factors, so the ERI
/// supermatrix is positive semidefinite and 8-fold symmetric.
pub fn random_integrals(n_orb: usize, seed: u64) -> ActiveSpaceIntegrals {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = DMatrix::zeros(n_orb, n_orb);
    for p in 0..n_orb {
        h[(p, p)] = -2.0 + 0.5 * p as f64 + rng.random_range(-0.1..0.1);
        for q in 0..p {
            let v = rng.random_range(-0.15..0.15);
            h[(p, q)] = v;
            h[(q, p)] = v;
        }
    }
    let n_aux = n_orb * (n_orb + 1) / 2;
    let factors: Vec<DMatrix<f64>> = (0..n_aux)
        .map(|_| {
            let mut b = DMatrix::zeros(n_orb, n_orb);
            for p in 0..n_orb {
                b[(p, p)] = 0.35 + rng.random_range(-0.1..0.1);
                for q in 0..p {
                    let v = rng.random_range(-0.12..0.12);
                    b[(p, q)] = v;
                    b[(q, p)] = v;
                }
            }
            b
        })
        .collect();
    let scale = 1.0 / n_aux as f64;
    let mut eri = vec![0.0; n_orb.pow(4)];
    for p in 0..n_orb {
        for q in 0..n_orb {
            for r in 0..n_orb {
                for s in 0..n_orb {
                    eri[((p * n_orb + q) * n_orb + r) * n_orb + s] =
                        scale * factors.iter().map(|b| b[(p, q)] * b[(r, s)]).sum::<f64>();
                }
            }
        }
    }
    let e_ext = rng.random_range(-1.0..1.0);
    ActiveSpaceIntegrals::from_dense(e_ext, h, &eri).expect("generated integrals are symmetric and finite")
}

/// One doubly occupied orbital: h = −1, (00|00) = ½, E = E_ext − 3/2.
pub fn fix_a() -> Fixture {
    let mut ints = ActiveSpaceIntegrals::zeros(1);
    ints.set_one_body(0, 0, -1.0);
    ints.set_eri(0, 0, 0, 0, 0.5);
    Fixture { name: "FIX-A", ints, sector: SectorSpec::singlet(1), n_states: 1, n_layers: 1 }
}

/// Two orbitals, one α and one β electron, seeded random integrals.
pub fn fix_b() -> Fixture {
    Fixture { name: "FIX-B", ints: random_integrals(2, 11), sector: SectorSpec::singlet(1), n_states: 1, n_layers: 1 }
}

/// Four orbitals, two α and two β electrons, two states, one double layer.
pub fn fix_c() -> Fixture {
    Fixture { name: "FIX-C", ints: random_integrals(4, 23), sector: SectorSpec::singlet(2), n_states: 2, n_layers: 1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_symmetric() {
        let a = random_integrals(3, 5);
        assert_eq!(a, random_integrals(3, 5));
        assert_ne!(a, random_integrals(3, 6));
        a.validate().unwrap();
        // ERI supermatrix is positive semidefinite.
        let n = 3;
        let m = DMatrix::from_fn(n * n, n * n, |i, j| a.eri(i / n, i % n, j / n, j % n));
        assert!(m.symmetric_eigen().eigenvalues.min() > -1e-12);
    }
}

//! Independent oracles shared by the integration and acceptance suites.
//!
//! Nothing here calls into the implementation routes it is used to check:
//! fermionic operators are Kronecker products of 2×2 matrices, derivatives are
//! finite differences, and eigenproblems are dense.

#![allow(dead_code)]

use mcvqe_core::integrals::{ActiveSpaceIntegrals, SectorSpec};
use mcvqe_core::statevector::Statevector;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random integrals with full 8-fold symmetry (not necessarily physical).
pub fn random_integrals(n: usize, seed: u64) -> ActiveSpaceIntegrals {
    let mut r = rng(seed);
    let mut h = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..=p {
            let v: f64 = r.random_range(-1.0..1.0);
            h[(p, q)] = v;
            h[(q, p)] = v;
        }
    }
    let mut eri = vec![0.0; n.pow(4)];
    for p in 0..n {
        for q in 0..n {
            for s in 0..n {
                for t in 0..n {
                    eri[((p * n + q) * n + s) * n + t] = r.random_range(-0.5..0.5);
                }
            }
        }
    }
    ActiveSpaceIntegrals::from_dense(r.random_range(-1.0..1.0), h, &eri).unwrap()
}

fn kron_chain(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    // qubit 0 is the least significant bit: it is the rightmost factor.
    let mut m = DMatrix::from_element(1, 1, 1.0);
    for f in factors.iter().rev() {
        m = m.kronecker(f);
    }
    m
}

/// Dense annihilator for spin orbital (p, spin) with Jordan–Wigner strings
/// over α₀…α_{M−1} β₀…β_{M−1}, qubit 2p for α and 2p+1 for β.
pub fn annihilator(n_orb: usize, p: usize, beta: bool) -> DMatrix<f64> {
    let n_qubits = 2 * n_orb;
    let id = DMatrix::<f64>::identity(2, 2);
    let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let lower = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let target = if beta { 2 * p + 1 } else { 2 * p };
    let mut factors = vec![id.clone(); n_qubits];
    factors[target] = lower;
    let mut preceding = Vec::new();
    if beta {
        preceding.extend((0..n_orb).map(|j| 2 * j));
        preceding.extend((0..p).map(|j| 2 * j + 1));
    } else {
        preceding.extend((0..p).map(|j| 2 * j));
    }
    for q in preceding {
        factors[q] = z.clone();
    }
    kron_chain(&factors)
}

/// Ê⁺_pq for all p, q (index p * M + q).
pub fn excitation_ops(n_orb: usize) -> Vec<DMatrix<f64>> {
    let a: Vec<[DMatrix<f64>; 2]> = (0..n_orb).map(|p| [annihilator(n_orb, p, false), annihilator(n_orb, p, true)]).collect();
    let mut out = Vec::new();
    for p in 0..n_orb {
        for q in 0..n_orb {
            let mut e = a[p][0].transpose() * &a[q][0];
            e += a[p][1].transpose() * &a[q][1];
            out.push(e);
        }
    }
    out
}

/// Ĥ = E_ext + Σ κ_pq Ê⁺_pq + ½ Σ (pq|rs) Ê⁺_pq Ê⁺_rs on the whole Fock space.
pub fn fock_hamiltonian(ints: &ActiveSpaceIntegrals) -> DMatrix<f64> {
    let n = ints.n_orb();
    let dim = 1usize << (2 * n);
    let e = excitation_ops(n);
    let kappa = ints.kappa();
    let mut h = DMatrix::<f64>::identity(dim, dim) * ints.e_ext();
    for p in 0..n {
        for q in 0..n {
            h += &e[p * n + q] * kappa[(p, q)];
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = ints.eri(p, q, r, s);
                    if v != 0.0 {
                        h += (&e[p * n + q] * &e[r * n + s]) * (0.5 * v);
                    }
                }
            }
        }
    }
    h
}

/// Dense N̂_α, N̂_β, Ŝ².
pub fn number_ops(n_orb: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let dim = 1usize << (2 * n_orb);
    let mut na = DMatrix::zeros(dim, dim);
    let mut nb = DMatrix::zeros(dim, dim);
    let mut sp = DMatrix::zeros(dim, dim);
    for p in 0..n_orb {
        let a = annihilator(n_orb, p, false);
        let b = annihilator(n_orb, p, true);
        na += a.transpose() * &a;
        nb += b.transpose() * &b;
        sp += a.transpose() * &b;
    }
    let sz = (&na - &nb) * 0.5;
    let s2 = sp.transpose() * &sp + &sz + &sz * &sz;
    (na, nb, s2)
}

pub fn to_real(psi: &Statevector) -> DVector<f64> {
    DVector::from_iterator(psi.dim(), psi.amplitudes().iter().map(|a| a.re))
}

pub fn from_real(v: &DVector<f64>) -> Statevector {
    let nq = v.len().trailing_zeros() as usize;
    Statevector::from_amplitudes(nq, v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
}

/// Random real state restricted to one (N_α, N_β) sector.
pub fn random_sector_state(n_orb: usize, n_alpha: usize, n_beta: usize, seed: u64) -> Statevector {
    let mut r = rng(seed);
    let dim = 1usize << (2 * n_orb);
    let mut v = DVector::zeros(dim);
    for det in 0..dim {
        let a = (det & 0x5555_5555).count_ones() as usize;
        let b = (det & 0xAAAA_AAAA).count_ones() as usize;
        if a == n_alpha && b == n_beta {
            v[det] = r.random_range(-1.0..1.0);
        }
    }
    v /= v.norm();
    from_real(&v)
}

/// Random singlet in the (n, n) sector: project a random sector state onto
/// the S² = 0 eigenspace of the dense oracle.
pub fn random_singlet(n_orb: usize, n_pairs: usize, seed: u64) -> Statevector {
    let (_, _, s2) = number_ops(n_orb);
    let eig = s2.symmetric_eigen();
    let psi = to_real(&random_sector_state(n_orb, n_pairs, n_pairs, seed));
    let mut proj = DVector::zeros(psi.len());
    for k in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[k].abs() < 1e-9 {
            let u = eig.eigenvectors.column(k);
            proj += u * u.dot(&psi);
        }
    }
    proj /= proj.norm();
    from_real(&proj)
}

/// Sector-restricted dense FCI: spin-pure eigenvalues in ascending order.
pub fn dense_fci(ints: &ActiveSpaceIntegrals, sector: SectorSpec) -> Vec<f64> {
    let n = ints.n_orb();
    let h = fock_hamiltonian(ints);
    let (_, _, s2) = number_ops(n);
    let dets: Vec<usize> = (0..1usize << (2 * n))
        .filter(|d| {
            (d & 0x5555_5555).count_ones() as usize == sector.n_alpha && (d & 0xAAAA_AAAA).count_ones() as usize == sector.n_beta
        })
        .collect();
    let k = dets.len();
    let hs = DMatrix::from_fn(k, k, |i, j| h[(dets[i], dets[j])]);
    let eig = hs.symmetric_eigen();
    let target = sector.s2_eigenvalue();
    let mut out = Vec::new();
    for c in 0..k {
        let v = eig.eigenvectors.column(c);
        let mut full = DVector::zeros(h.nrows());
        for (i, &d) in dets.iter().enumerate() {
            full[d] = v[i];
        }
        let s2v = full.dot(&(&s2 * &full));
        if (s2v - target).abs() < 1e-8 {
            out.push(eig.eigenvalues[c]);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Central finite difference of a scalar function.
pub fn central_fd(f: impl Fn(f64) -> f64, step: f64) -> f64 {
    (f(step) - f(-step)) / (2.0 * step)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

//! Exact diagonalization in a fixed (N_α, N_β) sector, and the
//! finite-difference total derivative of the full MC-VQE pipeline.
//!
//! The Hamiltonian is applied through the direct fermionic route, never the
//! Pauli mapping, so this module can arbitrate between the two.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::DensityPair;
use crate::error::{Error, Result};
use crate::fermion::{self, SpinOrbital, ALPHA_MASK, BETA_MASK};
use crate::integrals::{ActiveSpaceIntegrals, ElementId, SectorSpec};
use crate::mcvqe::McVqeProblem;
use crate::optimize::LbfgsOptions;
use crate::statevector::{apply_hamiltonian_direct, direct_densities, Statevector};

/// Largest supported active space.
pub const MAX_ORBITALS: usize = 8;
/// Sectors up to this dimension are diagonalized densely.
pub const DENSE_LIMIT: usize = 2000;
/// Tolerance of the Ŝ² post-filter.
pub const SPIN_TOLERANCE: f64 = 1e-8;
/// Default displacement for [`fd_total_gradient`].
pub const FD_STEP: f64 = 1e-5;
/// Optimizer threshold used at displaced geometries. Residual stationarity
/// error δθ enters the central difference as ~‖b‖·δθ/step, so this has to sit
/// well below the comparison tolerance times the step.
pub const FD_ORACLE_GTOL: f64 = 1e-12;

pub fn fd_oracle_options() -> LbfgsOptions {
    LbfgsOptions { gtol: FD_ORACLE_GTOL, ..LbfgsOptions::default() }
}

/// Determinants with fixed (N_α, N_β), in ascending bit-pattern order.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_orb: usize,
    dets: Vec<usize>,
    index: Vec<Option<usize>>,
}

impl SectorBasis {
    pub fn new(n_orb: usize, sector: SectorSpec) -> Result<Self> {
        if n_orb > MAX_ORBITALS {
            return Err(Error::SectorTooLarge(format!("{n_orb} orbitals (max {MAX_ORBITALS})")));
        }
        sector.validate(n_orb)?;
        let full = 1usize << (2 * n_orb);
        let mut index = vec![None; full];
        let mut dets = Vec::new();
        for (d, slot) in index.iter_mut().enumerate() {
            if fermion::n_alpha(d) == sector.n_alpha && fermion::n_beta(d) == sector.n_beta {
                *slot = Some(dets.len());
                dets.push(d);
            }
        }
        Ok(Self { n_orb, dets, index })
    }

    pub fn len(&self) -> usize {
        self.dets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dets.is_empty()
    }

    pub fn determinants(&self) -> &[usize] {
        &self.dets
    }

    pub fn index_of(&self, det: usize) -> Option<usize> {
        self.index.get(det).copied().flatten()
    }

    fn embed(&self, v: &DVector<f64>) -> Statevector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (2 * self.n_orb)];
        for (i, &d) in self.dets.iter().enumerate() {
            amps[d] = Complex64::new(v[i], 0.0);
        }
        Statevector::from_amplitudes(2 * self.n_orb, amps)
    }

    fn restrict(&self, s: &Statevector) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.dets.iter().map(|&d| s.amplitudes()[d].re))
    }

    fn apply_h(&self, ints: &ActiveSpaceIntegrals, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.restrict(&apply_hamiltonian_direct(ints, &self.embed(v))?))
    }
}

/// `Ŝ²|ψ⟩ = (Ŝ₋Ŝ₊ + Ŝ_z + Ŝ_z²)|ψ⟩` on determinant amplitudes.
pub fn apply_s2(state: &Statevector) -> Statevector {
    let n = state.n_orb();
    let amps = state.amplitudes();
    let raise = |src: &[Complex64], up: bool| {
        let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
        for (d, a) in src.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for p in 0..n {
                let (to, from) = if up {
                    (SpinOrbital::alpha(p), SpinOrbital::beta(p))
                } else {
                    (SpinOrbital::beta(p), SpinOrbital::alpha(p))
                };
                if let Some((s, t)) = fermion::excite(d, to, from) {
                    out[t] += a * s;
                }
            }
        }
        out
    };
    let lowered = raise(&raise(amps, true), false);
    let out: Vec<Complex64> = amps
        .iter()
        .enumerate()
        .map(|(d, a)| {
            let sz = 0.5 * ((d & ALPHA_MASK).count_ones() as f64 - (d & BETA_MASK).count_ones() as f64);
            lowered[d] + a * (sz + sz * sz)
        })
        .collect();
    Statevector::from_amplitudes(state.n_qubits(), out)
}

pub fn s2_expectation(state: &Statevector) -> f64 {
    state.inner(&apply_s2(state)).re
}

#[derive(Debug, Clone)]
pub struct FciResult {
    pub energies: Vec<f64>,
    pub states: Vec<Statevector>,
    pub densities: Vec<DensityPair>,
}

/// Lowest `n_states` spin-pure eigenpairs in the sector.
pub fn fci_solve(ints: &ActiveSpaceIntegrals, sector: SectorSpec, n_states: usize) -> Result<FciResult> {
    fci_solve_with_limit(ints, sector, n_states, DENSE_LIMIT)
}

/// As [`fci_solve`] with an explicit dense/iterative switch-over dimension.
pub fn fci_solve_with_limit(
    ints: &ActiveSpaceIntegrals,
    sector: SectorSpec,
    n_states: usize,
    dense_limit: usize,
) -> Result<FciResult> {
    let basis = SectorBasis::new(ints.n_orb(), sector)?;
    let candidates =
        if basis.len() <= dense_limit { dense_eigenpairs(ints, &basis)? } else { lanczos_eigenpairs(ints, &basis, n_states)? };
    let target = sector.s2_eigenvalue();
    let mut energies = Vec::new();
    let mut states = Vec::new();
    for (e, v) in candidates {
        let psi = basis.embed(&v);
        if (s2_expectation(&psi) - target).abs() < SPIN_TOLERANCE {
            energies.push(e);
            states.push(psi);
            if states.len() == n_states {
                break;
            }
        }
    }
    if states.len() < n_states {
        return Err(Error::NotEnoughStates { found: states.len(), requested: n_states });
    }
    let densities = states.iter().map(direct_densities).collect::<Result<_>>()?;
    Ok(FciResult { energies, states, densities })
}

fn dense_eigenpairs(ints: &ActiveSpaceIntegrals, basis: &SectorBasis) -> Result<Vec<(f64, DVector<f64>)>> {
    let k = basis.len();
    let mut h = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut e = DVector::zeros(k);
        e[j] = 1.0;
        h.set_column(j, &basis.apply_h(ints, &e)?);
    }
    let h = (&h + h.transpose()) * 0.5;
    let eig = h.symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<f64>)> =
        (0..k).map(|c| (eig.eigenvalues[c], eig.eigenvectors.column(c).into_owned())).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}

/// Lanczos with full reorthogonalization; returns converged Ritz pairs in
/// ascending order. Enough extra roots are kept to survive the spin filter.
fn lanczos_eigenpairs(ints: &ActiveSpaceIntegrals, basis: &SectorBasis, n_states: usize) -> Result<Vec<(f64, DVector<f64>)>> {
    let k = basis.len();
    let max_steps = k.min(400);
    let wanted = (4 * n_states + 8).min(k);
    // Deterministic, dense start vector.
    let mut q = DVector::from_fn(k, |i, _| 1.0 + ((i * 2654435761) % 1000) as f64 / 1000.0);
    q /= q.norm();
    let mut qs: Vec<DVector<f64>> = vec![q];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    loop {
        let j = qs.len() - 1;
        let mut w = basis.apply_h(ints, &qs[j])?;
        alpha.push(qs[j].dot(&w));
        for _ in 0..2 {
            for qi in &qs {
                let c = qi.dot(&w);
                w.axpy(-c, qi, 1.0);
            }
        }
        let b = w.norm();
        let steps = qs.len();
        let done = steps >= max_steps || b < 1e-12;
        if done || steps.is_multiple_of(20) {
            let t = DMatrix::from_fn(steps, steps, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = t.symmetric_eigen();
            let mut order: Vec<usize> = (0..steps).collect();
            order.sort_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c]));
            let take = wanted.min(steps);
            let converged = order[..take].iter().all(|&i| (b * eig.eigenvectors[(steps - 1, i)]).abs() < 1e-10);
            if done || converged {
                let mut out = Vec::with_capacity(take);
                for &i in &order[..take] {
                    let mut v = DVector::zeros(k);
                    for (r, qr) in qs.iter().enumerate() {
                        v.axpy(eig.eigenvectors[(r, i)], qr, 1.0);
                    }
                    v /= v.norm();
                    out.push((eig.eigenvalues[i], v));
                }
                return Ok(out);
            }
        }
        beta.push(b);
        qs.push(w / b);
    }
}

/// Central-difference total derivatives of E^Θ.
#[derive(Debug, Clone, Serialize)]
pub struct FdGradient {
    pub step: f64,
    pub d_e_ext: f64,
    pub orbits: Vec<(ElementId, f64)>,
}

/// Re-runs the whole pipeline (SA-VQE optimization warm-started from
/// `theta_star`, subspace diagonalization) at `±step` along every canonical
/// integral orbit and along E_ext. References and weights stay fixed.
pub fn fd_total_gradient(
    problem: &McVqeProblem,
    state: usize,
    theta_star: &[f64],
    step: f64,
    opts: &LbfgsOptions,
) -> Result<FdGradient> {
    if step.is_nan() || step <= 0.0 {
        return Err(Error::InvalidProblem(format!("finite-difference step must be positive (got {step})")));
    }
    let ints = problem.integrals();
    let energy = |displaced: ActiveSpaceIntegrals| -> Result<f64> {
        let p = problem.with_integrals(displaced)?;
        let sol = p.solve(theta_star, opts)?;
        Ok(sol.energies()[state])
    };
    let elems = ints.canonical_elements();
    let orbits: Vec<(ElementId, f64)> = elems
        .par_iter()
        .map(|&e| {
            let plus = energy(ints.perturb(e, step)?)?;
            let minus = energy(ints.perturb(e, -step)?)?;
            Ok((e, (plus - minus) / (2.0 * step)))
        })
        .collect::<Result<_>>()?;
    let shifted = |d: f64| {
        let mut i = ints.clone();
        i.set_e_ext(ints.e_ext() + d);
        i
    };
    let d_e_ext = (energy(shifted(step))? - energy(shifted(-step))?) / (2.0 * step);
    Ok(FdGradient { step, d_e_ext, orbits })
}

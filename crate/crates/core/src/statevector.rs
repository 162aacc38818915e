//! Dense statevectors over 2M qubits and the direct (non-Pauli) operations
//! on them: reference-state preparation, Hamiltonian action and densities.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{DensityFlavor, DensityPair};
use crate::error::{Error, Result};
use crate::fermion::{self, Spin, SpinOrbital};
use crate::integrals::{ActiveSpaceIntegrals, SectorSpec};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn zeros(n_qubits: usize) -> Self {
        Self { n_qubits, amps: vec![ZERO; 1 << n_qubits] }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        assert_eq!(amps.len(), 1 << n_qubits, "amplitude count must be 2^n_qubits");
        Self { n_qubits, amps }
    }

    pub fn from_real(n_qubits: usize, amps: &[f64]) -> Self {
        Self::from_amplitudes(n_qubits, amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_orb(&self) -> usize {
        self.n_qubits / 2
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.scale(Complex64::new(1.0 / n, 0.0));
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&mut self, s: Complex64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: Complex64, other: &Statevector) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += s * b;
        }
    }

    pub fn max_abs_diff(&self, other: &Statevector) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn check_same_dim(&self, other: &Statevector) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }
}

/// Kind of configuration state function used as an MC-VQE reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsfKind {
    ClosedShell,
    SingletSingle,
    DiagonalDouble,
}

/// `occ`/`virt` are ignored for the closed-shell reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CsfSpec {
    pub kind: CsfKind,
    pub occ: usize,
    pub virt: usize,
}

impl CsfSpec {
    pub fn closed_shell() -> Self {
        Self { kind: CsfKind::ClosedShell, occ: 0, virt: 0 }
    }

    pub fn single(occ: usize, virt: usize) -> Self {
        Self { kind: CsfKind::SingletSingle, occ, virt }
    }

    pub fn double(occ: usize, virt: usize) -> Self {
        Self { kind: CsfKind::DiagonalDouble, occ, virt }
    }
}

impl fmt::Display for CsfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CsfKind::ClosedShell => write!(f, "Phi0"),
            CsfKind::SingletSingle => write!(f, "S({}->{})", self.occ, self.virt),
            CsfKind::DiagonalDouble => write!(f, "D({}->{})", self.occ, self.virt),
        }
    }
}

/// Writes the amplitudes of a closed-shell, singlet-single or
/// diagonal-double CSF over `n_orb` spatial orbitals.
pub fn prepare_csf(spec: CsfSpec, sector: SectorSpec, n_orb: usize) -> Result<Statevector> {
    sector.validate(n_orb)?;
    if sector.n_alpha != sector.n_beta || sector.spin_s != 0 {
        return Err(Error::InvalidCsf(format!("closed-shell CSFs need a singlet sector with N_alpha = N_beta, got {sector:?}")));
    }
    let n_occ = sector.n_alpha;
    if spec.kind != CsfKind::ClosedShell && (spec.occ >= n_occ || spec.virt < n_occ || spec.virt >= n_orb) {
        return Err(Error::InvalidCsf(format!("{spec} needs occ < {n_occ} <= virt < {n_orb}")));
    }
    let n_qubits = 2 * n_orb;

    // |Φ₀⟩ = Π_i i† ī† |vac⟩, rightmost factor applied first.
    let mut ops = Vec::with_capacity(2 * n_occ);
    for i in 0..n_occ {
        ops.push((true, SpinOrbital::alpha(i)));
        ops.push((true, SpinOrbital::beta(i)));
    }
    let (s0, phi0) = fermion::apply_string(0, &ops).expect("distinct creators");
    let mut state = Statevector::zeros(n_qubits);
    let (i, a) = (spec.occ, spec.virt);
    match spec.kind {
        CsfKind::ClosedShell => state.amps[phi0] = Complex64::new(s0, 0.0),
        CsfKind::SingletSingle => {
            let amp = std::f64::consts::FRAC_1_SQRT_2 * s0;
            for spin in Spin::BOTH {
                let (s, d) =
                    fermion::excite(phi0, SpinOrbital::new(a, spin), SpinOrbital::new(i, spin)).expect("occupied to virtual");
                state.amps[d] += Complex64::new(amp * s, 0.0);
            }
        }
        CsfKind::DiagonalDouble => {
            let ops = [
                (true, SpinOrbital::alpha(a)),
                (false, SpinOrbital::alpha(i)),
                (true, SpinOrbital::beta(a)),
                (false, SpinOrbital::beta(i)),
            ];
            let (s, d) = fermion::apply_string(phi0, &ops).expect("occupied to virtual");
            state.amps[d] = Complex64::new(s0 * s, 0.0);
        }
    }
    Ok(state)
}

/// `(|a⟩ ± |b⟩)/√2` for orthogonal normalized inputs.
pub fn prepare_interference(a: &Statevector, b: &Statevector, plus: bool) -> Result<Statevector> {
    a.check_same_dim(b)?;
    let overlap = a.inner(b).norm();
    if overlap > 1e-12 {
        return Err(Error::NotOrthogonal { overlap });
    }
    let mut out = a.clone();
    out.axpy(Complex64::new(if plus { 1.0 } else { -1.0 }, 0.0), b);
    out.scale(Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    Ok(out)
}

/// `Ê⁺_pq |ψ⟩ = Σ_σ a†_pσ a_qσ |ψ⟩`, accumulated into `out` with weight `w`.
fn add_excitation(amps: &[Complex64], p: usize, q: usize, w: Complex64, out: &mut [Complex64]) {
    for spin in Spin::BOTH {
        let to = SpinOrbital::new(p, spin);
        let from = SpinOrbital::new(q, spin);
        for (det, a) in amps.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            if let Some((s, d)) = fermion::excite(det, to, from) {
                out[d] += w * a * s;
            }
        }
    }
}

/// `D_rs = Ê⁺_rs |ψ⟩` for all r, s, stored at `r * M + s`.
fn excitation_vectors(amps: &[Complex64], n_orb: usize) -> Vec<Vec<Complex64>> {
    let one = Complex64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(n_orb * n_orb);
    for r in 0..n_orb {
        for s in 0..n_orb {
            let mut v = vec![ZERO; amps.len()];
            add_excitation(amps, r, s, one, &mut v);
            out.push(v);
        }
    }
    out
}

fn check_state_for(ints: &ActiveSpaceIntegrals, state: &Statevector) -> Result<()> {
    if state.n_qubits() != 2 * ints.n_orb() {
        return Err(Error::DimensionMismatch { expected: 1 << (2 * ints.n_orb()), got: state.dim() });
    }
    Ok(())
}

/// `Ĥ|ψ⟩` with Ĥ = E_ext + Σ κ_pq Ê⁺_pq + ½ Σ (pq|rs) Ê⁺_pq Ê⁺_rs, built
/// from one-body excitation intermediates (Knowles–Handy style):
/// D_rs = Ê⁺_rs ψ, G_pq = κ_pq ψ + ½ Σ_rs (pq|rs) D_rs, σ = E_ext ψ + Σ Ê⁺_pq G_pq.
pub fn apply_hamiltonian_direct(ints: &ActiveSpaceIntegrals, state: &Statevector) -> Result<Statevector> {
    check_state_for(ints, state)?;
    let n = ints.n_orb();
    let amps = state.amplitudes();
    let kappa = ints.kappa();
    let d = excitation_vectors(amps, n);
    let mut sigma: Vec<Complex64> = amps.iter().map(|a| a * ints.e_ext()).collect();
    let mut g = vec![ZERO; amps.len()];
    for p in 0..n {
        for q in 0..n {
            let k = kappa[(p, q)];
            for (gi, a) in g.iter_mut().zip(amps) {
                *gi = a * k;
            }
            for r in 0..n {
                for s in 0..n {
                    let v = 0.5 * ints.eri(p, q, r, s);
                    if v == 0.0 {
                        continue;
                    }
                    for (gi, di) in g.iter_mut().zip(&d[r * n + s]) {
                        *gi += di * v;
                    }
                }
            }
            add_excitation(&g, p, q, Complex64::new(1.0, 0.0), &mut sigma);
        }
    }
    Ok(Statevector::from_amplitudes(state.n_qubits(), sigma))
}

/// Unrelaxed densities by direct fermionic evaluation:
/// γ_pq = ⟨Ê⁺_pq⟩, Γ_pqrs = ⟨Ê⁺_pq Ê⁺_rs⟩ − δ_qr ⟨Ê⁺_ps⟩, then symmetrized.
pub fn direct_densities(state: &Statevector) -> Result<DensityPair> {
    let deviation = (state.norm() - 1.0).abs();
    if deviation > 1e-10 {
        return Err(Error::NotNormalized { deviation });
    }
    let n = state.n_orb();
    let amps = state.amplitudes();
    let d = excitation_vectors(amps, n);
    let dot = |x: &[Complex64], y: &[Complex64]| -> f64 { x.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<Complex64>().re };
    let mut out = DensityPair::zeros(n, DensityFlavor::Unrelaxed);
    for p in 0..n {
        for q in 0..n {
            out.opdm[(p, q)] = dot(amps, &d[p * n + q]);
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    // ⟨ψ|E_pq E_rs|ψ⟩ = ⟨E_qp ψ|E_rs ψ⟩
                    let mut v = dot(&d[q * n + p], &d[r * n + s]);
                    if q == r {
                        v -= out.opdm[(p, s)];
                    }
                    let idx = out.tpdm_index(p, q, r, s);
                    out.tpdm[idx] = v;
                }
            }
        }
    }
    out.symmetrize();
    Ok(out)
}

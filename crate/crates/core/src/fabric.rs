//! Quantum-number-preserving gate fabric.
//!
//! Each 4-qubit element acts on adjacent spatial orbitals (p, p+1) and is a
//! pair exchange `PX(θ)` followed by a spin-adapted orbital rotation `OR(φ)`.
//! Both are rotations by half the parameter angle:
//!
//! * `PX(θ) = exp(θ/2 · (P†_{p+1} P_p − P†_p P_{p+1}))`, with `P_p = a_{p↓} a_{p↑}`,
//!   mixes the doubly occupied configurations of the two orbitals;
//! * `OR(φ) = Π_σ exp(φ/2 · (a†_{p+1,σ} a_{pσ} − a†_{pσ} a_{p+1,σ}))`.
//!
//! A "double layer" is one brick of even pairings (0,1), (2,3), … followed by
//! odd pairings (1,2), (3,4), ….

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{self, Spin, SpinOrbital};
use crate::statevector::Statevector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    PairExchange,
    OrbitalRotation,
}

impl GateKind {
    /// Eigenvalues of the Hermitian generator G, `U(θ) = exp(−iθG)`, on the
    /// four qubits the gate touches.
    pub fn generator_spectrum(self) -> &'static [f64] {
        match self {
            GateKind::PairExchange => &[-0.5, 0.0, 0.5],
            GateKind::OrbitalRotation => &[-1.0, -0.5, 0.0, 0.5, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::PairExchange => "QNP_PX",
            GateKind::OrbitalRotation => "QNP_OR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    /// Lower orbital of the adjacent pair.
    pub orbital: usize,
    pub param: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FabricLayout {
    n_orb: usize,
    n_layers: usize,
    gates: Vec<GateSpec>,
}

impl FabricLayout {
    pub fn new(n_orb: usize, n_layers: usize) -> Self {
        let mut gates = Vec::new();
        for _ in 0..n_layers {
            for start in [0usize, 1] {
                for p in (start..n_orb.saturating_sub(1)).step_by(2) {
                    for kind in [GateKind::PairExchange, GateKind::OrbitalRotation] {
                        gates.push(GateSpec { kind, orbital: p, param: gates.len() });
                    }
                }
            }
        }
        Self { n_orb, n_layers, gates }
    }

    pub fn n_orb(&self) -> usize {
        self.n_orb
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_params(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    /// Gate kind controlled by parameter `g`.
    pub fn param_kind(&self, g: usize) -> GateKind {
        self.gates[g].kind
    }

    fn check(&self, state: &Statevector, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::ParameterLength { expected: self.n_params(), got: theta.len() });
        }
        if state.n_qubits() != 2 * self.n_orb {
            return Err(Error::DimensionMismatch { expected: 1 << (2 * self.n_orb), got: state.dim() });
        }
        Ok(())
    }

    /// `Û(θ)|ψ⟩`.
    pub fn apply(&self, state: &Statevector, theta: &[f64]) -> Result<Statevector> {
        self.check(state, theta)?;
        let mut out = state.clone();
        for gate in &self.gates {
            apply_gate(&mut out, gate.kind, gate.orbital, theta[gate.param]);
        }
        Ok(out)
    }

    /// `Û(θ)†|ψ⟩`: gates in reverse order with negated angles.
    pub fn apply_adjoint(&self, state: &Statevector, theta: &[f64]) -> Result<Statevector> {
        self.check(state, theta)?;
        let mut out = state.clone();
        for gate in self.gates.iter().rev() {
            apply_gate(&mut out, gate.kind, gate.orbital, -theta[gate.param]);
        }
        Ok(out)
    }
}

/// Rotates amplitude pairs (A, B) where `B = s · K|A⟩` for the generator
/// term K given as a ladder-operator string.
fn rotate_pairs(state: &mut Statevector, half_angle: f64, ops: &[(bool, SpinOrbital)], source_mask: usize, source_bits: usize) {
    if half_angle == 0.0 {
        return;
    }
    let (sn, c) = half_angle.sin_cos();
    let amps = state.amplitudes_mut();
    for det in 0..amps.len() {
        if det & source_mask != source_bits {
            continue;
        }
        let (s, target) = fermion::apply_string(det, ops).expect("source pattern admits the excitation");
        let (a, b) = (amps[det], amps[target]);
        amps[det] = a * c - b * (s * sn);
        amps[target] = b * c + a * (s * sn);
    }
}

pub fn apply_gate(state: &mut Statevector, kind: GateKind, p: usize, angle: f64) {
    let q = p + 1;
    match kind {
        GateKind::PairExchange => {
            let (pa, pb, qa, qb) = (SpinOrbital::alpha(p), SpinOrbital::beta(p), SpinOrbital::alpha(q), SpinOrbital::beta(q));
            let mask = pa.bit() | pb.bit() | qa.bit() | qb.bit();
            let ops = [(true, qa), (true, qb), (false, pb), (false, pa)];
            rotate_pairs(state, 0.5 * angle, &ops, mask, pa.bit() | pb.bit());
        }
        GateKind::OrbitalRotation => {
            for spin in Spin::BOTH {
                let (from, to) = (SpinOrbital::new(p, spin), SpinOrbital::new(q, spin));
                let mask = from.bit() | to.bit();
                rotate_pairs(state, 0.5 * angle, &[(true, to), (false, from)], mask, from.bit());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::SectorSpec;
    use crate::statevector::{prepare_csf, CsfSpec};

    #[test]
    fn parameter_counts() {
        assert_eq!(FabricLayout::new(4, 1).n_params(), 6);
        assert_eq!(FabricLayout::new(2, 3).n_params(), 6);
        assert_eq!(FabricLayout::new(1, 2).n_params(), 0);
        let l = FabricLayout::new(4, 1);
        let orbs: Vec<usize> = l.gates().iter().map(|g| g.orbital).collect();
        assert_eq!(orbs, vec![0, 0, 2, 2, 1, 1]);
    }

    #[test]
    fn zero_parameters_are_identity() {
        let l = FabricLayout::new(3, 2);
        let psi = prepare_csf(CsfSpec::single(0, 2), SectorSpec::singlet(1), 3).unwrap();
        let out = l.apply(&psi, &vec![0.0; l.n_params()]).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn adjoint_undoes_fabric() {
        let l = FabricLayout::new(3, 2);
        let psi = prepare_csf(CsfSpec::closed_shell(), SectorSpec::singlet(1), 3).unwrap();
        let theta: Vec<f64> = (0..l.n_params()).map(|g| 0.3 + 0.7 * g as f64).collect();
        let fwd = l.apply(&psi, &theta).unwrap();
        assert!((fwd.norm() - 1.0).abs() < 1e-13);
        assert!(fwd.max_abs_diff(&psi) > 1e-3);
        let back = l.apply_adjoint(&fwd, &theta).unwrap();
        assert!(back.max_abs_diff(&psi) < 1e-13);
    }

    #[test]
    fn pair_exchange_moves_pair() {
        let mut psi = Statevector::basis(4, 0b0011);
        apply_gate(&mut psi, GateKind::PairExchange, 0, std::f64::consts::PI);
        assert!((psi.amplitudes()[0b1100].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        let l = FabricLayout::new(2, 1);
        assert!(matches!(l.apply(&Statevector::basis(4, 3), &[0.0]), Err(Error::ParameterLength { expected: 2, got: 1 })));
    }
}

//! Jordan–Wigner qubit Hamiltonian, quantum-number operators, and the
//! integral → Pauli-coefficient Jacobian used to backtransform Pauli-word
//! expectation values into spin-summed orbital densities.
//!
//! The mapping is logically α-then-β and physically interleaved: α_p sits on
//! qubit 2p and β_p on qubit 2p+1, while the Z strings run over the modes
//! preceding the target in the α₀…α_{M−1}β₀…β_{M−1} order. Same-spin
//! hopping strings therefore skip the opposite-spin qubits.
//!
//! Because every Pauli coefficient is linear in the integrals, each column of
//! the Jacobian is built once by expanding the fermionic operator that
//! multiplies a single canonical integral orbit.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::density::{DensityFlavor, DensityPair};
use crate::error::{Error, Result};
use crate::fermion::{preceding_mask, Spin, SpinOrbital};
use crate::integrals::{canonical_elements, ActiveSpaceIntegrals, ElementId};
use crate::pauli::{PauliOperator, PauliWord};
use crate::statevector::Statevector;

/// Qubit placement of spin orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QubitLayout {
    pub n_orb: usize,
}

impl QubitLayout {
    pub fn new(n_orb: usize) -> Self {
        Self { n_orb }
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_orb
    }

    pub fn qubit(&self, orbital: usize, spin: Spin) -> usize {
        SpinOrbital::new(orbital, spin).qubit()
    }
}

/// Complex-weighted Pauli sum; only used while expanding ladder operators.
#[derive(Debug, Clone)]
struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliWord, Complex64>,
}

impl PauliSum {
    fn ladder(n_qubits: usize, mode: SpinOrbital, dagger: bool) -> Self {
        // a = Z_string (X + iY)/2, a† = Z_string (X − iY)/2 on the target qubit.
        let bit = mode.bit() as u64;
        let width = (1u64 << n_qubits) - 1;
        let string = PauliWord::from_masks(n_qubits, 0, preceding_mask(mode) as u64 & width);
        let (px, wx) = string.multiply(&PauliWord::from_masks(n_qubits, bit, 0)).expect("same width");
        let (py, wy) = string.multiply(&PauliWord::from_masks(n_qubits, bit, bit)).expect("same width");
        let ycoef = if dagger { Complex64::new(0.0, -0.5) } else { Complex64::new(0.0, 0.5) };
        let mut terms = BTreeMap::new();
        terms.insert(wx, px.to_complex() * 0.5);
        terms.insert(wy, py.to_complex() * ycoef);
        Self { n_qubits, terms }
    }

    fn mul(&self, other: &PauliSum) -> PauliSum {
        let mut terms: BTreeMap<PauliWord, Complex64> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (ph, w) = a.multiply(b).expect("same width");
                *terms.entry(w).or_default() += ph.to_complex() * ca * cb;
            }
        }
        PauliSum { n_qubits: self.n_qubits, terms }
    }

    fn add_scaled(&mut self, other: &PauliSum, s: f64) {
        for (w, c) in &other.terms {
            *self.terms.entry(*w).or_default() += c * s;
        }
    }

    fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: BTreeMap::new() }
    }

    fn into_real(self) -> PauliOperator {
        let mut op = PauliOperator::zero(self.n_qubits);
        for (w, c) in self.terms {
            assert!(c.im.abs() < 1e-12, "non-Hermitian residue {c} on {w}");
            op.add_term(w, c.re);
        }
        op
    }
}

struct Ladders {
    n_qubits: usize,
    n_orb: usize,
    ops: Vec<[PauliSum; 2]>,
}

impl Ladders {
    fn new(n_orb: usize) -> Self {
        let n_qubits = 2 * n_orb;
        let mut ops = Vec::new();
        for spin in Spin::BOTH {
            for p in 0..n_orb {
                let m = SpinOrbital::new(p, spin);
                ops.push([PauliSum::ladder(n_qubits, m, false), PauliSum::ladder(n_qubits, m, true)]);
            }
        }
        Self { n_qubits, n_orb, ops }
    }

    fn get(&self, p: usize, spin: Spin, dagger: bool) -> &PauliSum {
        &self.ops[SpinOrbital::new(p, spin).logical(self.n_orb)][dagger as usize]
    }

    /// `Σ_σ a†_pσ a_qσ`
    fn excitation(&self, p: usize, q: usize) -> PauliSum {
        let mut out = PauliSum::zero(self.n_qubits);
        for spin in Spin::BOTH {
            out.add_scaled(&self.get(p, spin, true).mul(self.get(q, spin, false)), 1.0);
        }
        out
    }

    /// `Σ_στ a†_pσ a†_rτ a_sτ a_qσ`
    fn two_body(&self, p: usize, q: usize, r: usize, s: usize) -> PauliSum {
        let mut out = PauliSum::zero(self.n_qubits);
        for sigma in Spin::BOTH {
            for tau in Spin::BOTH {
                if p == r && sigma == tau || q == s && sigma == tau {
                    continue;
                }
                let t = self
                    .get(p, sigma, true)
                    .mul(self.get(r, tau, true))
                    .mul(self.get(s, tau, false))
                    .mul(self.get(q, sigma, false));
                out.add_scaled(&t, 1.0);
            }
        }
        out
    }
}

/// One nonzero entry ∂H_I/∂(element).
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralJacobianEntry {
    pub word: PauliWord,
    pub element: ElementId,
    pub coefficient: f64,
}

/// Linear map from canonical integral orbits to Pauli coefficients.
#[derive(Debug, Clone)]
pub struct JwHamiltonian {
    layout: QubitLayout,
    columns: Vec<(ElementId, PauliOperator)>,
}

impl JwHamiltonian {
    pub fn new(n_orb: usize) -> Self {
        assert!(n_orb >= 1, "need at least one orbital");
        let ladders = Ladders::new(n_orb);
        let columns = canonical_elements(n_orb)
            .into_iter()
            .map(|elem| {
                let mut col = PauliSum::zero(ladders.n_qubits);
                for [p, q, r, s] in elem.orbit() {
                    match elem {
                        ElementId::OneBody(..) => col.add_scaled(&ladders.excitation(p, q), 1.0),
                        ElementId::Eri(..) => col.add_scaled(&ladders.two_body(p, q, r, s), 0.5),
                    }
                }
                (elem, col.into_real())
            })
            .collect();
        Self { layout: QubitLayout::new(n_orb), columns }
    }

    pub fn layout(&self) -> QubitLayout {
        self.layout
    }

    pub fn n_orb(&self) -> usize {
        self.layout.n_orb
    }

    /// Column of the Jacobian for one canonical element.
    pub fn column(&self, elem: ElementId) -> Option<&PauliOperator> {
        let c = elem.canonical();
        self.columns.iter().find(|(e, _)| *e == c).map(|(_, op)| op)
    }

    pub fn entries(&self) -> Vec<IntegralJacobianEntry> {
        self.columns
            .iter()
            .flat_map(|(elem, op)| {
                op.terms().map(move |(w, c)| IntegralJacobianEntry { word: *w, element: *elem, coefficient: c })
            })
            .collect()
    }

    /// Pauli coefficients `H_I = E_ext δ_{I,1} + Σ_e ∂H_I/∂e · e`.
    pub fn map(&self, ints: &ActiveSpaceIntegrals) -> PauliOperator {
        assert_eq!(ints.n_orb(), self.n_orb(), "integral/orbital count mismatch");
        let nq = self.layout.n_qubits();
        let mut acc: BTreeMap<PauliWord, f64> = BTreeMap::new();
        *acc.entry(PauliWord::identity(nq)).or_default() += ints.e_ext();
        for (elem, col) in &self.columns {
            let v = ints.value(*elem);
            if v == 0.0 {
                continue;
            }
            for (w, c) in col.terms() {
                *acc.entry(*w).or_default() += c * v;
            }
        }
        let mut op = PauliOperator::zero(nq);
        for (w, c) in acc {
            op.add_term(w, c);
        }
        op
    }

    /// Words with a nonzero Jacobian entry.
    pub fn support(&self) -> Vec<PauliWord> {
        let mut words: Vec<PauliWord> = self.columns.iter().flat_map(|(_, op)| op.terms().map(|(w, _)| *w)).collect();
        words.sort();
        words.dedup();
        words
    }

    /// Expectation of every support word.
    pub fn word_expectations(&self, state: &Statevector) -> Result<BTreeMap<PauliWord, f64>> {
        self.support().into_iter().map(|w| Ok((w, w.expectation(state)?))).collect()
    }

    /// γ_pq = Σ_I ∂H_I/∂(p|h|q) Γ_I and Γ_pqrs = 2 Σ_I ∂H_I/∂(pq|rs) Γ_I,
    /// with each canonical derivative shared equally across its orbit.
    pub fn backtransform(&self, pauli_density: &BTreeMap<PauliWord, f64>) -> Result<DensityPair> {
        let mut out = DensityPair::zeros(self.n_orb(), DensityFlavor::Unrelaxed);
        for (elem, col) in &self.columns {
            let mut d = 0.0;
            for (w, c) in col.terms() {
                let g = pauli_density.get(w).ok_or_else(|| Error::MissingWord(w.to_string()))?;
                d += c * g;
            }
            let orbit = elem.orbit();
            let share = d / orbit.len() as f64;
            for [p, q, r, s] in orbit {
                match elem {
                    ElementId::OneBody(..) => out.opdm[(p, q)] = share,
                    ElementId::Eri(..) => {
                        let i = out.tpdm_index(p, q, r, s);
                        out.tpdm[i] = 2.0 * share;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Qubit Hamiltonian for the given integrals.
pub fn map_hamiltonian(ints: &ActiveSpaceIntegrals) -> PauliOperator {
    JwHamiltonian::new(ints.n_orb()).map(ints)
}

/// Jacobian entries for `n_orb` orbitals.
pub fn integral_jacobian(n_orb: usize) -> Vec<IntegralJacobianEntry> {
    JwHamiltonian::new(n_orb).entries()
}

/// `N̂_α`, `N̂_β` and `Ŝ² = Ŝ₋Ŝ₊ + Ŝ_z + Ŝ_z²`.
pub fn map_number_operators(n_orb: usize) -> (PauliOperator, PauliOperator, PauliOperator) {
    let l = Ladders::new(n_orb);
    let nq = l.n_qubits;
    let mut n_a = PauliSum::zero(nq);
    let mut n_b = PauliSum::zero(nq);
    let mut s_plus = PauliSum::zero(nq);
    let mut s_minus = PauliSum::zero(nq);
    for p in 0..n_orb {
        n_a.add_scaled(&l.get(p, Spin::Alpha, true).mul(l.get(p, Spin::Alpha, false)), 1.0);
        n_b.add_scaled(&l.get(p, Spin::Beta, true).mul(l.get(p, Spin::Beta, false)), 1.0);
        s_plus.add_scaled(&l.get(p, Spin::Alpha, true).mul(l.get(p, Spin::Beta, false)), 1.0);
        s_minus.add_scaled(&l.get(p, Spin::Beta, true).mul(l.get(p, Spin::Alpha, false)), 1.0);
    }
    let mut s_z = n_a.clone();
    s_z.add_scaled(&n_b, -1.0);
    let mut half_sz = PauliSum::zero(nq);
    half_sz.add_scaled(&s_z, 0.5);
    let mut s2 = s_minus.mul(&s_plus);
    s2.add_scaled(&half_sz, 1.0);
    s2.add_scaled(&half_sz.mul(&half_sz), 1.0);
    (n_a.into_real(), n_b.into_real(), s2.into_real())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Letter;

    fn fix_a() -> ActiveSpaceIntegrals {
        let mut ints = ActiveSpaceIntegrals::zeros(1);
        ints.set_one_body(0, 0, -1.0);
        ints.set_eri(0, 0, 0, 0, 0.5);
        ints
    }

    #[test]
    fn one_orbital_z_coefficient() {
        let entries = integral_jacobian(1);
        let z0 = PauliWord::single(2, 0, Letter::Z);
        assert!(entries.iter().any(|e| e.word == z0 && e.element == ElementId::OneBody(0, 0) && e.coefficient == -0.5));
    }

    #[test]
    fn fix_a_doubly_occupied_energy() {
        let h = map_hamiltonian(&fix_a());
        let e = h.expectation(&Statevector::basis(2, 0b11)).unwrap();
        assert!((e + 1.5).abs() < 1e-15);
    }

    #[test]
    fn scalar_only_is_identity() {
        let mut ints = ActiveSpaceIntegrals::zeros(2);
        ints.set_e_ext(0.3);
        let h = map_hamiltonian(&ints);
        assert_eq!(h.len(), 1);
        assert_eq!(h.coefficient(&PauliWord::identity(4)), 0.3);
    }

    #[test]
    fn coulomb_column_is_pair_occupation() {
        // ½ Σ_στ a†_σ a†_τ a_τ a_σ = n_α n_β = ¼(I − Z0 − Z1 + Z0 Z1)
        let jw = JwHamiltonian::new(1);
        let col = jw.column(ElementId::Eri(0, 0, 0, 0)).unwrap();
        let expected = PauliOperator::parse("0.25 I\n-0.25 Z0\n-0.25 Z1\n0.25 Z0 Z1\n", 2).unwrap();
        assert_eq!(col.len(), 4);
        for (w, c) in expected.terms() {
            assert!((col.coefficient(w) - c).abs() < 1e-15);
        }
    }

    #[test]
    fn number_operator_on_beta_electron() {
        let (n_a, n_b, _) = map_number_operators(1);
        let psi = Statevector::basis(2, 0b10);
        assert_eq!(n_a.expectation(&psi).unwrap(), 0.0);
        assert_eq!(n_b.expectation(&psi).unwrap(), 1.0);
    }

    #[test]
    fn backtransform_doubly_occupied() {
        let jw = JwHamiltonian::new(1);
        let psi = Statevector::basis(2, 0b11);
        let d = jw.backtransform(&jw.word_expectations(&psi).unwrap()).unwrap();
        assert!((d.opdm[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((d.tpdm(0, 0, 0, 0) - 2.0).abs() < 1e-15);
        let vac = jw.backtransform(&jw.word_expectations(&Statevector::basis(2, 0)).unwrap()).unwrap();
        assert!(vac.opdm.amax() < 1e-15);
        assert!(jw.backtransform(&BTreeMap::new()).is_err());
    }
}

//! Spin-summed one- and two-particle density matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrals::{ActiveSpaceIntegrals, ElementId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityFlavor {
    Unrelaxed,
    Response,
    Relaxed,
}

/// OPDM γ_pq and TPDM Γ_pqrs (full M⁴ array, `[p][q][r][s]` order).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPair {
    pub flavor: DensityFlavor,
    pub opdm: DMatrix<f64>,
    pub tpdm: Vec<f64>,
}

impl DensityPair {
    pub fn zeros(n_orb: usize, flavor: DensityFlavor) -> Self {
        Self { flavor, opdm: DMatrix::zeros(n_orb, n_orb), tpdm: vec![0.0; n_orb.pow(4)] }
    }

    pub fn n_orb(&self) -> usize {
        self.opdm.nrows()
    }

    #[inline]
    pub fn tpdm_index(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        let n = self.n_orb();
        ((p * n + q) * n + r) * n + s
    }

    #[inline]
    pub fn tpdm(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.tpdm[self.tpdm_index(p, q, r, s)]
    }

    pub fn trace(&self) -> f64 {
        self.opdm.trace()
    }

    /// `self += scale · other`, keeping `self`'s flavor.
    pub fn add_scaled(&mut self, other: &DensityPair, scale: f64) {
        self.opdm += &other.opdm * scale;
        for (a, b) in self.tpdm.iter_mut().zip(&other.tpdm) {
            *a += scale * b;
        }
    }

    /// Averages γ with its transpose and Γ over each 8-fold orbit.
    pub fn symmetrize(&mut self) {
        let n = self.n_orb();
        let t = self.opdm.transpose();
        self.opdm = (&self.opdm + t) * 0.5;
        for elem in crate::integrals::canonical_eri_elements(n) {
            let orbit = elem.orbit();
            let avg = orbit.iter().map(|&[p, q, r, s]| self.tpdm(p, q, r, s)).sum::<f64>() / orbit.len() as f64;
            for [p, q, r, s] in orbit {
                let i = self.tpdm_index(p, q, r, s);
                self.tpdm[i] = avg;
            }
        }
    }

    /// `E_ext + Σ γ_pq h_pq + ½ Σ Γ_pqrs (pq|rs)`.
    pub fn energy(&self, ints: &ActiveSpaceIntegrals) -> f64 {
        let n = self.n_orb();
        let mut e = ints.e_ext();
        e += self.opdm.component_mul(ints.one_body()).sum();
        let eri = ints.eri_dense();
        e += 0.5 * self.tpdm.iter().zip(&eri).map(|(g, v)| g * v).sum::<f64>();
        debug_assert_eq!(eri.len(), n.pow(4));
        e
    }

    /// Largest deviation of Γ from 8-fold symmetry.
    pub fn tpdm_asymmetry(&self) -> f64 {
        let n = self.n_orb();
        let mut worst: f64 = 0.0;
        for elem in crate::integrals::canonical_eri_elements(n) {
            let orbit = elem.orbit();
            let [p, q, r, s] = orbit[0];
            let v0 = self.tpdm(p, q, r, s);
            for &[p, q, r, s] in &orbit[1..] {
                worst = worst.max((self.tpdm(p, q, r, s) - v0).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &DensityPair) -> f64 {
        let a = (&self.opdm - &other.opdm).amax();
        let b = self.tpdm.iter().zip(&other.tpdm).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        a.max(b)
    }

    /// Derivative of the trace-formula energy with respect to one canonical
    /// element, summed over its symmetry orbit.
    pub fn orbit_derivative(&self, elem: ElementId) -> f64 {
        match elem {
            ElementId::OneBody(..) => elem.orbit().iter().map(|&[p, q, ..]| self.opdm[(p, q)]).sum(),
            ElementId::Eri(..) => 0.5 * elem.orbit().iter().map(|&[p, q, r, s]| self.tpdm(p, q, r, s)).sum::<f64>(),
        }
    }
}

/// Unrelaxed plus response contributions.
pub fn relaxed_densities(unrelaxed: &DensityPair, response: &DensityPair) -> Result<DensityPair> {
    if unrelaxed.flavor != DensityFlavor::Unrelaxed || response.flavor != DensityFlavor::Response {
        return Err(Error::FlavorMismatch(format!(
            "expected (unrelaxed, response), got ({:?}, {:?})",
            unrelaxed.flavor, response.flavor
        )));
    }
    if unrelaxed.n_orb() != response.n_orb() {
        return Err(Error::DimensionMismatch { expected: unrelaxed.n_orb(), got: response.n_orb() });
    }
    let mut out = unrelaxed.clone();
    out.add_scaled(response, 1.0);
    out.flavor = DensityFlavor::Relaxed;
    Ok(out)
}

//! Parameter-shift rules and central finite-difference stencils.
//!
//! A gate `exp(−iθG)` makes any expectation value a trigonometric polynomial
//! in θ whose frequencies are the positive differences of G's eigenvalues.
//! When those are equidistant, `kΩ` for `k = 1..R`, the derivative at zero is
//! exactly
//!
//! ```text
//! f'(0) = Σ_μ v_μ f(t_μ),  t_μ = (2μ−1)π / (2RΩ),  v_μ = Ω(−1)^{μ−1} / (4R sin²(Ω t_μ / 2)),
//! ```
//!
//! for `μ = 1..2R`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fabric::{apply_gate, GateKind};
use crate::integrals::ActiveSpaceIntegrals;
use crate::statevector::{apply_hamiltonian_direct, Statevector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftRule {
    pub gate: GateKind,
    /// (shift in radians, weight)
    pub stencil: Vec<(f64, f64)>,
}

/// Positive, equidistant frequency ladder of a spectrum: (Ω, R).
fn frequency_ladder(spectrum: &[f64]) -> Result<(f64, usize)> {
    let mut freqs: Vec<f64> = Vec::new();
    for a in spectrum {
        for b in spectrum {
            let d = a - b;
            if d > 1e-12 && !freqs.iter().any(|f| (f - d).abs() < 1e-12) {
                freqs.push(d);
            }
        }
    }
    freqs.sort_by(f64::total_cmp);
    let Some(&omega) = freqs.first() else {
        return Ok((1.0, 0));
    };
    for (k, f) in freqs.iter().enumerate() {
        if (f - (k + 1) as f64 * omega).abs() > 1e-10 {
            return Err(Error::InvalidStencil(format!("frequencies {freqs:?} are not equidistant")));
        }
    }
    Ok((omega, freqs.len()))
}

impl ShiftRule {
    /// Builds the rule from a generator spectrum without validation.
    pub fn from_spectrum(gate: GateKind, spectrum: &[f64]) -> Result<Self> {
        let (omega, r) = frequency_ladder(spectrum)?;
        let stencil = (1..=2 * r)
            .map(|mu| {
                let t = (2 * mu - 1) as f64 * std::f64::consts::PI / (2 * r) as f64 / omega;
                let sign = if mu % 2 == 1 { 1.0 } else { -1.0 };
                let w = omega * sign / (4 * r) as f64 / (0.5 * omega * t).sin().powi(2);
                (t, w)
            })
            .collect();
        Ok(Self { gate, stencil })
    }

    /// Validated rule for a fabric gate kind (cached).
    pub fn for_gate(gate: GateKind) -> &'static ShiftRule {
        static PX: OnceLock<ShiftRule> = OnceLock::new();
        static OR: OnceLock<ShiftRule> = OnceLock::new();
        let cell = match gate {
            GateKind::PairExchange => &PX,
            GateKind::OrbitalRotation => &OR,
        };
        cell.get_or_init(|| {
            let rule = ShiftRule::from_spectrum(gate, gate.generator_spectrum()).expect("gate spectra are equidistant");
            let dev = rule.validate().expect("validation tomography is well formed");
            assert!(dev < 1e-10, "{} shift rule deviates from FD by {dev:e}", gate.name());
            rule
        })
    }

    pub fn n_points(&self) -> usize {
        self.stencil.len()
    }

    /// Single-gate tomography check: max deviation of the shift-rule derivative
    /// from a tiny-step five-point finite difference over a few angles.
    pub fn validate(&self) -> Result<f64> {
        let ints = validation_integrals();
        let mut psi = validation_state();
        psi.normalize();
        let energy = |angle: f64| -> Result<f64> {
            let mut s = psi.clone();
            apply_gate(&mut s, self.gate, 0, angle);
            Ok(s.inner(&apply_hamiltonian_direct(&ints, &s)?).re)
        };
        let h = 1e-3;
        let mut worst: f64 = 0.0;
        for &theta in &[0.0, 0.37, -1.1, 2.5] {
            let mut shifted = 0.0;
            for &(t, w) in &self.stencil {
                shifted += w * energy(theta + t)?;
            }
            let fd = (-energy(theta + 2.0 * h)? + 8.0 * energy(theta + h)? - 8.0 * energy(theta - h)? + energy(theta - 2.0 * h)?)
                / (12.0 * h);
            worst = worst.max((shifted - fd).abs());
        }
        Ok(worst)
    }

    /// `Σ_P v_P f(t_P)`: the derivative of `f` at zero shift.
    pub fn apply(&self, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for &(t, w) in &self.stencil {
            acc += w * f(t)?;
        }
        Ok(acc)
    }
}

fn validation_integrals() -> ActiveSpaceIntegrals {
    let mut ints = ActiveSpaceIntegrals::zeros(2);
    ints.set_one_body(0, 0, -1.3);
    ints.set_one_body(1, 1, -0.4);
    ints.set_one_body(1, 0, 0.21);
    ints.set_eri(0, 0, 0, 0, 0.71);
    ints.set_eri(1, 1, 1, 1, 0.52);
    ints.set_eri(1, 1, 0, 0, 0.43);
    ints.set_eri(1, 0, 1, 0, 0.17);
    ints.set_eri(1, 0, 0, 0, 0.05);
    ints.set_eri(1, 1, 1, 0, -0.08);
    ints
}

/// A deterministic real state spanning several particle-number sectors so that
/// every generator eigenvalue is populated.
fn validation_state() -> Statevector {
    let amps: Vec<f64> = (0..16).map(|i| ((i * 7 + 3) % 11) as f64 / 11.0 - 0.4).collect();
    Statevector::from_real(4, &amps)
}

/// Exact derivative of `f` with respect to parameter `g` whose gate uses `rule`.
pub fn shift_gradient(f: impl Fn(&[f64]) -> Result<f64>, theta: &[f64], g: usize, rule: &ShiftRule) -> Result<f64> {
    if g >= theta.len() {
        return Err(Error::ParameterLength { expected: g + 1, got: theta.len() });
    }
    let mut shifted = theta.to_vec();
    rule.apply(|t| {
        shifted[g] = theta[g] + t;
        f(&shifted)
    })
}

/// Symmetric Newton–Cotes first-derivative stencil on `±kΔ`, `k = 1..n/2`.
///
/// Weights solve the odd-moment conditions, so the stencil is exact for
/// polynomials up to degree `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdStencil {
    pub n_points: usize,
    pub step: f64,
    pub stencil: Vec<(f64, f64)>,
}

impl FdStencil {
    pub fn new(n_points: usize, step: f64) -> Result<Self> {
        if n_points == 0 || n_points % 2 == 1 || n_points > 10 {
            return Err(Error::InvalidStencil(format!("n_FD must be one of 2, 4, 6, 8, 10 (got {n_points})")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidStencil(format!("Δ_FD must be positive (got {step})")));
        }
        let half = n_points / 2;
        // Σ_k c_k 2k^{2j+1} = δ_{j0} in units of Δ.
        let m = DMatrix::from_fn(half, half, |j, k| 2.0 * ((k + 1) as f64).powi(2 * j as i32 + 1));
        let mut rhs = DVector::zeros(half);
        rhs[0] = 1.0;
        let c = m.lu().solve(&rhs).ok_or_else(|| Error::InvalidStencil("singular moment system".into()))?;
        let mut stencil = Vec::with_capacity(n_points);
        for k in 0..half {
            let t = (k + 1) as f64 * step;
            stencil.push((t, c[k] / step));
            stencil.push((-t, -c[k] / step));
        }
        Ok(Self { n_points, step, stencil })
    }

    pub fn apply(&self, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for &(t, w) in &self.stencil {
            acc += w * f(t)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_counts_and_validation() {
        assert_eq!(ShiftRule::for_gate(GateKind::PairExchange).n_points(), 4);
        assert_eq!(ShiftRule::for_gate(GateKind::OrbitalRotation).n_points(), 8);
        // Single-frequency generator ±½ recovers the textbook two-point rule.
        let r = ShiftRule::from_spectrum(GateKind::PairExchange, &[-0.5, 0.5]).unwrap();
        assert_eq!(r.n_points(), 2);
        assert!((r.stencil[0].0 - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((r.stencil[0].1 - 0.5).abs() < 1e-15);
        assert!((r.stencil[1].1 + 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_on_trig_polynomials() {
        let rule = ShiftRule::for_gate(GateKind::OrbitalRotation);
        // frequencies ½, 1, 3/2, 2
        let f = |x: f64| {
            0.3 + (0.5 * x).cos() * 0.7 - (0.5 * x).sin() * 0.2
                + (1.5 * x).sin() * 1.1
                + (2.0 * x).cos() * 0.4
                + (2.0 * x).sin() * 0.9
        };
        let df0 = -0.1 + 1.65 + 1.8;
        let d = rule.apply(|t| Ok(f(t))).unwrap();
        assert!((d - df0).abs() < 1e-13);
    }

    #[test]
    fn non_equidistant_spectrum_rejected() {
        assert!(ShiftRule::from_spectrum(GateKind::PairExchange, &[0.0, 1.0, 2.5]).is_err());
    }

    #[test]
    fn fd_stencil_exact_to_degree_n() {
        for n in [2, 4, 6, 8, 10] {
            let s = FdStencil::new(n, 0.3).unwrap();
            let wsum: f64 = s.stencil.iter().map(|(t, w)| t * w).sum();
            assert!((wsum - 1.0).abs() < 1e-12);
            for deg in 0..=n {
                let d = s.apply(|t| Ok((1.0 + t).powi(deg as i32))).unwrap();
                assert!((d - deg as f64).abs() < 1e-8, "n={n} deg={deg}: {d}");
            }
        }
        assert_eq!(FdStencil::new(2, 0.5).unwrap().stencil, vec![(0.5, 1.0), (-0.5, -1.0)]);
        assert!(FdStencil::new(3, 0.1).is_err());
        assert!(FdStencil::new(4, 0.0).is_err());
    }

    #[test]
    fn shift_gradient_linearity() {
        let rule = ShiftRule::for_gate(GateKind::PairExchange);
        let f = |x: &[f64]| Ok((0.5 * x[1]).sin() + x[0]);
        let h = |x: &[f64]| Ok(x[1].cos() * 2.0);
        let th = [0.2, 0.9];
        let combo = shift_gradient(|x| Ok(3.0 * f(x)? - 2.0 * h(x)?), &th, 1, rule).unwrap();
        let sep = 3.0 * shift_gradient(f, &th, 1, rule).unwrap() - 2.0 * shift_gradient(h, &th, 1, rule).unwrap();
        assert!((combo - sep).abs() < 1e-14);
        assert!(shift_gradient(|_| Ok(4.0), &th, 0, rule).unwrap().abs() < 1e-14);
    }
}

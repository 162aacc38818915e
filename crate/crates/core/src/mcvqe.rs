//! State-averaged VQE optimization and the MC-VQE subspace.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fabric::FabricLayout;
use crate::integrals::{ActiveSpaceIntegrals, SectorSpec};
use crate::jw::JwHamiltonian;
use crate::optimize::{self, IterationRecord, LbfgsOptions};
use crate::pauli::{CompiledOperator, PauliOperator};
use crate::shift::ShiftRule;
use crate::statevector::{prepare_csf, prepare_interference, CsfKind, CsfSpec, Statevector};

/// Candidates within this window of the lowest remaining diagonal energy are
/// treated as tied and resolved by (kind, occ, virt).
pub const REFERENCE_TIE_TOLERANCE: f64 = 1e-10;

/// Subspace gaps below this trigger a conditioning warning.
pub const DEGENERACY_WARNING_GAP: f64 = 1e-8;

/// Full candidate pool: Φ₀, singlet singles i→a and diagonal doubles i→a.
pub fn reference_pool(sector: SectorSpec, n_orb: usize) -> Vec<CsfSpec> {
    let n_occ = sector.n_alpha;
    let mut pool = vec![CsfSpec::closed_shell()];
    for kind in [CsfKind::SingletSingle, CsfKind::DiagonalDouble] {
        for i in 0..n_occ {
            for a in n_occ..n_orb {
                pool.push(CsfSpec { kind, occ: i, virt: a });
            }
        }
    }
    pool
}

/// Picks the `n_states` pool members with the lowest ⟨Φ|Ĥ|Φ⟩.
pub fn select_references(ints: &ActiveSpaceIntegrals, sector: SectorSpec, n_states: usize) -> Result<Vec<CsfSpec>> {
    let n = ints.n_orb();
    let pool = reference_pool(sector, n);
    if n_states == 0 || n_states > pool.len() {
        return Err(Error::PoolTooSmall { available: pool.len(), requested: n_states });
    }
    let h = JwHamiltonian::new(n).map(ints).compile();
    let mut remaining: Vec<(CsfSpec, f64)> = pool
        .into_iter()
        .map(|spec| {
            let psi = prepare_csf(spec, sector, n)?;
            Ok((spec, h.expectation_unchecked(psi.amplitudes())))
        })
        .collect::<Result<_>>()?;
    let mut chosen = Vec::with_capacity(n_states);
    while chosen.len() < n_states {
        let lowest = remaining.iter().map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
        let (idx, _) = remaining
            .iter()
            .enumerate()
            .filter(|(_, (_, e))| *e <= lowest + REFERENCE_TIE_TOLERANCE)
            .min_by_key(|(_, (spec, _))| *spec)
            .expect("non-empty pool");
        chosen.push(remaining.remove(idx).0);
    }
    Ok(chosen)
}

/// `θ = 0` plus, when a seed is given, uniform jitter in ±1e−2.
pub fn initial_parameters(n_params: usize, seed: Option<u64>) -> Vec<f64> {
    match seed {
        None => vec![0.0; n_params],
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n_params).map(|_| rng.random_range(-1e-2..1e-2)).collect()
        }
    }
}

#[derive(Debug, Clone)]
pub struct McVqeProblem {
    ints: ActiveSpaceIntegrals,
    sector: SectorSpec,
    layout: FabricLayout,
    references: Vec<CsfSpec>,
    weights: Vec<f64>,
    jw: std::sync::Arc<JwHamiltonian>,
    hamiltonian: PauliOperator,
    compiled: CompiledOperator,
    ref_states: Vec<Statevector>,
}

impl McVqeProblem {
    /// `weights = None` means uniform. Weights are normalized to sum to one.
    pub fn new(
        ints: ActiveSpaceIntegrals,
        sector: SectorSpec,
        n_layers: usize,
        references: Vec<CsfSpec>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let jw = std::sync::Arc::new(JwHamiltonian::new(ints.n_orb()));
        Self::with_mapping(ints, sector, n_layers, references, weights, jw)
    }

    /// Selects the `n_states` lowest references automatically.
    pub fn with_lowest_references(
        ints: ActiveSpaceIntegrals,
        sector: SectorSpec,
        n_states: usize,
        n_layers: usize,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let refs = select_references(&ints, sector, n_states)?;
        Self::new(ints, sector, n_layers, refs, weights)
    }

    fn with_mapping(
        ints: ActiveSpaceIntegrals,
        sector: SectorSpec,
        n_layers: usize,
        references: Vec<CsfSpec>,
        weights: Option<Vec<f64>>,
        jw: std::sync::Arc<JwHamiltonian>,
    ) -> Result<Self> {
        ints.validate()?;
        let n = ints.n_orb();
        sector.validate(n)?;
        if references.is_empty() {
            return Err(Error::InvalidProblem("at least one reference state is required".into()));
        }
        let weights = normalize_weights(weights, references.len())?;
        let ref_states: Vec<Statevector> = references.iter().map(|&spec| prepare_csf(spec, sector, n)).collect::<Result<_>>()?;
        for a in 0..ref_states.len() {
            for b in 0..a {
                let overlap = ref_states[a].inner(&ref_states[b]).norm();
                if overlap > 1e-12 {
                    return Err(Error::NotOrthogonal { overlap });
                }
            }
        }
        let hamiltonian = jw.map(&ints);
        let compiled = hamiltonian.compile();
        Ok(Self {
            ints,
            sector,
            layout: FabricLayout::new(n, n_layers),
            references,
            weights,
            jw,
            hamiltonian,
            compiled,
            ref_states,
        })
    }

    /// Same references, layout and weights with different integrals.
    pub fn with_integrals(&self, ints: ActiveSpaceIntegrals) -> Result<Self> {
        Self::with_mapping(
            ints,
            self.sector,
            self.layout.n_layers(),
            self.references.clone(),
            Some(self.weights.clone()),
            self.jw.clone(),
        )
    }

    pub fn integrals(&self) -> &ActiveSpaceIntegrals {
        &self.ints
    }

    pub fn sector(&self) -> SectorSpec {
        self.sector
    }

    pub fn layout(&self) -> &FabricLayout {
        &self.layout
    }

    pub fn references(&self) -> &[CsfSpec] {
        &self.references
    }

    pub fn reference_states(&self) -> &[Statevector] {
        &self.ref_states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_states(&self) -> usize {
        self.references.len()
    }

    pub fn n_params(&self) -> usize {
        self.layout.n_params()
    }

    pub fn jw(&self) -> &JwHamiltonian {
        &self.jw
    }

    pub fn hamiltonian(&self) -> &PauliOperator {
        &self.hamiltonian
    }

    pub fn compiled_hamiltonian(&self) -> &CompiledOperator {
        &self.compiled
    }

    /// `⟨ψ|Û(θ)† Ĥ Û(θ)|ψ⟩`.
    pub fn entangled_energy(&self, psi: &Statevector, theta: &[f64]) -> Result<f64> {
        let out = self.layout.apply(psi, theta)?;
        let e = self.compiled.expectation_unchecked(out.amplitudes());
        if e.is_nan() {
            return Err(Error::NaN("energy evaluation"));
        }
        Ok(e)
    }

    /// `Ē(θ) = Σ_Θ w_Θ ⟨Φ^Θ|Û†ĤÛ|Φ^Θ⟩`.
    pub fn sa_energy(&self, theta: &[f64]) -> Result<f64> {
        let mut e = 0.0;
        for (w, psi) in self.weights.iter().zip(&self.ref_states) {
            if *w != 0.0 {
                e += w * self.entangled_energy(psi, theta)?;
            }
        }
        Ok(e)
    }

    /// Parameter-shift gradient of any θ-dependent expectation value built on
    /// this fabric. Parameters are evaluated concurrently.
    pub fn parameter_gradient<F>(&self, f: F, theta: &[f64]) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        if theta.len() != self.n_params() {
            return Err(Error::ParameterLength { expected: self.n_params(), got: theta.len() });
        }
        (0..theta.len())
            .into_par_iter()
            .map(|g| {
                let rule = ShiftRule::for_gate(self.layout.param_kind(g));
                crate::shift::shift_gradient(&f, theta, g, rule)
            })
            .collect()
    }

    pub fn sa_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.parameter_gradient(|t| self.sa_energy(t), theta)
    }

    /// Minimizes Ē with L-BFGS until `‖∂Ē/∂θ‖_∞ < gtol`.
    pub fn sa_vqe_optimize(&self, theta_init: &[f64], opts: &LbfgsOptions) -> Result<OptimizationResult> {
        if theta_init.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidProblem("non-finite initial parameters".into()));
        }
        let r = optimize::minimize(|t| Ok((self.sa_energy(t)?, self.sa_gradient(t)?)), theta_init, opts)?;
        Ok(OptimizationResult { theta: r.x, sa_energy: r.value, gradient: r.gradient, trace: r.trace })
    }

    /// Subspace Hamiltonian with off-diagonals from interference states
    /// `χ± = (Φ^Θ ± Φ^Θ')/√2`.
    pub fn subspace_hamiltonian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.n_states();
        let mut h = DMatrix::zeros(n, n);
        for a in 0..n {
            h[(a, a)] = self.entangled_energy(&self.ref_states[a], theta)?;
            for b in 0..a {
                let plus = prepare_interference(&self.ref_states[a], &self.ref_states[b], true)?;
                let minus = prepare_interference(&self.ref_states[a], &self.ref_states[b], false)?;
                let v = 0.5 * (self.entangled_energy(&plus, theta)? - self.entangled_energy(&minus, theta)?);
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        Ok(h)
    }

    /// Subspace Hamiltonian from direct inner products `⟨Γ^Θ|Ĥ|Γ^Θ'⟩`.
    pub fn subspace_hamiltonian_direct(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let gammas: Vec<Statevector> = self.ref_states.iter().map(|r| self.layout.apply(r, theta)).collect::<Result<_>>()?;
        let n = gammas.len();
        Ok(DMatrix::from_fn(n, n, |a, b| self.compiled.matrix_element(gammas[a].amplitudes(), gammas[b].amplitudes()).re))
    }

    /// `|Ω^Θ⟩ = Σ_Θ' V_{Θ'Θ}|Φ^Θ'⟩`.
    pub fn rotated_reference(&self, v: &DMatrix<f64>, state: usize) -> Result<Statevector> {
        rotated_reference(&self.ref_states, v, state)
    }

    /// `E^Θ(θ) = ⟨Ω^Θ|Û(θ)†ĤÛ(θ)|Ω^Θ⟩` with V held fixed.
    pub fn state_energy(&self, v: &DMatrix<f64>, state: usize, theta: &[f64]) -> Result<f64> {
        let omega = self.rotated_reference(v, state)?;
        self.entangled_energy(&omega, theta)
    }

    /// Optimization followed by subspace construction and diagonalization.
    pub fn solve(&self, theta_init: &[f64], opts: &LbfgsOptions) -> Result<McVqeSolution> {
        let opt = self.sa_vqe_optimize(theta_init, opts)?;
        let subspace = self.subspace_at(&opt.theta)?;
        Ok(McVqeSolution { optimization: opt, subspace })
    }

    pub fn subspace_at(&self, theta: &[f64]) -> Result<SubspaceResult> {
        let h = self.subspace_hamiltonian(theta)?;
        let (v, e) = diagonalize_subspace(&h);
        let min_gap = e.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let near_degenerate = min_gap < DEGENERACY_WARNING_GAP;
        if near_degenerate {
            log::warn!(
                "subspace eigenvalue gap {min_gap:e} is below {DEGENERACY_WARNING_GAP:e}; eigenvectors are ill-conditioned"
            );
        }
        Ok(SubspaceResult {
            hamiltonian: h,
            eigenvectors: v,
            energies: e,
            theta: theta.to_vec(),
            min_gap: min_gap.is_finite().then_some(min_gap),
            near_degenerate,
        })
    }
}

fn normalize_weights(weights: Option<Vec<f64>>, n: usize) -> Result<Vec<f64>> {
    let w = weights.unwrap_or_else(|| vec![1.0; n]);
    if w.len() != n {
        return Err(Error::InvalidProblem(format!("{} weights given for {n} states", w.len())));
    }
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidProblem("weights must be finite and non-negative".into()));
    }
    if w.windows(2).any(|p| p[1] > p[0]) {
        return Err(Error::InvalidProblem("weights must be non-increasing".into()));
    }
    let sum: f64 = w.iter().sum();
    if sum <= 0.0 {
        return Err(Error::InvalidProblem("weights sum to zero".into()));
    }
    Ok(w.iter().map(|x| x / sum).collect())
}

pub fn rotated_reference(refs: &[Statevector], v: &DMatrix<f64>, state: usize) -> Result<Statevector> {
    if v.nrows() != refs.len() || state >= v.ncols() {
        return Err(Error::DimensionMismatch { expected: refs.len(), got: v.nrows() });
    }
    let mut out = Statevector::zeros(refs[0].n_qubits());
    for (k, r) in refs.iter().enumerate() {
        out.axpy(v[(k, state)].into(), r);
    }
    Ok(out)
}

/// Ascending eigenvalues; each eigenvector's largest-magnitude component is
/// made positive (the first such component on exact ties).
pub fn diagonalize_subspace(h: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut v = DMatrix::zeros(h.nrows(), h.ncols());
    let mut e = Vec::with_capacity(order.len());
    for (c, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[pivot].abs() + 1e-14 {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        v.set_column(c, &(col * sign));
        e.push(eig.eigenvalues[k]);
    }
    (v, e)
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub theta: Vec<f64>,
    pub sa_energy: f64,
    pub gradient: Vec<f64>,
    pub trace: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct SubspaceResult {
    pub hamiltonian: DMatrix<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub energies: Vec<f64>,
    pub theta: Vec<f64>,
    pub min_gap: Option<f64>,
    pub near_degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct McVqeSolution {
    pub optimization: OptimizationResult,
    pub subspace: SubspaceResult,
}

impl McVqeSolution {
    pub fn theta(&self) -> &[f64] {
        &self.optimization.theta
    }

    pub fn energies(&self) -> &[f64] {
        &self.subspace.energies
    }
}

//! Occupation-number bookkeeping for the qubit layout.
//!
//! Spatial orbital `p` occupies qubits `2p` (α) and `2p + 1` (β). Fermionic
//! anticommutation signs follow the logical ordering α₀ … α_{M−1} β₀ … β_{M−1},
//! so an operator on a β mode sees every occupied α mode in its sign string.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Alpha,
    Beta,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Alpha, Spin::Beta];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinOrbital {
    pub orbital: usize,
    pub spin: Spin,
}

impl SpinOrbital {
    pub fn new(orbital: usize, spin: Spin) -> Self {
        Self { orbital, spin }
    }

    pub fn alpha(orbital: usize) -> Self {
        Self::new(orbital, Spin::Alpha)
    }

    pub fn beta(orbital: usize) -> Self {
        Self::new(orbital, Spin::Beta)
    }

    #[inline]
    pub fn qubit(&self) -> usize {
        match self.spin {
            Spin::Alpha => 2 * self.orbital,
            Spin::Beta => 2 * self.orbital + 1,
        }
    }

    /// Position in the Jordan–Wigner ordering.
    #[inline]
    pub fn logical(&self, n_orb: usize) -> usize {
        match self.spin {
            Spin::Alpha => self.orbital,
            Spin::Beta => n_orb + self.orbital,
        }
    }

    #[inline]
    pub fn bit(&self) -> usize {
        1usize << self.qubit()
    }
}

pub const ALPHA_MASK: usize = 0x5555_5555_5555_5555u64 as usize;
pub const BETA_MASK: usize = 0xAAAA_AAAA_AAAA_AAAAu64 as usize;

/// Bits of the modes that precede `mode` in the Jordan–Wigner ordering.
#[inline]
pub fn preceding_mask(mode: SpinOrbital) -> usize {
    let below = (1usize << mode.qubit()) - 1;
    match mode.spin {
        Spin::Alpha => below & ALPHA_MASK,
        Spin::Beta => ALPHA_MASK | (below & BETA_MASK),
    }
}

#[inline]
fn parity(det: usize, mode: SpinOrbital) -> f64 {
    if (det & preceding_mask(mode)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub fn annihilate(det: usize, mode: SpinOrbital) -> Option<(f64, usize)> {
    let bit = mode.bit();
    (det & bit != 0).then(|| (parity(det, mode), det ^ bit))
}

#[inline]
pub fn create(det: usize, mode: SpinOrbital) -> Option<(f64, usize)> {
    let bit = mode.bit();
    (det & bit == 0).then(|| (parity(det, mode), det | bit))
}

/// `a†_to a_from |det⟩`.
#[inline]
pub fn excite(det: usize, to: SpinOrbital, from: SpinOrbital) -> Option<(f64, usize)> {
    let (s1, d1) = annihilate(det, from)?;
    let (s2, d2) = create(d1, to)?;
    Some((s1 * s2, d2))
}

/// Applies a product of ladder operators, rightmost first. `true` marks a creator.
pub fn apply_string(det: usize, ops: &[(bool, SpinOrbital)]) -> Option<(f64, usize)> {
    let mut sign = 1.0;
    let mut d = det;
    for &(dagger, mode) in ops.iter().rev() {
        let (s, nd) = if dagger { create(d, mode)? } else { annihilate(d, mode)? };
        sign *= s;
        d = nd;
    }
    Some((sign, d))
}

pub fn n_alpha(det: usize) -> usize {
    (det & ALPHA_MASK).count_ones() as usize
}

pub fn n_beta(det: usize) -> usize {
    (det & BETA_MASK).count_ones() as usize
}

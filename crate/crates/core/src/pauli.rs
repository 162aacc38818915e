//! Pauli words and real-weighted sums of them.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevector::Statevector;

/// Coefficients smaller than this are dropped when terms are accumulated.
pub const DROP_TOLERANCE: f64 = 1e-14;

const NORM_TOLERANCE: f64 = 1e-10;

/// Power of i: 0 → +1, 1 → +i, 2 → −1, 3 → −i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(pub u8);

impl Phase {
    pub fn to_complex(self) -> Complex64 {
        match self.0 & 3 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

/// Tensor product of single-qubit Paulis, stored as x/z bitmasks with
/// `Y = i·X·Z` on each qubit where both bits are set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliWord {
    n_qubits: u32,
    x: u64,
    z: u64,
}

impl PauliWord {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= 64, "at most 64 qubits supported");
        Self { n_qubits: n_qubits as u32, x: 0, z: 0 }
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Self {
        assert!(n_qubits <= 64, "at most 64 qubits supported");
        let mask = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        assert!(x & !mask == 0 && z & !mask == 0, "mask exceeds qubit count");
        Self { n_qubits: n_qubits as u32, x, z }
    }

    /// Word with the given letters on the given qubits.
    pub fn from_letters(n_qubits: usize, letters: &[(usize, Letter)]) -> Self {
        let mut w = Self::identity(n_qubits);
        for &(q, l) in letters {
            assert!(q < n_qubits, "qubit {q} out of range");
            w = w.with_letter(q, l);
        }
        w
    }

    pub fn single(n_qubits: usize, qubit: usize, letter: Letter) -> Self {
        Self::from_letters(n_qubits, &[(qubit, letter)])
    }

    pub fn with_letter(mut self, qubit: usize, letter: Letter) -> Self {
        let bit = 1u64 << qubit;
        self.x &= !bit;
        self.z &= !bit;
        match letter {
            Letter::I => {}
            Letter::X => self.x |= bit,
            Letter::Y => {
                self.x |= bit;
                self.z |= bit
            }
            Letter::Z => self.z |= bit,
        }
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn letter(&self, qubit: usize) -> Letter {
        let bit = 1u64 << qubit;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    #[inline]
    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Action on a computational basis state: `P|i⟩ = phase · |i ^ x⟩`.
    #[inline]
    pub fn act(&self, basis: usize) -> (Complex64, usize) {
        let sign_flips = (basis as u64 & self.z).count_ones();
        let phase = Phase(((self.y_count() + 2 * sign_flips) & 3) as u8);
        (phase.to_complex(), basis ^ self.x as usize)
    }

    /// Pauli group product `self · other = phase · word`.
    pub fn multiply(&self, other: &PauliWord) -> Result<(Phase, PauliWord)> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits as usize, got: other.n_qubits as usize });
        }
        let word = PauliWord { n_qubits: self.n_qubits, x: self.x ^ other.x, z: self.z ^ other.z };
        // i^{y1} X^x1 Z^z1 · i^{y2} X^x2 Z^z2 = i^{y1+y2} (-1)^{z1·x2} X^x3 Z^z3
        let swaps = (self.z & other.x).count_ones();
        let power = self.y_count() as i64 + other.y_count() as i64 + 2 * swaps as i64 - word.y_count() as i64;
        Ok((Phase(power.rem_euclid(4) as u8), word))
    }

    /// Expectation value `⟨ψ|P|ψ⟩` (real, since P is Hermitian).
    pub fn expectation(&self, state: &Statevector) -> Result<f64> {
        check_dim(self.n_qubits(), state)?;
        Ok(word_expectation_unchecked(self, state.amplitudes()))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for q in 0..self.n_qubits() {
            let l = match self.letter(q) {
                Letter::I => continue,
                Letter::X => 'X',
                Letter::Y => 'Y',
                Letter::Z => 'Z',
            };
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{l}{q}")?;
            first = false;
        }
        Ok(())
    }
}

fn word_expectation_unchecked(word: &PauliWord, amps: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, a) in amps.iter().enumerate() {
        if *a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let (ph, j) = word.act(i);
        acc += amps[j].conj() * ph * a;
    }
    acc.re
}

fn check_dim(n_qubits: usize, state: &Statevector) -> Result<()> {
    if state.n_qubits() != n_qubits {
        return Err(Error::DimensionMismatch { expected: 1 << n_qubits, got: state.dim() });
    }
    Ok(())
}

fn check_norm(state: &Statevector) -> Result<()> {
    let deviation = (state.norm() - 1.0).abs();
    if deviation > NORM_TOLERANCE {
        return Err(Error::NotNormalized { deviation });
    }
    Ok(())
}

/// Real linear combination of Pauli words on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliOperator {
    n_qubits: usize,
    terms: BTreeMap<PauliWord, f64>,
}

impl PauliOperator {
    pub fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: BTreeMap::new() }
    }

    pub fn identity(n_qubits: usize, coeff: f64) -> Self {
        let mut op = Self::zero(n_qubits);
        op.add_term(PauliWord::identity(n_qubits), coeff);
        op
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliWord, f64)> {
        self.terms.iter().map(|(w, c)| (w, *c))
    }

    pub fn coefficient(&self, word: &PauliWord) -> f64 {
        self.terms.get(word).copied().unwrap_or(0.0)
    }

    /// Accumulates `coeff · word`; the entry is removed if it falls below
    /// [`DROP_TOLERANCE`].
    pub fn add_term(&mut self, word: PauliWord, coeff: f64) {
        assert_eq!(word.n_qubits(), self.n_qubits, "word/operator qubit count mismatch");
        let entry = self.terms.entry(word).or_insert(0.0);
        *entry += coeff;
        if entry.abs() < DROP_TOLERANCE {
            self.terms.remove(&word);
        }
    }

    pub fn add_scaled(&mut self, other: &PauliOperator, scale: f64) {
        for (w, c) in other.terms() {
            self.add_term(*w, scale * c);
        }
    }

    /// Operator product; fails unless the imaginary parts cancel.
    pub fn multiply(&self, other: &PauliOperator) -> Result<PauliOperator> {
        let mut acc: BTreeMap<PauliWord, Complex64> = BTreeMap::new();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                let (ph, w) = a.multiply(b)?;
                *acc.entry(w).or_default() += ph.to_complex() * ca * cb;
            }
        }
        let mut out = PauliOperator::zero(self.n_qubits);
        for (w, c) in acc {
            if c.im.abs() > 1e-12 {
                return Err(Error::InvalidProblem(format!("product is not Hermitian: {w} has coefficient {c}")));
            }
            out.add_term(w, c.re);
        }
        Ok(out)
    }

    /// `Σ_I O_I ⟨ψ|Π_I|ψ⟩` for a normalized state.
    pub fn expectation(&self, state: &Statevector) -> Result<f64> {
        check_dim(self.n_qubits, state)?;
        check_norm(state)?;
        Ok(self.terms.iter().map(|(w, c)| c * word_expectation_unchecked(w, state.amplitudes())).sum())
    }

    /// `Ô|ψ⟩`.
    pub fn apply(&self, state: &Statevector) -> Result<Statevector> {
        check_dim(self.n_qubits, state)?;
        let amps = state.amplitudes();
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for (w, c) in self.terms() {
            for (i, a) in amps.iter().enumerate() {
                let (ph, j) = w.act(i);
                out[j] += ph * a * c;
            }
        }
        Ok(Statevector::from_amplitudes(self.n_qubits, out))
    }

    /// Dense matrix in the computational basis (qubit q ↔ bit q of the index).
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = nalgebra::DMatrix::zeros(dim, dim);
        for (w, c) in self.terms() {
            for i in 0..dim {
                let (ph, j) = w.act(i);
                m[(j, i)] += ph * c;
            }
        }
        m
    }

    /// Parses the line-oriented text form written by `Display`.
    pub fn parse(text: &str, n_qubits: usize) -> Result<Self> {
        let mut op = PauliOperator::zero(n_qubits);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let mut toks = line.split_whitespace();
            let coeff: f64 =
                toks.next().unwrap().parse().map_err(|_| Error::PauliParse(format!("bad coefficient in '{line}'")))?;
            let mut word = PauliWord::identity(n_qubits);
            for tok in toks {
                let (l, idx) = tok.split_at(1);
                let letter = match l {
                    "I" if idx.is_empty() => continue,
                    "I" => Letter::I,
                    "X" => Letter::X,
                    "Y" => Letter::Y,
                    "Z" => Letter::Z,
                    _ => return Err(Error::PauliParse(format!("bad letter in '{tok}'"))),
                };
                let q: usize = idx.parse().map_err(|_| Error::PauliParse(format!("bad qubit in '{tok}'")))?;
                if q >= n_qubits {
                    return Err(Error::PauliParse(format!("qubit {q} out of range")));
                }
                if word.letter(q) != Letter::I {
                    return Err(Error::PauliParse(format!("qubit {q} repeated in '{line}'")));
                }
                word = word.with_letter(q, letter);
            }
            op.add_term(word, coeff);
        }
        Ok(op)
    }

    pub fn compile(&self) -> CompiledOperator {
        CompiledOperator::new(self)
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (w, c) in self.terms() {
            writeln!(f, "{c:e} {w}")?;
        }
        Ok(())
    }
}

/// Largest number of precomputed phase entries held by a compiled operator.
const COMPILED_ENTRY_LIMIT: usize = 1 << 24;

/// Operator regrouped by x-mask for repeated expectation values.
///
/// Words sharing an x-mask differ only by a diagonal phase; when memory
/// allows, the summed diagonal factor for each group is tabulated once.
#[derive(Debug, Clone)]
pub struct CompiledOperator {
    n_qubits: usize,
    groups: Vec<Group>,
}

#[derive(Debug, Clone)]
struct Group {
    x: usize,
    words: Vec<(PauliWord, f64)>,
    table: Option<Vec<Complex64>>,
}

impl CompiledOperator {
    fn new(op: &PauliOperator) -> Self {
        let mut by_x: BTreeMap<u64, Vec<(PauliWord, f64)>> = BTreeMap::new();
        for (w, c) in op.terms() {
            by_x.entry(w.x_mask()).or_default().push((*w, c));
        }
        let dim = 1usize << op.n_qubits;
        let tabulate = by_x.len().saturating_mul(dim) <= COMPILED_ENTRY_LIMIT;
        let groups = by_x
            .into_iter()
            .map(|(x, words)| {
                let table = tabulate.then(|| (0..dim).map(|i| words.iter().map(|(w, c)| w.act(i).0 * c).sum()).collect());
                Group { x: x as usize, words, table }
            })
            .collect();
        Self { n_qubits: op.n_qubits, groups }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Expectation value without normalization checks.
    pub fn expectation_unchecked(&self, amps: &[Complex64]) -> f64 {
        let mut total = 0.0;
        for g in &self.groups {
            let mut acc = Complex64::new(0.0, 0.0);
            match &g.table {
                Some(t) => {
                    for (i, a) in amps.iter().enumerate() {
                        acc += amps[i ^ g.x].conj() * t[i] * a;
                    }
                }
                None => {
                    for (i, a) in amps.iter().enumerate() {
                        let f: Complex64 = g.words.iter().map(|(w, c)| w.act(i).0 * c).sum();
                        acc += amps[i ^ g.x].conj() * f * a;
                    }
                }
            }
            total += acc.re;
        }
        total
    }

    pub fn expectation(&self, state: &Statevector) -> Result<f64> {
        check_dim(self.n_qubits, state)?;
        check_norm(state)?;
        Ok(self.expectation_unchecked(state.amplitudes()))
    }

    /// `⟨a|Ô|b⟩`.
    pub fn matrix_element(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for g in &self.groups {
            for (i, amp) in b.iter().enumerate() {
                let f: Complex64 = match &g.table {
                    Some(t) => t[i],
                    None => g.words.iter().map(|(w, c)| w.act(i).0 * c).sum(),
                };
                acc += a[i ^ g.x].conj() * f * amp;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_dense(l: Letter) -> DMatrix<Complex64> {
        let o = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        match l {
            Letter::I => DMatrix::from_row_slice(2, 2, &[one, o, o, one]),
            Letter::X => DMatrix::from_row_slice(2, 2, &[o, one, one, o]),
            Letter::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            Letter::Z => DMatrix::from_row_slice(2, 2, &[one, o, o, -one]),
        }
    }

    /// Kronecker-product oracle; qubit 0 is the least significant factor.
    fn kron_dense(w: &PauliWord) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
        for q in (0..w.n_qubits()).rev() {
            m = m.kronecker(&single_dense(w.letter(q)));
        }
        m
    }

    #[test]
    fn involution_and_relations() {
        let x0 = PauliWord::single(1, 0, Letter::X);
        let y0 = PauliWord::single(1, 0, Letter::Y);
        let (ph, w) = x0.multiply(&x0).unwrap();
        assert_eq!(ph, Phase(0));
        assert!(w.is_identity());
        let (ph, w) = x0.multiply(&y0).unwrap();
        assert_eq!(ph, Phase(1));
        assert_eq!(w, PauliWord::single(1, 0, Letter::Z));
        assert!(x0.multiply(&PauliWord::identity(2)).is_err());
    }

    #[test]
    fn product_matches_dense() {
        let a = PauliWord::from_letters(2, &[(0, Letter::X), (1, Letter::Z)]);
        let b = PauliWord::from_letters(2, &[(0, Letter::Y), (1, Letter::Y)]);
        let (ph, w) = a.multiply(&b).unwrap();
        let lhs = kron_dense(&a) * kron_dense(&b);
        let rhs = kron_dense(&w) * ph.to_complex();
        assert!((lhs - rhs).norm() < 1e-14);
        // every pair of 2-qubit words
        let letters = [Letter::I, Letter::X, Letter::Y, Letter::Z];
        for &a0 in &letters {
            for &a1 in &letters {
                for &b0 in &letters {
                    for &b1 in &letters {
                        let a = PauliWord::from_letters(2, &[(0, a0), (1, a1)]);
                        let b = PauliWord::from_letters(2, &[(0, b0), (1, b1)]);
                        let (ph, w) = a.multiply(&b).unwrap();
                        let diff = kron_dense(&a) * kron_dense(&b) - kron_dense(&w) * ph.to_complex();
                        assert!(diff.norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn to_dense_matches_kronecker() {
        let w = PauliWord::from_letters(3, &[(0, Letter::Y), (2, Letter::X)]);
        let mut op = PauliOperator::zero(3);
        op.add_term(w, 0.7);
        assert!((op.to_dense() - kron_dense(&w) * c(0.7, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn identity_and_z_expectations() {
        let psi = Statevector::basis(2, 0);
        let op = PauliOperator::identity(2, 0.3);
        assert!((op.expectation(&psi).unwrap() - 0.3).abs() < 1e-15);
        let mut z = PauliOperator::zero(2);
        z.add_term(PauliWord::single(2, 0, Letter::Z), 1.0);
        assert_eq!(z.expectation(&psi).unwrap(), 1.0);
        let bad = Statevector::from_amplitudes(2, vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(z.expectation(&bad), Err(Error::NotNormalized { .. })));
        assert!(z.expectation(&Statevector::basis(3, 0)).is_err());
    }

    #[test]
    fn apply_x_flips_low_bit() {
        let mut x = PauliOperator::zero(2);
        x.add_term(PauliWord::single(2, 0, Letter::X), 1.0);
        let out = x.apply(&Statevector::basis(2, 0)).unwrap();
        assert_eq!(out.amplitudes()[1], c(1.0, 0.0));
        let id = PauliOperator::identity(2, 1.0);
        let psi = Statevector::basis(2, 3);
        assert_eq!(id.apply(&psi).unwrap(), psi);
    }

    #[test]
    fn drop_tolerance_removes_cancelled_terms() {
        let w = PauliWord::single(1, 0, Letter::Z);
        let mut op = PauliOperator::zero(1);
        op.add_term(w, 0.1);
        op.add_term(w, -0.1 + 1e-16);
        assert!(op.is_empty());
    }

    #[test]
    fn text_round_trip() {
        let mut op = PauliOperator::zero(4);
        op.add_term(PauliWord::from_letters(4, &[(0, Letter::X), (1, Letter::Z), (3, Letter::Y)]), 0.5);
        op.add_term(PauliWord::identity(4), -1.25);
        let text = op.to_string();
        assert!(text.contains("5e-1 X0 Z1 Y3"));
        assert_eq!(PauliOperator::parse(&text, 4).unwrap(), op);
        assert_eq!(
            PauliOperator::parse("0.5 X0 Z1 Y3\n", 4)
                .unwrap()
                .coefficient(&PauliWord::from_letters(4, &[(0, Letter::X), (1, Letter::Z), (3, Letter::Y)])),
            0.5
        );
        assert!(PauliOperator::parse("0.5 Q0", 4).is_err());
        assert!(PauliOperator::parse("0.5 X7", 4).is_err());
    }
}

//! Active-space Hamiltonian matrix elements.
//!
//! Integrals are held in chemists' notation. The one-body matrix is stored
//! dense and kept exactly symmetric; the two-electron integrals are stored
//! once per 8-fold symmetry orbit and expanded on access.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Triangular index of an unordered pair.
#[inline]
pub fn pair_index(p: usize, q: usize) -> usize {
    let (a, b) = if p >= q { (p, q) } else { (q, p) };
    a * (a + 1) / 2 + b
}

#[inline]
fn eri_index(p: usize, q: usize, r: usize, s: usize) -> usize {
    pair_index(pair_index(p, q), pair_index(r, s))
}

/// Names a single differentiation variable: a one-body element or an ERI.
///
/// Any member of a symmetry orbit names the whole orbit; [`ElementId::canonical`]
/// picks the representative used for storage and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementId {
    OneBody(usize, usize),
    Eri(usize, usize, usize, usize),
}

impl ElementId {
    pub fn canonical(self) -> Self {
        match self {
            ElementId::OneBody(p, q) => ElementId::OneBody(p.max(q), p.min(q)),
            ElementId::Eri(p, q, r, s) => {
                let (p, q) = (p.max(q), p.min(q));
                let (r, s) = (r.max(s), r.min(s));
                if pair_index(p, q) >= pair_index(r, s) {
                    ElementId::Eri(p, q, r, s)
                } else {
                    ElementId::Eri(r, s, p, q)
                }
            }
        }
    }

    pub fn max_index(self) -> usize {
        match self {
            ElementId::OneBody(p, q) => p.max(q),
            ElementId::Eri(p, q, r, s) => p.max(q).max(r).max(s),
        }
    }

    /// Distinct index tuples in the symmetry orbit. One-body members are
    /// returned with the trailing two slots zero.
    pub fn orbit(self) -> Vec<[usize; 4]> {
        let mut out: Vec<[usize; 4]> = Vec::with_capacity(8);
        match self {
            ElementId::OneBody(p, q) => {
                out.push([p, q, 0, 0]);
                if p != q {
                    out.push([q, p, 0, 0]);
                }
            }
            ElementId::Eri(p, q, r, s) => {
                for m in [
                    [p, q, r, s],
                    [q, p, r, s],
                    [p, q, s, r],
                    [q, p, s, r],
                    [r, s, p, q],
                    [s, r, p, q],
                    [r, s, q, p],
                    [s, r, q, p],
                ] {
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
            }
        }
        out
    }

    pub fn orbit_size(self) -> usize {
        self.orbit().len()
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementId::OneBody(p, q) => write!(f, "h({p},{q})"),
            ElementId::Eri(p, q, r, s) => write!(f, "({p}{q}|{r}{s})"),
        }
    }
}

/// Target quantum numbers. `spin_s` is twice the total spin, so the
/// S² eigenvalue is `spin_s/2 * (spin_s/2 + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub n_alpha: usize,
    pub n_beta: usize,
    pub spin_s: usize,
}

impl SectorSpec {
    pub fn new(n_alpha: usize, n_beta: usize, spin_s: usize) -> Self {
        Self { n_alpha, n_beta, spin_s }
    }

    pub fn singlet(n_pairs: usize) -> Self {
        Self::new(n_pairs, n_pairs, 0)
    }

    pub fn s2_eigenvalue(&self) -> f64 {
        let s = self.spin_s as f64 / 2.0;
        s * (s + 1.0)
    }

    pub fn n_electrons(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    pub fn validate(&self, n_orb: usize) -> Result<()> {
        if self.n_alpha > n_orb || self.n_beta > n_orb {
            return Err(Error::InvalidSector(format!(
                "N_alpha={} N_beta={} exceeds {} orbitals",
                self.n_alpha, self.n_beta, n_orb
            )));
        }
        let diff = self.n_alpha.abs_diff(self.n_beta);
        if self.spin_s < diff || self.spin_s > self.n_alpha + self.n_beta {
            return Err(Error::InvalidSector(format!(
                "S={} incompatible with N_alpha={} N_beta={}",
                self.spin_s, self.n_alpha, self.n_beta
            )));
        }
        if !(self.spin_s - diff).is_multiple_of(2) {
            return Err(Error::InvalidSector(format!(
                "S={} has the wrong parity for N_alpha={} N_beta={}",
                self.spin_s, self.n_alpha, self.n_beta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSpaceIntegrals {
    n_orb: usize,
    e_ext: f64,
    one_body: DMatrix<f64>,
    eri: Vec<f64>,
}

impl ActiveSpaceIntegrals {
    /// All-zero integrals over `n_orb` spatial orbitals.
    pub fn zeros(n_orb: usize) -> Self {
        let npair = n_orb * (n_orb + 1) / 2;
        Self { n_orb, e_ext: 0.0, one_body: DMatrix::zeros(n_orb, n_orb), eri: vec![0.0; npair * (npair + 1) / 2] }
    }

    /// Builds integrals from a full M⁴ ERI array in `[p][q][r][s]` row-major
    /// order. The one-body matrix and ERIs are symmetrized by averaging over
    /// each orbit.
    pub fn from_dense(e_ext: f64, one_body: DMatrix<f64>, eri: &[f64]) -> Result<Self> {
        let n = one_body.nrows();
        if one_body.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: one_body.ncols() });
        }
        if eri.len() != n.pow(4) {
            return Err(Error::DimensionMismatch { expected: n.pow(4), got: eri.len() });
        }
        let mut out = Self::zeros(n);
        out.e_ext = e_ext;
        for p in 0..n {
            for q in 0..n {
                out.one_body[(p, q)] = 0.5 * (one_body[(p, q)] + one_body[(q, p)]);
            }
        }
        for elem in out.canonical_eri_elements().collect::<Vec<_>>() {
            let orbit = elem.orbit();
            let sum: f64 = orbit.iter().map(|&[p, q, r, s]| eri[((p * n + q) * n + r) * n + s]).sum();
            if let ElementId::Eri(p, q, r, s) = elem {
                out.eri[eri_index(p, q, r, s)] = sum / orbit.len() as f64;
            }
        }
        out.validate()?;
        Ok(out)
    }

    pub fn n_orb(&self) -> usize {
        self.n_orb
    }

    pub fn e_ext(&self) -> f64 {
        self.e_ext
    }

    pub fn set_e_ext(&mut self, value: f64) {
        self.e_ext = value;
    }

    pub fn one_body(&self) -> &DMatrix<f64> {
        &self.one_body
    }

    /// Sets (p|h|q) and (q|p|h) together.
    pub fn set_one_body(&mut self, p: usize, q: usize, value: f64) {
        self.one_body[(p, q)] = value;
        self.one_body[(q, p)] = value;
    }

    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.eri[eri_index(p, q, r, s)]
    }

    /// Sets every member of the orbit of (pq|rs).
    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        self.eri[eri_index(p, q, r, s)] = value;
    }

    /// Full M⁴ array in `[p][q][r][s]` order.
    pub fn eri_dense(&self) -> Vec<f64> {
        let n = self.n_orb;
        let mut out = vec![0.0; n.pow(4)];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        out[((p * n + q) * n + r) * n + s] = self.eri(p, q, r, s);
                    }
                }
            }
        }
        out
    }

    pub fn value(&self, elem: ElementId) -> f64 {
        match elem {
            ElementId::OneBody(p, q) => self.one_body[(p, q)],
            ElementId::Eri(p, q, r, s) => self.eri(p, q, r, s),
        }
    }

    pub fn canonical_one_body_elements(&self) -> impl Iterator<Item = ElementId> {
        let n = self.n_orb;
        (0..n).flat_map(move |p| (0..=p).map(move |q| ElementId::OneBody(p, q)))
    }

    pub fn canonical_eri_elements(&self) -> impl Iterator<Item = ElementId> {
        canonical_eri_elements(self.n_orb)
    }

    /// One-body canonical elements followed by ERI canonical elements.
    pub fn canonical_elements(&self) -> Vec<ElementId> {
        canonical_elements(self.n_orb)
    }

    pub fn check_element(&self, elem: ElementId) -> Result<()> {
        if elem.max_index() >= self.n_orb {
            return Err(Error::InvalidElement(format!("{elem} out of range for {} orbitals", self.n_orb)));
        }
        Ok(())
    }

    /// Returns a copy with the named element's whole symmetry orbit shifted by `delta`.
    pub fn perturb(&self, elem: ElementId, delta: f64) -> Result<Self> {
        self.check_element(elem)?;
        let mut out = self.clone();
        match elem {
            ElementId::OneBody(p, q) => {
                out.one_body[(p, q)] += delta;
                if p != q {
                    out.one_body[(q, p)] += delta;
                }
            }
            ElementId::Eri(p, q, r, s) => out.eri[eri_index(p, q, r, s)] += delta,
        }
        Ok(out)
    }

    /// Modified one-electron integrals κ_pq = h_pq − ½ Σ_r (pr|rq).
    pub fn kappa(&self) -> DMatrix<f64> {
        let n = self.n_orb;
        DMatrix::from_fn(n, n, |p, q| self.one_body[(p, q)] - 0.5 * (0..n).map(|r| self.eri(p, r, r, q)).sum::<f64>())
    }

    /// a·self + b·other on every tensor part, including E_ext.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if other.n_orb != self.n_orb {
            return Err(Error::DimensionMismatch { expected: self.n_orb, got: other.n_orb });
        }
        Ok(Self {
            n_orb: self.n_orb,
            e_ext: a * self.e_ext + b * other.e_ext,
            one_body: &self.one_body * a + &other.one_body * b,
            eri: self.eri.iter().zip(&other.eri).map(|(x, y)| a * x + b * y).collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !self.e_ext.is_finite() {
            return Err(Error::NonFinite { what: "E_ext".into(), value: self.e_ext });
        }
        for p in 0..self.n_orb {
            for q in 0..self.n_orb {
                let v = self.one_body[(p, q)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { what: format!("h({p},{q})"), value: v });
                }
                if v != self.one_body[(q, p)] {
                    return Err(Error::InvalidElement(format!("one-body matrix not symmetric at ({p},{q})")));
                }
            }
        }
        if let Some(v) = self.eri.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "ERI".into(), value: *v });
        }
        Ok(())
    }

    /// Parses an FCIDUMP file.
    pub fn load_fcidump(path: impl AsRef<Path>) -> Result<(Self, SectorSpec)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        parse_fcidump(&text)
    }

    /// Serializes in FCIDUMP format. Only nonzero canonical entries are
    /// written; values use the shortest round-trip representation.
    pub fn to_fcidump(&self, sector: &SectorSpec) -> String {
        let n = self.n_orb;
        let mut out = String::new();
        let ms2 = sector.n_alpha as i64 - sector.n_beta as i64;
        out.push_str(&format!(
            "&FCI NORB={},NELEC={},MS2={},\n  ORBSYM={}\n  ISYM=1,\n&END\n",
            n,
            sector.n_electrons(),
            ms2,
            "1,".repeat(n)
        ));
        for elem in self.canonical_eri_elements() {
            if let ElementId::Eri(p, q, r, s) = elem {
                let v = self.eri(p, q, r, s);
                if v != 0.0 {
                    out.push_str(&format!("{:e} {} {} {} {}\n", v, p + 1, q + 1, r + 1, s + 1));
                }
            }
        }
        for elem in self.canonical_one_body_elements() {
            if let ElementId::OneBody(p, q) = elem {
                let v = self.one_body[(p, q)];
                if v != 0.0 {
                    out.push_str(&format!("{:e} {} {} 0 0\n", v, p + 1, q + 1));
                }
            }
        }
        out.push_str(&format!("{:e} 0 0 0 0\n", self.e_ext));
        out
    }
}

pub fn canonical_eri_elements(n: usize) -> impl Iterator<Item = ElementId> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|p| (0..=p).map(move |q| (p, q))).collect();
    let pairs2 = pairs.clone();
    pairs
        .into_iter()
        .enumerate()
        .flat_map(move |(i, (p, q))| pairs2[..=i].iter().map(move |&(r, s)| ElementId::Eri(p, q, r, s)).collect::<Vec<_>>())
}

pub fn canonical_elements(n: usize) -> Vec<ElementId> {
    let mut out: Vec<ElementId> = (0..n).flat_map(|p| (0..=p).map(move |q| ElementId::OneBody(p, q))).collect();
    out.extend(canonical_eri_elements(n));
    out
}

fn parse_header(header: &str) -> Result<(usize, usize, i64)> {
    let body = header
        .trim()
        .trim_start_matches("&FCI")
        .trim_start_matches("&fci")
        .trim_end_matches("&END")
        .trim_end_matches("&end")
        .trim_end_matches('/');
    let mut tokens = body.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).peekable();
    let (mut norb, mut nelec, mut ms2) = (None, None, 0i64);
    while let Some(tok) = tokens.next() {
        let Some((key, val)) = tok.split_once('=') else {
            continue;
        };
        let val = if val.is_empty() {
            match tokens.peek() {
                Some(next) if !next.contains('=') => tokens.next().unwrap(),
                _ => "",
            }
        } else {
            val
        };
        let parse_int = |v: &str| v.parse::<i64>().map_err(|_| Error::MalformedHeader(format!("cannot parse {key}={v}")));
        match key.to_ascii_uppercase().as_str() {
            "NORB" => norb = Some(parse_int(val)?),
            "NELEC" => nelec = Some(parse_int(val)?),
            "MS2" => ms2 = parse_int(val)?,
            _ => {}
        }
    }
    let norb = norb.ok_or_else(|| Error::MalformedHeader("missing NORB".into()))?;
    let nelec = nelec.ok_or_else(|| Error::MalformedHeader("missing NELEC".into()))?;
    if norb < 1 || nelec < 0 {
        return Err(Error::MalformedHeader(format!("NORB={norb} NELEC={nelec}")));
    }
    Ok((norb as usize, nelec as usize, ms2))
}

/// Parses FCIDUMP text. See [`ActiveSpaceIntegrals::load_fcidump`].
pub fn parse_fcidump(text: &str) -> Result<(ActiveSpaceIntegrals, SectorSpec)> {
    let mut lines = text.lines().enumerate();
    let mut header = String::new();
    let mut terminated = false;
    for (_, line) in lines.by_ref() {
        header.push_str(line);
        header.push('\n');
        let t = line.trim();
        if t.ends_with("&END") || t.ends_with("&end") || t == "/" || t.ends_with('/') {
            terminated = true;
            break;
        }
    }
    if !terminated || !header.trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(Error::MalformedHeader("expected '&FCI ... &END' block".into()));
    }
    let (norb, nelec, ms2) = parse_header(&header)?;
    let ms2_abs = ms2.unsigned_abs() as usize;
    if ms2_abs > nelec || !(nelec - ms2_abs).is_multiple_of(2) {
        return Err(Error::MalformedHeader(format!("NELEC={nelec} inconsistent with MS2={ms2}")));
    }
    let n_alpha = ((nelec as i64 + ms2) / 2) as usize;
    let n_beta = ((nelec as i64 - ms2) / 2) as usize;
    let sector = SectorSpec::new(n_alpha, n_beta, ms2_abs);
    sector.validate(norb).map_err(|e| Error::MalformedHeader(e.to_string()))?;

    let mut ints = ActiveSpaceIntegrals::zeros(norb);
    let mut seen: HashSet<Option<ElementId>> = HashSet::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(Error::MalformedRecord { line: lineno, msg: format!("expected 5 fields, got {}", toks.len()) });
        }
        let value: f64 = toks[0]
            .replace(['D', 'd'], "e")
            .parse()
            .map_err(|_| Error::MalformedRecord { line: lineno, msg: format!("bad value '{}'", toks[0]) })?;
        let mut idx4 = [0usize; 4];
        for (slot, tok) in idx4.iter_mut().zip(&toks[1..]) {
            *slot = tok.parse().map_err(|_| Error::MalformedRecord { line: lineno, msg: format!("bad index '{tok}'") })?;
            if *slot > norb {
                return Err(Error::IndexOutOfRange { line: lineno, index: *slot, norb });
            }
        }
        let elem = match idx4 {
            [0, 0, 0, 0] => None,
            [i, j, 0, 0] if i > 0 && j > 0 => Some(ElementId::OneBody(i - 1, j - 1).canonical()),
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => Some(ElementId::Eri(i - 1, j - 1, k - 1, l - 1).canonical()),
            _ => return Err(Error::MalformedRecord { line: lineno, msg: format!("unsupported index pattern {idx4:?}") }),
        };
        if !value.is_finite() {
            return Err(Error::NonFinite { what: elem.map_or("E_ext".to_string(), |e| e.to_string()), value });
        }
        if !seen.insert(elem) {
            return Err(Error::DuplicateEntry { line: lineno, element: elem.map_or("E_ext".to_string(), |e| e.to_string()) });
        }
        match elem {
            None => ints.e_ext = value,
            Some(ElementId::OneBody(p, q)) => ints.set_one_body(p, q, value),
            Some(ElementId::Eri(p, q, r, s)) => ints.set_eri(p, q, r, s, value),
        }
    }
    Ok((ints, sector))
}

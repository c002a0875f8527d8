//! Pauli strings and weighted sums of them.
//!
//! Sites are 0-based. A [`PauliString`] stores only its non-identity factors,
//! so the identity on `n` sites is an empty factor map with coefficient 1.
//!
//! # Text format
//!
//! A string is written as a coefficient, `*`, and a space-separated list of
//! factors, each an axis letter followed by the site index:
//!
//! ```text
//! 1 * X0 Z1 X2
//! -0.5 * Z3
//! (0,1) * Y0 X1        complex coefficients are written (re,im)
//! 2 * I                the identity, scaled
//! ```
//!
//! The number of sites is not part of the text; it is supplied to
//! [`PauliString::parse`]. An [`OperatorSum`] is written one term per line.

mod matrix;

pub use matrix::{commutator_norm, realize, CsrMatrix, DenseMatrix, Format, Realized};
pub(crate) use matrix::expectation_real;
pub(crate) use matrix::sparse as sparse_matrix;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Single-site Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    /// Product `self * other` as `(phase, result)`; `None` means identity.
    pub fn mul(self, other: Pauli) -> (Complex64, Option<Pauli>) {
        use Pauli::*;
        let i = Complex64::i();
        match (self, other) {
            (X, X) | (Y, Y) | (Z, Z) => (Complex64::new(1.0, 0.0), None),
            (X, Y) => (i, Some(Z)),
            (Y, X) => (-i, Some(Z)),
            (Y, Z) => (i, Some(X)),
            (Z, Y) => (-i, Some(X)),
            (Z, X) => (i, Some(Y)),
            (X, Z) => (-i, Some(Y)),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_letter(c: char) -> Option<Pauli> {
        match c {
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A weighted tensor product of single-site Pauli operators.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    n_sites: usize,
    factors: BTreeMap<usize, Pauli>,
    coeff: Complex64,
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Self {
        Self {
            n_sites,
            factors: BTreeMap::new(),
            coeff: Complex64::new(1.0, 0.0),
        }
    }

    /// Builds a string from `(site, axis)` pairs. Repeated sites are
    /// multiplied together in the order given.
    pub fn new<I>(n_sites: usize, factors: I, coeff: Complex64) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Pauli)>,
    {
        if n_sites == 0 {
            return Err(Error::Parameter("a Pauli string needs at least one site".into()));
        }
        if !(coeff.re.is_finite() && coeff.im.is_finite()) {
            return Err(Error::Parameter(format!("non-finite coefficient {coeff}")));
        }
        let mut s = Self {
            n_sites,
            factors: BTreeMap::new(),
            coeff,
        };
        for (site, p) in factors {
            if site >= n_sites {
                return Err(Error::Parameter(format!(
                    "site {site} out of range for {n_sites} sites"
                )));
            }
            s.mul_site(site, p);
        }
        Ok(s)
    }

    /// Real-coefficient constructor used by the model builders.
    pub fn real<I>(n_sites: usize, factors: I, coeff: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Pauli)>,
    {
        Self::new(n_sites, factors, Complex64::new(coeff, 0.0))
    }

    pub fn single(n_sites: usize, site: usize, p: Pauli) -> Result<Self> {
        Self::real(n_sites, [(site, p)], 1.0)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coeff(&self) -> Complex64 {
        self.coeff
    }

    pub fn factors(&self) -> &BTreeMap<usize, Pauli> {
        &self.factors
    }

    pub fn get(&self, site: usize) -> Option<Pauli> {
        self.factors.get(&site).copied()
    }

    pub fn weight(&self) -> usize {
        self.factors.len()
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn with_coeff(mut self, coeff: Complex64) -> Self {
        self.coeff = coeff;
        self
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.coeff *= factor;
        self
    }

    /// Sites carrying a non-identity factor, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.factors.keys().copied()
    }

    fn mul_site(&mut self, site: usize, p: Pauli) {
        match self.factors.remove(&site) {
            None => {
                self.factors.insert(site, p);
            }
            Some(q) => {
                let (phase, r) = q.mul(p);
                self.coeff *= phase;
                if let Some(r) = r {
                    self.factors.insert(site, r);
                }
            }
        }
    }

    /// Product `self * other`, with the accumulated phase folded into the
    /// coefficient.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        check_sites(self.n_sites, other.n_sites)?;
        let mut out = self.clone();
        out.coeff *= other.coeff;
        for (&site, &p) in &other.factors {
            out.mul_site(site, p);
        }
        Ok(out)
    }

    /// Two Pauli strings either commute or anticommute; they commute iff the
    /// number of sites where both act with different axes is even.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        check_sites(self.n_sites, other.n_sites)?;
        Ok(self.anticommuting_overlaps(other) % 2 == 0)
    }

    fn anticommuting_overlaps(&self, other: &PauliString) -> usize {
        let (small, large) = if self.factors.len() <= other.factors.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .factors
            .iter()
            .filter(|(s, p)| matches!(large.factors.get(s), Some(q) if q != *p))
            .count()
    }

    /// Canonical key of the operator part (ignores the coefficient).
    pub fn key(&self) -> Vec<(usize, Pauli)> {
        self.factors.iter().map(|(&s, &p)| (s, p)).collect()
    }

    /// Bit masks in the computational basis, site 0 as the most significant
    /// bit: `(x_mask, z_mask, y_count)` with `P = c · i^y · X^x Z^z`.
    pub(crate) fn masks(&self) -> (usize, usize, u32) {
        let n = self.n_sites;
        let (mut x, mut z, mut y) = (0usize, 0usize, 0u32);
        for (&site, &p) in &self.factors {
            let bit = 1usize << (n - 1 - site);
            match p {
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    y += 1;
                }
            }
        }
        (x, z, y)
    }

    /// Parses the text form documented at module level.
    pub fn parse(text: &str, n_sites: usize) -> Result<PauliString> {
        let text = text.trim();
        let (coeff_txt, ops_txt) = match text.split_once('*') {
            Some((c, o)) => (c.trim(), o.trim()),
            None => ("1", text),
        };
        let coeff = parse_coeff(coeff_txt)?;
        let mut factors = Vec::new();
        for tok in ops_txt.split_whitespace() {
            if tok == "I" || tok == "i" {
                continue;
            }
            let mut chars = tok.chars();
            let axis = chars
                .next()
                .and_then(Pauli::from_letter)
                .ok_or_else(|| Error::Parse(format!("bad factor `{tok}`")))?;
            let site: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::Parse(format!("bad site index in `{tok}`")))?;
            factors.push((site, axis));
        }
        PauliString::new(n_sites, factors, coeff)
    }
}

fn parse_coeff(s: &str) -> Result<Complex64> {
    let bad = || Error::Parse(format!("bad coefficient `{s}`"));
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        let (re, im) = inner.split_once(',').ok_or_else(bad)?;
        let re: f64 = re.trim().parse().map_err(|_| bad())?;
        let im: f64 = im.trim().parse().map_err(|_| bad())?;
        Ok(Complex64::new(re, im))
    } else {
        let re: f64 = s.parse().map_err(|_| bad())?;
        Ok(Complex64::new(re, 0.0))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeff.im == 0.0 {
            write!(f, "{} *", self.coeff.re)?;
        } else {
            write!(f, "({},{}) *", self.coeff.re, self.coeff.im)?;
        }
        if self.factors.is_empty() {
            return write!(f, " I");
        }
        for (site, p) in &self.factors {
            write!(f, " {}{}", p.letter(), site)?;
        }
        Ok(())
    }
}

fn check_sites(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// A sum of Pauli strings on a common number of sites. The empty sum is the
/// zero operator.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSum {
    n_sites: usize,
    terms: Vec<PauliString>,
}

impl OperatorSum {
    pub fn zero(n_sites: usize) -> Self {
        Self {
            n_sites,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(n_sites: usize, terms: Vec<PauliString>) -> Result<Self> {
        for t in &terms {
            check_sites(n_sites, t.n_sites)?;
        }
        Ok(Self { n_sites, terms })
    }

    pub fn push(&mut self, term: PauliString) -> Result<()> {
        check_sites(self.n_sites, term.n_sites)?;
        self.terms.push(term);
        Ok(())
    }

    /// Appends every term of `other` scaled by `factor`.
    pub fn add_scaled(&mut self, other: &OperatorSum, factor: f64) -> Result<()> {
        check_sites(self.n_sites, other.n_sites)?;
        let f = Complex64::new(factor, 0.0);
        self.terms
            .extend(other.terms.iter().map(|t| t.clone().scaled(f)));
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> OperatorSum {
        let f = Complex64::new(factor, 0.0);
        OperatorSum {
            n_sites: self.n_sites,
            terms: self.terms.iter().map(|t| t.clone().scaled(f)).collect(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every coefficient is real; such sums are Hermitian.
    pub fn has_real_coefficients(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.im == 0.0)
    }

    /// True when the realized matrix is real in the computational basis
    /// (real coefficients and an even number of `Y` factors per term).
    pub(crate) fn is_real_matrix(&self) -> bool {
        self.terms.iter().all(|t| {
            let ny = t.factors.values().filter(|p| **p == Pauli::Y).count();
            let phase = if ny % 2 == 0 { t.coeff } else { t.coeff * Complex64::i() };
            phase.im == 0.0
        })
    }

    /// Merges terms with equal operator parts, drops terms whose coefficient
    /// magnitude is at most `tol`, and sorts by operator key.
    pub fn canonical(&self, tol: f64) -> OperatorSum {
        let mut merged: BTreeMap<Vec<(usize, Pauli)>, PauliString> = BTreeMap::new();
        for t in &self.terms {
            merged
                .entry(t.key())
                .and_modify(|e| e.coeff += t.coeff)
                .or_insert_with(|| t.clone());
        }
        OperatorSum {
            n_sites: self.n_sites,
            terms: merged
                .into_values()
                .filter(|t| t.coeff.norm() > tol)
                .collect(),
        }
    }

    /// Symbolic commutator `[self, other]`: each anticommuting pair of terms
    /// contributes `2·p·q`.
    pub fn commutator(&self, other: &OperatorSum) -> Result<OperatorSum> {
        check_sites(self.n_sites, other.n_sites)?;
        let mut out = OperatorSum::zero(self.n_sites);
        for p in &self.terms {
            for q in &other.terms {
                if !p.commutes(q)? {
                    out.terms.push(p.multiply(q)?.scaled(Complex64::new(2.0, 0.0)));
                }
            }
        }
        Ok(out)
    }

    pub fn parse(text: &str, n_sites: usize) -> Result<OperatorSum> {
        let mut out = OperatorSum::zero(n_sites);
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                out.terms.push(PauliString::parse(line, n_sites)?);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{t}")?;
        }
        Ok(())
    }
}

impl From<PauliString> for OperatorSum {
    fn from(p: PauliString) -> Self {
        OperatorSum {
            n_sites: p.n_sites,
            terms: vec![p],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Pauli::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_site_products() {
        let x = PauliString::single(1, 0, X).unwrap();
        let y = PauliString::single(1, 0, Y).unwrap();
        let xy = x.multiply(&y).unwrap();
        assert_eq!(xy.key(), vec![(0, Z)]);
        assert_eq!(xy.coeff(), c(0.0, 1.0));
        let xx = x.multiply(&x).unwrap();
        assert!(xx.is_identity());
        assert_eq!(xx.coeff(), c(1.0, 0.0));
    }

    #[test]
    fn mismatched_sites_is_a_dimension_error() {
        let a = PauliString::single(2, 0, X).unwrap();
        let b = PauliString::single(3, 0, X).unwrap();
        assert!(matches!(a.multiply(&b), Err(Error::Dimension { .. })));
        assert!(matches!(a.commutes(&b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn out_of_range_site_rejected() {
        assert!(PauliString::single(3, 3, Z).is_err());
        assert!(PauliString::new(2, [], c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn commutation_of_small_strings() {
        let x0 = PauliString::single(4, 0, X).unwrap();
        let z0 = PauliString::single(4, 0, Z).unwrap();
        assert!(!x0.commutes(&z0).unwrap());
        let z2 = PauliString::single(4, 2, Z).unwrap();
        let xzx = PauliString::real(4, [(1, X), (2, Z), (3, X)], 1.0).unwrap();
        assert!(xzx.commutes(&z2).unwrap());
    }

    #[test]
    fn text_round_trip() {
        let p = PauliString::parse("1.0 * X0 Z1 X2", 4).unwrap();
        assert_eq!(p.key(), vec![(0, X), (1, Z), (2, X)]);
        assert_eq!(p.to_string(), "1 * X0 Z1 X2");
        let q = PauliString::parse("(0.5,-2) * Y3", 4).unwrap();
        assert_eq!(q.coeff(), c(0.5, -2.0));
        assert_eq!(PauliString::parse(&q.to_string(), 4).unwrap(), q);
        let id = PauliString::parse("2 * I", 4).unwrap();
        assert!(id.is_identity());
        assert!(PauliString::parse("1 * Q0", 4).is_err());
        assert!(PauliString::parse("1 * X9", 4).is_err());
        let sum = OperatorSum::parse("1 * X0 X1\n# comment\n-1 * Z1\n", 2).unwrap();
        assert_eq!(sum.len(), 2);
        assert_eq!(OperatorSum::parse(&sum.to_string(), 2).unwrap(), sum);
    }

    #[test]
    fn canonical_merges_and_drops() {
        let a = PauliString::real(2, [(0, X)], 1.0).unwrap();
        let b = PauliString::real(2, [(0, X)], -1.0).unwrap();
        let z = PauliString::real(2, [(1, Z)], 3.0).unwrap();
        let s = OperatorSum::from_terms(2, vec![a, z.clone(), b]).unwrap();
        let can = s.canonical(1e-14);
        assert_eq!(can.terms(), &[z]);
    }
}

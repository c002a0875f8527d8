//! Cluster-chain Hamiltonians, their symmetry operators, and the Clifford
//! map to the XY form.
//!
//! Sites are 0-based; physics site `k` (1-based) is stored at index `k-1`.
//! Sublattice A is the even 0-based sites, B the odd ones, and unit cells
//! are the pairs `(0,1), (2,3), …`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{OperatorSum, Pauli, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Obc,
    Pbc,
}

impl Boundary {
    pub fn label(self) -> &'static str {
        match self {
            Boundary::Obc => "obc",
            Boundary::Pbc => "pbc",
        }
    }
}

/// Where the transverse `X` field acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// `X_1 + X_N` only.
    BoundaryOnly,
    /// `Σ_i X_i`.
    Bulk,
}

/// Parameters of
/// `H = j1(1+α)·h1 + j2(1-α)·h2 - bx·h3 + bz·h2`.
///
/// `bx = +∞` selects the infinite-field limit: the ground space of `-h3`
/// resolved by the part of the remaining couplings that commutes with every
/// `h3` term (see [`build_cluster`]). In config files write it as `inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_sites: usize,
    pub boundary: Boundary,
    pub j1: f64,
    pub j2: f64,
    pub alpha: f64,
    #[serde(with = "float_or_inf")]
    pub bx: f64,
    #[serde(default)]
    pub bz: f64,
    pub x_field_mode: FieldMode,
}

pub(crate) mod float_or_inf {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" || t == "+inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

impl ModelParams {
    /// OBC, boundary-only field, `bz = 0`.
    pub fn new(n_sites: usize, j1: f64, j2: f64, alpha: f64, bx: f64) -> Self {
        ModelParams {
            n_sites,
            boundary: Boundary::Obc,
            j1,
            j2,
            alpha,
            bx,
            bz: 0.0,
            x_field_mode: FieldMode::BoundaryOnly,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_field_mode(mut self, mode: FieldMode) -> Self {
        self.x_field_mode = mode;
        self
    }

    pub fn with_bz(mut self, bz: f64) -> Self {
        self.bz = bz;
        self
    }

    pub fn is_field_limit(&self) -> bool {
        self.bx == f64::INFINITY
    }

    pub fn validate(&self) -> Result<()> {
        check_even(self.n_sites)?;
        for (name, j) in [("j1", self.j1), ("j2", self.j2)] {
            if j != 1.0 && j != -1.0 {
                return Err(Error::Parameter(format!("{name} must be +1 or -1, got {j}")));
            }
        }
        if !(-1.0..=1.0).contains(&self.alpha) {
            return Err(Error::Parameter(format!("alpha must lie in [-1, 1], got {}", self.alpha)));
        }
        if self.bx.is_nan() || self.bx < 0.0 {
            return Err(Error::Parameter(format!("bx must be nonnegative, got {}", self.bx)));
        }
        if !self.bz.is_finite() {
            return Err(Error::Parameter(format!("bz must be finite, got {}", self.bz)));
        }
        Ok(())
    }

    /// Coupling multiplying `h1`.
    pub fn c1(&self) -> f64 {
        self.j1 * (1.0 + self.alpha)
    }

    /// Coupling multiplying `h2` (the `bz` field is kept separate).
    pub fn c2(&self) -> f64 {
        self.j2 * (1.0 - self.alpha)
    }
}

fn check_even(n: usize) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Parameter(format!("chain length must be even and at least 4, got {n}")));
    }
    Ok(())
}

/// A Hamiltonian together with its three coordinate operators.
#[derive(Clone, Debug)]
pub struct ModelBundle {
    pub params: ModelParams,
    pub hamiltonian: OperatorSum,
    pub h1: OperatorSum,
    pub h2: OperatorSum,
    pub h3: OperatorSum,
    /// Normalization denominators of the three coordinates:
    /// `(N-2, N, 2)` for OBC and `(N, N, 2)` for PBC.
    pub norms: [f64; 3],
}

impl ModelBundle {
    /// Energy of the supporting plane at the point `x` (coordinates already
    /// divided by `norms`), i.e. `Σ_k coupling_k · norm_k · x_k`.
    /// Undefined in the infinite-field limit.
    pub fn plane_energy(&self, x: [f64; 3]) -> f64 {
        let p = &self.params;
        (p.c1() * self.norms[0] * x[0])
            + (p.c2() + p.bz) * self.norms[1] * x[1]
            - p.bx * self.norms[2] * x[2]
    }
}

fn xzx(n: usize, center: usize) -> Result<PauliString> {
    let (l, r) = ((center + n - 1) % n, (center + 1) % n);
    PauliString::real(n, [(l, Pauli::X), (center, Pauli::Z), (r, Pauli::X)], 1.0)
}

/// `Σ X_{i-1} Z_i X_{i+1}`: centers `1..N-1` for OBC, all `N` centers with
/// wraparound for PBC.
pub fn stabilizer_sum(n: usize, boundary: Boundary) -> Result<OperatorSum> {
    let centers: Vec<usize> = match boundary {
        Boundary::Obc => (1..n - 1).collect(),
        Boundary::Pbc => (1..n).chain([0]).collect(),
    };
    let terms = centers.into_iter().map(|c| xzx(n, c)).collect::<Result<_>>()?;
    OperatorSum::from_terms(n, terms)
}

fn field_sum(n: usize, axis: Pauli, sites: impl IntoIterator<Item = usize>) -> Result<OperatorSum> {
    let terms = sites
        .into_iter()
        .map(|s| PauliString::single(n, s, axis))
        .collect::<Result<_>>()?;
    OperatorSum::from_terms(n, terms)
}

/// Builds the Hamiltonian and its coordinate operators.
///
/// The Hamiltonian lists `c1·h1`, then `c2·h2`, then `-bx·h3`, then
/// `bz·h2` (only when `bz ≠ 0`), term by term.
///
/// For `bx = +∞` the Hamiltonian is `-K·h3 + H_∥`, where `H_∥` keeps the
/// terms of `c1·h1 + (c2+bz)·h2` that commute with every term of `h3` and
/// `K = 1 + Σ|coefficients of H_∥|`. Its ground space is the large-field
/// limit of the ground space of the finite-field model: terms that
/// anticommute with an `h3` term vanish when projected onto the fully
/// polarized sector.
pub fn build_cluster(params: &ModelParams) -> Result<ModelBundle> {
    params.validate()?;
    let n = params.n_sites;
    let h1 = stabilizer_sum(n, params.boundary)?;
    let h2 = field_sum(n, Pauli::Z, 0..n)?;
    let h3 = match params.x_field_mode {
        FieldMode::BoundaryOnly => field_sum(n, Pauli::X, [0, n - 1])?,
        FieldMode::Bulk => field_sum(n, Pauli::X, 0..n)?,
    };
    let norms = match params.boundary {
        Boundary::Obc => [(n - 2) as f64, n as f64, 2.0],
        Boundary::Pbc => [n as f64, n as f64, 2.0],
    };

    let mut hamiltonian = OperatorSum::zero(n);
    if params.is_field_limit() {
        let mut couplings = OperatorSum::zero(n);
        couplings.add_scaled(&h1, params.c1())?;
        couplings.add_scaled(&h2, params.c2() + params.bz)?;
        let mut weight = 1.0;
        for t in couplings.terms() {
            let mut keep = true;
            for x in h3.terms() {
                keep &= t.commutes(x)?;
            }
            if keep {
                weight += t.coeff().norm();
                hamiltonian.push(t.clone())?;
            }
        }
        hamiltonian.add_scaled(&h3, -weight)?;
    } else {
        hamiltonian.add_scaled(&h1, params.c1())?;
        hamiltonian.add_scaled(&h2, params.c2())?;
        hamiltonian.add_scaled(&h3, -params.bx)?;
        if params.bz != 0.0 {
            hamiltonian.add_scaled(&h2, params.bz)?;
        }
    }
    Ok(ModelBundle {
        params: *params,
        hamiltonian,
        h1,
        h2,
        h3,
        norms,
    })
}

/// `H_clu(Bz) = Σ_{OBC} X_{i-1} Z_i X_{i+1} + Bz Σ Z_i`.
pub fn cluster_hamiltonian(n: usize, bz: f64) -> Result<OperatorSum> {
    check_even(n)?;
    let mut h = stabilizer_sum(n, Boundary::Obc)?;
    h.add_scaled(&field_sum(n, Pauli::Z, 0..n)?, bz)?;
    Ok(h)
}

/// The XY form of an open chain.
///
/// `c1` multiplies `XX + ZZ` on the inter-cell bonds `(1,2), (3,4), …` and
/// `c2 + bz` on the intra-cell bonds `(0,1), (2,3), …`. A nonzero `bx`
/// contributes the image of `-bx·h3` under [`cz_chain_transform`].
pub fn build_xy(params: &ModelParams) -> Result<OperatorSum> {
    params.validate()?;
    if params.boundary == Boundary::Pbc {
        return Err(Error::UnsupportedMapping(
            "the XY form is defined for open chains only".into(),
        ));
    }
    if params.is_field_limit() {
        return Err(Error::UnsupportedMapping("no XY form for the infinite-field limit".into()));
    }
    let n = params.n_sites;
    let mut out = OperatorSum::zero(n);
    for left in 0..n - 1 {
        let c = if left % 2 == 0 { params.c2() + params.bz } else { params.c1() };
        for axis in [Pauli::X, Pauli::Z] {
            out.push(PauliString::real(n, [(left, axis), (left + 1, axis)], c)?)?;
        }
    }
    if params.bx != 0.0 {
        let h3 = match params.x_field_mode {
            FieldMode::BoundaryOnly => field_sum(n, Pauli::X, [0, n - 1])?,
            FieldMode::Bulk => field_sum(n, Pauli::X, 0..n)?,
        };
        out.add_scaled(&cz_chain_transform(&h3, n)?, -params.bx)?;
    }
    Ok(out)
}

/// Images of `X_k` and `Z_k` for every site under a Clifford map.
struct SiteImages {
    x: Vec<PauliString>,
    z: Vec<PauliString>,
}

impl SiteImages {
    fn conjugate(&self, op: &OperatorSum) -> Result<OperatorSum> {
        let n = op.n_sites();
        let mut out = OperatorSum::zero(n);
        for t in op.terms() {
            let mut img = PauliString::identity(n).with_coeff(t.coeff());
            for (&site, &p) in t.factors() {
                let f = match p {
                    Pauli::X => self.x[site].clone(),
                    Pauli::Z => self.z[site].clone(),
                    // Y = i·X·Z
                    Pauli::Y => self.x[site]
                        .multiply(&self.z[site])?
                        .scaled(Complex64::i()),
                };
                img = img.multiply(&f)?;
            }
            out.push(img)?;
        }
        Ok(out)
    }
}

fn chain_images(n: usize, inverse: bool) -> Result<SiteImages> {
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let s = |f: &[(usize, Pauli)]| PauliString::real(n, f.iter().copied(), 1.0);
    for a in (0..n).step_by(2) {
        let b = a + 1;
        if inverse {
            x.push(s(&[(a, Pauli::Z), (b, Pauli::X)])?);
            z.push(s(&[(a, Pauli::X)])?);
            x.push(s(&[(b, Pauli::X)])?);
            z.push(s(&[(a, Pauli::X), (b, Pauli::Z)])?);
        } else {
            x.push(s(&[(a, Pauli::Z)])?);
            z.push(s(&[(a, Pauli::X), (b, Pauli::X)])?);
            x.push(s(&[(b, Pauli::X)])?);
            z.push(s(&[(a, Pauli::Z), (b, Pauli::Z)])?);
        }
    }
    Ok(SiteImages { x, z })
}

fn check_transform_input(op: &OperatorSum, n: usize) -> Result<()> {
    if n % 2 != 0 || n == 0 {
        return Err(Error::Parameter(format!("the cell transform needs an even chain, got {n}")));
    }
    if op.n_sites() != n {
        return Err(Error::Dimension {
            expected: n,
            found: op.n_sites(),
        });
    }
    Ok(())
}

/// Conjugates `op` by the cell map followed by a Hadamard on sublattice A.
///
/// Within each cell `(A, B)` the cell map sends `X_A → X_A`,
/// `Z_A → Z_A X_B`, `X_B → X_B`, `Z_B → X_A Z_B`; the Hadamard then swaps
/// `X_A ↔ Z_A`. Combined images:
///
/// | in    | out       |
/// |-------|-----------|
/// | `X_A` | `Z_A`     |
/// | `Z_A` | `X_A X_B` |
/// | `X_B` | `X_B`     |
/// | `Z_B` | `Z_A Z_B` |
///
/// Products are mapped factor by factor, with `Y = iXZ`.
pub fn cz_chain_transform(op: &OperatorSum, n: usize) -> Result<OperatorSum> {
    check_transform_input(op, n)?;
    chain_images(n, false)?.conjugate(op)
}

/// Inverse of [`cz_chain_transform`]: Hadamard on A first, then the cell
/// map (both are involutions).
pub fn cz_chain_inverse(op: &OperatorSum, n: usize) -> Result<OperatorSum> {
    check_transform_input(op, n)?;
    chain_images(n, true)?.conjugate(op)
}

/// `O1 = Π Z` over sublattice A, `O2 = Π Z` over sublattice B, and the U(1)
/// generator `Σ_{A sites k} Y_k X_{k+1} - X_k Y_{k+1}`.
pub fn symmetry_generators(n: usize) -> Result<(PauliString, PauliString, OperatorSum)> {
    if n % 2 != 0 || n == 0 {
        return Err(Error::Parameter(format!("symmetry generators need an even chain, got {n}")));
    }
    let o1 = PauliString::real(n, (0..n).step_by(2).map(|k| (k, Pauli::Z)), 1.0)?;
    let o2 = PauliString::real(n, (1..n).step_by(2).map(|k| (k, Pauli::Z)), 1.0)?;
    let mut u1 = OperatorSum::zero(n);
    for k in (0..n).step_by(2) {
        u1.push(PauliString::real(n, [(k, Pauli::Y), (k + 1, Pauli::X)], 1.0)?)?;
        u1.push(PauliString::real(n, [(k, Pauli::X), (k + 1, Pauli::Y)], -1.0)?)?;
    }
    Ok((o1, o2, u1))
}

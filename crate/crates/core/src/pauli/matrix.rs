//! Realization of Pauli sums as matrices in the computational (Z) basis.
//!
//! Basis convention: site 0 is the most significant bit of the basis index,
//! so `|b_0 b_1 … b_{n-1}⟩` has index `Σ b_k 2^{n-1-k}`.

use num_complex::Complex64;

use super::{OperatorSum, PauliString};
use crate::error::{Error, Result};

pub const DENSE_LIMIT: usize = 14;
pub const SPARSE_LIMIT: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Dense,
    Sparse,
}

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        DenseMatrix { dim: n, data }
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// Compressed-sparse-row matrix. Entries within a row are sorted by column.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    pub dim: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<T>,
}

impl<T> CsrMatrix<T> {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, &T)> {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(&self.values[span])
    }
}

impl CsrMatrix<f64> {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }
}

impl CsrMatrix<Complex64> {
    /// Drops imaginary parts, failing if any exceeds `tol`.
    pub fn into_real(self, tol: f64) -> Result<CsrMatrix<f64>> {
        if let Some(v) = self.values.iter().find(|v| v.im.abs() > tol) {
            return Err(Error::NonHermitian(v.im));
        }
        Ok(CsrMatrix {
            dim: self.dim,
            indptr: self.indptr,
            indices: self.indices,
            values: self.values.into_iter().map(|v| v.re).collect(),
        })
    }
}

#[derive(Clone, Debug)]
pub enum Realized {
    Dense(DenseMatrix),
    Sparse(CsrMatrix<Complex64>),
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Precomputed action of one term: `P|b⟩ = phase · (-1)^{|b∧z|} |b⊕x⟩`.
#[derive(Clone, Copy)]
struct TermAction {
    x: usize,
    z: usize,
    phase: Complex64,
}

impl TermAction {
    fn of(p: &PauliString) -> Self {
        let (x, z, y) = p.masks();
        TermAction {
            x,
            z,
            phase: p.coeff() * i_pow(y),
        }
    }

    /// Matrix element in row `r`: column and value.
    #[inline]
    fn entry(&self, r: usize) -> (usize, Complex64) {
        let col = r ^ self.x;
        let sign = if (col & self.z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        (col, self.phase * sign)
    }
}

fn check_capacity(what: &'static str, n_sites: usize, limit: usize) -> Result<()> {
    if n_sites > limit {
        return Err(Error::Capacity {
            what,
            limit,
            n_sites,
        });
    }
    Ok(())
}

/// Realizes `op` as a `2^n × 2^n` matrix. Dense needs `n ≤ 14`, sparse
/// `n ≤ 24`. Assembly is row by row in term order, so repeated builds are
/// bit-identical.
pub fn realize(op: &OperatorSum, format: Format) -> Result<Realized> {
    match format {
        Format::Dense => dense(op).map(Realized::Dense),
        Format::Sparse => sparse(op).map(Realized::Sparse),
    }
}

pub(crate) fn dense(op: &OperatorSum) -> Result<DenseMatrix> {
    let n = op.n_sites();
    check_capacity("dense realization", n, DENSE_LIMIT)?;
    let dim = 1usize << n;
    let actions: Vec<_> = op.terms().iter().map(TermAction::of).collect();
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for a in &actions {
            let (c, v) = a.entry(r);
            data[r * dim + c] += v;
        }
    }
    Ok(DenseMatrix { dim, data })
}

pub(crate) fn sparse(op: &OperatorSum) -> Result<CsrMatrix<Complex64>> {
    let n = op.n_sites();
    check_capacity("sparse realization", n, SPARSE_LIMIT)?;
    let dim = 1usize << n;
    let actions: Vec<_> = op.terms().iter().map(TermAction::of).collect();
    let mut indptr = Vec::with_capacity(dim + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut row: Vec<(usize, Complex64)> = Vec::with_capacity(actions.len());
    indptr.push(0);
    for r in 0..dim {
        row.clear();
        row.extend(actions.iter().map(|a| a.entry(r)));
        row.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < row.len() {
            let col = row[k].0;
            let mut v = Complex64::new(0.0, 0.0);
            while k < row.len() && row[k].0 == col {
                v += row[k].1;
                k += 1;
            }
            if v != Complex64::new(0.0, 0.0) {
                indices.push(col);
                values.push(v);
            }
        }
        indptr.push(indices.len());
    }
    Ok(CsrMatrix {
        dim,
        indptr,
        indices,
        values,
    })
}

/// Largest-magnitude matrix entry of `[a, b]`.
///
/// The commutator is formed symbolically, merged, and its entries evaluated
/// row by row, so no `2^n × 2^n` buffer is allocated. Limited to the dense
/// capacity (`n ≤ 14`).
pub fn commutator_norm(a: &OperatorSum, b: &OperatorSum) -> Result<f64> {
    if a.n_sites() != b.n_sites() {
        return Err(Error::Dimension {
            expected: a.n_sites(),
            found: b.n_sites(),
        });
    }
    check_capacity("commutator_norm", a.n_sites(), DENSE_LIMIT)?;
    let comm = a.commutator(b)?.canonical(0.0);
    if comm.is_empty() {
        return Ok(0.0);
    }
    let dim = 1usize << a.n_sites();
    // Terms sharing an x-mask land in the same column of a given row.
    let mut actions: Vec<_> = comm.terms().iter().map(TermAction::of).collect();
    actions.sort_by_key(|t| t.x);
    let groups: Vec<&[TermAction]> = actions.chunk_by(|p, q| p.x == q.x).collect();
    let mut worst = 0.0f64;
    for r in 0..dim {
        for g in &groups {
            let v: Complex64 = g.iter().map(|a| a.entry(r).1).sum();
            worst = worst.max(v.norm());
        }
    }
    Ok(worst)
}

/// `⟨ψ|op|ψ⟩` for a real state vector, evaluated term by term.
pub(crate) fn expectation_real(state: &[f64], op: &OperatorSum) -> Result<Complex64> {
    let dim = 1usize << op.n_sites();
    if state.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: state.len(),
        });
    }
    let mut total = Complex64::new(0.0, 0.0);
    for t in op.terms() {
        let a = TermAction::of(t);
        let mut acc = 0.0;
        for (r, &psi_r) in state.iter().enumerate() {
            if psi_r == 0.0 {
                continue;
            }
            let col = r ^ a.x;
            let sign = if (col & a.z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += psi_r * sign * state[col];
        }
        total += a.phase * acc;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli::{self, *};

    fn pauli_matrix(p: Option<Pauli>) -> [[Complex64; 2]; 2] {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match p {
            None => [[o, z], [z, o]],
            Some(X) => [[z, o], [o, z]],
            Some(Y) => [[z, -i], [i, z]],
            Some(Z) => [[o, z], [z, -o]],
        }
    }

    /// Independent oracle: explicit Kronecker product, site 0 leftmost.
    fn kron_oracle(p: &PauliString) -> DenseMatrix {
        let mut m = DenseMatrix {
            dim: 1,
            data: vec![p.coeff()],
        };
        for site in 0..p.n_sites() {
            let f = pauli_matrix(p.get(site));
            let d = m.dim * 2;
            let mut data = vec![Complex64::new(0.0, 0.0); d * d];
            for i in 0..m.dim {
                for j in 0..m.dim {
                    for a in 0..2 {
                        for b in 0..2 {
                            data[(2 * i + a) * d + 2 * j + b] = m.get(i, j) * f[a][b];
                        }
                    }
                }
            }
            m = DenseMatrix { dim: d, data };
        }
        m
    }

    #[test]
    fn z_on_one_site() {
        let z = OperatorSum::from(PauliString::single(1, 0, Z).unwrap());
        let m = dense(&z).unwrap();
        assert_eq!(m.get(0, 0).re, 1.0);
        assert_eq!(m.get(1, 1).re, -1.0);
        assert_eq!(m.get(0, 1).norm(), 0.0);
    }

    #[test]
    fn xzx_matches_kronecker() {
        let p = PauliString::real(3, [(0, X), (1, Z), (2, X)], 1.0).unwrap();
        let m = dense(&OperatorSum::from(p.clone())).unwrap();
        let oracle = kron_oracle(&p);
        assert_eq!(m.max_abs_diff(&oracle), 0.0);
        assert!(m.data.iter().all(|v| v.norm() == 0.0 || (v.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn product_matches_matrix_product_at_three_sites() {
        let a = PauliString::real(3, [(0, X), (1, Z), (2, X)], 1.0).unwrap();
        let b = PauliString::real(3, [(0, Z), (2, Z)], 1.0).unwrap();
        let ab = a.multiply(&b).unwrap();
        let lhs = kron_oracle(&ab);
        let rhs = kron_oracle(&a).matmul(&kron_oracle(&b));
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
    }

    #[test]
    fn sparse_and_dense_agree() {
        let op = OperatorSum::parse("1 * X0 Z1 X2\n0.5 * Z1\n(0,1) * Y0 X3\n(0,-1) * X3 Y0\n-2 * Y1 Y2", 4)
            .unwrap();
        let d = dense(&op).unwrap();
        let s = sparse(&op).unwrap();
        for r in 0..d.dim {
            let mut row = vec![Complex64::new(0.0, 0.0); d.dim];
            for (c, v) in s.row(r) {
                row[c] = *v;
            }
            for c in 0..d.dim {
                assert_eq!(row[c], d.get(r, c));
            }
        }
        // Deterministic assembly.
        assert_eq!(sparse(&op).unwrap(), s);
    }

    #[test]
    fn capacity_limits() {
        let big = OperatorSum::from(PauliString::single(15, 0, Z).unwrap());
        assert!(matches!(dense(&big), Err(Error::Capacity { .. })));
        assert!(matches!(commutator_norm(&big, &big), Err(Error::Capacity { .. })));
        let huge = OperatorSum::from(PauliString::single(25, 0, Z).unwrap());
        assert!(matches!(sparse(&huge), Err(Error::Capacity { .. })));
    }

    #[test]
    fn commutator_norm_matches_dense_oracle() {
        let a = OperatorSum::parse("1 * Z2", 4).unwrap();
        let b = OperatorSum::parse("1 * X1 Z2 X3\n0.3 * X2\n-0.7 * Y2 Z3", 4).unwrap();
        let (da, db) = (dense(&a).unwrap(), dense(&b).unwrap());
        let ab = da.matmul(&db);
        let ba = db.matmul(&da);
        let oracle = ab
            .data
            .iter()
            .zip(&ba.data)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        let got = commutator_norm(&a, &b).unwrap();
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
        assert!(oracle > 0.5);
        assert_eq!(commutator_norm(&OperatorSum::zero(4), &b).unwrap(), 0.0);
    }

    #[test]
    fn expectation_of_plus_state() {
        let n = 3;
        let amp = (1.0 / 8f64).sqrt();
        let plus = vec![amp; 8];
        let sx = OperatorSum::parse("1 * X0\n1 * X1\n1 * X2", n).unwrap();
        let e = expectation_real(&plus, &sx).unwrap();
        assert!((e.re - 3.0).abs() < 1e-14 && e.im.abs() < 1e-14);
    }
}

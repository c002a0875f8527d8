//! Thin wrappers over faer for the dense kernels used by the solvers.
//! Matrices cross this boundary as row-major `Vec<f64>`.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Eigen-decomposition of a real symmetric `n × n` matrix.
/// Returns ascending eigenvalues and the eigenvectors as rows.
pub fn eigh(n: usize, a: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    debug_assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i * n + j]);
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Convergence {
            what: "dense eigensolver",
            iterations: 0,
            residual: f64::NAN,
        })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let values = order.iter().map(|&k| s[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| u[(i, k)]).collect())
        .collect();
    Ok((values, vectors))
}

/// Thin SVD of a row-major `m × n` matrix: `(U (m×r), S (r), Vt (r×n))`
/// with `r = min(m, n)` and singular values descending.
pub struct Svd {
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    pub vt: Vec<f64>,
    pub rank: usize,
}

pub fn svd(m: usize, n: usize, a: &[f64]) -> Result<Svd> {
    debug_assert_eq!(a.len(), m * n);
    let mat = Mat::<f64>::from_fn(m, n, |i, j| a[i * n + j]);
    let dec = mat.thin_svd().map_err(|_| Error::Convergence {
        what: "svd",
        iterations: 0,
        residual: f64::NAN,
    })?;
    let r = m.min(n);
    let s = dec.S().column_vector();
    let (u, v) = (dec.U(), dec.V());
    let mut order: Vec<usize> = (0..r).collect();
    // Stable sort keeps the solver's order among equal singular values.
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let mut uo = vec![0.0; m * r];
    let mut vt = vec![0.0; r * n];
    for (col, &k) in order.iter().enumerate() {
        for i in 0..m {
            uo[i * r + col] = u[(i, k)];
        }
        for j in 0..n {
            vt[col * n + j] = v[(j, k)];
        }
    }
    Ok(Svd {
        u: uo,
        s: order.iter().map(|&k| s[k]).collect(),
        vt,
        rank: r,
    })
}

/// Thin QR of a row-major `m × n` matrix: `(Q (m×r), R (r×n))`, `r = min(m, n)`.
pub fn qr(m: usize, n: usize, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mat = Mat::<f64>::from_fn(m, n, |i, j| a[i * n + j]);
    let dec = mat.qr();
    let q = dec.compute_thin_Q();
    let r_full = dec.thin_R();
    let r = m.min(n);
    let mut qo = vec![0.0; m * r];
    let mut ro = vec![0.0; r * n];
    for i in 0..m {
        for k in 0..r {
            qo[i * r + k] = q[(i, k)];
        }
    }
    for k in 0..r {
        for j in 0..n {
            ro[k * n + j] = if j >= k { r_full[(k, j)] } else { 0.0 };
        }
    }
    (qo, ro)
}

/// Row-major product `(m × k) · (k × n)`.
pub fn matmul(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut c = vec![0.0; m * n];
    if m * k * n > 32 * 32 * 32 {
        let am = faer::MatRef::from_row_major_slice(a, m, k);
        let bm = faer::MatRef::from_row_major_slice(b, k, n);
        let cm = faer::MatMut::from_row_major_slice_mut(&mut c, m, n);
        faer::linalg::matmul::matmul(cm, faer::Accum::Replace, am, bm, 1.0, faer::Par::Seq);
        return c;
    }
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_of_pauli_x() {
        let (w, v) = eigh(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
        assert!((v[0][0] + v[0][1]).abs() < 1e-14);
    }

    #[test]
    fn svd_reconstructs() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.5];
        let d = svd(2, 3, &a).unwrap();
        assert!(d.s[0] >= d.s[1]);
        for i in 0..2 {
            for j in 0..3 {
                let v: f64 = (0..2).map(|k| d.u[i * 2 + k] * d.s[k] * d.vt[k * 3 + j]).sum();
                assert!((v - a[i * 3 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qr_reconstructs() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.5];
        let (q, r) = qr(3, 2, &a);
        let back = matmul(3, 2, 2, &q, &r);
        for (x, y) in back.iter().zip(&a) {
            assert!((x - y).abs() < 1e-12);
        }
        let big: Vec<f64> = (0..40 * 50).map(|i| (i as f64 * 0.37).sin()).collect();
        let b2: Vec<f64> = (0..50 * 45).map(|i| (i as f64 * 0.11).cos()).collect();
        let fast = matmul(40, 50, 45, &big, &b2);
        let i = 7;
        let j = 13;
        let want: f64 = (0..50).map(|p| big[i * 50 + p] * b2[p * 45 + j]).sum();
        assert!((fast[i * 45 + j] - want).abs() < 1e-12);
    }
}

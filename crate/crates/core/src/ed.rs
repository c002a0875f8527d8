//! Exact ground spaces of real Hamiltonians and expectation geometry over
//! them.
//!
//! All in-scope Hamiltonians are built from `X` and `Z` only, so their
//! matrices are real symmetric and eigenvectors are kept as real vectors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::pauli::{self, CsrMatrix, OperatorSum};

/// Largest chain handled by the dense path.
pub const DENSE_MAX_SITES: usize = 12;
/// Largest chain handled by Lanczos.
pub const LANCZOS_MAX_SITES: usize = 20;
/// Largest number of requested levels.
pub const MAX_LEVELS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Dense up to [`EdOptions::dense_below`] sites, Lanczos above.
    Auto,
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdOptions {
    /// Number of lowest levels to return.
    pub k: usize,
    /// Levels with `E - E0 ≤ deg_tol` form the ground multiplet.
    pub deg_tol: f64,
    pub solver: Solver,
    /// `Auto` picks the dense path for chains of at most this many sites.
    pub dense_below: usize,
    /// Seed of the Lanczos start vectors.
    pub seed: u64,
    /// Target eigen-residual `‖Hv - Ev‖` of each returned pair.
    pub residual_tol: f64,
    /// Krylov dimension between restarts.
    pub krylov_dim: usize,
    pub max_restarts: usize,
}

impl Default for EdOptions {
    fn default() -> Self {
        EdOptions {
            k: 6,
            deg_tol: 1e-8,
            solver: Solver::Auto,
            dense_below: 10,
            seed: 0x5eed,
            residual_tol: 1e-10,
            krylov_dim: 120,
            max_restarts: 60,
        }
    }
}

/// The lowest levels of a Hamiltonian and its ground multiplet.
#[derive(Clone, Debug)]
pub struct GroundSpace {
    /// The lowest levels, ascending.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors matching `energies`.
    pub vectors: Vec<Vec<f64>>,
    /// Size of the ground multiplet (`E - E0 ≤ degeneracy_tol`).
    pub degeneracy: usize,
    pub degeneracy_tol: f64,
    /// Distance from `E0` to the first level above the multiplet; NaN when
    /// the multiplet exhausts the Hilbert space.
    pub gap_above: f64,
    /// Largest eigen-residual among the returned pairs.
    pub max_residual: f64,
}

impl GroundSpace {
    pub fn e0(&self) -> f64 {
        self.energies[0]
    }

    /// The ground multiplet.
    pub fn ground_vectors(&self) -> &[Vec<f64>] {
        &self.vectors[..self.degeneracy]
    }

    fn from_levels(energies: Vec<f64>, vectors: Vec<Vec<f64>>, deg_tol: f64, max_residual: f64) -> Self {
        let e0 = energies[0];
        let degeneracy = energies.iter().take_while(|&&e| e - e0 <= deg_tol).count();
        let gap_above = energies.get(degeneracy).map_or(f64::NAN, |e| e - e0);
        GroundSpace {
            energies,
            vectors,
            degeneracy,
            degeneracy_tol: deg_tol,
            gap_above,
            max_residual,
        }
    }
}

/// Range of an observable over the states supported on a subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentExtent {
    pub min_val: f64,
    pub max_val: f64,
    pub operator_label: String,
}

impl SegmentExtent {
    pub fn width(&self) -> f64 {
        self.max_val - self.min_val
    }
}

/// Real symmetric CSR matrix of a Hamiltonian with real matrix elements.
pub fn real_matrix(h: &OperatorSum) -> Result<CsrMatrix<f64>> {
    if !h.is_real_matrix() {
        return Err(Error::Parameter(
            "exact diagonalization needs a Hamiltonian with real matrix elements".into(),
        ));
    }
    pauli::sparse_matrix(h)?.into_real(0.0)
}

/// Every eigenvalue of `h`, ascending (dense path only).
pub fn full_spectrum(h: &OperatorSum) -> Result<Vec<f64>> {
    let n = h.n_sites();
    if n > DENSE_MAX_SITES {
        return Err(Error::Capacity {
            what: "dense diagonalization",
            limit: DENSE_MAX_SITES,
            n_sites: n,
        });
    }
    let m = real_matrix(h)?;
    Ok(dense_lowest(&m, m.dim)?.0)
}

/// The `k` lowest eigenpairs of `h`, with default solver options.
pub fn ground_space(h: &OperatorSum, k: usize, deg_tol: f64) -> Result<GroundSpace> {
    ground_space_with(
        h,
        &EdOptions {
            k,
            deg_tol,
            ..EdOptions::default()
        },
    )
}

pub fn ground_space_with(h: &OperatorSum, opts: &EdOptions) -> Result<GroundSpace> {
    let n = h.n_sites();
    if opts.k == 0 || opts.k > MAX_LEVELS {
        return Err(Error::Parameter(format!("k must be in 1..={MAX_LEVELS}, got {}", opts.k)));
    }
    if !(opts.deg_tol >= 0.0) {
        return Err(Error::Parameter(format!("deg_tol must be nonnegative, got {}", opts.deg_tol)));
    }
    let dense = match opts.solver {
        Solver::Dense => true,
        Solver::Lanczos => false,
        Solver::Auto => n <= opts.dense_below.min(DENSE_MAX_SITES),
    };
    if dense && n > DENSE_MAX_SITES {
        return Err(Error::Capacity {
            what: "dense diagonalization",
            limit: DENSE_MAX_SITES,
            n_sites: n,
        });
    }
    if n > LANCZOS_MAX_SITES {
        return Err(Error::Capacity {
            what: "Lanczos diagonalization",
            limit: LANCZOS_MAX_SITES,
            n_sites: n,
        });
    }
    let m = real_matrix(h)?;
    let dim = m.dim;
    let mut k = opts.k.min(dim);
    loop {
        let (energies, vectors) = if dense {
            dense_lowest(&m, k)?
        } else {
            lanczos_lowest(&m, k, opts)?
        };
        let residual = max_residual(&m, &energies, &vectors);
        let gs = GroundSpace::from_levels(energies, vectors, opts.deg_tol, residual);
        // A multiplet filling every requested level leaves the gap unknown;
        // widen the window until a level above it is seen.
        if gs.degeneracy < k || k == dim {
            return Ok(gs);
        }
        k = (2 * k).min(dim);
    }
}

fn dense_lowest(m: &CsrMatrix<f64>, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dim = m.dim;
    let mut a = vec![0.0; dim * dim];
    for r in 0..dim {
        for (c, v) in m.row(r) {
            a[r * dim + c] = *v;
        }
    }
    let (w, v) = linalg::eigh(dim, &a)?;
    Ok((w[..k].to_vec(), v.into_iter().take(k).collect()))
}

fn max_residual(m: &CsrMatrix<f64>, energies: &[f64], vectors: &[Vec<f64>]) -> f64 {
    let mut hv = vec![0.0; m.dim];
    let mut worst = 0.0f64;
    for (e, v) in energies.iter().zip(vectors) {
        m.matvec(v, &mut hv);
        let r: f64 = hv.iter().zip(v).map(|(a, b)| (a - e * b).powi(2)).sum();
        worst = worst.max(r.sqrt());
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let nrm = dot(v, v).sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

/// Classical Gram-Schmidt against `locked` and `basis`, repeated once when
/// the first pass cancels most of the norm.
fn reorthogonalize(v: &mut [f64], locked: &[Vec<f64>], basis: &[Vec<f64>]) {
    for pass in 0..2 {
        let before = dot(v, v);
        for b in locked.iter().chain(basis) {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
        if pass == 0 && dot(v, v) > 0.5 * before {
            break;
        }
    }
}

/// Two passes of classical Gram-Schmidt against `basis`.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
}

enum Run {
    /// Ritz pairs that met the residual target, ascending.
    Converged(Vec<(f64, Vec<f64>)>),
    /// Nothing converged; the lowest Ritz vector, for a restart.
    Restart(Vec<f64>, f64),
    /// The lowest level of the complement is safely above `floor`.
    NothingBelow,
}

/// One Lanczos run with full reorthogonalization in the orthogonal
/// complement of `locked`, aiming at the `want` lowest Ritz pairs. With a
/// `floor`, the run stops early once the lowest Ritz value is seen to stay
/// above it.
fn krylov_run(
    m: &CsrMatrix<f64>,
    locked: &[Vec<f64>],
    mut q0: Vec<f64>,
    want: usize,
    floor: Option<f64>,
    opts: &EdOptions,
    matvecs: &mut usize,
) -> Result<Run> {
    let dim = m.dim;
    let kdim = opts.krylov_dim.min(dim - locked.len()).max(1);
    orthogonalize(&mut q0, locked);
    if normalize(&mut q0) == 0.0 {
        return Err(Error::Convergence {
            what: "Lanczos start vector",
            iterations: *matvecs,
            residual: f64::NAN,
        });
    }
    let mut basis = vec![q0];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    loop {
        let j = basis.len() - 1;
        m.matvec(&basis[j], &mut w);
        *matvecs += 1;
        let a = dot(&basis[j], &w);
        alpha.push(a);
        reorthogonalize(&mut w, locked, &basis);
        let b = dot(&w, &w).sqrt();
        let size = alpha.len();
        let exhausted = b <= 1e-12 * (1.0 + a.abs()) || size == kdim;
        if size % 10 == 0 || exhausted {
            let mut t = vec![0.0; size * size];
            for i in 0..size {
                t[i * size + i] = alpha[i];
                if i + 1 < size {
                    t[i * size + i + 1] = beta[i];
                    t[(i + 1) * size + i] = beta[i];
                }
            }
            let (theta, s) = linalg::eigh(size, &t)?;
            if let Some(floor) = floor {
                let est = b * s[0][size - 1].abs();
                if est < 1e-6 && theta[0] - est > floor {
                    return Ok(Run::NothingBelow);
                }
            }
            let count = want.min(size);
            let settled = (0..count).all(|i| b * s[i][size - 1].abs() < 0.1 * opts.residual_tol);
            if settled || exhausted {
                return Ok(ritz_pairs(m, locked, &basis, &theta[..count], &s[..count], opts));
            }
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(std::mem::replace(&mut w, vec![0.0; dim]));
    }
}

fn ritz_pairs(
    m: &CsrMatrix<f64>,
    locked: &[Vec<f64>],
    basis: &[Vec<f64>],
    theta: &[f64],
    coeffs: &[Vec<f64>],
    opts: &EdOptions,
) -> Run {
    let dim = m.dim;
    let mut hx = vec![0.0; dim];
    let mut accepted = Vec::new();
    let mut fallback = None;
    for (_, y) in theta.iter().zip(coeffs) {
        let mut x = vec![0.0; dim];
        for (c, q) in y.iter().zip(basis) {
            axpy(*c, q, &mut x);
        }
        orthogonalize(&mut x, locked);
        normalize(&mut x);
        m.matvec(&x, &mut hx);
        let rq = dot(&x, &hx);
        axpy(-rq, &x, &mut hx);
        orthogonalize(&mut hx, locked);
        let residual = dot(&hx, &hx).sqrt();
        if residual <= opts.residual_tol {
            accepted.push((rq, x));
        } else if fallback.is_none() {
            fallback = Some((x, residual));
        }
    }
    match (accepted.is_empty(), fallback) {
        (true, Some((x, r))) => Run::Restart(x, r),
        _ => Run::Converged(accepted),
    }
}

/// The `k` lowest eigenpairs by deflated, restarted Lanczos.
///
/// A single Krylov space holds only one copy of each degenerate level, so
/// converged pairs are locked and the search continues in their orthogonal
/// complement until a run finds nothing below the current `k`-th level.
fn lanczos_lowest(m: &CsrMatrix<f64>, k: usize, opts: &EdOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dim = m.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut restart: Option<Vec<f64>> = None;
    let mut matvecs = 0;
    let mut last_residual = f64::INFINITY;
    let mut finished = false;
    for _ in 0..=opts.max_restarts {
        if locked.len() == dim {
            finished = true;
            break;
        }
        let start = restart
            .take()
            .unwrap_or_else(|| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect());
        let verifying = locked.len() >= k;
        let want = if verifying { 1 } else { k - locked.len() };
        let kth = {
            let mut v = values.clone();
            v.sort_by(f64::total_cmp);
            v.get(k.saturating_sub(1)).copied()
        };
        let floor = kth
            .filter(|_| verifying)
            .map(|e| e - 1e-10 * e.abs().max(1.0));
        match krylov_run(m, &locked, start, want, floor, opts, &mut matvecs)? {
            Run::NothingBelow => {
                finished = true;
                break;
            }
            Run::Restart(x, r) => {
                last_residual = r;
                restart = Some(x);
            }
            Run::Converged(pairs) => {
                let nothing_below = match floor {
                    Some(f) => pairs.iter().all(|(e, _)| *e >= f),
                    None => false,
                };
                for (e, x) in pairs {
                    values.push(e);
                    locked.push(x);
                }
                if nothing_below {
                    finished = true;
                    break;
                }
            }
        }
    }
    if !finished {
        return Err(Error::Convergence {
            what: "Lanczos",
            iterations: matvecs,
            residual: last_residual,
        });
    }
    // Rayleigh-Ritz over the locked vectors sorts the levels and resolves
    // mixing inside near-degenerate multiplets.
    let l = locked.len();
    let mut hv = vec![0.0; dim];
    let mut proj = vec![0.0; l * l];
    for j in 0..l {
        m.matvec(&locked[j], &mut hv);
        for i in 0..l {
            proj[i * l + j] = dot(&locked[i], &hv);
        }
    }
    for i in 0..l {
        for j in 0..i {
            let s = 0.5 * (proj[i * l + j] + proj[j * l + i]);
            proj[i * l + j] = s;
            proj[j * l + i] = s;
        }
    }
    let (w, c) = linalg::eigh(l, &proj)?;
    let keep = k.min(l);
    let vectors = c
        .iter()
        .take(keep)
        .map(|ci| {
            let mut v = vec![0.0; dim];
            for (a, x) in ci.iter().zip(&locked) {
                axpy(*a, x, &mut v);
            }
            normalize(&mut v);
            v
        })
        .collect();
    Ok((w[..keep].to_vec(), vectors))
}

/// `⟨ψ|op|ψ⟩` for a normalized real state. Fails if the imaginary part
/// exceeds `1e-10` (the operator is then not Hermitian).
pub fn expectation(state: &[f64], op: &OperatorSum) -> Result<f64> {
    let norm2 = dot(state, state);
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::Parameter(format!("state norm² is {norm2}, expected 1")));
    }
    let v = pauli::expectation_real(state, op)?;
    if v.im.abs() > 1e-10 {
        return Err(Error::NonHermitian(v.im));
    }
    Ok(v.re)
}

/// Range of `⟨op⟩` over density matrices supported on the ground multiplet:
/// the extreme eigenvalues of the compressed matrix `⟨v_a|op|v_b⟩`.
pub fn subspace_extent(gs: &GroundSpace, op: &OperatorSum, label: &str) -> Result<SegmentExtent> {
    extent_over(gs.ground_vectors(), op, label)
}

/// [`subspace_extent`] for an explicit orthonormal basis.
pub fn extent_over(basis: &[Vec<f64>], op: &OperatorSum, label: &str) -> Result<SegmentExtent> {
    let d = basis.len();
    if d == 0 {
        return Err(Error::Parameter("empty subspace".into()));
    }
    let dim = 1usize << op.n_sites();
    if let Some(v) = basis.iter().find(|v| v.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: v.len(),
        });
    }
    // op·v_b column by column; complex entries arise only from odd-Y terms.
    let opm = pauli::sparse_matrix(op)?;
    let mut re = vec![0.0; d * d];
    let mut im = vec![0.0; d * d];
    let mut col_re = vec![0.0; dim];
    let mut col_im = vec![0.0; dim];
    for b in 0..d {
        for r in 0..dim {
            let (mut sr, mut si) = (0.0, 0.0);
            for (c, v) in opm.row(r) {
                sr += v.re * basis[b][c];
                si += v.im * basis[b][c];
            }
            col_re[r] = sr;
            col_im[r] = si;
        }
        for a in 0..d {
            re[a * d + b] = dot(&basis[a], &col_re);
            im[a * d + b] = dot(&basis[a], &col_im);
        }
    }
    let mut defect = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            defect = defect.max((re[a * d + b] - re[b * d + a]).abs());
            defect = defect.max((im[a * d + b] + im[b * d + a]).abs());
        }
    }
    if defect > 1e-10 {
        return Err(Error::NonHermitian(defect));
    }
    let (lo, hi) = if im.iter().all(|x| *x == 0.0) {
        let (w, _) = linalg::eigh(d, &re)?;
        (w[0], w[d - 1])
    } else {
        // A Hermitian A + iB has the spectrum of [[A, -B], [B, A]], each
        // eigenvalue doubled.
        let e = 2 * d;
        let mut big = vec![0.0; e * e];
        for a in 0..d {
            for b in 0..d {
                let (x, y) = (re[a * d + b], im[a * d + b]);
                big[a * e + b] = x;
                big[(a + d) * e + b + d] = x;
                big[a * e + b + d] = -y;
                big[(a + d) * e + b] = y;
            }
        }
        let (w, _) = linalg::eigh(e, &big)?;
        (w[0], w[e - 1])
    };
    Ok(SegmentExtent {
        min_val: lo,
        max_val: hi.max(lo),
        operator_label: label.to_string(),
    })
}

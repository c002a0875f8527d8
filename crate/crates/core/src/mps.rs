//! Real matrix-product states with a movable orthogonality center.
//!
//! Site tensors have shape `(left bond, 2, right bond)` and are stored
//! row-major, index `(l·2 + s)·dr + r`. The physical index follows the
//! dense convention (`0 = |↑_z⟩`), and multi-site blocks order their
//! physical indices with the leftmost site most significant.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::pauli::{OperatorSum, Pauli, PauliString};

#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    pub dl: usize,
    pub dr: usize,
    pub data: Vec<f64>,
}

impl SiteTensor {
    fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// `T'(l, t, r) = Σ_s m[t][s] T(l, s, r)`.
    fn apply_local(&mut self, m: &[[f64; 2]; 2]) {
        let dr = self.dr;
        for l in 0..self.dl {
            let base = l * 2 * dr;
            for r in 0..dr {
                let a = self.data[base + r];
                let b = self.data[base + dr + r];
                self.data[base + r] = m[0][0] * a + m[0][1] * b;
                self.data[base + dr + r] = m[1][0] * a + m[1][1] * b;
            }
        }
    }
}

/// Which end of a multi-site window keeps the orthogonality center.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    /// Center ends at the rightmost site of the window.
    Right,
    /// Center ends at the leftmost site of the window.
    Left,
}

/// An 8×8 real gate on three consecutive sites, row-major.
pub type Gate3 = [f64; 64];
/// A 4×4 real gate on two consecutive sites, row-major.
pub type Gate2 = [f64; 16];

pub fn identity_gate3() -> Gate3 {
    let mut g = [0.0; 64];
    for i in 0..8 {
        g[i * 9] = 1.0;
    }
    g
}

#[derive(Clone, Debug)]
pub struct Mps {
    tensors: Vec<SiteTensor>,
    center: Option<usize>,
    max_bond: usize,
    cutoff: f64,
}

/// Default relative singular-value cutoff.
pub const DEFAULT_CUTOFF: f64 = 1e-14;

impl Mps {
    /// Product state from per-site amplitudes `(⟨0|φ_k⟩, ⟨1|φ_k⟩)`.
    pub fn product(local: &[[f64; 2]], max_bond: usize) -> Result<Mps> {
        if local.is_empty() {
            return Err(Error::Parameter("an MPS needs at least one site".into()));
        }
        let tensors = local
            .iter()
            .map(|amp| SiteTensor {
                dl: 1,
                dr: 1,
                data: amp.to_vec(),
            })
            .collect();
        let mut m = Mps {
            tensors,
            center: None,
            max_bond: max_bond.max(1),
            cutoff: DEFAULT_CUTOFF,
        };
        m.canonicalize(0);
        m.normalize()?;
        Ok(m)
    }

    /// `|+⟩^⊗n`.
    pub fn plus_state(n: usize, max_bond: usize) -> Result<Mps> {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::product(&vec![[a, a]; n], max_bond)
    }

    /// Gaussian random tensors with the largest bonds allowed by `max_bond`,
    /// brought to canonical form with center 0.
    pub fn random(n: usize, max_bond: usize, seed: u64) -> Result<Mps> {
        if n == 0 || max_bond == 0 {
            return Err(Error::Parameter("random MPS needs n ≥ 1 and max_bond ≥ 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bond = |i: usize| -> usize {
            let edge = i.min(n - i) as u32;
            if edge >= 20 {
                max_bond
            } else {
                max_bond.min(1usize << edge)
            }
        };
        let tensors = (0..n)
            .map(|i| {
                let (dl, dr) = (bond(i), bond(i + 1));
                SiteTensor {
                    dl,
                    dr,
                    data: (0..dl * 2 * dr).map(|_| StandardNormal.sample(&mut rng)).collect(),
                }
            })
            .collect();
        let mut m = Mps {
            tensors,
            center: None,
            max_bond,
            cutoff: DEFAULT_CUTOFF,
        };
        m.canonicalize(0);
        m.normalize()?;
        Ok(m)
    }

    pub fn from_tensors(tensors: Vec<SiteTensor>, max_bond: usize) -> Result<Mps> {
        if tensors.is_empty() {
            return Err(Error::Parameter("an MPS needs at least one site".into()));
        }
        let n = tensors.len();
        for (i, t) in tensors.iter().enumerate() {
            if t.data.len() != t.dl * 2 * t.dr {
                return Err(Error::Dimension {
                    expected: t.dl * 2 * t.dr,
                    found: t.data.len(),
                });
            }
            if i + 1 < n && t.dr != tensors[i + 1].dl {
                return Err(Error::Dimension {
                    expected: t.dr,
                    found: tensors[i + 1].dl,
                });
            }
        }
        if tensors[0].dl != 1 || tensors[n - 1].dr != 1 {
            return Err(Error::Parameter("boundary bonds must have dimension 1".into()));
        }
        Ok(Mps {
            tensors,
            center: None,
            max_bond,
            cutoff: DEFAULT_CUTOFF,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn max_bond(&self) -> usize {
        self.max_bond
    }

    pub fn set_max_bond(&mut self, d: usize) {
        self.max_bond = d.max(1);
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn set_cutoff(&mut self, cutoff: f64) {
        self.cutoff = cutoff;
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    pub fn tensors(&self) -> &[SiteTensor] {
        &self.tensors
    }

    /// Dimensions of the `n + 1` bonds, including the two trivial ends.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.tensors.iter().map(|t| t.dl).collect();
        b.push(self.tensors.last().map_or(1, |t| t.dr));
        b
    }

    /// Left-orthonormalizes sites `< c` and right-orthonormalizes sites
    /// `> c` from scratch.
    pub fn canonicalize(&mut self, c: usize) {
        let n = self.n_sites();
        for i in 0..c {
            self.qr_right(i);
        }
        for i in (c + 1..n).rev() {
            self.lq_left(i);
        }
        self.center = Some(c);
    }

    pub fn move_center_to(&mut self, target: usize) {
        match self.center {
            None => self.canonicalize(target),
            Some(c) if c < target => {
                for i in c..target {
                    self.qr_right(i);
                }
                self.center = Some(target);
            }
            Some(c) => {
                for i in (target + 1..=c).rev() {
                    self.lq_left(i);
                }
                self.center = Some(target);
            }
        }
    }

    /// Makes site `i` a left isometry, pushing the remainder into `i + 1`.
    fn qr_right(&mut self, i: usize) {
        let t = &self.tensors[i];
        let (dl, dr) = (t.dl, t.dr);
        let (q, r) = linalg::qr(dl * 2, dr, &t.data);
        let k = (dl * 2).min(dr);
        self.tensors[i] = SiteTensor { dl, dr: k, data: q };
        let next = &self.tensors[i + 1];
        let data = linalg::matmul(k, dr, 2 * next.dr, &r, &next.data);
        self.tensors[i + 1] = SiteTensor {
            dl: k,
            dr: next.dr,
            data,
        };
    }

    /// Makes site `i` a right isometry, pushing the remainder into `i - 1`.
    fn lq_left(&mut self, i: usize) {
        let t = &self.tensors[i];
        let (dl, dr) = (t.dl, t.dr);
        let cols = 2 * dr;
        // LQ of M (dl × cols) from QR of Mᵀ.
        let mt = transpose(dl, cols, &t.data);
        let (q, r) = linalg::qr(cols, dl, &mt);
        let k = cols.min(dl);
        self.tensors[i] = SiteTensor {
            dl: k,
            dr,
            data: transpose(cols, k, &q),
        };
        let prev = &self.tensors[i - 1];
        let rt = transpose(k, dl, &r);
        let data = linalg::matmul(prev.dl * 2, dl, k, &prev.data, &rt);
        self.tensors[i - 1] = SiteTensor {
            dl: prev.dl,
            dr: k,
            data,
        };
    }

    /// `⟨ψ|ψ⟩` by full contraction.
    pub fn norm_sqr(&self) -> f64 {
        match self.center {
            Some(c) => self.tensors[c].norm_sqr(),
            None => {
                let mut env = vec![1.0];
                for t in &self.tensors {
                    env = transfer(&env, t, None);
                }
                env[0]
            }
        }
    }

    pub fn normalize(&mut self) -> Result<f64> {
        if self.center.is_none() {
            self.canonicalize(0);
        }
        let c = self.center.unwrap_or(0);
        let nrm = self.tensors[c].norm_sqr().sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::Parameter(format!("cannot normalize an MPS of norm {nrm}")));
        }
        self.tensors[c].data.iter_mut().for_each(|x| *x /= nrm);
        Ok(nrm)
    }

    /// Applies a single-site operator without truncation. The canonical
    /// form is kept only when `m` is orthogonal or acts on the center.
    pub fn apply_single(&mut self, site: usize, m: &[[f64; 2]; 2]) {
        self.tensors[site].apply_local(m);
        if self.center != Some(site) {
            self.center = None;
        }
    }

    /// Merges sites `site..site+k` into `(dl, 2^k, dr)`.
    fn merge(&self, site: usize, k: usize) -> (usize, usize, Vec<f64>) {
        let first = &self.tensors[site];
        let dl = first.dl;
        let mut block = first.data.clone();
        let mut phys = 2;
        let mut dr = first.dr;
        for t in &self.tensors[site + 1..site + k] {
            block = linalg::matmul(dl * phys, dr, 2 * t.dr, &block, &t.data);
            phys *= 2;
            dr = t.dr;
        }
        (dl, dr, block)
    }

    fn check_window(&self, site: usize, k: usize) -> Result<()> {
        if site + k > self.n_sites() {
            return Err(Error::Parameter(format!(
                "{k}-site window at {site} exceeds a chain of {} sites",
                self.n_sites()
            )));
        }
        Ok(())
    }

    /// Applies an 8×8 gate to sites `site, site+1, site+2`, splitting back
    /// with two truncated SVDs. Returns the discarded weight (sum of the two
    /// splits' discarded squared singular values, relative to the norm).
    /// The state is renormalized afterwards.
    pub fn apply_three_site_gate(&mut self, gate: &Gate3, site: usize, sweep: Sweep) -> Result<f64> {
        self.check_window(site, 3)?;
        self.bring_center_into(site, site + 2);
        let (dl, dr, theta) = self.merge(site, 3);
        let theta = apply_block_gate(gate, 8, dl, dr, &theta);
        let d = self.max_bond;
        let mut discarded = 0.0;
        match sweep {
            Sweep::Right => {
                let s1 = split(&theta, dl * 2, 4 * dr, d, self.cutoff)?;
                discarded += s1.discarded;
                self.tensors[site] = SiteTensor {
                    dl,
                    dr: s1.k,
                    data: s1.left,
                };
                let mut rest = s1.right_weighted;
                normalize_vec(&mut rest);
                let s2 = split(&rest, s1.k * 2, 2 * dr, d, self.cutoff)?;
                discarded += s2.discarded;
                self.tensors[site + 1] = SiteTensor {
                    dl: s1.k,
                    dr: s2.k,
                    data: s2.left,
                };
                let mut last = s2.right_weighted;
                normalize_vec(&mut last);
                self.tensors[site + 2] = SiteTensor {
                    dl: s2.k,
                    dr,
                    data: last,
                };
                self.center = Some(site + 2);
            }
            Sweep::Left => {
                let s1 = split(&theta, dl * 4, 2 * dr, d, self.cutoff)?;
                discarded += s1.discarded;
                self.tensors[site + 2] = SiteTensor {
                    dl: s1.k,
                    dr,
                    data: s1.right,
                };
                let mut rest = s1.left_weighted;
                normalize_vec(&mut rest);
                let s2 = split(&rest, dl * 2, 2 * s1.k, d, self.cutoff)?;
                discarded += s2.discarded;
                self.tensors[site + 1] = SiteTensor {
                    dl: s2.k,
                    dr: s1.k,
                    data: s2.right,
                };
                let mut first = s2.left_weighted;
                normalize_vec(&mut first);
                self.tensors[site] = SiteTensor {
                    dl,
                    dr: s2.k,
                    data: first,
                };
                self.center = Some(site);
            }
        }
        Ok(discarded)
    }

    /// Applies a 4×4 gate to sites `site, site+1`; see
    /// [`Mps::apply_three_site_gate`].
    pub fn apply_two_site_gate(&mut self, gate: &Gate2, site: usize, sweep: Sweep) -> Result<f64> {
        self.check_window(site, 2)?;
        self.bring_center_into(site, site + 1);
        let (dl, dr, theta) = self.merge(site, 2);
        let theta = apply_block_gate(gate, 4, dl, dr, &theta);
        let s = split(&theta, dl * 2, 2 * dr, self.max_bond, self.cutoff)?;
        match sweep {
            Sweep::Right => {
                self.tensors[site] = SiteTensor {
                    dl,
                    dr: s.k,
                    data: s.left,
                };
                let mut r = s.right_weighted;
                normalize_vec(&mut r);
                self.tensors[site + 1] = SiteTensor { dl: s.k, dr, data: r };
                self.center = Some(site + 1);
            }
            Sweep::Left => {
                let mut l = s.left_weighted;
                normalize_vec(&mut l);
                self.tensors[site] = SiteTensor { dl, dr: s.k, data: l };
                self.tensors[site + 1] = SiteTensor {
                    dl: s.k,
                    dr,
                    data: s.right,
                };
                self.center = Some(site);
            }
        }
        Ok(s.discarded)
    }

    fn bring_center_into(&mut self, lo: usize, hi: usize) {
        match self.center {
            Some(c) if c >= lo && c <= hi => {}
            Some(c) if c < lo => self.move_center_to(lo),
            Some(_) => self.move_center_to(hi),
            None => self.canonicalize(lo),
        }
    }

    /// Applies gates on windows that cross the seam of a ring.
    ///
    /// Each entry is `(start, gate)` with `start ∈ {n-2, n-1}`, the gate
    /// acting on the cyclic sites `start, start+1, start+2 (mod n)`. The
    /// last two sites are first carried to the front of the chain by a
    /// sequence of three-site cyclic permutations (each truncated to the
    /// bond limit), the gates are applied on the now-contiguous windows, and
    /// the permutations are undone. Returns the total discarded weight.
    pub fn pbc_wrap_apply(&mut self, gates: &[(usize, Gate3)]) -> Result<f64> {
        let n = self.n_sites();
        if n < 4 {
            return Err(Error::Parameter("seam gates need at least 4 sites".into()));
        }
        for (start, _) in gates {
            if *start != n - 2 && *start != n - 1 {
                return Err(Error::Parameter(format!(
                    "window at {start} does not cross the seam of a {n}-site ring"
                )));
            }
        }
        if gates.is_empty() {
            return Ok(0.0);
        }
        let to_front = cycle_gate(true);
        let to_back = cycle_gate(false);
        let mut discarded = 0.0;
        // (x, A, B) -> (A, B, x) walks the pair (A, B) leftwards.
        for p in (0..n - 2).rev() {
            discarded += self.apply_three_site_gate(&to_front, p, Sweep::Left)?;
        }
        // Positions 0, 1 now hold sites n-2, n-1; the window starting at
        // n-2 (resp. n-1) sits at position 0 (resp. 1).
        for (start, g) in gates {
            let pos = if *start == n - 2 { 0 } else { 1 };
            discarded += self.apply_three_site_gate(g, pos, Sweep::Left)?;
        }
        for p in 0..n - 2 {
            discarded += self.apply_three_site_gate(&to_back, p, Sweep::Right)?;
        }
        Ok(discarded)
    }

    /// Dense state vector (site 0 most significant). Needs `n ≤ 24`.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let n = self.n_sites();
        if n > 24 {
            return Err(Error::Capacity {
                what: "MPS to dense vector",
                limit: 24,
                n_sites: n,
            });
        }
        let (_, _, v) = self.merge(0, n);
        Ok(v)
    }

    /// `⟨ψ|p|ψ⟩ / ⟨ψ|ψ⟩` for each string, sharing the environments.
    pub fn expectations(&self, strings: &[PauliString]) -> Result<Vec<Complex64>> {
        let n = self.n_sites();
        for p in strings {
            if p.n_sites() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: p.n_sites(),
                });
            }
        }
        let mut left = Vec::with_capacity(n + 1);
        left.push(vec![1.0]);
        for t in &self.tensors {
            let next = transfer(left.last().unwrap(), t, None);
            left.push(next);
        }
        let mut right = vec![Vec::new(); n + 1];
        right[n] = vec![1.0];
        for i in (0..n).rev() {
            right[i] = transfer_right(&right[i + 1], &self.tensors[i]);
        }
        let norm = left[n][0];
        if !(norm > 0.0) {
            return Err(Error::Parameter("expectation in a zero-norm MPS".into()));
        }
        let mut out = Vec::with_capacity(strings.len());
        for p in strings {
            let c = p.coeff();
            let Some(a) = p.support().next() else {
                out.push(c);
                continue;
            };
            let b = p.support().last().unwrap_or(a);
            let mut env = left[a].clone();
            let mut ny = 0u32;
            for i in a..=b {
                let op = match p.get(i) {
                    None => None,
                    Some(Pauli::X) => Some([[0.0, 1.0], [1.0, 0.0]]),
                    Some(Pauli::Z) => Some([[1.0, 0.0], [0.0, -1.0]]),
                    // Y = i·J with J = [[0, -1], [1, 0]].
                    Some(Pauli::Y) => {
                        ny += 1;
                        Some([[0.0, -1.0], [1.0, 0.0]])
                    }
                };
                env = transfer(&env, &self.tensors[i], op.as_ref());
            }
            let r = &right[b + 1];
            let val: f64 = env.iter().zip(r).map(|(x, y)| x * y).sum::<f64>() / norm;
            let phase = match ny % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
            out.push(c * phase * val);
        }
        Ok(out)
    }

    /// Maximum deviation of the canonical-form isometry conditions.
    pub fn isometry_defect(&self) -> f64 {
        let Some(c) = self.center else {
            return f64::INFINITY;
        };
        let mut worst = 0.0f64;
        for (i, t) in self.tensors.iter().enumerate() {
            if i == c {
                continue;
            }
            let (dl, dr) = (t.dl, t.dr);
            if i < c {
                // Σ_{l,s} A(l,s,r) A(l,s,r') = δ
                let m = transpose(dl * 2, dr, &t.data);
                let g = linalg::matmul(dr, dl * 2, dr, &m, &t.data);
                worst = worst.max(identity_defect(dr, &g));
            } else {
                let m = transpose(dl, 2 * dr, &t.data);
                let g = linalg::matmul(dl, 2 * dr, dl, &t.data, &m);
                worst = worst.max(identity_defect(dl, &g));
            }
        }
        worst
    }

    /// Writes the state in the versioned binary layout described in
    /// [`crate::checkpoint`].
    pub fn write_to<W: Write>(&self, w: &mut W, schedule_json: &str) -> Result<()> {
        crate::checkpoint::write(self, schedule_json, w)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<(Mps, String)> {
        crate::checkpoint::read(r)
    }

    pub(crate) fn set_center_unchecked(&mut self, c: Option<usize>) {
        self.center = c;
    }
}

fn identity_defect(k: usize, g: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[i * k + j] - want).abs());
        }
    }
    worst
}

fn transpose(rows: usize, cols: usize, a: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = a[i * cols + j];
        }
    }
    t
}

fn normalize_vec(v: &mut [f64]) {
    let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Left environment step: `E'(r, r') = Σ A(l,s,r) op(s,s') E(l,l') A(l',s',r')`.
fn transfer(env: &[f64], t: &SiteTensor, op: Option<&[[f64; 2]; 2]>) -> Vec<f64> {
    let (dl, dr) = (t.dl, t.dr);
    // T1(l, s', r') = Σ_l' E(l, l') A(l', s', r')
    let t1 = linalg::matmul(dl, dl, 2 * dr, env, &t.data);
    let t2 = match op {
        None => t1,
        Some(m) => {
            let mut t2 = vec![0.0; dl * 2 * dr];
            for l in 0..dl {
                for r in 0..dr {
                    let a = t1[(l * 2) * dr + r];
                    let b = t1[(l * 2 + 1) * dr + r];
                    t2[(l * 2) * dr + r] = m[0][0] * a + m[0][1] * b;
                    t2[(l * 2 + 1) * dr + r] = m[1][0] * a + m[1][1] * b;
                }
            }
            t2
        }
    };
    let at = transpose(dl * 2, dr, &t.data);
    linalg::matmul(dr, dl * 2, dr, &at, &t2)
}

/// Right environment step with identity: `E'(l, l') = Σ A(l,s,r) E(r,r') A(l',s,r')`.
fn transfer_right(env: &[f64], t: &SiteTensor) -> Vec<f64> {
    let (dl, dr) = (t.dl, t.dr);
    // T1(l, s, r') = Σ_r A(l,s,r) E(r, r')
    let t1 = linalg::matmul(dl * 2, dr, dr, &t.data, env);
    let at = transpose(dl, 2 * dr, &t.data);
    linalg::matmul(dl, 2 * dr, dl, &t1, &at)
}

/// `Θ'(l, t, r) = Σ_s g[t][s] Θ(l, s, r)` for a `p`-dimensional block.
fn apply_block_gate(g: &[f64], p: usize, dl: usize, dr: usize, theta: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; theta.len()];
    for l in 0..dl {
        let blk = &theta[l * p * dr..(l + 1) * p * dr];
        let res = linalg::matmul(p, p, dr, g, blk);
        out[l * p * dr..(l + 1) * p * dr].copy_from_slice(&res);
    }
    out
}

struct Split {
    k: usize,
    /// `U` (rows × k), left isometry.
    left: Vec<f64>,
    /// `U·S` (rows × k).
    left_weighted: Vec<f64>,
    /// `Vᵀ` (k × cols), right isometry.
    right: Vec<f64>,
    /// `S·Vᵀ` (k × cols).
    right_weighted: Vec<f64>,
    discarded: f64,
}

/// Truncated SVD keeping at most `d` singular values above
/// `cutoff · s_max`. Ties are resolved by the solver's order, which is
/// deterministic for a given input.
fn split(a: &[f64], rows: usize, cols: usize, d: usize, cutoff: f64) -> Result<Split> {
    let svd = linalg::svd(rows, cols, a)?;
    let r = svd.rank;
    let total: f64 = svd.s.iter().map(|s| s * s).sum();
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let mut k = svd
        .s
        .iter()
        .take(d)
        .take_while(|&&s| s > cutoff * smax)
        .count()
        .max(1);
    k = k.min(r);
    let kept: f64 = svd.s[..k].iter().map(|s| s * s).sum();
    let discarded = if total > 0.0 { (1.0 - kept / total).max(0.0) } else { 0.0 };
    let mut left = vec![0.0; rows * k];
    let mut left_weighted = vec![0.0; rows * k];
    for i in 0..rows {
        for j in 0..k {
            let u = svd.u[i * r + j];
            left[i * k + j] = u;
            left_weighted[i * k + j] = u * svd.s[j];
        }
    }
    let right = svd.vt[..k * cols].to_vec();
    let mut right_weighted = right.clone();
    for j in 0..k {
        right_weighted[j * cols..(j + 1) * cols]
            .iter_mut()
            .for_each(|x| *x *= svd.s[j]);
    }
    Ok(Split {
        k,
        left,
        left_weighted,
        right,
        right_weighted,
        discarded,
    })
}

/// Permutation gates on three sites. `to_front` maps the window contents
/// `(x, a, b)` to `(a, b, x)`; otherwise `(a, b, x)` to `(x, a, b)`.
fn cycle_gate(to_front: bool) -> Gate3 {
    let mut g = [0.0; 64];
    for t in 0..8usize {
        let (t0, t1, t2) = ((t >> 2) & 1, (t >> 1) & 1, t & 1);
        let s = if to_front {
            (t2 << 2) | (t0 << 1) | t1
        } else {
            (t1 << 2) | (t2 << 1) | t0
        };
        g[t * 8 + s] = 1.0;
    }
    g
}

/// Real matrix of a Pauli string restricted to `k` consecutive sites
/// starting at `first` (local index 0 most significant). Fails on complex
/// matrices.
pub fn local_matrix(p: &PauliString, sites: &[usize]) -> Result<Vec<f64>> {
    let k = sites.len();
    let dim = 1usize << k;
    let mut x = 0usize;
    let mut z = 0usize;
    let mut ny = 0u32;
    for (&site, &axis) in p.factors() {
        let pos = sites
            .iter()
            .position(|&s| s == site)
            .ok_or_else(|| Error::Parameter(format!("site {site} outside the gate window {sites:?}")))?;
        let bit = 1usize << (k - 1 - pos);
        match axis {
            Pauli::X => x |= bit,
            Pauli::Z => z |= bit,
            Pauli::Y => {
                x |= bit;
                z |= bit;
                ny += 1;
            }
        }
    }
    let phase = p.coeff()
        * match ny % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    if phase.im != 0.0 {
        return Err(Error::Parameter(format!("term `{p}` has a complex matrix")));
    }
    let mut m = vec![0.0; dim * dim];
    for col in 0..dim {
        let row = col ^ x;
        let sign = if (col & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        m[row * dim + col] += phase.re * sign;
    }
    Ok(m)
}

/// `exp(-τ h)` for a real symmetric `dim × dim` matrix.
pub fn expm_sym(h: &[f64], dim: usize, tau: f64) -> Result<Vec<f64>> {
    let (w, v) = linalg::eigh(dim, h)?;
    let mut out = vec![0.0; dim * dim];
    for (lam, vec) in w.iter().zip(&v) {
        let f = (-tau * lam).exp();
        for i in 0..dim {
            for j in 0..dim {
                out[i * dim + j] += f * vec[i] * vec[j];
            }
        }
    }
    Ok(out)
}

/// `⟨ψ|op|ψ⟩/⟨ψ|ψ⟩` for an operator sum; fails on a non-negligible
/// imaginary part.
pub fn mps_expectation(mps: &Mps, op: &OperatorSum) -> Result<f64> {
    let v: Complex64 = mps.expectations(op.terms())?.into_iter().sum();
    if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
        return Err(Error::NonHermitian(v.im));
    }
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn plus_state_expectations() {
        let m = Mps::plus_state(6, 4).unwrap();
        let sx = OperatorSum::parse("1 * X0\n1 * X1\n1 * X2\n1 * X3\n1 * X4\n1 * X5", 6).unwrap();
        assert!((mps_expectation(&m, &sx).unwrap() - 6.0).abs() < 1e-12);
        let zero = Mps::product(&vec![[1.0, 0.0]; 6], 4).unwrap();
        let sz = OperatorSum::parse("1 * Z0\n1 * Z1\n1 * Z2\n1 * Z3\n1 * Z4\n1 * Z5", 6).unwrap();
        assert!((mps_expectation(&zero, &sz).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn random_state_is_canonical_and_normalized() {
        let mut m = Mps::random(8, 6, 3).unwrap();
        assert!(m.isometry_defect() < 1e-12);
        assert!((m.norm_sqr() - 1.0).abs() < 1e-12);
        let before = m.to_dense().unwrap();
        m.move_center_to(5);
        assert!(m.isometry_defect() < 1e-12);
        let after = m.to_dense().unwrap();
        let diff: f64 = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert_eq!(m.bond_dims(), vec![1, 2, 4, 6, 6, 6, 4, 2, 1]);
    }

    #[test]
    fn identity_gate_leaves_state_unchanged() {
        let mut m = Mps::random(6, 8, 1).unwrap();
        let before = m.to_dense().unwrap();
        let w = m.apply_three_site_gate(&identity_gate3(), 2, Sweep::Right).unwrap();
        assert!(w < 1e-20);
        assert_eq!(m.center(), Some(4));
        let after = m.to_dense().unwrap();
        let overlap: f64 = before.iter().zip(&after).map(|(a, b)| a * b).sum();
        assert!((overlap.abs() - 1.0).abs() < 1e-12);
        assert!(m.isometry_defect() < 1e-10);
    }

    #[test]
    fn xzx_gate_matches_dense_evolution() {
        let p = PauliString::real(3, [(0, Pauli::X), (1, Pauli::Z), (2, Pauli::X)], 1.0).unwrap();
        let h = local_matrix(&p, &[0, 1, 2]).unwrap();
        let g = expm_sym(&h, 8, 0.3).unwrap();
        let mut m = Mps::plus_state(3, 4).unwrap();
        m.apply_three_site_gate(g.as_slice().try_into().unwrap(), 0, Sweep::Right).unwrap();
        let got = m.to_dense().unwrap();
        // Dense oracle: cosh/sinh form of exp(-τP), P² = 1.
        let plus = vec![(1.0 / 8f64).sqrt(); 8];
        let mut want = vec![0.0; 8];
        for r in 0..8 {
            for c in 0..8 {
                let id = if r == c { 1.0 } else { 0.0 };
                want[r] += (0.3f64.cosh() * id - 0.3f64.sinh() * h[r * 8 + c]) * plus[c];
            }
        }
        let nrm = dense_norm(&want);
        let sign = if got.iter().zip(&want).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for (a, b) in got.iter().zip(&want) {
            assert!((sign * a - b / nrm).abs() < 1e-10);
        }
    }

    #[test]
    fn cycle_gates_are_inverse_permutations() {
        let f = cycle_gate(true);
        let b = cycle_gate(false);
        let prod = linalg::matmul(8, 8, 8, &b, &f);
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(prod[i * 8 + j], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn wrap_apply_with_identity_is_noop() {
        let mut m = Mps::random(6, 16, 9).unwrap();
        let before = m.to_dense().unwrap();
        let id = identity_gate3();
        m.pbc_wrap_apply(&[(4, id), (5, id)]).unwrap();
        let after = m.to_dense().unwrap();
        let overlap: f64 = before.iter().zip(&after).map(|(a, b)| a * b).sum();
        assert!((overlap.abs() - 1.0).abs() < 1e-10);
        assert!(m.pbc_wrap_apply(&[(2, id)]).is_err());
    }

    #[test]
    fn wrap_gate_matches_dense_action() {
        // exp(-τ X4 Z5 X0) on a random 6-site state, against the dense map.
        let n = 6;
        let mut m = Mps::random(n, 16, 4).unwrap();
        let psi = m.to_dense().unwrap();
        let p = PauliString::real(3, [(0, Pauli::X), (1, Pauli::Z), (2, Pauli::X)], 1.0).unwrap();
        let g = expm_sym(&local_matrix(&p, &[0, 1, 2]).unwrap(), 8, 0.2).unwrap();
        m.pbc_wrap_apply(&[(n - 2, g.as_slice().try_into().unwrap())]).unwrap();
        let got = m.to_dense().unwrap();
        let full = OperatorSum::from(
            PauliString::real(n, [(4, Pauli::X), (5, Pauli::Z), (0, Pauli::X)], 1.0).unwrap(),
        );
        let pm = crate::pauli::sparse_matrix(&full).unwrap();
        let mut want = vec![0.0; 1 << n];
        for r in 0..(1 << n) {
            want[r] += 0.2f64.cosh() * psi[r];
            for (c, v) in pm.row(r) {
                want[r] -= 0.2f64.sinh() * v.re * psi[c];
            }
        }
        let nrm = dense_norm(&want);
        let overlap: f64 = got.iter().zip(&want).map(|(a, b)| a * b / nrm).sum();
        assert!((overlap.abs() - 1.0).abs() < 1e-10, "{overlap}");
    }

    #[test]
    fn two_site_gate_and_truncation() {
        let mut m = Mps::random(6, 8, 2).unwrap();
        let mut swap = [0.0; 16];
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[i * 4 + j] = 1.0;
        }
        let before = m.to_dense().unwrap();
        m.apply_two_site_gate(&swap, 2, Sweep::Left).unwrap();
        m.apply_two_site_gate(&swap, 2, Sweep::Right).unwrap();
        let after = m.to_dense().unwrap();
        let overlap: f64 = before.iter().zip(&after).map(|(a, b)| a * b).sum();
        assert!((overlap.abs() - 1.0).abs() < 1e-10);
        m.set_max_bond(2);
        let w = m.apply_three_site_gate(&identity_gate3(), 1, Sweep::Right).unwrap();
        assert!(w > 0.0);
        assert!(m.bond_dims().iter().all(|&d| d <= 8));
    }
}

//! Imaginary-time evolution of an MPS towards the ground state.
//!
//! Multi-site terms are grouped onto three-site windows and applied as
//! `exp(-τ H_w)`; single-site terms form a separate layer `B` that is folded
//! into the window gates on the fly. One pass applies `e^{-τB} e^{-τA}`, and
//! passes alternate between left-to-right and right-to-left. For the cluster
//! Hamiltonian all window terms commute, so the `A` layer is exact and the
//! only splitting error comes from `[A, B]`.
//!
//! With `order = 2` the measured state is `e^{+τB/2} ψ`, which is the fixed
//! point of the symmetric product `e^{-τB/2} e^{-τA} e^{-τB/2}` and carries
//! an `O(τ²)` bias instead of `O(τ)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Boundary, ModelBundle};
use crate::mps::{expm_sym, identity_gate3, local_matrix, Gate3, Mps, Sweep};
use crate::pauli::{OperatorSum, PauliString};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TebdStage {
    pub dt: f64,
    pub max_sweeps: usize,
    /// Bound on the per-pass energy change.
    pub energy_tol: f64,
    /// Bound on the coordinate drift rate `|Δx| / (τ · passes)`.
    pub obs_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TebdSchedule {
    pub stages: Vec<TebdStage>,
    pub order: u8,
    /// Passes between convergence checks.
    pub check_every: usize,
    /// When false, an unconverged final stage returns its last state
    /// instead of failing; the stage reports still record it.
    #[serde(default = "yes")]
    pub strict: bool,
}

fn yes() -> bool {
    true
}

impl Default for TebdSchedule {
    fn default() -> Self {
        let ladder = [
            (0.1, 1e-4),
            (0.03, 3e-5),
            (0.01, 1e-5),
            (0.003, 3e-6),
            (0.001, 1e-6),
        ];
        TebdSchedule {
            stages: ladder
                .iter()
                .map(|&(dt, obs_tol)| TebdStage {
                    dt,
                    max_sweeps: 20_000,
                    energy_tol: 1e-9,
                    obs_tol,
                })
                .collect(),
            order: 2,
            check_every: 10,
            strict: true,
        }
    }
}

impl TebdSchedule {
    /// Fixed-budget ladder for figure sweeps: each stage runs at most
    /// `passes` passes and the result is returned even if unconverged,
    /// which is what near-degenerate points need.
    pub fn budget(dts: &[f64], passes: usize) -> Self {
        TebdSchedule {
            stages: dts
                .iter()
                .map(|&dt| TebdStage {
                    dt,
                    max_sweeps: passes,
                    energy_tol: 1e-9,
                    obs_tol: 1e-5,
                })
                .collect(),
            order: 2,
            check_every: 10,
            strict: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Parameter("TEBD schedule has no stages".into()));
        }
        if self.order != 1 && self.order != 2 {
            return Err(Error::Parameter(format!("Trotter order must be 1 or 2, got {}", self.order)));
        }
        if self.check_every == 0 {
            return Err(Error::Parameter("check_every must be positive".into()));
        }
        for (i, s) in self.stages.iter().enumerate() {
            if !(s.dt > 0.0 && s.dt.is_finite()) {
                return Err(Error::Parameter(format!("stage {i}: dt must be positive, got {}", s.dt)));
            }
            if i > 0 && s.dt >= self.stages[i - 1].dt {
                return Err(Error::Parameter("stage time steps must decrease strictly".into()));
            }
            if !(s.energy_tol > 0.0 && s.obs_tol > 0.0) || s.max_sweeps == 0 {
                return Err(Error::Parameter(format!("stage {i}: tolerances and max_sweeps must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub dt: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub energy: f64,
    pub energy_change: f64,
    pub obs_drift: f64,
    /// Discarded weight summed over the last pass of the stage.
    pub trunc_weight: f64,
}

#[derive(Clone, Debug)]
pub struct TebdOutcome {
    pub state: Mps,
    pub energy: f64,
    /// `(⟨h1⟩, ⟨h2⟩, ⟨h3⟩)` divided by the bundle's norms.
    pub coords: [f64; 3],
    pub stages: Vec<StageReport>,
    pub trunc_weight: f64,
}

/// Gates for one time step.
struct Layer {
    /// Window gates with the `B` layer folded in, indexed by window start,
    /// for left-to-right and right-to-left order.
    right: Vec<Gate3>,
    left: Vec<Gate3>,
    /// Unfolded seam windows `(n-2, n-1)` for periodic chains.
    seam: Vec<(usize, Gate3)>,
    /// `e^{+τB/2}` per site, for the symmetric measurement.
    half_back: Vec<[[f64; 2]; 2]>,
}

/// Terms split by window. `windows[w]` holds the 8×8 matrix on sites
/// `w, w+1, w+2 (mod n)`; `single[k]` the 2×2 matrix on site `k`.
struct Split {
    n: usize,
    pbc: bool,
    windows: Vec<Option<Vec<f64>>>,
    single: Vec<[f64; 4]>,
}

fn window_sites(n: usize, w: usize) -> [usize; 3] {
    [w, (w + 1) % n, (w + 2) % n]
}

fn assign_window(n: usize, pbc: bool, support: &[usize]) -> Option<usize> {
    let lo = *support.first()?;
    let hi = *support.last()?;
    if hi - lo <= 2 {
        return Some(lo.min(n - 3));
    }
    if pbc {
        for w in [n - 2, n - 1] {
            let s = window_sites(n, w);
            if support.iter().all(|x| s.contains(x)) {
                return Some(w);
            }
        }
    }
    None
}

fn split_terms(h: &OperatorSum, pbc: bool) -> Result<Split> {
    let n = h.n_sites();
    if n < 4 {
        return Err(Error::Parameter("TEBD needs at least 4 sites".into()));
    }
    let n_windows = if pbc { n } else { n - 2 };
    let mut windows: Vec<Option<Vec<f64>>> = vec![None; n_windows];
    let mut single = vec![[0.0; 4]; n];
    for t in h.terms() {
        let support: Vec<usize> = t.support().collect();
        match support.len() {
            0 => {
                return Err(Error::UnsupportedMapping(
                    "constant terms are not supported by the TEBD splitting".into(),
                ))
            }
            1 => {
                let m = local_matrix(t, &support)?;
                for (a, b) in single[support[0]].iter_mut().zip(&m) {
                    *a += b;
                }
            }
            _ => {
                let w = assign_window(n, pbc, &support).ok_or_else(|| {
                    Error::UnsupportedMapping(format!("term `{t}` does not fit a three-site window"))
                })?;
                let m = local_matrix(t, &window_sites(n, w))?;
                let slot = windows[w].get_or_insert_with(|| vec![0.0; 64]);
                for (a, b) in slot.iter_mut().zip(&m) {
                    *a += b;
                }
            }
        }
    }
    Ok(Split {
        n,
        pbc,
        windows,
        single,
    })
}

fn expm2(m: &[f64; 4], tau: f64) -> Result<[[f64; 2]; 2]> {
    let e = expm_sym(m, 2, tau)?;
    Ok([[e[0], e[1]], [e[2], e[3]]])
}

/// `(e ⊗ 1 ⊗ 1) · g` (pos 0), and likewise for positions 1 and 2.
fn fold(g: &Gate3, e: &[[f64; 2]; 2], pos: usize) -> Gate3 {
    let shift = 2 - pos;
    let mut out = [0.0; 64];
    for row in 0..8 {
        let bit = (row >> shift) & 1;
        for col in 0..8 {
            let mut acc = 0.0;
            for s in 0..2 {
                let src = (row & !(1 << shift)) | (s << shift);
                acc += e[bit][s] * g[src * 8 + col];
            }
            out[row * 8 + col] = acc;
        }
    }
    out
}

fn window_gate(m: &Option<Vec<f64>>, tau: f64) -> Result<Gate3> {
    match m {
        None => Ok(identity_gate3()),
        Some(h) => {
            let e = expm_sym(h, 8, tau)?;
            let mut g = [0.0; 64];
            g.copy_from_slice(&e);
            Ok(g)
        }
    }
}

impl Split {
    fn layer(&self, tau: f64) -> Result<Layer> {
        let n = self.n;
        let bulk = n - 2;
        let singles = self
            .single
            .iter()
            .map(|m| expm2(m, tau))
            .collect::<Result<Vec<_>>>()?;
        let half_back = self
            .single
            .iter()
            .map(|m| expm2(m, -tau / 2.0))
            .collect::<Result<Vec<_>>>()?;
        let plain = (0..bulk)
            .map(|w| window_gate(&self.windows[w], tau))
            .collect::<Result<Vec<_>>>()?;
        // Left to right: site w is final after window w.
        let mut right = plain.clone();
        for w in 0..bulk {
            right[w] = fold(&right[w], &singles[w], 0);
        }
        right[bulk - 1] = fold(&right[bulk - 1], &singles[n - 2], 1);
        right[bulk - 1] = fold(&right[bulk - 1], &singles[n - 1], 2);
        // Right to left: site w+2 is final after window w.
        let mut left = plain;
        for w in 0..bulk {
            left[w] = fold(&left[w], &singles[w + 2], 2);
        }
        left[0] = fold(&left[0], &singles[1], 1);
        left[0] = fold(&left[0], &singles[0], 0);
        let mut seam = Vec::new();
        if self.pbc {
            for w in [n - 2, n - 1] {
                if self.windows[w].is_some() {
                    seam.push((w, window_gate(&self.windows[w], tau)?));
                }
            }
        }
        Ok(Layer {
            right,
            left,
            seam,
            half_back,
        })
    }
}

/// Unique unit strings shared by the Hamiltonian and the three coordinates.
struct Observables {
    strings: Vec<PauliString>,
    ham: Vec<(usize, f64)>,
    parts: [Vec<(usize, f64)>; 3],
}

impl Observables {
    fn new(b: &ModelBundle) -> Self {
        let mut index: HashMap<_, usize> = HashMap::new();
        let mut strings = Vec::new();
        let mut collect = |op: &OperatorSum| -> Vec<(usize, f64)> {
            op.terms()
                .iter()
                .map(|t| {
                    let unit = t.clone().with_coeff(1.0.into());
                    let k = *index.entry(unit.key()).or_insert_with(|| {
                        strings.push(unit.clone());
                        strings.len() - 1
                    });
                    (k, t.coeff().re)
                })
                .collect()
        };
        let ham = collect(&b.hamiltonian);
        let parts = [collect(&b.h1), collect(&b.h2), collect(&b.h3)];
        Observables {
            strings,
            ham,
            parts,
        }
    }

    fn measure(&self, mps: &Mps, norms: &[f64; 3]) -> Result<(f64, [f64; 3])> {
        let vals = mps.expectations(&self.strings)?;
        let sum = |terms: &[(usize, f64)]| terms.iter().map(|&(k, c)| c * vals[k].re).sum::<f64>();
        let e = sum(&self.ham);
        let x = [
            sum(&self.parts[0]) / norms[0],
            sum(&self.parts[1]) / norms[1],
            sum(&self.parts[2]) / norms[2],
        ];
        Ok((e, x))
    }
}

fn measured_state(mps: &Mps, layer: &Layer, order: u8) -> Mps {
    let mut m = mps.clone();
    if order == 2 {
        for (k, e) in layer.half_back.iter().enumerate() {
            m.apply_single(k, e);
        }
        // The correction is close to the identity, so the norm only shifts
        // slightly; expectations divide by it anyway.
    }
    m
}

fn pass(mps: &mut Mps, layer: &Layer, dir: Sweep) -> Result<f64> {
    let mut disc = 0.0;
    if !layer.seam.is_empty() {
        disc += mps.pbc_wrap_apply(&layer.seam)?;
    }
    let bulk = layer.right.len();
    match dir {
        Sweep::Right => {
            for w in 0..bulk {
                disc += mps.apply_three_site_gate(&layer.right[w], w, Sweep::Right)?;
            }
        }
        Sweep::Left => {
            for w in (0..bulk).rev() {
                disc += mps.apply_three_site_gate(&layer.left[w], w, Sweep::Left)?;
            }
        }
    }
    Ok(disc)
}

/// Runs the schedule from a random MPS of bond dimension `max_bond`.
pub fn tebd_ground(b: &ModelBundle, max_bond: usize, schedule: &TebdSchedule, seed: u64) -> Result<TebdOutcome> {
    let init = Mps::random(b.params.n_sites, max_bond, seed)?;
    tebd_ground_from(b, init, schedule)
}

/// Runs the schedule from a given initial state. Fails with
/// [`Error::Convergence`] if the last stage exhausts its pass budget.
pub fn tebd_ground_from(b: &ModelBundle, init: Mps, schedule: &TebdSchedule) -> Result<TebdOutcome> {
    schedule.validate()?;
    let n = b.params.n_sites;
    if init.n_sites() != n {
        return Err(Error::Dimension {
            expected: n,
            found: init.n_sites(),
        });
    }
    let split = split_terms(&b.hamiltonian, b.params.boundary == Boundary::Pbc)?;
    let obs = Observables::new(b);
    let mut mps = init;
    mps.normalize()?;
    let mut reports = Vec::with_capacity(schedule.stages.len());
    let mut dir = Sweep::Right;
    let mut last = None;
    for stage in &schedule.stages {
        let layer = split.layer(stage.dt)?;
        let mut prev = obs.measure(&measured_state(&mps, &layer, schedule.order), &b.norms)?;
        let mut report = StageReport {
            dt: stage.dt,
            sweeps: 0,
            converged: false,
            energy: prev.0,
            energy_change: f64::INFINITY,
            obs_drift: f64::INFINITY,
            trunc_weight: 0.0,
        };
        while report.sweeps < stage.max_sweeps {
            let block = schedule.check_every.min(stage.max_sweeps - report.sweeps);
            for _ in 0..block {
                report.trunc_weight = pass(&mut mps, &layer, dir)?;
                dir = match dir {
                    Sweep::Right => Sweep::Left,
                    Sweep::Left => Sweep::Right,
                };
            }
            report.sweeps += block;
            let now = obs.measure(&measured_state(&mps, &layer, schedule.order), &b.norms)?;
            report.energy = now.0;
            report.energy_change = (now.0 - prev.0).abs() / block as f64;
            report.obs_drift = (0..3)
                .map(|k| (now.1[k] - prev.1[k]).abs())
                .fold(0.0, f64::max)
                / (block as f64 * stage.dt);
            prev = now;
            if report.energy_change < stage.energy_tol && report.obs_drift < stage.obs_tol {
                report.converged = true;
                break;
            }
        }
        last = Some((prev, layer));
        reports.push(report);
    }
    let final_report = reports.last().expect("schedule has stages");
    if schedule.strict && !final_report.converged {
        return Err(Error::Convergence {
            what: "TEBD",
            iterations: final_report.sweeps,
            residual: final_report.obs_drift,
        });
    }
    let ((energy, coords), layer) = last.expect("schedule has stages");
    let mut state = measured_state(&mps, &layer, schedule.order);
    state.normalize()?;
    let trunc_weight = final_report.trunc_weight;
    Ok(TebdOutcome {
        state,
        energy,
        coords,
        stages: reports,
        trunc_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::ground_space;
    use crate::models::{build_cluster, ModelParams};

    fn fast() -> TebdSchedule {
        let mut s = TebdSchedule::default();
        s.stages.truncate(4);
        s
    }

    #[test]
    fn fold_matches_kronecker_product() {
        let e = [[0.3, -0.7], [0.2, 1.1]];
        let g = identity_gate3();
        for pos in 0..3 {
            let f = fold(&g, &e, pos);
            let shift = 2 - pos;
            for r in 0..8 {
                for c in 0..8 {
                    let same_rest = (r & !(1 << shift)) == (c & !(1 << shift));
                    let want = if same_rest { e[(r >> shift) & 1][(c >> shift) & 1] } else { 0.0 };
                    assert_eq!(f[r * 8 + c], want);
                }
            }
        }
    }

    #[test]
    fn transverse_field_product_state() {
        let n = 8;
        let terms = (0..n).map(|k| PauliString::parse(&format!("-1*X{k}"), n).unwrap()).collect();
        let h = OperatorSum::from_terms(n, terms).unwrap();
        let split = split_terms(&h, false).unwrap();
        let layer = split.layer(0.5).unwrap();
        let mut m = Mps::random(n, 1, 3).unwrap();
        for i in 0..200 {
            pass(&mut m, &layer, if i % 2 == 0 { Sweep::Right } else { Sweep::Left }).unwrap();
        }
        let v = crate::mps::mps_expectation(&m, &h).unwrap();
        assert!((v + n as f64).abs() < 1e-10, "{v}");
    }

    #[test]
    fn full_bond_matches_exact_diagonalization() {
        for (alpha, bx, boundary) in [(0.3, 0.4, Boundary::Obc), (-0.5, 0.2, Boundary::Pbc)] {
            let p = ModelParams::new(8, -1.0, 1.0, alpha, bx).with_boundary(boundary);
            let b = build_cluster(&p).unwrap();
            let gs = ground_space(&b.hamiltonian, 2, 1e-8).unwrap();
            let out = tebd_ground(&b, 16, &TebdSchedule::default(), 7).unwrap();
            let e_ed = gs.e0();
            assert!((out.energy - e_ed).abs() < 1e-6 * e_ed.abs(), "{} vs {}", out.energy, e_ed);
            let v = &gs.ground_vectors()[0];
            let mut want = [0.0; 3];
            for (k, h) in [&b.h1, &b.h2, &b.h3].into_iter().enumerate() {
                want[k] = crate::ed::expectation(v, h).unwrap() / b.norms[k];
            }
            for k in 0..3 {
                assert!((out.coords[k] - want[k]).abs() < 1e-5, "{boundary:?} x{k}: {} vs {}", out.coords[k], want[k]);
            }
        }
    }

    #[test]
    fn unconverged_final_stage_is_an_error() {
        let p = ModelParams::new(6, 1.0, 1.0, 0.2, 0.3);
        let b = build_cluster(&p).unwrap();
        let mut s = fast();
        for st in &mut s.stages {
            st.max_sweeps = 2;
        }
        s.check_every = 1;
        assert!(matches!(tebd_ground(&b, 4, &s, 1), Err(Error::Convergence { .. })));
    }

    #[test]
    fn schedule_validation() {
        assert!(TebdSchedule::default().validate().is_ok());
        let mut s = TebdSchedule::default();
        s.stages.swap(0, 1);
        assert!(s.validate().is_err());
        s = TebdSchedule::default();
        s.order = 3;
        assert!(s.validate().is_err());
    }
}

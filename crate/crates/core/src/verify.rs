//! Fast self-checks of the model, solvers and sweep invariants, run by the
//! `verify` command.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ed::{self, EdOptions, Solver};
use crate::error::Result;
use crate::models::{build_cluster, build_xy, cluster_hamiltonian, symmetry_generators, Boundary, ModelParams};
use crate::mps::Mps;
use crate::pauli::{commutator_norm, realize, Format, OperatorSum, Pauli, PauliString, Realized};
use crate::scan::{detect_ruled, sweep_boundary, CoordinateMode, SweepConfig};
use crate::tebd::{tebd_ground, TebdSchedule};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type CheckFn = fn() -> Result<(bool, String)>;

const CHECKS: [(&str, CheckFn); 11] = [
    ("pauli_product_matches_matrices", pauli_products),
    ("symmetries_commute_with_cluster_hamiltonian", symmetries),
    ("cluster_and_xy_spectra_agree", cluster_xy_spectra),
    ("open_chain_quadruplet_and_extent", quadruplet),
    ("lanczos_matches_dense", lanczos_vs_dense),
    ("variational_bound", variational),
    ("samples_on_supporting_planes", supporting_planes),
    ("j1_sign_reflects_x1", reflection),
    ("flat_top_facet", flat_top),
    ("bulk_normalized_extent_is_4_over_n", bulk_extent),
    ("full_bond_tebd_matches_ed", tebd_small),
];

/// Runs every check, catching errors as failures.
pub fn run_suite() -> Vec<Check> {
    CHECKS
        .iter()
        .map(|(name, f)| {
            let t = Instant::now();
            let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
            Check {
                name,
                passed,
                detail,
                seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn dense(op: &OperatorSum) -> Result<crate::pauli::DenseMatrix> {
    match realize(op, Format::Dense)? {
        Realized::Dense(m) => Ok(m),
        Realized::Sparse(_) => unreachable!("dense format requested"),
    }
}

fn random_string(rng: &mut ChaCha8Rng, n: usize) -> Result<PauliString> {
    let factors: Vec<(usize, Pauli)> = (0..n)
        .filter_map(|s| match rng.random_range(0..4) {
            1 => Some((s, Pauli::X)),
            2 => Some((s, Pauli::Y)),
            3 => Some((s, Pauli::Z)),
            _ => None,
        })
        .collect();
    PauliString::real(n, factors, 1.0)
}

fn pauli_products() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 4;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let a = random_string(&mut rng, n)?;
        let b = random_string(&mut rng, n)?;
        let ab = dense(&OperatorSum::from(a.multiply(&b)?))?;
        let prod = dense(&OperatorSum::from(a))?.matmul(&dense(&OperatorSum::from(b))?);
        worst = worst.max(ab.max_abs_diff(&prod));
    }
    Ok((worst < 1e-14, format!("max deviation {worst:.1e}")))
}

fn symmetries() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut weakest = f64::INFINITY;
    for n in [6, 8] {
        let (o1, o2, u1) = symmetry_generators(n)?;
        for bz in [0.0, 0.5, 1.5] {
            let h = cluster_hamiltonian(n, bz)?;
            for g in [&OperatorSum::from(o1.clone()), &OperatorSum::from(o2.clone()), &u1] {
                worst = worst.max(commutator_norm(g, &h)?);
            }
            let mut hb = h.clone();
            hb.add_scaled(&build_cluster(&ModelParams::new(n, 1.0, 1.0, 0.0, 1.0))?.h3, -0.5)?;
            for g in [&OperatorSum::from(o1.clone()), &OperatorSum::from(o2.clone()), &u1] {
                weakest = weakest.min(commutator_norm(g, &hb)?);
            }
        }
    }
    Ok((
        worst < 1e-12 && weakest > 0.1,
        format!("max commutator {worst:.1e}; with boundary field min {weakest:.3}"),
    ))
}

fn cluster_xy_spectra() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in [4, 6, 8] {
        for &(j1, j2, alpha) in &[(-1.0, 1.0, 0.5), (1.0, -1.0, -0.3), (1.0, 1.0, 1.0)] {
            let p = ModelParams::new(n, j1, j2, alpha, 0.0);
            let a = ed::full_spectrum(&build_cluster(&p)?.hamiltonian)?;
            let b = ed::full_spectrum(&build_xy(&p)?)?;
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    Ok((worst < 1e-10, format!("max level difference {worst:.1e}")))
}

fn quadruplet() -> Result<(bool, String)> {
    let p = ModelParams::new(8, -1.0, 1.0, 1.0, 0.0);
    let b = build_cluster(&p)?;
    let gs = ed::ground_space(&b.hamiltonian, 6, 1e-10)?;
    let x = b.h3.scaled(0.5);
    let e = ed::subspace_extent(&gs, &x, "x3")?;
    let pb = build_cluster(&p.with_boundary(Boundary::Pbc))?;
    let gp = ed::ground_space(&pb.hamiltonian, 2, 1e-10)?;
    let ok = gs.degeneracy == 4
        && (e.min_val + 1.0).abs() < 1e-8
        && (e.max_val - 1.0).abs() < 1e-8
        && gp.degeneracy == 1;
    Ok((
        ok,
        format!(
            "OBC degeneracy {} extent [{:.10}, {:.10}]; PBC degeneracy {}",
            gs.degeneracy, e.min_val, e.max_val, gp.degeneracy
        ),
    ))
}

fn lanczos_vs_dense() -> Result<(bool, String)> {
    let h = build_cluster(&ModelParams::new(10, 1.0, -1.0, 0.4, 0.2))?.hamiltonian;
    let mut opts = EdOptions {
        k: 4,
        solver: Solver::Dense,
        ..EdOptions::default()
    };
    let d = ed::ground_space_with(&h, &opts)?;
    opts.solver = Solver::Lanczos;
    let l = ed::ground_space_with(&h, &opts)?;
    let worst = d
        .energies
        .iter()
        .zip(&l.energies)
        .take(4)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((worst < 1e-8, format!("max difference of 4 lowest levels {worst:.1e}")))
}

fn variational() -> Result<(bool, String)> {
    let h = build_cluster(&ModelParams::new(8, -1.0, 1.0, 0.2, 0.3))?.hamiltonian;
    let e0 = ed::ground_space(&h, 1, 1e-8)?.e0();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut lowest = f64::INFINITY;
    for _ in 0..20 {
        let mut v: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        lowest = lowest.min(ed::expectation(&v, &h)?);
    }
    Ok((lowest >= e0 - 1e-10, format!("E0 {e0:.6}; lowest random energy {lowest:.6}")))
}

fn small_sweep(mode: CoordinateMode) -> SweepConfig {
    SweepConfig {
        alpha: vec![-0.6, 0.0, 0.5, 1.0],
        bx: vec![0.0, 0.05, 0.7, f64::INFINITY],
        ..SweepConfig::ed(8, Boundary::Obc, mode)
    }
}

fn supporting_planes() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for s in sweep_boundary(&small_sweep(CoordinateMode::BoundaryField))? {
        if s.params.is_field_limit() {
            continue;
        }
        let b = build_cluster(&s.params)?;
        worst = worst.max((b.plane_energy(s.point) - s.e0).abs());
    }
    Ok((worst < 1e-9, format!("max plane residual {worst:.1e}")))
}

fn reflection() -> Result<(bool, String)> {
    let mut cfg = small_sweep(CoordinateMode::BoundaryField);
    cfg.j1 = vec![1.0];
    let a = sweep_boundary(&cfg)?;
    cfg.j1 = vec![-1.0];
    let b = sweep_boundary(&cfg)?;
    let mut worst: f64 = 0.0;
    for (s, t) in a.iter().zip(&b) {
        if s.degeneracy != Some(1) {
            continue;
        }
        worst = worst
            .max((s.point[0] + t.point[0]).abs())
            .max((s.point[1] - t.point[1]).abs())
            .max((s.point[2] - t.point[2]).abs());
    }
    Ok((worst < 1e-9, format!("max mismatch {worst:.1e}")))
}

fn flat_top() -> Result<(bool, String)> {
    let mut cfg = small_sweep(CoordinateMode::BoundaryField);
    cfg.bx = vec![f64::INFINITY];
    let s = sweep_boundary(&cfg)?;
    let worst = s.iter().map(|x| (x.point[2] - 1.0).abs()).fold(0.0, f64::max);
    Ok((worst < 1e-10, format!("max |x3 - 1| {worst:.1e} over {} samples", s.len())))
}

fn bulk_extent() -> Result<(bool, String)> {
    let mut detail = Vec::new();
    let mut ok = true;
    for n in [6, 8] {
        let cfg = SweepConfig {
            j1: vec![-1.0],
            j2: vec![1.0],
            alpha: vec![1.0],
            bx: vec![0.0],
            ..SweepConfig::ed(n, Boundary::Obc, CoordinateMode::BulkFieldNormalized)
        };
        let w = detect_ruled(&sweep_boundary(&cfg)?, 0.0)
            .iter()
            .map(|s| s.width)
            .fold(0.0, f64::max);
        ok &= (w - 4.0 / n as f64).abs() < 1e-8;
        detail.push(format!("N={n}: {w:.10}"));
    }
    Ok((ok, detail.join(", ")))
}

fn tebd_small() -> Result<(bool, String)> {
    let b = build_cluster(&ModelParams::new(6, 1.0, 1.0, 0.3, 0.4))?;
    let e0 = ed::ground_space(&b.hamiltonian, 2, 1e-8)?.e0();
    let out = tebd_ground(&b, 8, &TebdSchedule::default(), 3)?;
    let mut buf = Vec::new();
    out.state.write_to(&mut buf, "{}")?;
    let (back, _) = Mps::read_from(&mut buf.as_slice())?;
    let rel = (out.energy - e0).abs() / e0.abs();
    Ok((
        rel < 1e-8 && back.tensors() == out.state.tensors(),
        format!("relative energy error {rel:.1e}"),
    ))
}

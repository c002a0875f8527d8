//! Parameter sweeps over the model family, ruled-segment detection and the
//! derived scaling studies.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ed::{self, EdOptions, SegmentExtent};
use crate::error::{Error, Result};
use crate::hull::upper_hull_values;
use crate::models::{build_cluster, Boundary, FieldMode, ModelBundle, ModelParams};
use crate::mps::mps_expectation;
use crate::pauli::{OperatorSum, Pauli, PauliString};
use crate::tebd::{tebd_ground, TebdSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Engine {
    Ed,
    Tebd { bond_dim: usize },
}

impl Engine {
    pub fn label(self) -> &'static str {
        match self {
            Engine::Ed => "ed",
            Engine::Tebd { .. } => "tebd",
        }
    }

    pub fn bond_dim(self) -> Option<usize> {
        match self {
            Engine::Ed => None,
            Engine::Tebd { bond_dim } => Some(bond_dim),
        }
    }
}

/// How the field enters the Hamiltonian and how the third coordinate is
/// measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateMode {
    /// Field on the two end sites; `x3 = ⟨X_0 + X_{N-1}⟩ / 2`.
    BoundaryField,
    /// Field on every site; `x3 = ⟨Σ X⟩ / N`.
    BulkFieldNormalized,
    /// Field on every site; `x3 = ⟨X_0 + X_{N-1}⟩` without normalization.
    BoundaryUnnormalized,
}

impl CoordinateMode {
    pub fn label(self) -> &'static str {
        match self {
            CoordinateMode::BoundaryField => "boundary_field",
            CoordinateMode::BulkFieldNormalized => "bulk_field_normalized",
            CoordinateMode::BoundaryUnnormalized => "boundary_unnormalized",
        }
    }

    pub fn field_mode(self) -> FieldMode {
        match self {
            CoordinateMode::BoundaryField => FieldMode::BoundaryOnly,
            _ => FieldMode::Bulk,
        }
    }

    /// The third coordinate's operator, already divided by its norm.
    pub fn third_coordinate(self, n: usize) -> Result<OperatorSum> {
        let ends = [0, n - 1];
        let (sites, norm): (Vec<usize>, f64) = match self {
            CoordinateMode::BoundaryField => (ends.to_vec(), 2.0),
            CoordinateMode::BulkFieldNormalized => ((0..n).collect(), n as f64),
            CoordinateMode::BoundaryUnnormalized => (ends.to_vec(), 1.0),
        };
        let terms = sites
            .into_iter()
            .map(|s| PauliString::real(n, [(s, Pauli::X)], 1.0 / norm))
            .collect::<Result<_>>()?;
        OperatorSum::from_terms(n, terms)
    }

    /// Whether the measured operators are exactly those in the Hamiltonian,
    /// so each sample lies on its own supporting plane.
    pub fn is_dual(self) -> bool {
        self != CoordinateMode::BoundaryUnnormalized
    }

    /// Bound on `|x3|`.
    pub fn x3_bound(self) -> f64 {
        match self {
            CoordinateMode::BoundaryUnnormalized => 2.0,
            _ => 1.0,
        }
    }
}

fn default_j() -> Vec<f64> {
    vec![-1.0, 1.0]
}

fn default_alpha() -> Vec<f64> {
    alpha_grid(81)
}

fn default_bx() -> Vec<f64> {
    vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0]
}

fn default_threshold() -> f64 {
    1e-3
}

/// `m` uniform points on `[-1, 1]`.
pub fn alpha_grid(m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.0];
    }
    (0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub engine: Engine,
    pub n_sites: usize,
    pub boundary: Boundary,
    pub mode: CoordinateMode,
    #[serde(default = "default_j")]
    pub j1: Vec<f64>,
    #[serde(default = "default_j")]
    pub j2: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    /// Field strengths; `inf` selects the field-dominated limit.
    #[serde(default = "default_bx", with = "float_list")]
    pub bx: Vec<f64>,
    #[serde(default)]
    pub bz: f64,
    #[serde(default)]
    pub ed: EdOptions,
    #[serde(default)]
    pub tebd: TebdSchedule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub width_threshold: f64,
}

/// Serde helpers for float lists that may contain `inf`.
pub mod float_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum F {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|&x| if x.is_finite() { F::Num(x) } else { F::Text(format!("{x}")) })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<F>::deserialize(d)?
            .into_iter()
            .map(|f| match f {
                F::Num(x) => Ok(x),
                F::Text(t) => t.parse::<f64>().map_err(serde::de::Error::custom),
            })
            .collect()
    }
}

impl SweepConfig {
    /// ED sweep over the full default grid.
    pub fn ed(n_sites: usize, boundary: Boundary, mode: CoordinateMode) -> Self {
        SweepConfig {
            engine: Engine::Ed,
            n_sites,
            boundary,
            mode,
            j1: default_j(),
            j2: default_j(),
            alpha: default_alpha(),
            bx: default_bx(),
            bz: 0.0,
            ed: EdOptions {
                k: 2,
                ..EdOptions::default()
            },
            tebd: TebdSchedule::default(),
            seed: 0,
            width_threshold: default_threshold(),
        }
    }

    pub fn tebd(n_sites: usize, bond_dim: usize, boundary: Boundary, mode: CoordinateMode) -> Self {
        SweepConfig {
            engine: Engine::Tebd { bond_dim },
            ..SweepConfig::ed(n_sites, boundary, mode)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grids = [("j1", &self.j1), ("j2", &self.j2), ("alpha", &self.alpha), ("bx", &self.bx)];
        for (name, g) in grids {
            if g.is_empty() {
                return Err(Error::Parameter(format!("{name} grid is empty")));
            }
        }
        for &a in &self.alpha {
            if !(-1.0..=1.0).contains(&a) {
                return Err(Error::Parameter(format!("alpha {a} lies outside [-1, 1]")));
            }
        }
        if let Engine::Tebd { bond_dim } = self.engine {
            if bond_dim < 2 {
                return Err(Error::Parameter("TEBD needs bond dimension at least 2".into()));
            }
            self.tebd.validate()?;
        } else if self.n_sites > ed::LANCZOS_MAX_SITES {
            return Err(Error::Capacity {
                what: "exact diagonalization",
                limit: ed::LANCZOS_MAX_SITES,
                n_sites: self.n_sites,
            });
        }
        if !(self.width_threshold >= 0.0) {
            return Err(Error::Parameter("width_threshold must be nonnegative".into()));
        }
        // Each grid point must be a valid model.
        for p in self.points() {
            p.validate()?;
        }
        Ok(())
    }

    /// Grid points in output order: `j1`, then `j2`, then `alpha`, then `bx`.
    pub fn points(&self) -> Vec<ModelParams> {
        let mut out = Vec::with_capacity(self.j1.len() * self.j2.len() * self.alpha.len() * self.bx.len());
        for &j1 in &self.j1 {
            for &j2 in &self.j2 {
                for &alpha in &self.alpha {
                    for &bx in &self.bx {
                        out.push(
                            ModelParams::new(self.n_sites, j1, j2, alpha, bx)
                                .with_boundary(self.boundary)
                                .with_field_mode(self.mode.field_mode())
                                .with_bz(self.bz),
                        );
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub params: ModelParams,
    pub mode: CoordinateMode,
    pub engine: Engine,
    /// `(x1, x2, x3)`; NaN when the engine failed.
    pub point: [f64; 3],
    pub e0: f64,
    /// ED only; NaN when the multiplet fills the Hilbert space.
    pub gap: Option<f64>,
    pub degeneracy: Option<usize>,
    /// Range of `x3` over the ED ground multiplet.
    pub extent: Option<SegmentExtent>,
    pub trunc_weight: Option<f64>,
    pub error: Option<String>,
}

impl BoundarySample {
    fn failed(params: ModelParams, mode: CoordinateMode, engine: Engine, e: &Error) -> Self {
        BoundarySample {
            params,
            mode,
            engine,
            point: [f64::NAN; 3],
            e0: f64::NAN,
            gap: None,
            degeneracy: None,
            extent: None,
            trunc_weight: None,
            error: Some(e.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

pub fn sample_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn first_two(b: &ModelBundle) -> Result<[OperatorSum; 2]> {
    Ok([b.h1.scaled(1.0 / b.norms[0]), b.h2.scaled(1.0 / b.norms[1])])
}

/// Solves one grid point.
pub fn solve_point(
    params: &ModelParams,
    mode: CoordinateMode,
    engine: Engine,
    ed_opts: &EdOptions,
    schedule: &TebdSchedule,
    seed: u64,
) -> Result<BoundarySample> {
    let bundle = build_cluster(params)?;
    let [o1, o2] = first_two(&bundle)?;
    let o3 = mode.third_coordinate(params.n_sites)?;
    let mut s = BoundarySample {
        params: *params,
        mode,
        engine,
        point: [0.0; 3],
        e0: 0.0,
        gap: None,
        degeneracy: None,
        extent: None,
        trunc_weight: None,
        error: None,
    };
    match engine {
        Engine::Ed => {
            let gs = ed::ground_space_with(&bundle.hamiltonian, ed_opts)?;
            let v = &gs.ground_vectors()[0];
            s.point = [ed::expectation(v, &o1)?, ed::expectation(v, &o2)?, ed::expectation(v, &o3)?];
            s.e0 = gs.e0();
            s.gap = Some(gs.gap_above);
            s.degeneracy = Some(gs.degeneracy);
            s.extent = Some(ed::extent_over(gs.ground_vectors(), &o3, "x3")?);
        }
        Engine::Tebd { bond_dim } => {
            let out = tebd_ground(&bundle, bond_dim, schedule, seed)?;
            s.point = [
                mps_expectation(&out.state, &o1)?,
                mps_expectation(&out.state, &o2)?,
                mps_expectation(&out.state, &o3)?,
            ];
            s.e0 = out.energy;
            s.trunc_weight = Some(out.trunc_weight);
        }
    }
    Ok(s)
}

/// Runs every grid point. Points are solved in parallel and returned in
/// grid order; a failing point carries its error instead of aborting.
pub fn sweep_boundary(cfg: &SweepConfig) -> Result<Vec<BoundarySample>> {
    cfg.validate()?;
    let points = cfg.points();
    Ok(points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            solve_point(p, cfg.mode, cfg.engine, &cfg.ed, &cfg.tebd, sample_seed(cfg.seed, i))
                .unwrap_or_else(|e| BoundarySample::failed(*p, cfg.mode, cfg.engine, &e))
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuledSegment {
    pub params: ModelParams,
    pub engine: Engine,
    /// Index of the coordinate the segment runs along.
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

/// TEBD fibers with a field at most this strong count as lying on the
/// `bx → 0` line.
pub const TEBD_SMALL_FIELD: f64 = 1e-2;

/// Fiber key for TEBD samples: everything except `alpha`.
type FiberKey = (u64, u64, Boundary, CoordinateMode, Engine, u64, usize);

fn fiber_key(s: &BoundarySample) -> FiberKey {
    let p = &s.params;
    (p.j1.to_bits(), p.j2.to_bits(), p.boundary, s.mode, s.engine, p.bx.to_bits(), p.n_sites)
}

/// Upper-hull segment half-width for each TEBD sample, keyed by input
/// index. Along a fiber of fixed couplings and field, `|x3|` is replaced
/// by the upper hull of `(alpha, |x3|)`, and the segment is `[-U, U]`.
pub fn tebd_hull_extents(samples: &[BoundarySample]) -> BTreeMap<usize, f64> {
    let mut fibers: BTreeMap<FiberKey, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        if matches!(s.engine, Engine::Tebd { .. }) && s.is_ok() && s.params.bx <= TEBD_SMALL_FIELD {
            fibers.entry(fiber_key(s)).or_default().push(i);
        }
    }
    let mut out = BTreeMap::new();
    for idx in fibers.values() {
        let xy: Vec<(f64, f64)> = idx
            .iter()
            .map(|&i| (samples[i].params.alpha, samples[i].point[2].abs()))
            .collect();
        for (&i, u) in idx.iter().zip(upper_hull_values(&xy)) {
            out.insert(i, u);
        }
    }
    out
}

/// Ruled segments along `x3` wider than `width_threshold`.
///
/// ED samples report the extent of `x3` over a ground multiplet of size at
/// least two. TEBD samples on small-field fibers report `[-U, U]` with `U`
/// the upper hull of `|x3|` along the fiber.
pub fn detect_ruled(samples: &[BoundarySample], width_threshold: f64) -> Vec<RuledSegment> {
    let hulls = tebd_hull_extents(samples);
    let mut out = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if !s.is_ok() {
            continue;
        }
        let seg = match s.engine {
            Engine::Ed => match (&s.extent, s.degeneracy) {
                (Some(e), Some(d)) if d >= 2 => Some((e.min_val, e.max_val)),
                _ => None,
            },
            Engine::Tebd { .. } => hulls.get(&i).map(|&u| (-u, u)),
        };
        if let Some((lo, hi)) = seg {
            if hi - lo > width_threshold {
                out.push(RuledSegment {
                    params: s.params,
                    engine: s.engine,
                    axis: 2,
                    lo,
                    hi,
                    width: hi - lo,
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n_sites: usize,
    /// Widest ruled segment of the sweep (zero if none).
    pub width: f64,
}

/// Runs the sweep in `BulkFieldNormalized` mode at each chain length and
/// reports the widest ruled segment.
pub fn bulk_normalization_decay(cfg: &SweepConfig, n_list: &[usize]) -> Result<Vec<DecayRow>> {
    n_list
        .iter()
        .map(|&n| {
            let c = SweepConfig {
                n_sites: n,
                mode: CoordinateMode::BulkFieldNormalized,
                ..cfg.clone()
            };
            let samples = sweep_boundary(&c)?;
            let width = detect_ruled(&samples, 0.0)
                .iter()
                .map(|s| s.width)
                .fold(0.0, f64::max);
            Ok(DecayRow { n_sites: n, width })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub bond_dim: usize,
    #[serde(with = "crate::models::float_or_inf")]
    pub bx: f64,
    /// Largest `2U` over the samples with `alpha` inside the window.
    pub width: f64,
}

/// Apparent ruled width near the transition for each bond dimension and
/// each field of the grid. The sweep itself covers every `alpha` in the
/// config; the width is read off inside `alpha_window`.
pub fn finite_d_scaling(
    cfg: &SweepConfig,
    d_list: &[usize],
    alpha_window: (f64, f64),
) -> Result<(Vec<ScalingRow>, Vec<BoundarySample>)> {
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for &d in d_list {
        let c = SweepConfig {
            engine: Engine::Tebd { bond_dim: d },
            ..cfg.clone()
        };
        let samples = sweep_boundary(&c)?;
        let hulls = tebd_hull_extents(&samples);
        for &bx in &cfg.bx {
            let width = samples
                .iter()
                .enumerate()
                .filter(|(_, s)| s.params.bx == bx)
                .filter(|(_, s)| (alpha_window.0..=alpha_window.1).contains(&s.params.alpha))
                .filter_map(|(i, _)| hulls.get(&i))
                .map(|u| 2.0 * u)
                .fold(f64::NAN, f64::max);
            rows.push(ScalingRow { bond_dim: d, bx, width });
        }
        all.extend(samples);
    }
    Ok((rows, all))
}

/// Output columns, in order.
pub const CSV_COLUMNS: [&str; 17] = [
    "j1",
    "j2",
    "alpha",
    "bx",
    "boundary",
    "mode",
    "engine",
    "D",
    "e0",
    "gap",
    "degeneracy",
    "x1",
    "x2",
    "x3",
    "seg_lo",
    "seg_hi",
    "trunc_weight",
];

/// One CSV row. Missing values are empty fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub j1: f64,
    pub j2: f64,
    pub alpha: f64,
    pub bx: f64,
    pub boundary: Boundary,
    pub mode: CoordinateMode,
    pub engine: String,
    #[serde(rename = "D")]
    pub d: Option<usize>,
    pub e0: f64,
    pub gap: Option<f64>,
    pub degeneracy: Option<usize>,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub seg_lo: Option<f64>,
    pub seg_hi: Option<f64>,
    pub trunc_weight: Option<f64>,
}

fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// Segment endpoints written for a sample: the ED multiplet extent, or the
/// TEBD hull segment.
fn segment_of(s: &BoundarySample, hull: Option<f64>) -> (Option<f64>, Option<f64>) {
    match (&s.extent, hull) {
        (Some(e), _) => (Some(e.min_val), Some(e.max_val)),
        (None, Some(u)) => (Some(-u), Some(u)),
        _ => (None, None),
    }
}

/// Writes samples as CSV with the fixed column order. Floats use 17
/// significant digits so values round-trip exactly.
pub fn write_csv<W: Write>(samples: &[BoundarySample], w: W) -> Result<()> {
    let hulls = tebd_hull_extents(samples);
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for (i, s) in samples.iter().enumerate() {
        let p = &s.params;
        let (lo, hi) = segment_of(s, hulls.get(&i).copied());
        out.write_record([
            fmt(p.j1),
            fmt(p.j2),
            fmt(p.alpha),
            fmt(p.bx),
            p.boundary.label().to_string(),
            s.mode.label().to_string(),
            s.engine.label().to_string(),
            s.engine.bond_dim().map(|d| d.to_string()).unwrap_or_default(),
            fmt(s.e0),
            fmt_opt(s.gap),
            s.degeneracy.map(|d| d.to_string()).unwrap_or_default(),
            fmt(s.point[0]),
            fmt(s.point[1]),
            fmt(s.point[2]),
            fmt_opt(lo),
            fmt_opt(hi),
            fmt_opt(s.trunc_weight),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`], checking the header.
pub fn read_csv<R: Read>(r: R) -> Result<Vec<CsvRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    rd.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Run metadata written next to each CSV. Per-sample seeds derive from
/// the recorded base seed and the sample's grid index.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub n_samples: usize,
    pub failures: Vec<(usize, String)>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub wall_seconds: f64,
    #[serde(default)]
    pub extra: serde_json::Value,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, config: &C, samples: &[BoundarySample], seeds: Vec<u64>) -> Result<Self> {
        Ok(Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seeds,
            n_samples: samples.len(),
            failures: samples
                .iter()
                .enumerate()
                .filter_map(|(i, s)| s.error.clone().map(|e| (i, e)))
                .collect(),
            outputs: Vec::new(),
            wall_seconds: 0.0,
            extra: serde_json::Value::Null,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(boundary: Boundary, mode: CoordinateMode) -> SweepConfig {
        SweepConfig {
            j1: vec![-1.0],
            j2: vec![1.0],
            alpha: vec![-0.5, 1.0],
            bx: vec![0.0, 0.3, f64::INFINITY],
            ..SweepConfig::ed(8, boundary, mode)
        }
    }

    #[test]
    fn ed_sweep_detects_the_alpha_one_quadruplet() {
        let s = sweep_boundary(&small(Boundary::Obc, CoordinateMode::BoundaryField)).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s.iter().all(|x| x.is_ok()));
        let segs = detect_ruled(&s, 1e-3);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].params.alpha, 1.0);
        assert_eq!(segs[0].params.bx, 0.0);
        assert!((segs[0].width - 2.0).abs() < 1e-8);
        let pbc = sweep_boundary(&small(Boundary::Pbc, CoordinateMode::BoundaryField)).unwrap();
        assert!(detect_ruled(&pbc, 1e-6).is_empty());
    }

    #[test]
    fn samples_sit_on_their_supporting_planes() {
        for mode in [CoordinateMode::BoundaryField, CoordinateMode::BulkFieldNormalized] {
            for s in sweep_boundary(&small(Boundary::Obc, mode)).unwrap() {
                if s.params.is_field_limit() {
                    assert!((s.point[2] - 1.0).abs() < 1e-10);
                    continue;
                }
                let b = build_cluster(&s.params).unwrap();
                let mut x = s.point;
                // Bundle norms use 2 for the third coordinate.
                x[2] *= match mode {
                    CoordinateMode::BulkFieldNormalized => s.params.n_sites as f64 / 2.0,
                    _ => 1.0,
                };
                assert!((b.plane_energy(x) - s.e0).abs() < 1e-9, "{mode:?} {:?}", s.params);
            }
        }
    }

    #[test]
    fn failures_attach_to_samples() {
        let mut cfg = small(Boundary::Obc, CoordinateMode::BoundaryField);
        cfg.ed.solver = ed::Solver::Lanczos;
        cfg.ed.max_restarts = 0;
        cfg.ed.krylov_dim = 2;
        let s = sweep_boundary(&cfg).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s.iter().any(|x| !x.is_ok()));
        let failed = s.iter().find(|x| !x.is_ok()).unwrap();
        assert!(failed.point[0].is_nan());
    }

    #[test]
    fn csv_round_trip() {
        let s = sweep_boundary(&small(Boundary::Obc, CoordinateMode::BoundaryField)).unwrap();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&CSV_COLUMNS.join(",")));
        let rows = read_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), s.len());
        for (r, x) in rows.iter().zip(&s) {
            assert_eq!(r.x1, x.point[0]);
            assert_eq!(r.x3, x.point[2]);
            assert_eq!(r.e0, x.e0);
            assert_eq!(r.bx, x.params.bx);
            assert_eq!(r.degeneracy, x.degeneracy);
            assert_eq!(r.seg_lo, x.extent.as_ref().map(|e| e.min_val));
            assert_eq!(r.d, None);
        }
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn config_json_round_trip_keeps_infinite_fields() {
        let cfg = small(Boundary::Obc, CoordinateMode::BoundaryField);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"inf\""));
        let back: SweepConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.bx[2], f64::INFINITY);
        assert_eq!(back, cfg);
    }

    #[test]
    fn tebd_hull_extent_along_a_fiber() {
        let mk = |alpha: f64, x3: f64| BoundarySample {
            params: ModelParams::new(8, 1.0, 1.0, alpha, 0.0),
            mode: CoordinateMode::BoundaryField,
            engine: Engine::Tebd { bond_dim: 8 },
            point: [0.0, 0.0, x3],
            e0: 0.0,
            gap: None,
            degeneracy: None,
            extent: None,
            trunc_weight: Some(0.0),
            error: None,
        };
        let s = vec![mk(0.0, 0.9), mk(0.5, -0.1), mk(1.0, 0.8), mk(-0.5, 0.0)];
        let segs = detect_ruled(&s, 1e-3);
        assert_eq!(segs.len(), 3);
        let mid = segs.iter().find(|g| g.params.alpha == 0.5).unwrap();
        assert!((mid.width - 1.7).abs() < 1e-12);
    }
}

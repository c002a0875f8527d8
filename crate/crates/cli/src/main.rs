mod config;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use spt_geometry::ed::{self, EdOptions};
use spt_geometry::hull::convexity_check;
use spt_geometry::scan::{
    bulk_normalization_decay, detect_ruled, finite_d_scaling, sweep_boundary, write_csv,
    BoundarySample, CoordinateMode, Engine, Manifest, SweepConfig,
};
use spt_geometry::tebd::TebdSchedule;
use spt_geometry::{verify, Boundary, Error, ModelParams, Result};

use config::ConfigFile;

#[derive(Parser, Debug)]
#[command(name = "spt-geometry", version, about = "Ground-state convex geometry of the 1D cluster model")]
struct Cli {
    /// TOML configuration file (see configs/example.toml).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for sweep points (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Chain length.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// MPS bond dimension; selects the TEBD engine for `sweep`.
    #[arg(long, global = true)]
    bond_dim: Option<usize>,
    #[arg(long, global = true, value_enum)]
    boundary: Option<BoundaryArg>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundaryArg {
    Obc,
    Pbc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Boundary,
    BulkNorm,
    BoundaryUnnorm,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lowest ED levels at one parameter point.
    Spectrum {
        #[arg(long)]
        alpha: Option<f64>,
        /// Field strength; `inf` selects the field-dominated limit.
        #[arg(long)]
        bx: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        j1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        j2: Option<f64>,
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Generic sweep driven by the config file and flags.
    Sweep,
    /// N=12 ED boundary-field sweeps, OBC and PBC.
    Fig3,
    /// N=60 TEBD boundary-field sweeps at D=40, OBC and PBC.
    Fig4,
    /// Bond-dimension scaling of the apparent ruled width near alpha=0 (PBC).
    Fig5,
    /// Bulk-field sweep with normalized third coordinate, and its N-scaling.
    Fig6,
    /// Unnormalized boundary coordinate and the convexity report.
    Fig7,
    /// Runs the self-check suite.
    Verify,
}

struct Ctx {
    cli: Cli,
    file: ConfigFile,
}

impl Ctx {
    /// Subcommand defaults, then the config file, then flags.
    fn sweep_config(&self, mut cfg: SweepConfig) -> SweepConfig {
        self.file.apply(&mut cfg);
        let c = &self.cli;
        if let Some(n) = c.n {
            cfg.n_sites = n;
        }
        if let Some(d) = c.bond_dim {
            cfg.engine = Engine::Tebd { bond_dim: d };
        }
        if let Some(b) = c.boundary {
            cfg.boundary = match b {
                BoundaryArg::Obc => Boundary::Obc,
                BoundaryArg::Pbc => Boundary::Pbc,
            };
        }
        if let Some(m) = c.mode {
            cfg.mode = match m {
                ModeArg::Boundary => CoordinateMode::BoundaryField,
                ModeArg::BulkNorm => CoordinateMode::BulkFieldNormalized,
                ModeArg::BoundaryUnnorm => CoordinateMode::BoundaryUnnormalized,
            };
        }
        if let Some(s) = c.seed {
            cfg.seed = s;
        }
        cfg
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cli.out_dir.join(name)
    }
}

/// Budgeted non-strict schedule for figure sweeps, where near-degenerate
/// points never meet a tight convergence test.
fn figure_schedule() -> TebdSchedule {
    TebdSchedule::budget(&[0.1, 0.03, 0.01], 500)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

/// Runs a sweep and writes `<stem>.csv` and `<stem>.manifest.json`.
fn run_sweep(ctx: &Ctx, command: &str, stem: &str, cfg: &SweepConfig) -> Result<Vec<BoundarySample>> {
    let t = Instant::now();
    let samples = sweep_boundary(cfg)?;
    let csv_path = ctx.out(&format!("{stem}.csv"));
    write_csv(&samples, BufWriter::new(File::create(&csv_path)?))?;
    let mut m = Manifest::new(command, cfg, &samples, vec![cfg.seed])?;
    m.outputs.push(csv_path.display().to_string());
    m.wall_seconds = t.elapsed().as_secs_f64();
    write_json(&ctx.out(&format!("{stem}.manifest.json")), &m)?;
    eprintln!(
        "{stem}: {} samples, {} failed, {:.1}s",
        samples.len(),
        m.failures.len(),
        m.wall_seconds
    );
    Ok(samples)
}

fn segment_summary(samples: &[BoundarySample], threshold: f64) -> serde_json::Value {
    let segs = detect_ruled(samples, threshold);
    let widest = segs.iter().map(|s| s.width).fold(0.0, f64::max);
    json!({ "threshold": threshold, "count": segs.len(), "widest": widest, "segments": segs })
}

fn cmd_spectrum(ctx: &Ctx, alpha: Option<f64>, bx: Option<f64>, j1: Option<f64>, j2: Option<f64>, levels: Option<usize>) -> Result<()> {
    let s = &ctx.file.spectrum;
    let cfg = ctx.sweep_config(SweepConfig::ed(12, Boundary::Obc, CoordinateMode::BoundaryField));
    let params = ModelParams::new(
        cfg.n_sites,
        j1.or(s.j1).unwrap_or(-1.0),
        j2.or(s.j2).unwrap_or(1.0),
        alpha.or(s.alpha).unwrap_or(1.0),
        bx.or(s.bx.as_ref().and_then(|b| b.0.first().copied())).unwrap_or(0.0),
    )
    .with_boundary(cfg.boundary)
    .with_field_mode(cfg.mode.field_mode())
    .with_bz(cfg.bz);
    let bundle = spt_geometry::models::build_cluster(&params)?;
    let opts = EdOptions {
        k: levels.or(s.levels).unwrap_or(ed::MAX_LEVELS),
        ..cfg.ed.clone()
    };
    let t = Instant::now();
    let gs = ed::ground_space_with(&bundle.hamiltonian, &opts)?;
    let path = ctx.out("spectrum.csv");
    let mut w = csv::Writer::from_writer(File::create(&path)?);
    w.write_record(["level", "energy"])?;
    for (i, e) in gs.energies.iter().enumerate() {
        w.write_record([i.to_string(), format!("{e:.16e}")])?;
    }
    w.flush()?;
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": "spectrum",
        "params": params,
        "ed": opts,
        "degeneracy": gs.degeneracy,
        "gap_above": gs.gap_above,
        "max_residual": gs.max_residual,
        "outputs": [path.display().to_string()],
        "wall_seconds": t.elapsed().as_secs_f64(),
    });
    write_json(&ctx.out("spectrum.manifest.json"), &manifest)?;
    for e in &gs.energies {
        println!("{e:.12}");
    }
    Ok(())
}

fn cmd_sweep(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.sweep_config(SweepConfig::ed(12, Boundary::Obc, CoordinateMode::BoundaryField));
    let samples = run_sweep(ctx, "sweep", "sweep", &cfg)?;
    let summary = segment_summary(&samples, cfg.width_threshold);
    write_json(&ctx.out("sweep_segments.json"), &summary)?;
    println!("{}", json!({ "samples": samples.len(), "segments": summary["count"] }));
    Ok(())
}

fn cmd_fig3(ctx: &Ctx) -> Result<()> {
    let mut out = serde_json::Map::new();
    for b in [Boundary::Obc, Boundary::Pbc] {
        let mut cfg = ctx.sweep_config(SweepConfig::ed(12, b, CoordinateMode::BoundaryField));
        cfg.boundary = b;
        let stem = format!("fig3_{}", b.label());
        let samples = run_sweep(ctx, "fig3", &stem, &cfg)?;
        out.insert(b.label().into(), segment_summary(&samples, cfg.width_threshold));
    }
    write_json(&ctx.out("fig3_segments.json"), &out)?;
    println!(
        "{}",
        json!({ "obc_segments": out["obc"]["count"], "pbc_segments": out["pbc"]["count"] })
    );
    Ok(())
}

fn cmd_fig4(ctx: &Ctx) -> Result<()> {
    let mut out = serde_json::Map::new();
    for b in [Boundary::Obc, Boundary::Pbc] {
        let mut base = SweepConfig::tebd(60, 40, b, CoordinateMode::BoundaryField);
        base.tebd = figure_schedule();
        let mut cfg = ctx.sweep_config(base);
        cfg.boundary = b;
        let stem = format!("fig4_{}", b.label());
        let samples = run_sweep(ctx, "fig4", &stem, &cfg)?;
        out.insert(b.label().into(), segment_summary(&samples, cfg.width_threshold));
    }
    write_json(&ctx.out("fig4_segments.json"), &out)?;
    println!("{}", json!({ "obc_widest": out["obc"]["widest"], "pbc_widest": out["pbc"]["widest"] }));
    Ok(())
}

fn cmd_fig5(ctx: &Ctx) -> Result<()> {
    let mut base = SweepConfig::tebd(60, 40, Boundary::Pbc, CoordinateMode::BoundaryField);
    base.tebd = figure_schedule();
    base.j1 = vec![1.0];
    base.j2 = vec![1.0];
    base.alpha = vec![-0.1, -0.05, 0.0, 0.05, 0.1];
    base.bx = vec![0.0, 1e-2];
    let cfg = ctx.sweep_config(base);
    let d_list = ctx.file.fig5.d_list.clone().unwrap_or_else(|| vec![40, 60, 80]);
    let [lo, hi] = ctx.file.fig5.alpha_window.unwrap_or([-0.1, 0.1]);
    let t = Instant::now();
    let (rows, samples) = finite_d_scaling(&cfg, &d_list, (lo, hi))?;
    let per_d = samples.len() / d_list.len().max(1);
    let mut outputs = Vec::new();
    for (k, d) in d_list.iter().enumerate() {
        let chunk = &samples[k * per_d..(k + 1) * per_d];
        let path = ctx.out(&format!("fig5_D{d}.csv"));
        write_csv(chunk, BufWriter::new(File::create(&path)?))?;
        outputs.push(path.display().to_string());
    }
    let mut m = Manifest::new("fig5", &cfg, &samples, vec![cfg.seed])?;
    m.outputs = outputs;
    m.wall_seconds = t.elapsed().as_secs_f64();
    m.extra = json!({ "d_list": d_list, "alpha_window": [lo, hi] });
    write_json(&ctx.out("fig5.manifest.json"), &m)?;
    write_json(&ctx.out("fig5_scaling.json"), &rows)?;
    println!("{}", serde_json::to_string(&rows)?);
    Ok(())
}

fn cmd_fig6(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.sweep_config(SweepConfig::ed(12, Boundary::Obc, CoordinateMode::BulkFieldNormalized));
    let samples = run_sweep(ctx, "fig6", "fig6", &cfg)?;
    write_json(&ctx.out("fig6_segments.json"), &segment_summary(&samples, cfg.width_threshold))?;
    let n_list = ctx.file.fig6.n_list.clone().unwrap_or_else(|| vec![8, 10, 12]);
    let rows = bulk_normalization_decay(&cfg, &n_list)?;
    write_json(&ctx.out("fig6_decay.json"), &rows)?;
    println!("{}", serde_json::to_string(&rows)?);
    Ok(())
}

fn cmd_fig7(ctx: &Ctx) -> Result<()> {
    let tol = ctx.file.fig7.tol.unwrap_or(1e-6);
    let mut out = serde_json::Map::new();
    for (mode, stem) in [
        (CoordinateMode::BoundaryUnnormalized, "fig7_unnormalized"),
        (CoordinateMode::BoundaryField, "fig7_boundary_field"),
    ] {
        let mut cfg = ctx.sweep_config(SweepConfig::ed(12, Boundary::Obc, mode));
        cfg.mode = mode;
        let samples = run_sweep(ctx, "fig7", stem, &cfg)?;
        let pts: Vec<[f64; 3]> = samples.iter().map(|s| s.point).collect();
        out.insert(mode.label().into(), serde_json::to_value(convexity_check(&pts, tol))?);
    }
    write_json(&ctx.out("fig7_convexity.json"), &out)?;
    println!(
        "{}",
        json!({
            "unnormalized_interior": out["boundary_unnormalized"]["interior"].as_array().map_or(0, Vec::len),
            "boundary_field_interior": out["boundary_field"]["interior"].as_array().map_or(0, Vec::len),
        })
    );
    Ok(())
}

fn cmd_verify(ctx: &Ctx) -> Result<bool> {
    let checks = verify::run_suite();
    for c in &checks {
        println!("{} {} ({:.1}s): {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.seconds, c.detail);
    }
    write_json(&ctx.out("verify.json"), &checks)?;
    Ok(checks.iter().all(|c| c.passed))
}

fn error_kind(e: &Error) -> (&'static str, u8) {
    match e {
        Error::Parameter(_) | Error::Dimension { .. } | Error::UnsupportedMapping(_) => ("parameter", 2),
        Error::Parse(_) => ("config", 2),
        Error::Capacity { .. } => ("capacity", 3),
        Error::Convergence { .. } => ("convergence", 4),
        Error::NonHermitian(_) => ("non_hermitian", 4),
        _ => ("io", 1),
    }
}

fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .map_err(|e| Error::Parameter(e.to_string()))?;
    }
    std::fs::create_dir_all(&cli.out_dir)?;
    let ctx = Ctx { cli, file };
    match &ctx.cli.command {
        Command::Spectrum { alpha, bx, j1, j2, levels } => cmd_spectrum(&ctx, *alpha, *bx, *j1, *j2, *levels)?,
        Command::Sweep => cmd_sweep(&ctx)?,
        Command::Fig3 => cmd_fig3(&ctx)?,
        Command::Fig4 => cmd_fig4(&ctx)?,
        Command::Fig5 => cmd_fig5(&ctx)?,
        Command::Fig6 => cmd_fig6(&ctx)?,
        Command::Fig7 => cmd_fig7(&ctx)?,
        Command::Verify => return cmd_verify(&ctx),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let (kind, code) = error_kind(&e);
            eprintln!("{}", json!({ "error": { "kind": kind, "message": e.to_string() } }));
            ExitCode::from(code)
        }
    }
}

//! `connexion`: trace, classify and verify geodesics of Fuchsian connections.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 verification failure.

use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use connexion::config::SceneConfig;
use connexion::connection::FuchsianConnection;
use connexion::geodesic::{trace, GeodesicState, Termination, Trajectory};
use connexion::num_complex::Complex64;
use connexion::omega::classify;
use connexion::render::{RenderScene, Viewport};
use connexion::verify::{self, CheckResult};
use rayon::prelude::*;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "connexion", version, about = "Geodesics of Fuchsian connections on the Riemann sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scene file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file: CSV for `trace`, the text report otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// SVG output.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Overrides the scene seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the integrator step budget.
    #[arg(long, global = true)]
    budget_steps: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the scene schema and the residue sum.
    Validate,
    /// Trace every initial condition to CSV (and optionally SVG).
    Trace,
    /// Classify the limit behaviour of every initial condition.
    Classify,
    /// Phase portrait over a grid of initial conditions.
    Portrait,
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        which: Suite,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Suite {
    Local,
    Teichmuller,
    Saddles,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Failure { code: EXIT_CONFIG, message: message.to_string() }
    }
    fn numeric(message: impl ToString) -> Self {
        Failure { code: EXIT_NUMERIC, message: message.to_string() }
    }
    fn io(path: &Path, e: io::Error) -> Self {
        Failure { code: EXIT_NUMERIC, message: format!("cannot write {}: {e}", path.display()) }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("CONNEXION_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match cli.command {
        Command::Validate => cmd_validate(&cli),
        Command::Trace => cmd_trace(&cli),
        Command::Classify => cmd_classify(&cli),
        Command::Portrait => cmd_portrait(&cli),
        Command::Verify { which } => cmd_verify(&cli, which),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(cli: &Cli) -> Result<(SceneConfig, FuchsianConnection), Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::config("--config is required"))?;
    let mut cfg = SceneConfig::load(&path.to_string_lossy()).map_err(Failure::config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let (conn, _) = cfg.validate().map_err(Failure::config)?;
    Ok((cfg, conn))
}

/// Writes `text` to `--out`, or to stdout.
fn emit(cli: &Cli, text: &str) -> Outcome {
    match &cli.out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::io(p, e)),
        None => {
            let _ = io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn viewport(cfg: &SceneConfig) -> Viewport {
    Viewport { center: cfg.window.center.c(), half_width: cfg.window.half_width, width: cfg.image.width, height: cfg.image.height }
}

fn cmd_validate(cli: &Cli) -> Outcome {
    let path = cli.config.as_ref().ok_or_else(|| Failure::config("--config is required"))?;
    let cfg = SceneConfig::load(&path.to_string_lossy()).map_err(Failure::config)?;
    let (_, report) = cfg.validate().map_err(Failure::config)?;
    let mut text = format!("valid: {} poles, {} initial conditions\n", report.poles.len(), cfg.initial.len());
    for (i, p) in report.poles.iter().enumerate() {
        let r = if p.residue.im == 0.0 { p.rho().to_string() } else { p.residue.to_string() };
        text.push_str(&format!("pole {i}: {} residue {r}\n", p.location));
    }
    for n in &report.notes {
        text.push_str(&format!("note: {n}\n"));
    }
    emit(cli, &text)
}

/// Integration failures count only when they stop the trace before 1% of `t_max`.
fn check_progress(i: usize, traj: &Trajectory, t_max: f64) -> Outcome {
    let failed = matches!(traj.termination(), Termination::ErrorControlFailure | Termination::StepBudget | Termination::WallClock);
    if failed && traj.t_end() < 0.01 * t_max {
        return Err(Failure::numeric(format!("initial[{i}]: integration failed at t = {} ({:?})", traj.t_end(), traj.termination())));
    }
    Ok(())
}

fn indexed_path(base: &Path, i: usize, count: usize) -> PathBuf {
    if count == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.{i}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{i}"),
    };
    base.with_file_name(name)
}

fn cmd_trace(cli: &Cli) -> Outcome {
    let (cfg, conn) = load(cli)?;
    if cfg.initial.is_empty() {
        return Err(Failure::config("no initial conditions"));
    }
    let opts = cfg.trace_options(cli.budget_steps);
    let mut trajs = Vec::new();
    for (i, ic) in cfg.initial.iter().enumerate() {
        let st = GeodesicState::new(&conn, ic.z.c(), ic.v.c());
        let tr = trace(&conn, st, ic.t_max, &opts).map_err(|e| Failure::numeric(format!("initial[{i}]: {e}")))?;
        check_progress(i, &tr, ic.t_max)?;
        trajs.push(tr);
    }
    let n = trajs.len();
    for (i, tr) in trajs.iter().enumerate() {
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).expect("in-memory write");
        match &cli.out {
            Some(p) => {
                let p = indexed_path(p, i, n);
                fs::write(&p, &buf).map_err(|e| Failure::io(&p, e))?;
            }
            None => {
                let _ = io::stdout().write_all(&buf);
            }
        }
    }
    if let Some(p) = &cli.svg {
        let mut scene = RenderScene::with_connection(&conn);
        for tr in &trajs {
            scene.add_trajectory(tr);
        }
        fs::write(p, scene.to_svg(&viewport(&cfg))).map_err(|e| Failure::io(p, e))?;
    }
    Ok(())
}

fn cmd_classify(cli: &Cli) -> Outcome {
    let (cfg, conn) = load(cli)?;
    let mut budget = cfg.classification.clone();
    budget.trace = cfg.integrator.clone();
    if let Some(n) = cli.budget_steps {
        budget.max_steps = n;
    }
    let mut text = String::new();
    for (i, ic) in cfg.initial.iter().enumerate() {
        let v = classify(&conn, GeodesicState::new(&conn, ic.z.c(), ic.v.c()), &budget).map_err(|e| Failure::numeric(format!("initial[{i}]: {e}")))?;
        let d = &v.diagnostics;
        text.push_str(&format!("initial[{i}] {} t_end={:.6} steps={} termination={:?} drift={:.3e}\n", v.tag, d.t_end, d.steps, d.termination, d.drift));
        for n in &d.notes {
            text.push_str(&format!("  note: {n}\n"));
        }
    }
    emit(cli, &text)
}

/// Launch states on a `grid × grid` lattice inside the window.
fn portrait_states(cfg: &SceneConfig, conn: &FuchsianConnection) -> Vec<GeodesicState> {
    let (c, hw) = (cfg.window.center.c(), cfg.window.half_width);
    let g = cfg.portrait.grid.max(1);
    let d = cfg.portrait.directions.max(1);
    let mut out = Vec::new();
    for iy in 0..g {
        for ix in 0..g {
            let z = c + Complex64::new(hw * (2.0 * (ix as f64 + 0.5) / g as f64 - 1.0), hw * (2.0 * (iy as f64 + 0.5) / g as f64 - 1.0));
            if conn.finite_poles().any(|(p, _)| (p - z).norm() < 1e-3 * hw) {
                continue;
            }
            for k in 0..d {
                out.push(GeodesicState::new(conn, z, Complex64::from_polar(1.0, PI * k as f64 / d as f64)));
            }
        }
    }
    out
}

fn cmd_portrait(cli: &Cli) -> Outcome {
    let (cfg, conn) = load(cli)?;
    let opts = cfg.trace_options(cli.budget_steps);
    let t_max = cfg.portrait.t_max;
    let states = portrait_states(&cfg, &conn);
    // Each launch is traced both ways so that whole leaves are drawn.
    let traced: Vec<Vec<Trajectory>> = states
        .par_iter()
        .map(|st| [*st, st.reversed()].iter().filter_map(|s| trace(&conn, *s, t_max, &opts).ok()).collect())
        .collect();
    let mut scene = RenderScene::with_connection(&conn);
    for tr in traced.iter().flatten() {
        scene.add_trajectory(tr);
    }
    let svg = scene.to_svg(&viewport(&cfg));
    match cli.svg.as_ref().or(cli.out.as_ref()) {
        Some(p) => fs::write(p, svg).map_err(|e| Failure::io(p, e)),
        None => {
            let _ = io::stdout().write_all(svg.as_bytes());
            Ok(())
        }
    }
}

fn cmd_verify(cli: &Cli, which: Suite) -> Outcome {
    let cfg = match &cli.config {
        Some(_) => Some(load(cli)?),
        None => None,
    };
    let vcfg = cfg.as_ref().map(|(c, _)| c.verify.clone()).unwrap_or_default();
    let seed = cli.seed.or(cfg.as_ref().map(|(c, _)| c.seed)).unwrap_or(0);
    let checks: Vec<CheckResult> = match which {
        Suite::Local => verify::local_suite(&vcfg.rhos, vcfg.samples, seed),
        Suite::Teichmuller => verify::teichmuller_suite(seed, vcfg.polygons, vcfg.saddle_grid),
        Suite::Saddles => {
            let conn = cfg.as_ref().map(|(_, c)| c.clone()).unwrap_or_else(verify::symmetric_two_gon_connection);
            verify::saddle_suite(&conn, vcfg.saddle_grid)
        }
    };
    let mut text: String = checks.iter().map(|c| format!("{c}\n")).collect();
    let pass = verify::all_pass(&checks);
    text.push_str(if pass { "result: pass\n" } else { "result: fail\n" });
    emit(cli, &text)?;
    match verify::first_failure(&checks) {
        None => Ok(()),
        Some(c) => Err(Failure { code: EXIT_VERIFY, message: format!("check {} failed: value {:.3e} exceeds {:.1e}", c.name, c.value, c.tolerance) }),
    }
}

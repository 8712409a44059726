//! The `pseudorot` command line: build, verify, orbit, measure, feasibility.
//!
//! Exit codes: 0 success, 1 verification failure, 2 infeasible, 3 input error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::analysis::{
    append_ledger, area_defect, bmm_deviation, c0_distance, diophantine_test, rotation_vector_estimate,
    strip_distance, DensityAccumulator, LiftedPoint, Measurement,
};
use crate::config::{Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::geom::{torus_dist, Point};
use crate::induction::{
    advance_stage, feasibility, init_stage1, load_run, orbit_length, stage_file_name, verify_run, write_run,
    FeasibilityReport, Manifest, Mode, RunStatus, Stage, MANIFEST_FILE,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_INPUT: u8 = 3;

pub const BUILD_REPORT: &str = "build-report.txt";
pub const VERIFY_JSON: &str = "verification.json";
pub const VERIFY_TEXT: &str = "verification.txt";
pub const MEASURE_LEDGER: &str = "measurements.jsonl";

#[derive(Debug, Parser)]
#[command(name = "pseudorot", version, about = "Build and check stages of a block-slide pseudo-rotation construction on the 2-torus")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON or TOML run configuration (default: $PSEUDOROT_CONFIG).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Decimal or 0x-prefixed hexadecimal seed.
    #[arg(long, global = true, value_parser = parse_seed)]
    pub seed: Option<u64>,
    /// paper-safe or practical.
    #[arg(long, global = true, value_parser = clap::value_parser!(Mode))]
    pub mode: Option<Mode>,
    /// Number of stages to build.
    #[arg(long, global = true, value_name = "N")]
    pub stages: Option<u32>,
    /// Strip half-width for the analytic closeness checks.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub rho: Option<f64>,
    /// Run directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, mode: self.mode, stages: self.stages, rho: self.rho, out: self.out.clone() }
    }
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected x,y but got {s:?}"));
    }
    let x: f64 = parts[0].parse().map_err(|e| format!("{s:?}: {e}"))?;
    let y: f64 = parts[1].parse().map_err(|e| format!("{s:?}: {e}"))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(format!("non-finite point {s:?}"));
    }
    Ok([x, y])
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build stages 1..N and write them with a manifest into the run directory.
    Build,
    /// Re-run every audit on a stored run.
    Verify {
        /// Manifest file or run directory (default: the run directory).
        manifest: Option<PathBuf>,
    },
    /// Export an orbit of a stored stage as CSV.
    Orbit {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "0,0", value_parser = parse_point, allow_hyphen_values = true)]
        z: Point,
        #[arg(long, default_value_t = 100)]
        steps: u64,
        /// Output CSV (default: orbit-stage-<n>.csv in the run directory).
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        /// Also write the orbits of the stage's witness pair and their distance.
        #[arg(long)]
        witness: bool,
    },
    /// Run one measurement on a stored stage and append it to the ledger.
    Measure {
        #[arg(value_enum)]
        what: MeasureKind,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "0.1,0.2", value_parser = parse_point, allow_hyphen_values = true)]
        z: Point,
        /// Iterations (rotation, bmm) or orbit length (density).
        #[arg(long)]
        steps: Option<u64>,
        /// Sample count for bmm.
        #[arg(long)]
        samples: Option<usize>,
        /// Grid resolution (density, area, c0).
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        gamma: f64,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        #[arg(long, default_value_t = 100)]
        k_max: u32,
        /// JSON-lines ledger (default: measurements.jsonl in the run directory).
        #[arg(long, value_name = "PATH")]
        ledger: Option<PathBuf>,
    },
    /// Print the paper-safe requirement on r for the advance from stage 1.
    Feasibility {
        /// Also tabulate the requirement for these strip widths.
        #[arg(long, value_delimiter = ',', value_name = "RHO,...")]
        sweep: Vec<f64>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Manifest file or run directory (default: the run directory).
    #[arg(long, value_name = "PATH")]
    pub run: Option<PathBuf>,
    /// Stage number (default: the last stored stage).
    #[arg(long)]
    pub stage: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureKind {
    Rotation,
    Bmm,
    Density,
    Area,
    Strip,
    C0,
    Diophantine,
}

impl MeasureKind {
    fn name(self) -> &'static str {
        match self {
            MeasureKind::Rotation => "rotation",
            MeasureKind::Bmm => "bmm",
            MeasureKind::Density => "density",
            MeasureKind::Area => "area",
            MeasureKind::Strip => "strip",
            MeasureKind::C0 => "c0",
            MeasureKind::Diophantine => "diophantine",
        }
    }
}

/// Exit code for an error, looking through stage context.
pub fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Input(_) | Error::Json(_) | Error::Io(_) => EXIT_INPUT,
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        _ => EXIT_VERIFY,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<u8> {
    let mut cfg = RunConfig::resolve(cli.global.config.as_deref())?;
    cfg.apply(&cli.global.overrides())?;
    match &cli.command {
        Command::Build => cmd_build(&cfg, out),
        Command::Verify { manifest } => cmd_verify(manifest.as_deref().unwrap_or(&cfg.out), out),
        Command::Orbit { run, z, steps, csv, witness } => {
            let (dir, stage) = load_stage_arg(&cfg, run)?;
            let csv = csv.clone().unwrap_or_else(|| dir.join(format!("orbit-stage-{}.csv", stage.n)));
            let witness_path = witness.then(|| companion_path(&csv));
            let summary = cmd_orbit(&stage, *z, *steps, &csv, witness_path.as_deref())?;
            write!(out, "{summary}")?;
            Ok(EXIT_OK)
        }
        Command::Measure { what, run, z, steps, samples, grid, gamma, sigma, k_max, ledger } => {
            let path = run.run.clone().unwrap_or_else(|| cfg.out.clone());
            let (manifest, stages) = load_run(&path)?;
            let n = pick_stage(&stages, run.stage)?;
            let opts = MeasureOptions {
                z: *z,
                steps: *steps,
                samples: *samples,
                grid: *grid,
                gamma: *gamma,
                sigma: *sigma,
                k_max: *k_max,
            };
            let m = cmd_measure(*what, &stages, n, &manifest, &opts)?;
            let ledger = ledger.clone().unwrap_or_else(|| run_dir(&path).join(MEASURE_LEDGER));
            append_ledger(&ledger, &m)?;
            writeln!(out, "{}", serde_json::to_string(&m)?)?;
            Ok(EXIT_OK)
        }
        Command::Feasibility { sweep, json } => cmd_feasibility(&cfg, sweep, *json, out),
    }
}

fn run_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
    }
}

fn companion_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "orbit".into());
    csv.with_file_name(format!("{stem}-witness.csv"))
}

fn pick_stage(stages: &[Stage], n: Option<u32>) -> Result<usize> {
    let n = n.unwrap_or(stages.len() as u32);
    if n == 0 || n as usize > stages.len() {
        return Err(Error::Input(format!("stage {n} not in run (stages 1..={})", stages.len())));
    }
    Ok(n as usize - 1)
}

fn load_stage_arg(cfg: &RunConfig, run: &RunArgs) -> Result<(PathBuf, Stage)> {
    let path = run.run.clone().unwrap_or_else(|| cfg.out.clone());
    let (_, mut stages) = load_run(&path)?;
    let i = pick_stage(&stages, run.stage)?;
    Ok((run_dir(&path), stages.swap_remove(i)))
}

/// Stages as built, how the build ended and the consolidated text report.
#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub stages: Vec<Stage>,
    pub manifest: Manifest,
    pub report: String,
    pub exit: u8,
}

pub fn build_run(cfg: &RunConfig) -> Result<BuildOutcome> {
    cfg.validate()?;
    let sched = &cfg.schedule;
    let mut stages = vec![init_stage1(sched)?];
    let mut status = RunStatus::Complete;
    let mut feas: Option<FeasibilityReport> = None;
    while stages.len() < cfg.stages as usize {
        let last = stages.last().expect("stage 1 exists");
        match advance_stage(last, sched) {
            Ok(st) => stages.push(st),
            Err(e) => {
                status = match e.root() {
                    Error::Infeasible { stage, .. } => {
                        feas = Some(feasibility(last, sched)?);
                        RunStatus::Infeasible { stage: *stage }
                    }
                    _ => RunStatus::Error { stage: last.n + 1, message: e.to_string() },
                };
                break;
            }
        }
    }
    let failed: Vec<u32> = stages.iter().filter(|s| !s.audit.certified_pass()).map(|s| s.n).collect();
    if status == RunStatus::Complete && !failed.is_empty() {
        status = RunStatus::AuditFailed { stages: failed };
    }
    let mut report = String::new();
    for st in &stages {
        let _ = write!(report, "{}", st.audit);
        for note in &st.notes {
            let _ = writeln!(report, "  note: {note}");
        }
        report.push('\n');
    }
    if let Some(f) = &feas {
        let _ = write!(report, "{f}");
    }
    let exit = match &status {
        RunStatus::Complete => EXIT_OK,
        RunStatus::Infeasible { .. } => EXIT_INFEASIBLE,
        RunStatus::AuditFailed { .. } | RunStatus::Error { .. } => EXIT_VERIFY,
    };
    let _ = writeln!(report, "status: {}", status_line(&status));
    let manifest = Manifest {
        version: 1,
        schedule: sched.clone(),
        stages: stages.iter().map(|s| stage_file_name(s.n)).collect(),
        status,
        feasibility: feas,
    };
    Ok(BuildOutcome { stages, manifest, report, exit })
}

fn status_line(s: &RunStatus) -> String {
    match s {
        RunStatus::Complete => "complete".into(),
        RunStatus::Infeasible { stage } => format!("infeasible at stage {stage}"),
        RunStatus::AuditFailed { stages } => format!("certified audit failures in stages {stages:?}"),
        RunStatus::Error { stage, message } => format!("error at stage {stage}: {message}"),
    }
}

pub fn cmd_build(cfg: &RunConfig, out: &mut dyn Write) -> Result<u8> {
    let b = build_run(cfg)?;
    let path = write_run(&cfg.out, &b.manifest, &b.stages)?;
    fs::write(cfg.out.join(BUILD_REPORT), &b.report)?;
    write!(out, "{}", b.report)?;
    writeln!(out, "manifest: {}", path.display())?;
    Ok(b.exit)
}

pub fn cmd_verify(path: &Path, out: &mut dyn Write) -> Result<u8> {
    let (manifest, stages) = load_run(path)?;
    let rep = verify_run(&stages, &manifest.schedule);
    let dir = run_dir(path);
    let mut json = serde_json::to_string_pretty(&rep)?;
    json.push('\n');
    fs::write(dir.join(VERIFY_JSON), json)?;
    fs::write(dir.join(VERIFY_TEXT), rep.to_table())?;
    write!(out, "{}", rep.to_table())?;
    if rep.certified_pass() {
        writeln!(out, "verified: every certified check passes")?;
        Ok(EXIT_OK)
    } else {
        let failing: Vec<String> =
            rep.checks.iter().filter(|c| c.certified && !c.pass).map(|c| c.name.clone()).collect();
        writeln!(out, "verification failed:")?;
        for f in failing {
            writeln!(out, "  {f}")?;
        }
        Ok(EXIT_VERIFY)
    }
}

/// Writes `step,x,y,lift_x,lift_y` for `f^k(z)`, `1 <= k <= steps`, and
/// optionally the witness pair's orbits with their torus distance.
pub fn cmd_orbit(stage: &Stage, z: Point, steps: u64, csv: &Path, witness: Option<&Path>) -> Result<String> {
    if steps == 0 {
        return Err(Error::Input("steps must be at least 1".into()));
    }
    let lift = stage.lift_map();
    let mut text = String::from("step,x,y,lift_x,lift_y\n");
    let mut p = LiftedPoint::new(z);
    for k in 1..=steps {
        p = p.step(&lift)?;
        let b = p.base();
        let _ = writeln!(text, "{k},{},{},{},{}", b[0], b[1], p.lift[0], p.lift[1]);
    }
    fs::write(csv, text)?;
    let mut summary = format!("orbit: {} rows -> {}\n", steps, csv.display());
    if let Some(wpath) = witness {
        let len = steps.max(stage.m_n);
        let mut text = String::from("step,x_x,x_y,y_x,y_y,distance\n");
        let (mut a, mut b) = (LiftedPoint::new(stage.x_n), LiftedPoint::new(stage.y_n));
        let mut first_cross = None;
        let mut at_m = f64::NAN;
        for k in 0..=len {
            if k > 0 {
                a = a.step(&lift)?;
                b = b.step(&lift)?;
            }
            let (pa, pb) = (a.base(), b.base());
            let d = torus_dist(pa, pb);
            if k == stage.m_n {
                at_m = d;
            }
            if first_cross.is_none() && d > 1e-3 {
                first_cross = Some(k);
            }
            let _ = writeln!(text, "{k},{},{},{},{},{d}", pa[0], pa[1], pb[0], pb[1]);
        }
        fs::write(wpath, text)?;
        let _ = writeln!(
            summary,
            "witness: {} rows -> {}; distance at m_n = {}: {}; first step with distance > 1/1000: {}",
            len + 1,
            wpath.display(),
            stage.m_n,
            at_m,
            first_cross.map_or("none".to_string(), |k| k.to_string())
        );
    }
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct MeasureOptions {
    pub z: Point,
    pub steps: Option<u64>,
    pub samples: Option<usize>,
    pub grid: Option<usize>,
    pub gamma: f64,
    pub sigma: f64,
    pub k_max: u32,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self { z: [0.1, 0.2], steps: None, samples: None, grid: None, gamma: 1e-6, sigma: 2.0, k_max: 100 }
    }
}

fn previous(stages: &[Stage], i: usize) -> Result<&Stage> {
    if i == 0 {
        return Err(Error::Input("this measurement compares stage n with n-1 and needs n >= 2".into()));
    }
    Ok(&stages[i - 1])
}

/// One analysis measurement on stage `stages[i]`.
pub fn cmd_measure(
    what: MeasureKind,
    stages: &[Stage],
    i: usize,
    manifest: &Manifest,
    o: &MeasureOptions,
) -> Result<Measurement> {
    let sched = &manifest.schedule;
    let st = &stages[i];
    let lift = st.lift_map();
    let omega = st.omega_f64();
    let start = Instant::now();
    let mut params = json!({ "stage": st.n });
    let (value, grid) = match what {
        MeasureKind::Rotation => {
            let steps = o.steps.unwrap_or(10_000);
            params["z"] = json!(o.z);
            params["steps"] = json!(steps);
            let est = rotation_vector_estimate(&lift, LiftedPoint::new(o.z), steps)?;
            let err = ((est[0] - omega[0]).powi(2) + (est[1] - omega[1]).powi(2)).sqrt();
            (json!({ "estimate": est, "omega": omega, "error": err }), json!(null))
        }
        MeasureKind::Bmm => {
            let steps = o.steps.unwrap_or(sched.bmm_steps);
            let count = o.samples.unwrap_or(sched.bmm_samples);
            let mut rng = ChaCha8Rng::seed_from_u64(sched.seed);
            let samples: Vec<Point> = (0..count).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            params["steps"] = json!(steps);
            params["samples"] = json!(count);
            params["seed"] = json!(sched.seed);
            (json!(bmm_deviation(&lift, omega, &samples, steps)?), json!(null))
        }
        MeasureKind::Density => {
            let len = o.steps.unwrap_or_else(|| orbit_length(st, sched));
            let res = o.grid.unwrap_or(1usize << (st.n + 2));
            params["z"] = json!(o.z);
            params["orbit_length"] = json!(len);
            let mut acc = DensityAccumulator::keeping(res, sched.exact_density_limit as usize);
            st.stage_maps().for_each_orbit_point(o.z, len, |_, p| {
                acc.push(p);
                true
            })?;
            (json!(acc.refined_gap()), json!({ "res": res }))
        }
        MeasureKind::Area => {
            let res = o.grid.unwrap_or(64);
            (json!(area_defect(&lift, res)), json!({ "res": res }))
        }
        MeasureKind::Strip => {
            let prev = previous(stages, i)?;
            params["rho"] = json!(sched.rho);
            let d = strip_distance(&lift, &prev.lift_map(), sched.rho, sched.strip)?;
            (json!(d), json!(sched.strip))
        }
        MeasureKind::C0 => {
            let prev = previous(stages, i)?;
            let res = o.grid.unwrap_or(sched.grid);
            (json!(c0_distance(&lift, &prev.lift_map(), res)?), json!({ "res": res }))
        }
        MeasureKind::Diophantine => {
            params["gamma"] = json!(o.gamma);
            params["sigma"] = json!(o.sigma);
            params["k_max"] = json!(o.k_max);
            (json!(diophantine_test(omega, o.gamma, o.sigma, o.k_max)), json!(null))
        }
    };
    Ok(Measurement {
        measure: what.name().into(),
        parameters: params,
        value,
        grid,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

pub fn cmd_feasibility(cfg: &RunConfig, sweep: &[f64], json_out: bool, out: &mut dyn Write) -> Result<u8> {
    let sched = &cfg.schedule;
    let s1 = init_stage1(sched)?;
    let report = feasibility(&s1, sched)?;
    let mut rows = Vec::new();
    for &rho in sweep {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::Input(format!("sweep value {rho} is not a strip width")));
        }
        let mut s = sched.clone();
        s.rho = rho;
        rows.push(feasibility(&s1, &s)?);
    }
    if json_out {
        let v = json!({ "report": report, "sweep": rows });
        writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        return Ok(EXIT_OK);
    }
    write!(out, "{report}")?;
    if !rows.is_empty() {
        writeln!(out, "{:>10}  {:>24}  {:>24}", "rho", "log10 r", "log10 log10 r")?;
        for r in rows {
            let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6e}"));
            writeln!(out, "{:>10}  {:>24}  {:>24}", r.rho, fmt(r.log10_r), fmt(r.log10_log10_r))?;
        }
    }
    Ok(EXIT_OK)
}

/// `manifest.json` inside `dir`.
pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_FILE)
}

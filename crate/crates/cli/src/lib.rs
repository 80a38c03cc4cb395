//! Command-line front end: manifests, runs, field export and plots.

pub mod field;
pub mod manifest;
pub mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;
use svcnav::scenes::Scene;
use svcnav::sensors::{scan_to_safety_input, simulate_lidar};
use svcnav::sim::{batch_run, run, safety_audit, AuditReport, InitialState, Outcome};
use svcnav::sphere_world::undesired_equilibria;
use svcnav::{Environment, LidarScan, Point, SphereWorld, Trajectory};

use crate::field::{export_field, field_csv, field_svg};
use crate::manifest::{load_environment, Format, Loaded, Manifest, FORMAT_VERSION};
use crate::svg::{draw_environment, Canvas};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "svcnav",
    version,
    about = "Safe navigation by tangent-cone projection"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one trajectory and write CSV, SVG and a JSON summary.
    Simulate { manifest: PathBuf },
    /// Run the sampled starts of a manifest and summarize the outcomes.
    Batch { manifest: PathBuf },
    /// Sample the controller on the manifest's field grid.
    Field { manifest: PathBuf },
    /// Print the undesired equilibria of a sphere-world scene.
    Equilibria { manifest: PathBuf },
    /// Dump one lidar scan taken at a point.
    LidarDebug {
        manifest: PathBuf,
        /// Sensor position, `x,y`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        at: [f64; 2],
    },
    /// Check a builtin scene name or an environment file.
    Validate { scene: String },
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected x,y but got '{s}'"));
    }
    let mut out = [0.0; 2];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|_| format!("'{p}' is not a number"))?;
    }
    Ok(out)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Simulate { manifest } => simulate(&Manifest::load(&manifest)?, out),
        Command::Batch { manifest } => batch(&Manifest::load(&manifest)?, out),
        Command::Field { manifest } => field(&Manifest::load(&manifest)?, out),
        Command::Equilibria { manifest } => equilibria(&Manifest::load(&manifest)?, out),
        Command::LidarDebug { manifest, at } => lidar_debug(&Manifest::load(&manifest)?, at, out),
        Command::Validate { scene } => validate(&scene, out),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str, out: &mut dyn Write) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Columns `t, x_1..x_n, distance, lyapunov, mode`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.states.first().map_or(0, |s| s.dim());
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",x_{i}");
    }
    out.push_str(",distance,lyapunov,mode\n");
    for ((t, x), r) in traj.times.iter().zip(&traj.states).zip(&traj.records) {
        let _ = write!(out, "{t}");
        for v in x.iter() {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{},{},{}", r.distance, r.lyapunov(), r.mode.as_str());
    }
    out
}

pub fn trajectory_svg(traj: &Trajectory, env: &Environment, goal: &Point) -> String {
    let mut lo = [goal[0], goal[1]];
    let mut hi = lo;
    for s in &traj.states {
        for a in 0..2 {
            lo[a] = lo[a].min(s[a]);
            hi[a] = hi[a].max(s[a]);
        }
    }
    let pad = 1.0;
    let mut canvas = Canvas::new([lo[0] - pad, lo[1] - pad], [hi[0] + pad, hi[1] + pad], 600.0);
    draw_environment(&mut canvas, env);
    let path: Vec<[f64; 2]> = traj.states.iter().map(|s| [s[0], s[1]]).collect();
    canvas.polyline(&path, "#1f3f8f", 1.5);
    if let Some(first) = path.first() {
        canvas.marker(*first, 4.0, "#2a8f2a");
    }
    canvas.marker([goal[0], goal[1]], 4.0, "#c02020");
    canvas.finish()
}

#[derive(Serialize)]
struct RunReport {
    format_version: u32,
    outcome: Outcome,
    final_time: f64,
    final_state: Vec<f64>,
    steps: usize,
    audit: AuditReport,
}

fn simulate(loaded: &Loaded, out: &mut dyn Write) -> anyhow::Result<i32> {
    let m = &loaded.manifest;
    let env = loaded.environment()?;
    let cfg = m.sim_config();
    if !matches!(m.sim.initial, Some(InitialState::Point(_))) {
        bail!("simulate needs sim.initial to be a point; use batch for sampled starts");
    }
    let traj = run(&env, &cfg)?;
    let audit = safety_audit(&traj, &env, &cfg)?;
    let report = RunReport {
        format_version: FORMAT_VERSION,
        outcome: traj.outcome,
        final_time: traj.final_time(),
        final_state: traj.final_state().to_f64(),
        steps: traj.states.len(),
        audit,
    };
    let dir = loaded.output_dir()?;
    if m.outputs.wants(Format::Csv) {
        write_file(&dir, "trajectory.csv", &trajectory_csv(&traj), out)?;
    }
    if m.outputs.wants(Format::Svg) && m.controller.goal.dim() == 2 {
        write_file(
            &dir,
            "trajectory.svg",
            &trajectory_svg(&traj, &env, &m.controller.goal),
            out,
        )?;
    }
    if m.outputs.wants(Format::Json) {
        write_file(&dir, "summary.json", &json(&report), out)?;
    }
    writeln!(
        out,
        "outcome {} at t = {:.3} s, min distance {:.6}",
        report.outcome, report.final_time, report.audit.min_distance
    )?;
    let unsafe_run = report.outcome == Outcome::SafetyViolation || report.audit.first_violation.is_some();
    Ok(if unsafe_run { EXIT_FAILURE } else { EXIT_OK })
}

fn batch(loaded: &Loaded, out: &mut dyn Write) -> anyhow::Result<i32> {
    let m = &loaded.manifest;
    let env = loaded.environment()?;
    let cfg = m.sim_config();
    if !matches!(m.sim.initial, Some(InitialState::Sample(_))) {
        bail!("batch needs sim.initial to be a sampling spec {{count, region, seed}}");
    }
    let summary = batch_run(&env, &cfg)?;
    let dir = loaded.output_dir()?;
    if m.outputs.wants(Format::Json) {
        write_file(&dir, "batch.json", &json(&summary), out)?;
    }
    writeln!(
        out,
        "{} runs: {} converged, {} timeout, {} safety-violation, {} equilibrium-trap; max Lyapunov increase {:.3e}",
        summary.runs,
        summary.converged,
        summary.timeout,
        summary.safety_violation,
        summary.equilibrium_trap,
        summary.max_lyapunov_increase
    )?;
    Ok(if summary.safety_violation > 0 {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

fn field(loaded: &Loaded, out: &mut dyn Write) -> anyhow::Result<i32> {
    let m = &loaded.manifest;
    let spec = m
        .field
        .as_ref()
        .ok_or_else(|| anyhow!("manifest has no field section {{min, max, resolution}}"))?;
    let env = loaded.environment()?;
    let grid = export_field(&env, &m.sim_config(), spec)?;
    let dir = loaded.output_dir()?;
    if m.outputs.wants(Format::Csv) {
        write_file(&dir, "field.csv", &field_csv(&grid), out)?;
    }
    if m.outputs.wants(Format::Svg) {
        write_file(&dir, "field.svg", &field_svg(&grid, &env), out)?;
    }
    if m.outputs.wants(Format::Json) {
        write_file(&dir, "field.json", &json(&grid), out)?;
    }
    Ok(EXIT_OK)
}

fn equilibria(loaded: &Loaded, out: &mut dyn Write) -> anyhow::Result<i32> {
    let m = &loaded.manifest;
    let env = loaded.environment()?;
    let world = SphereWorld::from_environment(&env)?;
    let report = undesired_equilibria(&world, &m.controller)?;
    let text = json(&report);
    write!(out, "{text}")?;
    if m.outputs.wants(Format::Json) {
        write_file(&loaded.output_dir()?, "equilibria.json", &text, out)?;
    }
    Ok(EXIT_OK)
}

pub fn scan_csv(scan: &LidarScan) -> String {
    let mut out = String::from("theta,range\n");
    for (t, r) in scan.angles.iter().zip(&scan.ranges) {
        let _ = writeln!(out, "{t},{r}");
    }
    out
}

/// Polar plot of the scan around the sensor, with the range circle.
pub fn scan_svg(scan: &LidarScan, at: [f64; 2]) -> String {
    let r = scan.max_range;
    let pad = 0.1 * r;
    let mut canvas = Canvas::new(
        [at[0] - r - pad, at[1] - r - pad],
        [at[0] + r + pad, at[1] + r + pad],
        400.0,
    );
    canvas.circle(at, r, "none", "#999999");
    let mut curve: Vec<[f64; 2]> = scan
        .angles
        .iter()
        .zip(&scan.ranges)
        .map(|(t, rho)| [at[0] + rho * t.cos(), at[1] + rho * t.sin()])
        .collect();
    if let Some(first) = curve.first().copied() {
        curve.push(first);
    }
    canvas.polyline(&curve, "#1f3f8f", 1.5);
    canvas.marker(at, 3.0, "#c02020");
    canvas.finish()
}

fn lidar_debug(loaded: &Loaded, at: [f64; 2], out: &mut dyn Write) -> anyhow::Result<i32> {
    let m = &loaded.manifest;
    let env = loaded.environment()?;
    let scan = simulate_lidar(
        &env,
        &Point::from(at),
        m.sim.lidar_beams,
        m.controller.sensing_radius,
    )?;
    let reading = scan_to_safety_input(&scan)?;
    let dir = loaded.output_dir()?;
    if m.outputs.wants(Format::Csv) {
        write_file(&dir, "scan.csv", &scan_csv(&scan), out)?;
    }
    if m.outputs.wants(Format::Svg) {
        write_file(&dir, "scan.svg", &scan_svg(&scan, at), out)?;
    }
    let bearing = reading
        .input
        .bearing
        .map(|g| format!("({:.6}, {:.6})", g[0], g[1]))
        .unwrap_or_else(|| "none (nothing in range)".into());
    writeln!(
        out,
        "distance {:.6} at theta {:.6} rad, gradient {bearing}",
        reading.input.distance, reading.argmin_angle
    )?;
    Ok(EXIT_OK)
}

fn validate(scene: &str, out: &mut dyn Write) -> anyhow::Result<i32> {
    let env: Environment = match Scene::named(scene) {
        Ok(s) => s.build()?,
        Err(_) if Path::new(scene).exists() => load_environment(Path::new(scene))?,
        Err(e) => bail!("{e}; or pass a path to an environment file"),
    };
    if !env.is_sphere_world() {
        writeln!(
            out,
            "{} obstacles parsed; separation checks apply to sphere worlds only",
            env.obstacles.len()
        )?;
        return Ok(EXIT_OK);
    }
    let report = env.validate_sphere_world()?;
    write!(out, "{}", json(&report))?;
    if report.passed {
        Ok(EXIT_OK)
    } else {
        bail!("invalid sphere world: {report}")
    }
}

//! Command-line front end. Exit codes: 0 success, 2 bad input, 3 planner
//! non-convergence.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::clutter;
use crate::config::{RunConfig, SEED_ENV};
use crate::error::{Error, Result};
use crate::legibility::{self, compare_planners, Observer};
use crate::plot::{self, Track};
use crate::scene::{self, Scene};
use crate::trajectory::{self, PlannerTag, Trajectory, TrajectoryMeta};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "legifield",
    version,
    about = "Entropy-scaled potential-field planning for legible reaching"
)]
struct Cli {
    /// JSON file overriding any subset of the run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the clutteredness of one or more scenes.
    Measure {
        #[arg(required = true)]
        scenes: Vec<PathBuf>,
    },
    /// Plan one trajectory and write it as CSV with a metadata sidecar.
    Plan(PlanArgs),
    /// Plan every target with both planners and score them with an observer.
    Compare(CompareArgs),
    /// Render trajectories over a scene as SVG.
    Plot {
        #[arg(required = true)]
        trajectories: Vec<PathBuf>,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a scene file.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
struct PlanArgs {
    scene: PathBuf,
    #[arg(long)]
    target: u32,
    #[arg(long, value_enum)]
    planner: PlannerArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    scene: PathBuf,
    /// Comma-separated object ids, or `all`.
    #[arg(long, default_value = "all")]
    targets: String,
    #[arg(long)]
    sections: Option<usize>,
    #[arg(long, value_enum)]
    observer: Option<ObserverArg>,
    #[arg(long)]
    report: PathBuf,
    /// Also write every planned trajectory into this directory.
    #[arg(long, value_name = "DIR")]
    traj_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: SceneKind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Centre spacing for the uncluttered row, meters.
    #[arg(long, default_value_t = 0.15)]
    spacing: f64,
    /// Minimum surface gap between cluttered objects, meters.
    #[arg(long, default_value_t = 0.01)]
    min_gap: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlannerArg {
    Pf,
    Baseline,
}

impl From<PlannerArg> for PlannerTag {
    fn from(p: PlannerArg) -> Self {
        match p {
            PlannerArg::Pf => PlannerTag::PotentialField,
            PlannerArg::Baseline => PlannerTag::Baseline,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObserverArg {
    PointPosition,
    Velocity,
}

impl From<ObserverArg> for Observer {
    fn from(o: ObserverArg) -> Self {
        match o {
            ObserverArg::PointPosition => Observer::PointPosition,
            ObserverArg::Velocity => Observer::VelocityExtrapolation,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SceneKind {
    Uncluttered,
    Cluttered,
}

enum Failure {
    Input(Error),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e)
        } else {
            Failure::NotConverged(e.to_string())
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command, reading
/// the seed override from the process environment.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env_seed = std::env::var(SEED_ENV).ok();
    run_with_env(args, env_seed.as_deref(), out, err)
}

pub fn run_with_env<I, T>(
    args: I,
    env_seed: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{e}");
                EXIT_INPUT
            } else {
                let _ = write!(out, "{e}");
                EXIT_OK
            };
            return code;
        }
    };

    let outcome = resolve_config(cli.config.as_deref(), env_seed)
        .map_err(Failure::from)
        .and_then(|cfg| dispatch(cli.command, cfg, out, err));
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Input(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
        Err(Failure::NotConverged(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_NOT_CONVERGED
        }
    }
}

fn resolve_config(file: Option<&Path>, env_seed: Option<&str>) -> Result<RunConfig> {
    let cfg = RunConfig::with_env_seed(env_seed)?;
    match file {
        Some(path) => cfg.merge_file(path),
        None => Ok(cfg),
    }
}

fn dispatch(
    command: Command,
    mut cfg: RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    match command {
        Command::Measure { scenes } => cmd_measure(&scenes, out),
        Command::Plan(args) => cmd_plan(&args, &cfg, out, err),
        Command::Compare(args) => {
            if let Some(n) = args.sections {
                cfg.eval.n_sections = n;
            }
            if let Some(o) = args.observer {
                cfg.eval.observer = o.into();
            }
            cmd_compare(&args, &cfg, out)
        }
        Command::Plot {
            trajectories,
            scene,
            out: path,
        } => cmd_plot(&trajectories, &scene, &path, out),
        Command::Gen(args) => {
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            cmd_gen(&args, &cfg, out)
        }
    }
}

fn cmd_measure(scenes: &[PathBuf], out: &mut dyn Write) -> CmdResult {
    for path in scenes {
        let scene = scene::load_scene(path)?;
        let r = clutter::clutteredness(&scene)?;
        emit(
            out,
            format_args!(
                "scene={} xi={:.6} D={:.6}",
                path.display(),
                r.xi,
                r.divergence
            ),
        )?;
    }
    Ok(())
}

fn write_plan(path: &Path, scene: &Scene, traj: &Trajectory, cfg: &RunConfig) -> Result<()> {
    let meta = TrajectoryMeta {
        planner: traj.planner,
        target: traj.target,
        converged: traj.converged,
        xi: clutter::scene_xi(scene),
        config: *cfg,
    };
    trajectory::write_trajectory(path, traj, &meta)
}

fn cmd_plan(
    args: &PlanArgs,
    cfg: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let scene = scene::load_scene(&args.scene)?;
    let planner: PlannerTag = args.planner.into();
    let traj = match legibility::plan(&scene, args.target, planner, &cfg.field, &cfg.baseline) {
        Ok(t) => t,
        Err(Error::LocalMinimum { partial, .. }) if !partial.is_empty() => {
            write_plan(&args.out, &scene, &partial, cfg)?;
            let _ = writeln!(err, "partial trajectory written to {}", args.out.display());
            let msg = format!(
                "planner stalled in a local minimum at ({:.6}, {:.6}, {:.6})",
                partial.last().x,
                partial.last().y,
                partial.last().z
            );
            return Err(Failure::NotConverged(msg));
        }
        Err(e) => return Err(e.into()),
    };
    write_plan(&args.out, &scene, &traj, cfg)?;
    emit(
        out,
        format_args!(
            "target={} planner={} waypoints={} max_z={:.6} converged={} out={}",
            traj.target,
            traj.planner,
            traj.len(),
            traj.max_z(),
            traj.converged,
            args.out.display()
        ),
    )?;
    if traj.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!(
            "no convergence within {} iterations",
            cfg.field.max_iters
        )))
    }
}

fn parse_targets(list: &str, scene: &Scene) -> Result<Vec<u32>> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(scene.ids());
    }
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| Error::validation("targets", format!("`{s}` is not an object id")))
        })
        .collect()
}

fn cmd_compare(args: &CompareArgs, cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let scene = scene::load_scene(&args.scene)?;
    let targets = parse_targets(&args.targets, &scene)?;
    let report = compare_planners(
        &scene,
        &targets,
        cfg.eval.n_sections,
        cfg.eval.observer,
        &cfg.field,
        &cfg.baseline,
    )?;
    fs::write(&args.report, report.to_json()).map_err(|e| Error::io(&args.report, e))?;

    if let Some(dir) = &args.traj_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for &t in &targets {
            for p in PlannerTag::ALL {
                let traj = match legibility::plan(&scene, t, p, &cfg.field, &cfg.baseline) {
                    Ok(traj) => traj,
                    Err(Error::LocalMinimum { partial, .. }) => *partial,
                    Err(e) => return Err(e.into()),
                };
                write_plan(&dir.join(format!("target{t}_{p}.csv")), &scene, &traj, cfg)?;
            }
        }
    }

    out.write_all(report.render_table().as_bytes())
        .map_err(|e| Error::io("<stdout>", e))?;
    if report.cells.is_empty() {
        return Err(Failure::NotConverged("no planner run succeeded".into()));
    }
    Ok(())
}

fn cmd_plot(
    paths: &[PathBuf],
    scene_path: &Path,
    out_path: &Path,
    out: &mut dyn Write,
) -> CmdResult {
    let scene = scene::load_scene(scene_path)?;
    let mut target = None;
    let mut tracks = Vec::with_capacity(paths.len());
    for path in paths {
        let waypoints = trajectory::read_waypoints(path)?;
        let meta = trajectory::read_meta(path)?;
        if target.is_none() {
            target = meta.as_ref().map(|m| m.target);
        }
        tracks.push(Track {
            label: path.file_name().map_or_else(
                || path.display().to_string(),
                |n| n.to_string_lossy().into_owned(),
            ),
            planner: meta.map(|m| m.planner),
            waypoints,
        });
    }
    let svg = plot::render_svg(&scene, target, &tracks);
    fs::write(out_path, svg).map_err(|e| Error::io(out_path, e))?;
    emit(out, format_args!("wrote {}", out_path.display()))?;
    Ok(())
}

fn cmd_gen(args: &GenArgs, cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let scene = match args.kind {
        SceneKind::Uncluttered => {
            scene::generate_uncluttered_scene(args.spacing, args.n.unwrap_or(5))?
        }
        SceneKind::Cluttered => {
            scene::generate_cluttered_scene(args.n.unwrap_or(20), cfg.seed, args.min_gap)?
        }
    };
    scene.save(&args.out)?;
    emit(
        out,
        format_args!(
            "wrote {} ({} objects)",
            args.out.display(),
            scene.objects.len()
        ),
    )?;
    Ok(())
}

fn emit(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

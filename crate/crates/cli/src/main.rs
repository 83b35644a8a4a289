use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowinv_cli::demo::{self, DemoOptions};
use flowinv_cli::{
    cmd_constancy, cmd_detect, cmd_render, cmd_simulate, cmd_transform, load_scene, parse_render_kind, CliError,
    RenderRange, RunConfig,
};
use flowinv_core::detect::{DEFAULT_EPS_ABS, DEFAULT_EPS_REL};
use flowinv_core::Thresholds;

/// Time-to-contact and time-clearance maps from simulated optical flow.
#[derive(Debug, Parser)]
#[command(name = "flowinv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Project a scene over time and write radial-flow tracks.
    Simulate {
        #[arg(long, default_value = "scene.txt")]
        scene: PathBuf,
        #[arg(long, default_value_t = 4)]
        frames: usize,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        /// analytic | finite-diff
        #[arg(long, default_value = "analytic")]
        flow: String,
        /// Relative standard deviation of the rho_dot noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "tracks.csv")]
        out: PathBuf,
    },
    /// Map flow tracks to (TTC, Time-Clearance, theta).
    Transform {
        #[arg(default_value = "tracks.csv")]
        input: PathBuf,
        /// Focal length in pixels. Overrides the one in --scene.
        #[arg(long)]
        focal: Option<f64>,
        /// Scene file to take the focal length from.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, default_value = "invariants.csv")]
        out: PathBuf,
    },
    /// Label tracks that break invariant constancy as moving.
    Detect {
        #[arg(default_value = "invariants.csv")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS_ABS)]
        eps_abs: f64,
        #[arg(long, default_value_t = DEFAULT_EPS_REL)]
        eps_rel: f64,
        #[arg(long, default_value = "labels.csv")]
        out: PathBuf,
    },
    /// Render a color-coded 1/TTC, 1/Time-Clearance or combined map.
    Render {
        #[arg(long, default_value = "scene.txt")]
        scene: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// ttc_inv | tc_inv | combined
        #[arg(long, default_value = "ttc_inv")]
        map: String,
        #[arg(long)]
        vmin: Option<f64>,
        /// Defaults to the 99th percentile of valid pixels.
        #[arg(long)]
        vmax: Option<f64>,
        #[arg(long, default_value = "map.ppm")]
        out: PathBuf,
        /// Also dump the scalar grid as `x,y,value,valid`.
        #[arg(long)]
        grid_csv: Option<PathBuf>,
    },
    /// Compare two frames of an invariants file after TTC drift compensation.
    Constancy {
        #[arg(default_value = "invariants.csv")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t1: f64,
        #[arg(long, default_value_t = 1.0)]
        t2: f64,
    },
    /// Reproduce the pyramid and street sequences into a directory.
    Demo {
        #[arg(long, default_value = "demo_out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            scene,
            frames,
            dt,
            flow,
            noise,
            seed,
            out,
        } => {
            let rows = cmd_simulate(&RunConfig {
                scene,
                frames,
                dt,
                flow,
                noise,
                seed,
                out: out.clone(),
            })?;
            println!("wrote {rows} samples to {}", out.display());
        }
        Command::Transform {
            input,
            focal,
            scene,
            out,
        } => {
            let focal = match (focal, scene) {
                (Some(f), _) => f,
                (None, Some(path)) => load_scene(&path)?.rig.focal(),
                (None, None) => return Err(CliError::Validation("transform needs --focal or --scene".into())),
            };
            let rows = cmd_transform(&input, focal, &out)?;
            println!("wrote {rows} rows to {}", out.display());
        }
        Command::Detect {
            input,
            eps_abs,
            eps_rel,
            out,
        } => {
            let s = cmd_detect(&input, Thresholds { eps_abs, eps_rel }, &out)?;
            println!(
                "tracks={} moving={} stationary={} too_short={}",
                s.tracks, s.moving, s.stationary, s.too_short
            );
        }
        Command::Render {
            scene,
            t,
            map,
            vmin,
            vmax,
            out,
            grid_csv,
        } => {
            let kind = parse_render_kind(&map)?;
            let scene = load_scene(&scene)?;
            cmd_render(&scene, t, kind, RenderRange { vmin, vmax }, &out, grid_csv.as_deref())?;
            println!("wrote {}", out.display());
        }
        Command::Constancy { input, t1, t2 } => {
            print!("{}", cmd_constancy(&input, t1, t2)?.render());
        }
        Command::Demo { out, seed, noise } => {
            if noise.is_nan() || noise < 0.0 {
                return Err(CliError::Validation(format!("--noise must be >= 0, got {noise}")));
            }
            print!("{}", demo::run(&DemoOptions { out, seed, noise })?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Command-line front end of the mixed finite volume diffusion solver:
//! mesh generation, single runs, convergence studies and presets.

mod commands;
mod config;
mod meshspec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfv_core::{Error, ErrorCategory, Result};

use config::{parse_point, RunConfig, Settings};
use meshspec::MeshSpec;

#[derive(Parser)]
#[command(
    name = "mfv",
    version,
    about = "Mixed finite volume solver for anisotropic diffusion on polygonal meshes"
)]
#[command(
    after_help = "Logging: set MFV_LOG to error, warn, info or debug.\nExit codes: 0 success, 1 usage, 2 validation, 3 numerical failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, inspect or validate meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Solve one case on one mesh and print an error CSV row.
    Run(RunArgs),
    /// Solve one case on a family of meshes and print orders of convergence.
    Convergence(ConvergenceArgs),
    /// Run a named benchmark configuration.
    Preset(PresetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Squares,
    Triangles,
    Refined,
    Distorted,
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Write a generated mesh and print its summary.
    Gen {
        family: FamilyArg,
        /// Cells per side of the base grid.
        #[arg(long)]
        n: usize,
        /// Triangle pattern: diagonal or crisscross.
        #[arg(long, default_value = "diagonal")]
        pattern: String,
        /// Cell point: centroid or circumcenter (triangles only).
        #[arg(long, default_value = "centroid")]
        xk: String,
        /// Seed of the random vertex jitter.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Distortion amplitude.
        #[arg(long)]
        amplitude: Option<f64>,
        /// Smooth sine distortion instead of random jitter.
        #[arg(long)]
        smooth: bool,
        /// Refinement box `x0/x1/y0/y1/factor`, repeatable.
        #[arg(long = "box")]
        boxes: Vec<String>,
        /// Output file; the mesh goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the summary of a mesh file.
    Inspect { file: PathBuf },
    /// Run the full admissibility check on a mesh file.
    Validate { file: PathBuf },
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// `key = value` configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem case: isotropic, lepotier or patch-affine.
    #[arg(long)]
    case: Option<String>,
    /// Penalization: default, zero, fixed:v (nu = v / m(K)) or power:v0:beta (nu = v0 diam^beta).
    #[arg(long)]
    nu: Option<String>,
    /// Cell point: centroid or circumcenter.
    #[arg(long)]
    xk: Option<String>,
    /// Quadrature order for cell averages.
    #[arg(long)]
    quad: Option<usize>,
    /// Linear solver: auto, cholesky or pcg.
    #[arg(long)]
    solver: Option<String>,
    /// PCG tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// PCG iteration cap.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Run per-cell loops on one thread.
    #[arg(long)]
    sequential: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl CommonArgs {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::read_file(path)?,
            None => Settings::default(),
        };
        s.set("case", self.case.as_ref());
        s.set("nu", self.nu.as_ref());
        s.set("xk", self.xk.as_ref());
        s.set("quad", self.quad);
        s.set("solver", self.solver.as_ref());
        s.set("tol", self.tol);
        s.set("max-iter", self.max_iter);
        s.set("exec", self.sequential.then_some("sequential"));
        s.set("csv", self.csv.as_ref().map(|p| p.display()));
        Ok(s)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mesh: squares:N, triangles:N[:diagonal|:crisscross], refined:N[:box=x0/x1/y0/y1/f],
    /// distorted:N[:seed=S][:amp=A][:smooth] or file:PATH.
    #[arg(long)]
    mesh: Option<String>,
    /// Write the solution (mfv-sol v1) here.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mesh family without resolution, e.g. squares or triangles:crisscross.
    #[arg(long)]
    mesh: Option<String>,
    /// Comma-separated resolutions, e.g. 8,16,32.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<usize>,
    /// Number of levels solved concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct PresetArgs {
    /// Preset name; see --list.
    #[arg(required_unless_present = "list")]
    name: Option<String>,
    /// List the available presets.
    #[arg(long)]
    list: bool,
    /// Number of levels solved concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Run per-cell loops on one thread.
    #[arg(long)]
    sequential: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn gen_spec(
    family: FamilyArg,
    n: usize,
    pattern: &str,
    seed: u64,
    amplitude: Option<f64>,
    smooth: bool,
    boxes: &[String],
) -> String {
    let mut s = match family {
        FamilyArg::Squares => format!("squares:{n}"),
        FamilyArg::Triangles => format!("triangles:{n}:{pattern}"),
        FamilyArg::Refined => format!("refined:{n}"),
        FamilyArg::Distorted if smooth => format!("distorted:{n}:smooth"),
        FamilyArg::Distorted => format!("distorted:{n}:seed={seed}"),
    };
    if matches!(family, FamilyArg::Distorted) {
        if let Some(a) = amplitude {
            s += &format!(":amp={a}");
        }
    }
    if matches!(family, FamilyArg::Refined) {
        for b in boxes {
            s += &format!(":box={b}");
        }
    }
    s
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mesh(MeshCommand::Gen {
            family,
            n,
            pattern,
            xk,
            seed,
            amplitude,
            smooth,
            boxes,
            out,
        }) => {
            let spec = MeshSpec::parse(&gen_spec(
                family, n, &pattern, seed, amplitude, smooth, &boxes,
            ))?;
            commands::mesh_gen(&spec, parse_point(&xk)?, out.as_deref())
        }
        Command::Mesh(MeshCommand::Inspect { file }) => commands::mesh_inspect(&file),
        Command::Mesh(MeshCommand::Validate { file }) => commands::mesh_validate(&file),
        Command::Run(args) => {
            let mut s = args.common.settings()?;
            s.set("mesh", args.mesh.as_ref());
            s.set("dump", args.dump.as_ref().map(|p| p.display()));
            commands::run(&RunConfig::from_settings(&s)?)
        }
        Command::Convergence(args) => {
            let mut s = args.common.settings()?;
            s.set("mesh", args.mesh.as_ref());
            let cfg = RunConfig::from_settings(&s)?;
            if cfg.dump.is_some() {
                return Err(Error::Config(
                    "solution dumps are only written by 'run'".into(),
                ));
            }
            commands::convergence(&cfg, &args.levels, args.jobs)
        }
        Command::Preset(args) => {
            if args.list {
                print!("{}", commands::list_presets());
                return Ok(());
            }
            let preset = commands::find_preset(args.name.as_deref().unwrap_or_default())?;
            let mut s = Settings::default();
            s.set("case", Some(preset.case));
            s.set("mesh", Some(preset.mesh));
            s.set("exec", args.sequential.then_some("sequential"));
            s.set("csv", args.csv.as_ref().map(|p| p.display()));
            let cfg = RunConfig::from_settings(&s)?;
            if preset.levels.is_empty() {
                commands::run(&cfg)
            } else {
                commands::convergence(&cfg, preset.levels, args.jobs)
            }
        }
    }
}

fn exit_code(category: ErrorCategory) -> u8 {
    match category {
        ErrorCategory::Usage | ErrorCategory::Io => 1,
        ErrorCategory::Validation => 2,
        ErrorCategory::Numerical => 3,
    }
}

/// Entry point of the `mfv` binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MFV_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            eprintln!("error[{category}]: {e}");
            ExitCode::from(exit_code(category))
        }
    }
}

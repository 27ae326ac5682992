use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsensemble::cli::{self, Options, THREADS_ENV};

#[derive(Parser)]
#[command(name = "nsensemble", version, about = "Ensemble Navier-Stokes runs, studies and mesh utilities")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Run specification (TOML).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Directory for CSV and VTK output.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (overrides the NSENSEMBLE_THREADS environment variable).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized initial data.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step an ensemble and write step, halving and force logs.
    Run,
    /// Manufactured-solution convergence table.
    Convergence,
    /// Smallest mixed Dirichlet/Neumann Laplace eigenvalue.
    Eig,
    /// Mesh size, diameter and boundary tags of a spec or mesh file.
    MeshInfo {
        /// Mesh file or spec; defaults to --spec.
        path: Option<PathBuf>,
    },
    /// Inverse-inequality constant of the spec mesh.
    CalibrateC,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("{THREADS_ENV}='{v}' is not a thread count")),
        Err(_) => Ok(None),
    }
}

fn run(args: Args) -> Result<(), String> {
    if let Some(n) = threads(args.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let opts = Options {
        out_dir: args.out_dir,
        seed: args.seed,
    };
    let spec = || args.spec.clone().ok_or_else(|| "--spec is required for this command".to_string());
    let text = match args.command {
        Command::Run => cli::cmd_run(&spec()?, &opts).map(|r| r.render()),
        Command::Convergence => cli::cmd_convergence(&spec()?, &opts).map(|t| t.render()),
        Command::Eig => cli::cmd_eig(&spec()?).map(|r| r.render()),
        Command::MeshInfo { path } => {
            let p = path.or(args.spec.clone()).ok_or("mesh-info needs a path or --spec")?;
            cli::cmd_mesh_info(&p).map(|m| m.render())
        }
        Command::CalibrateC => cli::cmd_calibrate_c(&spec()?).map(|r| cli::render_calibration(&r)),
    }
    .map_err(|e| e.to_string())?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

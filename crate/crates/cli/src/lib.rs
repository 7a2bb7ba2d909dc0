//! Command-line front end: problem-spec files, solves, certificates,
//! curvature tables and the gallery.

pub mod commands;
pub mod error;
pub mod expr;
pub mod io;
pub mod report;
pub mod specfile;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use lingrad_core::certificate::CertificateKind;

pub use commands::Outcome;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "lingrad",
    version,
    about = "Relaxed linear-growth problems: solve, certify, explore"
)]
pub struct Cli {
    /// Worker threads for cell updates.
    #[arg(long, global = true, env = "LINGRAD_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the relaxed energy on a grid.
    Solve {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        gap_tol: Option<f64>,
        /// Primal field (LGF1).
        #[arg(long)]
        out: PathBuf,
        /// Dual field (LGF1).
        #[arg(long)]
        dual_out: Option<PathBuf>,
        /// Convergence history CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check the optimality conditions for a stored pair.
    Certify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        z: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = commands::GRID_TOL)]
        tol: f64,
        /// Relative threshold below which `|u − u₀|` counts as attained.
        #[arg(long, default_value_t = commands::GRID_TIE)]
        tie: f64,
        /// scalar, vector or least_gradient; chosen from the problem if omitted.
        #[arg(long)]
        kind: Option<CertificateKind>,
    },
    /// Relaxed energy of a stored field.
    Energy {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        u: PathBuf,
    },
    /// Generalized mean curvature along the boundary.
    Curvature {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        nx: Option<usize>,
        /// Per-face CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in examples and counterexamples.
    #[command(subcommand)]
    Gallery(GalleryCommand),
    /// LGF1 to CSV.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Adds cell-center coordinates.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GalleryCommand {
    List,
    Run {
        name: String,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dual_out: Option<PathBuf>,
        /// Parameter of t3_counterexample.
        #[arg(long)]
        eps: Option<f64>,
        /// Parameter of rof_ball.
        #[arg(long)]
        t: Option<f64>,
    },
}

fn configure_threads(n: Option<usize>) -> CliResult<()> {
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<Outcome> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Solve {
            spec,
            nx,
            max_iters,
            gap_tol,
            out: u_out,
            dual_out,
            history,
            report,
        } => commands::run_solve(
            &commands::SolveArgs {
                spec,
                nx,
                max_iters,
                gap_tol,
                out: u_out,
                dual_out,
                history,
                report,
            },
            out,
        ),
        Command::Certify {
            spec,
            u,
            z,
            report,
            tol,
            tie,
            kind,
        } => commands::run_certify(
            &commands::CertifyArgs {
                spec,
                u,
                z,
                report,
                tol,
                tie,
                kind,
            },
            out,
        ),
        Command::Energy { spec, u } => commands::run_energy(&spec, &u, out),
        Command::Curvature { spec, nx, out: csv } => {
            commands::run_curvature(&spec, nx, csv.as_deref(), out)
        }
        Command::Gallery(GalleryCommand::List) => commands::run_gallery_list(out),
        Command::Gallery(GalleryCommand::Run {
            name,
            nx,
            report,
            out: u_out,
            dual_out,
            eps,
            t,
        }) => commands::run_gallery(
            &commands::GalleryRunArgs {
                name,
                nx,
                report,
                out: u_out,
                dual_out,
                eps,
                t,
            },
            out,
        ),
        Command::Convert {
            input,
            out: o,
            spec,
        } => commands::run_convert(&input, &o, spec.as_deref()),
    }
}

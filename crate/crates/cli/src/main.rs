//! `defgauge`: pointwise checks, symbol sweeps, the reduced flow and the
//! Riemannian criterion from the command line.
//!
//! Exit codes: `0` success or definite, `2` negative verdict, `1` error.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "defgauge", version, about = "Definite connections and the volume functional")]
struct Cli {
    /// Worker threads for data-parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Io {
    /// Input JSON file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file (directory for `flow`); stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Definiteness, sign, volume, metric and bounds of one curvature triple.
    CheckPoint {
        #[command(flatten)]
        io: Io,
        /// Relative tolerance of the definiteness verdict.
        #[arg(long, default_value_t = definite_gauge::defpoint::DEFINITE_REL_TOL)]
        tol: f64,
    },
    /// Hessian-symbol checks at seeded random definite points.
    SymbolAudit {
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        /// Bound on the normalized largest symbol eigenvalue.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Gradient flow of the action on a profile config; streams telemetry CSV.
    Flow {
        #[command(flatten)]
        io: Io,
        /// Residual sup-norm treated as converged.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        /// Initial flow time step.
        #[arg(long, default_value_t = 1e-3)]
        dtau: f64,
        /// Interior grid nodes; overrides `n` of the config.
        #[arg(long)]
        grid: Option<usize>,
        /// Use the gauge-fixed flow.
        #[arg(long)]
        deturck: bool,
    },
    /// Definiteness criterion, Gursky chain and Hitchin–Thorpe value.
    RiemannCheck {
        #[command(flatten)]
        io: Io,
    },
}

fn main() -> ExitCode {
    // Usage errors exit with 1; 2 is reserved for negative verdicts.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::CheckPoint { io, tol } => commands::check_point(&io, tol),
        Command::SymbolAudit { output, seed, count, tol } => commands::symbol_audit(output.as_deref(), seed, count, tol),
        Command::Flow {
            io,
            tol,
            steps,
            dtau,
            grid,
            deturck,
        } => commands::flow(&io, tol, steps, dtau, grid, deturck),
        Command::RiemannCheck { io } => commands::riemann_check(&io),
    };
    match result {
        Ok(commands::Verdict::Positive) => ExitCode::SUCCESS,
        Ok(commands::Verdict::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

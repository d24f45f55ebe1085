use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdhl_harness::{run_experiment, ExperimentConfig, Kind, RunOptions};

#[derive(Parser)]
#[command(name = "pdhl", version, about = "Perforated-domain experiment runner")]
struct Cli {
    /// Worker threads for the sweep pool
    #[arg(long, global = true, env = "PDHL_THREADS")]
    threads: Option<usize>,
    /// Output directory (overrides output.dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random trial families (overrides seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dirichlet solves on perforated grids, with field snapshots
    Solve(Args),
    /// Oscillating test functions and their norms
    Corrector(Args),
    /// Homogenization error against the corrected intermediate solution
    Rate(Args),
    /// Trial-family estimates of the constants, fitted against eta
    Scaling(Args),
    /// Smallest Dirichlet eigenvalue
    Eig(Args),
    /// Periodic cell witness quantities
    Witness(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Solve(a) => (Kind::Solve, a),
        Command::Corrector(a) => (Kind::Corrector, a),
        Command::Rate(a) => (Kind::Rate, a),
        Command::Scaling(a) => (Kind::Scaling, a),
        Command::Eig(a) => (Kind::Eig, a),
        Command::Witness(a) => (Kind::Witness, a),
    };
    let opts = RunOptions { threads: cli.threads, out: cli.out, seed: cli.seed };
    let report = match ExperimentConfig::from_file(&args.config, Some(kind)).and_then(|cfg| run_experiment(&cfg, &opts)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("pdhl: {e}");
            return ExitCode::from(1);
        }
    };
    println!("{} rows written to {}", report.rows.len(), report.table.display());
    for f in &report.fits {
        println!("fit {} eps {} p {:?}: slope {:.3} (r² {:.3})", f.quantity, f.eps, f.p, f.fit.slope, f.fit.r_squared);
    }
    if report.failed_rows > 0 {
        eprintln!("pdhl: {} of {} rows failed", report.failed_rows, report.rows.len());
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

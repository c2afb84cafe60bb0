use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use locvi::cli::run::parse_vector;
use locvi::cli::{run_file, Command, Flags};

/// Grid solvers for local variational and quasi-variational problems.
#[derive(Parser, Debug)]
#[command(name = "locvi", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Problem file.
    file: PathBuf,
    /// Grid step (overrides [meta] h).
    #[arg(long)]
    h: Option<f64>,
    /// Neighbourhood radius (overrides [meta] r).
    #[arg(long)]
    r: Option<f64>,
    /// Tolerance (overrides [meta] eps).
    #[arg(long)]
    eps: Option<f64>,
    /// Output directory.
    #[arg(long, env = "LOCVI_OUT", default_value = "locvi-out")]
    out: PathBuf,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    kind: Option<String>,
    /// Seed for randomized probes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace section label for stability-trial.
    #[arg(long)]
    trace: Option<String>,
    /// Leader decision for solve-gnep, e.g. `0.5` or `0.1,0.2`.
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
    leader_x: Option<Coords>,
}

#[derive(Clone, Debug)]
struct Coords(Vec<f64>);

fn parse_coords(s: &str) -> Result<Coords, String> {
    parse_vector(s).map(Coords)
}

fn main() -> ExitCode {
    let a = Args::parse();
    let flags = Flags {
        h: a.h,
        r: a.r,
        eps: a.eps,
        method: a.method,
        kind: a.kind,
        seed: a.seed,
        trace: a.trace,
        leader_x: a.leader_x.map(|c| c.0),
    };
    let result = run_file(&a.file, a.command, &flags).and_then(|rep| {
        rep.write(&a.out)?;
        Ok(rep)
    });
    match result {
        Ok(rep) => {
            print!("{}", rep.render());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

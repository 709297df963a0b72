use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sweepsim::cli::{
    self, check_timeseries, compute_bounds, execute_run, load_config, render_bounds, RunError,
};

#[derive(Parser)]
#[command(
    name = "sweepsim",
    version,
    about = "Distributed sweep coverage simulator and bound checker"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write timeseries.csv, report.toml and frames
    Run {
        config: PathBuf,
        /// Override the output directory from the config
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Evaluate the theoretical bounds only, without simulating
    Bounds { config: PathBuf },
    /// Re-verify a recorded time series against the config's bounds
    Check {
        config: PathBuf,
        timeseries: PathBuf,
    },
}

fn run(command: Command) -> Result<u8, RunError> {
    match command {
        Command::Run { config, out_dir } => {
            let exp = load_config(&config)?;
            let out_dir = out_dir.unwrap_or_else(|| exp.outputs.out_dir.clone());
            let summary = execute_run(&exp, &out_dir)?;
            let o = &summary.outcome;
            println!("t_p = {}", o.t_p);
            println!("t_star = {}", o.t_star);
            println!("t_actual = {}", o.t_actual);
            println!("delta_t = {}", o.delta_t);
            println!("delta_t_bound = {}", summary.report.delta_t_bound);
            println!(
                "delta_t_bound_corrected = {}",
                summary.report.delta_t_bound_corrected
            );
            println!("verdict = {}", if summary.verdict.all_pass() { "pass" } else { "fail" });
            for path in &summary.written {
                println!("wrote {}", path.display());
            }
            if o.assumption_violated.iter().any(|&b| b) {
                eprintln!(
                    "note: agents {:?} exhausted their allocation during the partition phase",
                    o.assumption_violated
                        .iter()
                        .enumerate()
                        .filter(|(_, &b)| b)
                        .map(|(i, _)| i + 1)
                        .collect::<Vec<_>>()
                );
            }
            if summary.verdict.all_pass() {
                Ok(cli::EXIT_OK)
            } else {
                eprintln!("verdict failure: {:?}", summary.verdict);
                Ok(cli::EXIT_VERDICT)
            }
        }
        Command::Bounds { config } => {
            let exp = load_config(&config)?;
            let report = compute_bounds(&exp)?;
            print!("{}", render_bounds(&report));
            Ok(cli::EXIT_OK)
        }
        Command::Check { config, timeseries } => {
            let exp = load_config(&config)?;
            let verdict = check_timeseries(&exp, &timeseries)?;
            if verdict.all_pass() {
                println!("check passed");
                Ok(cli::EXIT_OK)
            } else {
                eprintln!("check failed: {verdict:?}");
                Ok(cli::EXIT_VERDICT)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uavfl::cli::{cmd_chart, cmd_compare, cmd_simulate, exit_code, parse_config, ExperimentSpec};

#[derive(Parser)]
#[command(name = "uavfl", version, about = "Federated learning over simulated UAV links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write metrics.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sweep one setting over several seeds.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// `scheme=opt,discard,async`, `b=1,2,3` or `tau_max=8,9,10`.
        #[arg(long)]
        sweep: String,
        #[arg(long, default_value = "0")]
        seeds: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render a sweep.csv as an SVG chart.
    Chart {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> uavfl::Result<()> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let summary = cmd_simulate(&parse_config(&config)?, seed, &out)?;
            let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"));
            println!(
                "{} rounds, final accuracy {}, mean overhead {} MB -> {}",
                summary.rounds,
                fmt(summary.final_accuracy),
                fmt(summary.mean_overhead_mb),
                out.display()
            );
        }
        Command::Compare { config, sweep, seeds, out } => {
            let (axis, values) = ExperimentSpec::parse_sweep(&sweep)?;
            let spec = ExperimentSpec {
                base: parse_config(&config)?,
                axis,
                values,
                seeds: ExperimentSpec::parse_seeds(&seeds)?,
                out_dir: out,
            };
            let report = cmd_compare(&spec)?;
            for row in &report.rows {
                println!(
                    "{axis}={} seed={} final_accuracy={:.4} mean_overhead_mb={:.4}",
                    row.value, row.seed, row.final_accuracy, row.mean_overhead_mb
                );
            }
        }
        Command::Chart { input, out } => cmd_chart(&input, &out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

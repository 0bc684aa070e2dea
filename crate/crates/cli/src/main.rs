use std::path::PathBuf;
use std::process::ExitCode;

use afsim_core::factorial::{write_design_csv, DesignMode};
use afsim_core::harness::{
    self, run_design, run_single, DesignOptions, HarnessError, Response, DESIGN_FILE,
};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "afsim", version, about = "Assured Forwarding satellite simulations and factorial studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replaces the seed in the scenario file.
        #[arg(long, env = "AFSIM_SEED")]
        seed: Option<u64>,
    },
    /// Run every simulation of a factorial design.
    Design {
        #[arg(long)]
        mode: DesignMode,
        #[arg(long)]
        out: PathBuf,
        /// Master seed; per-run seeds derive from it and the simulation id.
        #[arg(long, env = "AFSIM_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Simulated seconds per run instead of the default 100.
        #[arg(long)]
        duration: Option<f64>,
        /// Only write design.csv, do not simulate.
        #[arg(long)]
        dry_run: bool,
    },
    /// Build figure data and ANOVA tables from a design result directory.
    Report {
        results: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// fairness, tcp-utilization or udp-utilization; repeatable. All by default.
        #[arg(long = "response")]
        responses: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run { config, out, seed } => {
            let (result, problems) = run_single(&config, &out, seed)?;
            for p in problems {
                eprintln!("warning: {p}");
            }
            println!(
                "run {}: {} events, fairness {:.4}, results in {}",
                result.simulation_id,
                result.events,
                result.fairness,
                out.display()
            );
        }
        Command::Design { mode, out, seed, jobs, duration, dry_run } => {
            let mut opts = DesignOptions::new(mode, seed);
            opts.jobs = jobs;
            if let Some(d) = duration {
                if !(d.is_finite() && d >= 0.0) {
                    return Err(harness::config::ConfigError::Parse(format!("--duration must be non-negative, got {d}")).into());
                }
            }
            opts.duration_s = duration;
            if dry_run {
                let (design, runs, _) = opts.scenarios();
                std::fs::create_dir_all(&out).map_err(|e| HarnessError::Io {
                    path: out.display().to_string(),
                    msg: e.to_string(),
                })?;
                let path = out.join(DESIGN_FILE);
                let file = std::fs::File::create(&path).map_err(|e| HarnessError::Io {
                    path: path.display().to_string(),
                    msg: e.to_string(),
                })?;
                write_design_csv(&design, &runs, file).map_err(|e| HarnessError::Format {
                    path: path.display().to_string(),
                    msg: e.to_string(),
                })?;
                println!("{mode}: {} runs listed in {}", runs.len(), path.display());
                return Ok(());
            }
            let outcome = run_design(&opts, &out)?;
            println!(
                "{mode}: {} runs completed, design hash {}, results in {}",
                outcome.results.len(),
                outcome.manifest.design_hash,
                out.display()
            );
        }
        Command::Report { results, out, responses } => {
            let responses = if responses.is_empty() {
                Response::ALL.to_vec()
            } else {
                responses
                    .iter()
                    .map(|r| r.parse())
                    .collect::<Result<Vec<Response>, _>>()?
            };
            let out = out.unwrap_or_else(|| results.join("report"));
            for r in harness::report(&results, &responses, &out)? {
                println!("{r}");
            }
            println!("report written to {}", out.display());
        }
    }
    Ok(())
}

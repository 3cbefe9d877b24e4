//! `isac-bench`: runs the registered ISAC experiments from a config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isac_core::experiment::{self, ExperimentConfig, DEFAULT_OUTPUT_DIR, OUTPUT_ENV, REGISTRY};

#[derive(Parser)]
#[command(name = "isac-bench", version, about = "Seeded wideband ISAC experiments with CSV output")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config or a previous manifest.json.
    Run {
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of Monte Carlo trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory; takes precedence over the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for trial-level parallelism (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Default output directory when neither --out nor the config sets one.
        #[arg(long, env = OUTPUT_ENV, default_value = DEFAULT_OUTPUT_DIR, hide = true)]
        default_out: PathBuf,
    },
    /// List the registered experiments.
    List,
    /// Show parameters and output columns of one experiment.
    Describe { experiment: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::List => {
            for e in REGISTRY {
                println!("{:<22} {}", e.name, e.summary);
                println!("{:<22} plot: {}", "", e.figure);
                let defaults: Vec<String> = (e.defaults)().map().iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{:<22} trials={} {}", "", e.default_trials, defaults.join(" "));
            }
            ExitCode::SUCCESS
        }
        Command::Describe { experiment: name } => match experiment::find(&name) {
            Some(e) => {
                print!("{}", e.describe());
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: unknown experiment `{name}`; known: {}", experiment::names().join(", "));
                ExitCode::from(2)
            }
        },
        Command::Run {
            config,
            seed,
            trials,
            out,
            workers,
            default_out,
        } => {
            let result = ExperimentConfig::from_path(&config).and_then(|mut cfg| {
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                if let Some(t) = trials {
                    if t == 0 {
                        return Err(experiment::RunError::invalid("--trials must be at least 1"));
                    }
                    cfg.trials = Some(t);
                }
                if out.is_some() {
                    cfg.output_dir = out;
                }
                experiment::run(&cfg, &default_out, workers)
            });
            match result {
                Ok(o) => {
                    for f in &o.files {
                        println!("wrote {}", f.display());
                    }
                    println!("wrote {}", o.manifest.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}

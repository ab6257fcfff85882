use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bomberplan::commands;
use bomberplan::{Error, MatchConfig};

#[derive(Parser)]
#[command(name = "bomberplan", version, about = "Bomber planner evaluation and data generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record heuristic self-play as a supervised dataset.
    GenerateDemos {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of episodes.
        #[arg(long, default_value_t = 100)]
        games: u32,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Play a configured match and write its reports.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured game count.
        #[arg(long)]
        games: Option<u32>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Record search-guided play as a reinforcement-learning dataset.
    RlDatagen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Player decisions to record.
        #[arg(long)]
        steps: u64,
        /// Overrides the search seat's weights.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Behaviour statistics of replay files or directories.
    Stats {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn load(path: &PathBuf, seed: Option<u64>, games: Option<u32>) -> Result<MatchConfig, Error> {
    let mut cfg = MatchConfig::load(path)?;
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.games = games.unwrap_or(cfg.games);
    cfg.validate()?;
    Ok(cfg)
}

fn print(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string(value).expect("summaries serialize"));
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GenerateDemos { seed, games, out, threads } => {
            print(&commands::generate_demos(seed, games, &out, threads)?);
        }
        Command::Eval {
            config,
            out,
            seed,
            games,
            threads,
        } => {
            let report = commands::eval(&load(&config, seed, games)?, &out, threads)?;
            for s in &report.seats {
                println!(
                    "seat {} {}: win {:.3} tie {:.3} loss {:.3}",
                    s.seat, s.label, s.win_rate, s.tie_rate, s.loss_rate
                );
            }
        }
        Command::RlDatagen {
            config,
            out,
            steps,
            weights,
            seed,
            threads,
        } => {
            let cfg = load(&config, seed, None)?;
            print(&commands::rl_datagen(&cfg, weights.as_deref(), steps, &out, threads)?);
        }
        Command::Stats { out, inputs } => {
            commands::stats(&inputs, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", Error::Config(e.kind().to_string() + ": " + &first_line(&e.to_string())).to_json_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::FAILURE
        }
    }
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string()
}

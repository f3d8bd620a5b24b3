use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use moodyn_cli::commands::{self, Command, Options, EXIT_CONFIG, EXIT_IO};
use moodyn_cli::config::parse_config;

#[derive(Parser)]
#[command(name = "moodyn", version, about = "Inertial multiobjective gradient dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Output directory, overriding `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Record wall-clock time in the summary.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate and write the configured channels.
    Simulate { config: PathBuf },
    /// Run the inequality monitors; exit 4 on a violation.
    Verify { config: PathBuf },
    /// Fit decay exponents and compare with the predicted ones.
    Rates { config: PathBuf },
    /// Trace the regularization path.
    Path { config: PathBuf },
}

fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var("MOODYN_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("MOODYN_THREADS must be a positive integer, got `{v}`")),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, path) = match cli.command {
        Cmd::Simulate { config } => (Command::Simulate, config),
        Cmd::Verify { config } => (Command::Verify, config),
        Cmd::Rates { config } => (Command::Rates, config),
        Cmd::Path { config } => (Command::Path, config),
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("moodyn: {}: {e}", path.display());
            return ExitCode::from(EXIT_IO as u8);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("moodyn: {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    // a relative `input` is taken relative to the config file
    if let (Some(input), Some(dir)) = (cfg.input.as_mut(), path.parent()) {
        if input.is_relative() {
            *input = dir.join(&*input);
        }
    }
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("moodyn: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let opts = Options {
        out: cli.out,
        timing: cli.timing,
        threads,
    };
    match commands::execute(cmd, &cfg, &opts) {
        Ok(outcome) => {
            for line in &outcome.report {
                println!("{line}");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("moodyn: {e}");
            ExitCode::from(commands::exit_code(&e) as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gelfand_cli::{dispatch, parse_config, CliError, ConfigError, Subcommand};

/// Radial laboratory for -Δu = λ f(u) on balls.
#[derive(Parser)]
#[command(name = "gelfand", version)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config (default `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for `atlas`.
    #[arg(long)]
    workers: Option<usize>,
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| ConfigError::Read(format!("{}: {e}", cli.config.display())))?;
    let cfg = parse_config(&text)?;
    if cli.workers == Some(0) {
        return Err(ConfigError::Invalid {
            key: "workers",
            reason: "need at least one worker".into(),
        }
        .into());
    }
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    dispatch(&cfg, cli.subcommand, &out, cli.workers)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use spectral_killers::config::{parse_config, parse_formats, ConfigError, Overrides};
use spectral_killers::run::{run, EXIT_INTERNAL, EXIT_INVALID};

/// Certifies vanishing spectral invariants and checks Poisson bracket
/// bounds for disk covers. The command is the single block in the config.
#[derive(Debug, Parser)]
#[command(name = "spectral-killers", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated formats: json, csv, md.
    #[arg(long)]
    format: Option<String>,
    /// Plateau level for a probe run, e.g. `-0.1` or `-0.04pi`.
    #[arg(long, allow_hyphen_values = true)]
    probe: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluation grid per side (cover-pb).
    #[arg(long)]
    grid: Option<usize>,
    /// Largest active set solved exactly (cover-pb).
    #[arg(long = "exact-l-cap")]
    exact_l_cap: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match parse_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            let code = if matches!(e, ConfigError::Io { .. }) { EXIT_INTERNAL } else { EXIT_INVALID };
            return ExitCode::from(code as u8);
        }
    };
    let formats = match cli.format.as_deref().map(parse_formats).transpose() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: --format: {e}");
            return ExitCode::from(EXIT_INVALID as u8);
        }
    };
    let overrides = Overrides {
        out: cli.out,
        formats,
        probe: cli.probe,
        seed: cli.seed,
        grid: cli.grid,
        exact_l_cap: cli.exact_l_cap,
    };
    if let Err(e) = config.apply(&overrides) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INVALID as u8);
    }
    match run(&config) {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            for path in &outcome.written {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INTERNAL as u8)
        }
    }
}

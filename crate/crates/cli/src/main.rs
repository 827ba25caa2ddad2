use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use usfm_cli::{parse_config, run_experiment, CliError, Overrides};

/// USFM / OFDM baseband link simulator.
#[derive(Debug, Parser)]
#[command(name = "usfm-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
    /// Parse and validate a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated Eb/N0 points in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    points: Option<Vec<f64>>,
    #[arg(long)]
    min_bits: Option<u64>,
    #[arg(long)]
    max_bits: Option<u64>,
    /// Override the recipe named in the config.
    #[arg(long)]
    recipe: Option<String>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("USFM_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("USFM_SIM_THREADS={raw} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Validate { config } => {
            let spec = parse_config(&config, &Overrides::default())?;
            println!("{}: ok ({:?}, output to {})", config.display(), spec.recipe, spec.output_dir.display());
            Ok(0)
        }
        Command::Run(args) => {
            configure_threads()?;
            let overrides = Overrides {
                recipe: args.recipe,
                seed: args.seed,
                output_dir: args.out,
                points: args.points,
                min_bits: args.min_bits,
                max_bits: args.max_bits,
            };
            let spec = parse_config(&args.config, &overrides)?;
            let summary = run_experiment(&spec)?;
            for f in &summary.files {
                println!("{}  {}", f.sha256, spec.output_dir.join(&f.name).display());
            }
            for note in &summary.notes {
                eprintln!("note: {note}");
            }
            for failure in &summary.sanity_failures {
                eprintln!("error: {failure}");
            }
            Ok(summary.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("usfm-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use degen::runner::{parse_config, run_case, RunOptions};

/// Runs one case described by a JSON configuration.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized samples.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fail on any invariant breach, not only on oracle mismatches.
    #[arg(long)]
    acceptance: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = parse_config(&cli.config).and_then(|cfg| {
        let out_dir = cli
            .out
            .clone()
            .or_else(|| cfg.output.dir.as_ref().map(|d| cfg.resolve(d)))
            .unwrap_or_else(|| PathBuf::from("out"));
        let opts = RunOptions {
            out_dir,
            seed: cli.seed,
            acceptance: cli.acceptance,
        };
        run_case(&cfg, &opts)
    });
    match result {
        Ok(outcome) => {
            for p in &outcome.artifacts {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("degen: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tsou_cli::{run, Experiment, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "engine", version, about = "Runs pricing and simulation experiments from a TOML configuration")]
struct Args {
    #[arg(value_enum)]
    experiment: Experiment,

    #[arg(long)]
    config: PathBuf,

    /// Overrides the configured seed (and ENGINE_SEED).
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory (overrides ENGINE_OUT_DIR and `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let result = RunOptions::resolve(args.seed, args.out).and_then(|opts| run(args.experiment, &args.config, &opts));
    match result {
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

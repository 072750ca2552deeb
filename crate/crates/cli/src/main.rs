use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rdme_cli::{load_config, run_and_write, Overrides, EXIT_UNRELIABLE};

/// Reaction-diffusion experiments with mesh-dependent mesoscopic rates.
#[derive(Debug, Parser)]
#[command(name = "rdme", version)]
struct Args {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed of every random stream.
    #[arg(long)]
    seed: u64,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trajectories per point; overrides the config.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Apply the config's `[full]` table (full-scale, long-running).
    #[arg(long)]
    full: bool,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let overrides = Overrides {
        seed: args.seed,
        out: args.out,
        trajectories: args.trajectories,
        threads: args.threads,
        full: args.full,
    };
    let result = load_config(&args.config, &overrides).and_then(|cfg| run_and_write(&cfg));
    match result {
        Ok((files, unreliable)) => {
            for f in &files {
                println!("{}", f.display());
            }
            if unreliable {
                eprintln!("warning: more than 10% of samples were censored; results are unreliable");
                ExitCode::from(EXIT_UNRELIABLE as u8)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

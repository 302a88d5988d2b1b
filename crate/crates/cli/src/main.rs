use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cavity_singlet_cli::config::{self, ConfigError};
use cavity_singlet_cli::run::execute;
use clap::Parser;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

/// Simulate dissipative singlet preparation of two atoms in a cavity.
#[derive(Parser, Debug)]
#[command(name = "sim", version)]
struct Args {
    /// TOML run configuration.
    config: PathBuf,
    /// Worker threads for sweeps (default: one per core).
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_path`; stdout when neither is set.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides `output_format` (csv or json).
    #[arg(long)]
    format: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    let mut raw = match config::load(&args.config) {
        Ok(raw) => raw,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = args.seed {
        raw.seed = Some(seed);
    }
    if let Some(path) = args.output {
        raw.output_path = Some(path);
    }
    if let Some(format) = args.format {
        raw.output_format = Some(format);
    }
    let cfg = match raw.validate() {
        Ok(cfg) => cfg,
        Err(errors) => {
            eprintln!("error: {}", ConfigError::Invalid(errors));
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs: must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    let table = match execute(&cfg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("numerical failure in {} mode: {e}", cfg.mode.name());
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let text = match table.render(cfg.output_format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot format output: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let written = match &cfg.output_path {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }
    ExitCode::SUCCESS
}

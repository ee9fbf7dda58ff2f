use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;
use sfpg_cli::{run_pipeline, CliError, RunConfig, RunOptions, Stage};

/// Strong-field pair generation pipeline.
#[derive(Debug, Parser)]
#[command(name = "sfpg", version)]
struct Args {
    /// Stages to run; dependencies are added automatically.
    #[arg(value_enum, required = true, num_args = 1..)]
    stages: Vec<Stage>,
    /// TOML config file, or `preset:<neon|waveguide|hom>`.
    #[arg(long)]
    config: String,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel stages.
    #[arg(long, env = "SFPG_THREADS")]
    threads: Option<usize>,
    /// Neither read nor write the correlator cache.
    #[arg(long)]
    no_cache: bool,
}

fn run(args: &Args) -> Result<(), CliError> {
    let config = RunConfig::load(&args.config)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("sfpg-out"));
    let manifest = run_pipeline(
        &config,
        &args.stages,
        &RunOptions {
            out_dir: out_dir.clone(),
            use_cache: !args.no_cache,
        },
    )?;
    println!(
        "wrote {} files to {} (manifest.json)",
        manifest.files.len(),
        out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

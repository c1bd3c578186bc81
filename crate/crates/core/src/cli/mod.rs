//! Batch front end.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::{parse_config, Mode, RawConfig, RunConfig};
pub use run::{run, validation_suite, OutputSource, Outcome};

use crate::error::Error;

pub const OUTPUT_ENV: &str = "MMRL_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "mmrl", version, about = "Simulate multistable Riemann-Liouville fields and paths")]
pub struct Args {
    /// Configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config and MMRL_OUTPUT_DIR).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; does not affect output bytes.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Mode override.
    #[arg(long)]
    pub mode: Option<String>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

fn load(args: &Args) -> crate::Result<RunConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut raw = RawConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        raw.set("run.seed", seed.to_string())?;
    }
    if let Some(mode) = &args.mode {
        raw.set("run.mode", mode.clone())?;
    }
    RunConfig::from_raw(&raw)
}

fn resolve_output(args: &Args, cfg: &RunConfig) -> (PathBuf, OutputSource) {
    if let Some(dir) = &args.output {
        return (dir.clone(), OutputSource::Flag);
    }
    if let Some(dir) = &cfg.output_dir {
        return (dir.clone(), OutputSource::Config);
    }
    match std::env::var(OUTPUT_ENV) {
        Ok(dir) if !dir.is_empty() => (PathBuf::from(&dir), OutputSource::Env(dir)),
        _ => (PathBuf::from("mmrl-out"), OutputSource::Default),
    }
}

/// Runs the command line and returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    for (k, v) in &cfg.defaults {
        eprintln!("default: {k}={v}");
    }
    let (out_dir, source) = resolve_output(&args, &cfg);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_ERROR;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_ERROR;
        }
    };
    match pool.install(|| run(&cfg, &out_dir, &source)) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if let Some(rep) = &outcome.report {
                for c in &rep.checks {
                    println!("{}", c.line());
                }
                if !rep.passed() {
                    eprintln!("failing checks: {}", rep.failing_ids().join(", "));
                    return EXIT_CHECK_FAILED;
                }
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn main() -> i32 {
    main_with(Args::parse())
}

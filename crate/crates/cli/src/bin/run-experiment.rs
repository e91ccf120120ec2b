//! Runs a reward, SAPU, curriculum or control ablation from a JSON config.

use std::path::PathBuf;

use anyhow::{Context, Result};
use assemblykit::harness::{run_experiment, ExperimentConfig};
use clap::Parser;

#[derive(Parser)]
#[command(about = "Run an ablation and write records.csv and summary.json under <out>/<name>/")]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn main() -> Result<()> {
    let args = Args::parse();
    rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global()?;
    let cfg = ExperimentConfig::load(&args.config).with_context(|| format!("config {}", args.config.display()))?;
    let dir = run_experiment(&cfg, &args.out)?;
    println!("{}", dir.join("summary.json").display());
    Ok(())
}

//! `trendopt run`: execute a configured experiment and write artifacts.

use std::path::PathBuf;

use clap::Args;

use trendopt::harness::run_experiment;

use crate::config::{apply_overrides, Config};
use crate::output;
use crate::CliError;

#[derive(Args)]
pub struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated optimizer list overriding the config.
    #[arg(long)]
    pub optimizers: Option<String>,
    /// Epoch count override.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Comma-separated seed list override.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output directory override.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let raw = std::fs::read(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut config = Config::load(&args.config)?;
    apply_overrides(
        &mut config,
        &args.optimizers,
        &args.epochs,
        &args.seeds,
        &args.out,
    )?;
    let format = config.output_format()?;
    let spec = config.experiment_spec()?;

    let records = run_experiment(&spec)?;

    let dir = output::ensure_dir(&config.output.dir.join(&spec.name))?;
    for record in &records {
        output::write_curves(&dir, record, format)?;
        if spec.track_regret {
            output::write_step_losses(&dir, record)?;
        }
    }
    output::write_differences(&dir, &records, &spec.seeds)?;
    output::write_aggregate(&dir, &records, format)?;

    let manifest = output::Manifest {
        experiment: spec.name.clone(),
        config_sha256: output::config_sha256(&raw),
        optimizers: spec.optimizers.iter().map(|o| o.name.clone()).collect(),
        seeds: spec.seeds.clone(),
        epochs: spec.epochs,
        batch_size: spec.batch_size,
        diverged_runs: records.iter().filter(|r| r.diverged).count(),
        runs: records
            .iter()
            .map(|r| output::ManifestRun {
                optimizer: r.optimizer.clone(),
                seed: r.seed,
                diverged: r.diverged,
                wall_secs: r.wall_secs,
                batch_hash: format!("{:016x}", r.batch_hash),
            })
            .collect(),
    };
    output::write_manifest(&dir, &manifest)?;

    println!(
        "wrote {} runs ({} diverged) to {}",
        records.len(),
        manifest.diverged_runs,
        dir.display()
    );
    Ok(())
}

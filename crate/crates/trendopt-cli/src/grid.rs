//! `trendopt grid`: reduced-epoch probes over the (eta, phi) grid.
//!
//! Cells enumerate eta-major in declared order, with `phi1 = phi2 = phi` for
//! the trend-corrected optimizers (phi has no effect on the others). The best
//! cell per optimizer is picked by final mean train loss; ties go to the
//! smaller eta, then the smaller phi.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use trendopt::harness::{aggregate_runs, run_experiment, ExperimentSpec};

use crate::config::{apply_overrides, Config};
use crate::output::{self, format_float};
use crate::CliError;

#[derive(Args)]
pub struct GridArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory override.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct CellResult {
    optimizer: String,
    eta: f64,
    phi1: f64,
    phi2: f64,
    final_train_loss_mean: f64,
    final_train_loss_std: f64,
}

#[derive(Serialize)]
struct GridReport {
    probe_epochs: usize,
    cells: Vec<CellResult>,
    best: Vec<CellResult>,
}

pub fn cmd_grid(args: GridArgs) -> Result<(), CliError> {
    let mut config = Config::load(&args.config)?;
    apply_overrides(&mut config, &None, &None, &None, &args.out)?;
    let base_spec = config.experiment_spec()?;
    if config.grid.etas.is_empty() || config.grid.phis.is_empty() {
        return Err(CliError::Config(
            "grid.etas and grid.phis must be nonempty".into(),
        ));
    }

    let mut cells: Vec<CellResult> = Vec::new();
    for &eta in &config.grid.etas {
        for &phi in &config.grid.phis {
            let mut spec = ExperimentSpec {
                optimizers: base_spec.optimizers.clone(),
                ..base_spec.clone()
            };
            spec.epochs = config.grid.probe_epochs;
            for opt in &mut spec.optimizers {
                opt.hp.eta = eta;
                if opt.hp.kind.trend_corrected() {
                    opt.hp.phi1 = phi;
                    opt.hp.phi2 = phi;
                }
            }
            spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
            let records = run_experiment(&spec)?;
            for row in aggregate_runs(&records) {
                cells.push(CellResult {
                    optimizer: row.optimizer,
                    eta,
                    phi1: phi,
                    phi2: phi,
                    final_train_loss_mean: row.final_train_loss.mean,
                    final_train_loss_std: row.final_train_loss.std,
                });
            }
        }
    }

    let mut best: Vec<CellResult> = Vec::new();
    for opt in &base_spec.optimizers {
        let candidates: Vec<&CellResult> =
            cells.iter().filter(|c| c.optimizer == opt.name).collect();
        let winner = candidates
            .iter()
            .min_by(|a, b| {
                a.final_train_loss_mean
                    .total_cmp(&b.final_train_loss_mean)
                    .then(a.eta.total_cmp(&b.eta))
                    .then(a.phi1.total_cmp(&b.phi1))
            })
            .expect("at least one cell per optimizer");
        best.push((*winner).clone());
    }

    let dir = output::ensure_dir(&config.output.dir.join(&base_spec.name))?;
    let mut csv = String::from(
        "optimizer,eta,phi1,phi2,final_train_loss_mean,final_train_loss_std\n",
    );
    for cell in &cells {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            cell.optimizer,
            format_float(cell.eta),
            format_float(cell.phi1),
            format_float(cell.phi2),
            format_float(cell.final_train_loss_mean),
            format_float(cell.final_train_loss_std),
        ));
    }
    std::fs::write(dir.join("grid_report.csv"), &csv)?;
    let report = GridReport {
        probe_epochs: config.grid.probe_epochs,
        cells,
        best: best.clone(),
    };
    std::fs::write(
        dir.join("grid_best.json"),
        serde_json::to_string_pretty(&report).map_err(CliError::runtime)?,
    )?;

    for cell in &best {
        println!(
            "best {}: eta={:e} phi1={} phi2={} final_train_loss={:.6}",
            cell.optimizer, cell.eta, cell.phi1, cell.phi2, cell.final_train_loss_mean
        );
    }
    Ok(())
}

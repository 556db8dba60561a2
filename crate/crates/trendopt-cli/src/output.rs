//! Result emission: per-run curve files, loss-difference files, the
//! aggregate table and a JSON manifest.
//!
//! File naming and the CSV column schema are part of the public contract.
//! Floats are serialized with 17 significant digits so the text round-trips
//! to the exact f64, which also makes reruns byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use trendopt::harness::{aggregate_runs, loss_difference, AggregateRow, RunRecord};

use crate::config::OutputFormat;
use crate::CliError;

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)?;
    Ok(())
}

pub fn curve_file_name(optimizer: &str, seed: u64, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => format!("{optimizer}_seed{seed}.csv"),
        OutputFormat::Json => format!("{optimizer}_seed{seed}.json"),
    }
}

#[derive(Serialize)]
struct CurveJson<'a> {
    optimizer: &'a str,
    seed: u64,
    train_loss: &'a [f64],
    train_acc: &'a [f64],
    test_loss: &'a [f64],
    test_acc: &'a [f64],
    diverged: bool,
}

pub fn write_curves(
    dir: &Path,
    record: &RunRecord,
    format: OutputFormat,
) -> Result<(), CliError> {
    let path = dir.join(curve_file_name(&record.optimizer, record.seed, format));
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("epoch,train_loss,train_acc,test_loss,test_acc\n");
            for epoch in 0..record.train_loss.len() {
                let acc = |series: &Vec<f64>| {
                    series
                        .get(epoch)
                        .map(|v| format_float(*v))
                        .unwrap_or_default()
                };
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    epoch,
                    format_float(record.train_loss[epoch]),
                    acc(&record.train_acc),
                    format_float(record.test_loss[epoch]),
                    acc(&record.test_acc),
                ));
            }
            write_atomic(&path, &out)
        }
        OutputFormat::Json => {
            let body = serde_json::to_string_pretty(&CurveJson {
                optimizer: &record.optimizer,
                seed: record.seed,
                train_loss: &record.train_loss,
                train_acc: &record.train_acc,
                test_loss: &record.test_loss,
                test_acc: &record.test_acc,
                diverged: record.diverged,
            })
            .map_err(CliError::runtime)?;
            write_atomic(&path, &body)
        }
    }
}

pub fn write_step_losses(dir: &Path, record: &RunRecord) -> Result<(), CliError> {
    let path = dir.join(format!("{}_seed{}_steps.csv", record.optimizer, record.seed));
    let mut out = String::from("step,loss\n");
    for (step, loss) in record.step_losses.iter().enumerate() {
        out.push_str(&format!("{},{}\n", step + 1, format_float(*loss)));
    }
    write_atomic(&path, &out)
}

/// Baseline-minus-trend difference files for the optimizer pairs present.
pub fn write_differences(
    dir: &Path,
    records: &[RunRecord],
    seeds: &[u64],
) -> Result<Vec<String>, CliError> {
    let mut written = Vec::new();
    for (baseline, trend) in [("adam", "adamt"), ("amsgrad", "amsgradt")] {
        for &seed in seeds {
            let find = |name: &str| {
                records
                    .iter()
                    .find(|r| r.optimizer == name && r.seed == seed)
            };
            let (Some(base), Some(tr)) = (find(baseline), find(trend)) else {
                continue;
            };
            // A diverged run may have truncated series; compare the common
            // prefix.
            let train_len = base.train_loss.len().min(tr.train_loss.len());
            let test_len = base.test_loss.len().min(tr.test_loss.len());
            let train_diff =
                loss_difference(&base.train_loss[..train_len], &tr.train_loss[..train_len])?;
            let test_diff =
                loss_difference(&base.test_loss[..test_len], &tr.test_loss[..test_len])?;

            let name = format!("diff_{baseline}_minus_{trend}_seed{seed}.csv");
            let mut out = String::from("epoch,train_loss_diff,test_loss_diff\n");
            for epoch in 0..train_len.max(test_len) {
                let cell = |series: &Vec<f64>| {
                    series
                        .get(epoch)
                        .map(|v| format_float(*v))
                        .unwrap_or_default()
                };
                out.push_str(&format!("{},{},{}\n", epoch, cell(&train_diff), cell(&test_diff)));
            }
            write_atomic(&dir.join(&name), &out)?;
            written.push(name);
        }
    }
    Ok(written)
}

#[derive(Serialize)]
struct AggregateJsonRow<'a> {
    optimizer: &'a str,
    train_loss_mean: f64,
    train_loss_std: f64,
    test_loss_mean: f64,
    test_loss_std: f64,
    train_acc_mean: Option<f64>,
    train_acc_std: Option<f64>,
    test_acc_mean: Option<f64>,
    test_acc_std: Option<f64>,
}

/// One row per optimizer with mean +/- std of the final metrics.
pub fn write_aggregate(
    dir: &Path,
    records: &[RunRecord],
    format: OutputFormat,
) -> Result<Vec<AggregateRow>, CliError> {
    let rows = aggregate_runs(records);
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(
                "optimizer,train_loss_mean,train_loss_std,test_loss_mean,test_loss_std,\
                 train_acc_mean,train_acc_std,test_acc_mean,test_acc_std\n",
            );
            for row in &rows {
                let opt_pair = |m: &Option<trendopt::harness::MeanStd>| match m {
                    Some(ms) => (format_float(ms.mean), format_float(ms.std)),
                    None => (String::new(), String::new()),
                };
                let (tam, tas) = opt_pair(&row.final_train_acc);
                let (eam, eas) = opt_pair(&row.final_test_acc);
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    row.optimizer,
                    format_float(row.final_train_loss.mean),
                    format_float(row.final_train_loss.std),
                    format_float(row.final_test_loss.mean),
                    format_float(row.final_test_loss.std),
                    tam,
                    tas,
                    eam,
                    eas,
                ));
            }
            write_atomic(&dir.join("aggregate.csv"), &out)?;
        }
        OutputFormat::Json => {
            let body: Vec<AggregateJsonRow> = rows
                .iter()
                .map(|row| AggregateJsonRow {
                    optimizer: &row.optimizer,
                    train_loss_mean: row.final_train_loss.mean,
                    train_loss_std: row.final_train_loss.std,
                    test_loss_mean: row.final_test_loss.mean,
                    test_loss_std: row.final_test_loss.std,
                    train_acc_mean: row.final_train_acc.map(|m| m.mean),
                    train_acc_std: row.final_train_acc.map(|m| m.std),
                    test_acc_mean: row.final_test_acc.map(|m| m.mean),
                    test_acc_std: row.final_test_acc.map(|m| m.std),
                })
                .collect();
            let body = serde_json::to_string_pretty(&body).map_err(CliError::runtime)?;
            write_atomic(&dir.join("aggregate.json"), &body)?;
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
pub struct ManifestRun {
    pub optimizer: String,
    pub seed: u64,
    pub diverged: bool,
    pub wall_secs: f64,
    pub batch_hash: String,
}

#[derive(Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_sha256: String,
    pub optimizers: Vec<String>,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub diverged_runs: usize,
    pub runs: Vec<ManifestRun>,
}

pub fn config_sha256(raw: &[u8]) -> String {
    let digest = Sha256::digest(raw);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(manifest).map_err(CliError::runtime)?;
    write_atomic(&dir.join("manifest.json"), &body)
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

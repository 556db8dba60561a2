//! Experiment runner: comparable training curves across optimizers, seed
//! statistics, and regret tracking for convex runs.
//!
//! Within one experiment seed every optimizer sees the same initial
//! parameters and the same minibatch order (the index stream is hashed and
//! cross-checked), so per-epoch loss curves are directly comparable and
//! loss-difference series are meaningful.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{synth_classification, load_idx, BatchStream, Dataset, Split};
use crate::error::{Error, Result};
use crate::models::{
    Activation, Batch, Classifier, LogisticRegression, Mlp, MlpSpec, Objective, Quadratic,
    Rosenbrock,
};
use crate::optim::{HyperParams, Optimizer};
use crate::util::derive_seed;

const INIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;
const DROPOUT_STREAM: u64 = 3;
const TRAIN_DATA_STREAM: u64 = 4;
const TEST_DATA_STREAM: u64 = 5;

/// One optimizer entry in an experiment; `name` keys output files.
#[derive(Debug, Clone)]
pub struct OptimizerSpec {
    pub name: String,
    pub hp: HyperParams,
}

impl OptimizerSpec {
    pub fn from_kind(kind: crate::optim::OptimizerKind) -> Self {
        Self {
            name: kind.name().to_string(),
            hp: HyperParams::with_kind(kind),
        }
    }
}

/// Which benchmark model an experiment trains.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Logreg {
        l2: f64,
    },
    Mlp {
        hidden: Vec<usize>,
        activation: Activation,
        dropout: Vec<f64>,
    },
    Quadratic {
        dim: usize,
        seed: u64,
    },
    Rosenbrock,
}

/// Where the train/test datasets come from.
#[derive(Debug, Clone)]
pub enum DataSpec {
    Synthetic {
        seed: u64,
        train_samples: usize,
        test_samples: usize,
        features: usize,
        classes: usize,
        separation: f64,
    },
    Idx {
        train_images: std::path::PathBuf,
        train_labels: std::path::PathBuf,
        test_images: std::path::PathBuf,
        test_labels: std::path::PathBuf,
        signed: bool,
    },
}

impl DataSpec {
    /// Materializes the train and test datasets.
    pub fn build(&self) -> Result<(Dataset, Dataset)> {
        match self {
            DataSpec::Synthetic {
                seed,
                train_samples,
                test_samples,
                features,
                classes,
                separation,
            } => {
                let train = synth_classification(
                    derive_seed(*seed, TRAIN_DATA_STREAM),
                    *train_samples,
                    *features,
                    *classes,
                    *separation,
                )?;
                let test = synth_classification(
                    derive_seed(*seed, TEST_DATA_STREAM),
                    *test_samples,
                    *features,
                    *classes,
                    *separation,
                )?
                .with_split(Split::Test);
                Ok((train, test))
            }
            DataSpec::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                signed,
            } => {
                let train = load_idx(train_images, train_labels, *signed)?;
                let test = load_idx(test_images, test_labels, *signed)?.with_split(Split::Test);
                Ok((train, test))
            }
        }
    }
}

/// An experiment: model, data, optimizer list and training protocol.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub model: ModelSpec,
    pub data: DataSpec,
    pub optimizers: Vec<OptimizerSpec>,
    pub epochs: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    /// Record the per-step minibatch loss f_t(x_t).
    pub track_regret: bool,
    /// Stop a run once its test loss increases (off by default).
    pub early_stop: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.optimizers.is_empty() {
            return Err(Error::InvalidArgument("no optimizers selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("no seeds selected".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        for opt in &self.optimizers {
            opt.hp.validate()?;
        }
        Ok(())
    }
}

/// Everything recorded for one (optimizer, seed) run. Per-epoch series have
/// `epochs + 1` entries, the first taken before any update; accuracy series
/// stay empty for models without a classification head.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub optimizer: String,
    pub seed: u64,
    pub train_loss: Vec<f64>,
    pub train_acc: Vec<f64>,
    pub test_loss: Vec<f64>,
    pub test_acc: Vec<f64>,
    /// Minibatch losses f_t(x_t), one per optimizer step (regret tracking
    /// only).
    pub step_losses: Vec<f64>,
    /// FNV-1a hash of the minibatch index stream; equal across optimizers
    /// within one seed.
    pub batch_hash: u64,
    pub diverged: bool,
    pub wall_secs: f64,
}

impl RunRecord {
    pub fn final_train_loss(&self) -> f64 {
        *self.train_loss.last().expect("nonempty series")
    }

    pub fn final_test_loss(&self) -> f64 {
        *self.test_loss.last().expect("nonempty series")
    }
}

enum BuiltModel {
    Logreg(LogisticRegression),
    Mlp(Mlp),
    Quadratic(Quadratic),
    Rosenbrock(Rosenbrock),
}

impl BuiltModel {
    fn build(spec: &ModelSpec, train: &Dataset) -> Result<Self> {
        Ok(match spec {
            ModelSpec::Logreg { l2 } => BuiltModel::Logreg(
                LogisticRegression::new(train.dim(), train.classes()).with_l2(*l2),
            ),
            ModelSpec::Mlp {
                hidden,
                activation,
                dropout,
            } => BuiltModel::Mlp(Mlp::new(MlpSpec {
                input: train.dim(),
                hidden: hidden.clone(),
                classes: train.classes(),
                activation: *activation,
                dropout: dropout.clone(),
            })?),
            ModelSpec::Quadratic { dim, seed } => {
                BuiltModel::Quadratic(Quadratic::seeded(*dim, *seed))
            }
            ModelSpec::Rosenbrock => BuiltModel::Rosenbrock(Rosenbrock),
        })
    }

    fn objective(&self) -> &dyn Objective {
        match self {
            BuiltModel::Logreg(m) => m,
            BuiltModel::Mlp(m) => m,
            BuiltModel::Quadratic(m) => m,
            BuiltModel::Rosenbrock(m) => m,
        }
    }

    fn classifier(&self) -> Option<&dyn Classifier> {
        match self {
            BuiltModel::Logreg(m) => Some(m),
            BuiltModel::Mlp(m) => Some(m),
            _ => None,
        }
    }

    fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            BuiltModel::Logreg(m) => m.init_params(rng),
            BuiltModel::Mlp(m) => m.init_params(rng),
            BuiltModel::Quadratic(m) => m.init_params(rng),
            BuiltModel::Rosenbrock(m) => m.init_params(rng),
        }
    }
}

/// Batch-order stream seed used by [`run_experiment`] for a given experiment
/// seed; exposed so regret replays can regenerate the exact index sequence.
pub fn shuffle_seed(seed: u64) -> u64 {
    derive_seed(seed, SHUFFLE_STREAM)
}

/// Runs every (optimizer, seed) cell of the experiment, optimizer-major.
///
/// Runs are independent and execute on the rayon pool; results are collected
/// in declaration order, so output is deterministic regardless of thread
/// count. A run that produces non-finite losses or gradients is flagged
/// `diverged` and truncated; other runs continue.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let (train, test) = spec.data.build()?;
    let model = BuiltModel::build(&spec.model, &train)?;

    let inits: Vec<Vec<f64>> = spec
        .seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, INIT_STREAM));
            model.init_params(&mut rng)
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..spec.optimizers.len())
        .flat_map(|o| (0..spec.seeds.len()).map(move |s| (o, s)))
        .collect();

    let records: Result<Vec<RunRecord>> = jobs
        .par_iter()
        .map(|&(o, s)| {
            run_single(
                spec,
                &model,
                &train,
                &test,
                &spec.optimizers[o],
                spec.seeds[s],
                &inits[s],
            )
        })
        .collect();
    let records = records?;

    // Comparability: within a seed all optimizers must have consumed the
    // same index stream.
    for s in 0..spec.seeds.len() {
        let reference = records[s].batch_hash;
        for o in 1..spec.optimizers.len() {
            let record = &records[o * spec.seeds.len() + s];
            assert_eq!(
                record.batch_hash, reference,
                "batch order diverged between optimizers for seed {}",
                spec.seeds[s]
            );
        }
    }
    Ok(records)
}

fn run_single(
    spec: &ExperimentSpec,
    model: &BuiltModel,
    train: &Dataset,
    test: &Dataset,
    opt_spec: &OptimizerSpec,
    seed: u64,
    init: &[f64],
) -> Result<RunRecord> {
    let start = Instant::now();
    let objective = model.objective();
    let mut optimizer = Optimizer::new(opt_spec.hp, objective.dim())?;
    let mut params = init.to_vec();
    let mut stream = BatchStream::new(train.len(), spec.batch_size, shuffle_seed(seed))?;
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, DROPOUT_STREAM));

    let train_idx = train.all_indices();
    let test_idx = test.all_indices();
    let train_full = Batch::new(train, &train_idx);
    let test_full = Batch::new(test, &test_idx);

    let mut record = RunRecord {
        optimizer: opt_spec.name.clone(),
        seed,
        train_loss: Vec::with_capacity(spec.epochs + 1),
        train_acc: Vec::new(),
        test_loss: Vec::with_capacity(spec.epochs + 1),
        test_acc: Vec::new(),
        step_losses: Vec::new(),
        batch_hash: FNV_OFFSET,
        diverged: false,
        wall_secs: 0.0,
    };

    let evaluate = |params: &[f64], record: &mut RunRecord| -> Result<bool> {
        let (train_loss, _) = objective.eval_inference(params, &train_full)?;
        let (test_loss, _) = objective.eval_inference(params, &test_full)?;
        record.train_loss.push(train_loss);
        record.test_loss.push(test_loss);
        if let Some(classifier) = model.classifier() {
            record.train_acc.push(classifier.accuracy(params, &train_full)?);
            record.test_acc.push(classifier.accuracy(params, &test_full)?);
        }
        Ok(train_loss.is_finite() && test_loss.is_finite())
    };

    if !evaluate(&params, &mut record)? {
        record.diverged = true;
    }

    'training: for _epoch in 0..spec.epochs {
        if record.diverged {
            break;
        }
        for _ in 0..stream.batches_per_epoch() {
            let indices = stream.next_batch();
            for &i in indices {
                fnv_mix(&mut record.batch_hash, i as u64);
            }
            let batch = Batch::new(train, indices);
            let step = (|| -> Result<()> {
                let (loss, grad) = objective.eval(&params, &batch, &mut dropout_rng)?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteInput {
                        what: "minibatch loss",
                        index: 0,
                    });
                }
                if spec.track_regret {
                    record.step_losses.push(loss);
                }
                optimizer.step(&mut params, &grad)?;
                Ok(())
            })();
            match step {
                Ok(()) => {}
                Err(Error::NonFiniteInput { .. }) | Err(Error::NonFiniteActivation { .. }) => {
                    record.diverged = true;
                    break 'training;
                }
                Err(other) => return Err(other),
            }
        }
        if !evaluate(&params, &mut record)? {
            record.diverged = true;
            break;
        }
        if spec.early_stop {
            let n = record.test_loss.len();
            if n >= 2 && record.test_loss[n - 1] > record.test_loss[n - 2] {
                break;
            }
        }
    }

    record.wall_secs = start.elapsed().as_secs_f64();
    Ok(record)
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

fn fnv_mix(hash: &mut u64, value: u64) {
    for byte in value.to_le_bytes() {
        *hash ^= byte as u64;
        *hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
}

/// Elementwise `a - b`; positive values favor the second run.
pub fn loss_difference(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

/// Mean and sample (n-1) standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

/// Final-value statistics for one optimizer across seeds.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub optimizer: String,
    pub final_train_loss: MeanStd,
    pub final_test_loss: MeanStd,
    pub final_train_acc: Option<MeanStd>,
    pub final_test_acc: Option<MeanStd>,
}

/// Per-optimizer mean and standard deviation of the final metrics, in
/// first-seen optimizer order.
pub fn aggregate_runs(records: &[RunRecord]) -> Vec<AggregateRow> {
    let mut order: Vec<&str> = Vec::new();
    for record in records {
        if !order.contains(&record.optimizer.as_str()) {
            order.push(&record.optimizer);
        }
    }
    order
        .into_iter()
        .map(|name| {
            let group: Vec<&RunRecord> =
                records.iter().filter(|r| r.optimizer == name).collect();
            let finals = |f: &dyn Fn(&RunRecord) -> f64| -> Vec<f64> {
                group.iter().map(|r| f(r)).collect()
            };
            let acc = |pick: &dyn Fn(&RunRecord) -> Option<f64>| -> Option<MeanStd> {
                let values: Option<Vec<f64>> = group.iter().map(|r| pick(r)).collect();
                values.map(|v| MeanStd::of(&v))
            };
            AggregateRow {
                optimizer: name.to_string(),
                final_train_loss: MeanStd::of(&finals(&|r| r.final_train_loss())),
                final_test_loss: MeanStd::of(&finals(&|r| r.final_test_loss())),
                final_train_acc: acc(&|r| r.train_acc.last().copied()),
                final_test_acc: acc(&|r| r.test_acc.last().copied()),
            }
        })
        .collect()
}

/// Cumulative regret and its `R(T)/sqrt(T)` companion series.
#[derive(Debug, Clone)]
pub struct RegretSeries {
    pub regret: Vec<f64>,
    pub regret_over_sqrt_t: Vec<f64>,
}

/// `R(T) = sum_{t<=T} [f_t(x_t) - f_t(x*)]` for two aligned loss streams.
pub fn compute_regret(run_losses: &[f64], x_star_losses: &[f64]) -> Result<RegretSeries> {
    if run_losses.len() != x_star_losses.len() {
        return Err(Error::LengthMismatch {
            left: run_losses.len(),
            right: x_star_losses.len(),
        });
    }
    let mut cumulative = 0.0;
    let mut regret = Vec::with_capacity(run_losses.len());
    let mut scaled = Vec::with_capacity(run_losses.len());
    for (t, (run, star)) in run_losses.iter().zip(x_star_losses).enumerate() {
        cumulative += run - star;
        regret.push(cumulative);
        scaled.push(cumulative / ((t + 1) as f64).sqrt());
    }
    Ok(RegretSeries {
        regret,
        regret_over_sqrt_t: scaled,
    })
}

/// Replays the deterministic batch stream and evaluates the objective at a
/// fixed parameter vector, yielding the `f_t(x*)` stream for regret.
pub fn minibatch_losses_at(
    objective: &dyn Objective,
    data: &Dataset,
    params: &[f64],
    batch_size: usize,
    stream_seed: u64,
    steps: usize,
) -> Result<Vec<f64>> {
    let mut stream = BatchStream::new(data.len(), batch_size, stream_seed)?;
    let mut losses = Vec::with_capacity(steps);
    for _ in 0..steps {
        let indices = stream.next_batch();
        let batch = Batch::new(data, indices);
        let (loss, _) = objective.eval_inference(params, &batch)?;
        losses.push(loss);
    }
    Ok(losses)
}

/// Full-batch gradient descent with backtracking (Armijo) line search until
/// the gradient infinity norm drops below `tolerance`.
pub fn find_optimum(
    objective: &dyn Objective,
    batch: &Batch<'_>,
    start: &[f64],
    tolerance: f64,
) -> Result<Vec<f64>> {
    const MAX_ITERATIONS: u64 = 1_000_000;
    // A strong sufficient-decrease constant keeps accepted steps inside the
    // zone where the gradient map contracts (s <= 1.5/L on quadratics);
    // looser constants admit steps near 2/L that orbit the optimum forever.
    const ARMIJO: f64 = 0.25;

    let mut x = start.to_vec();
    let (mut loss, mut grad) = objective.eval_inference(&x, batch)?;
    let mut step = 1.0;
    for _ in 0..MAX_ITERATIONS {
        let grad_norm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if grad_norm <= tolerance {
            return Ok(x);
        }
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
        loop {
            let candidate: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - step * gi).collect();
            let (cand_loss, cand_grad) = objective.eval_inference(&candidate, batch)?;
            // The Armijo decrement only certifies progress while it exceeds
            // the f64 noise of the loss evaluation; below that floor a
            // comparison of losses accepts arbitrary steps at random. In the
            // noise regime, accept on a material gradient-norm contraction
            // with the loss held flat instead.
            let decrement = ARMIJO * step * grad_sq;
            let noise_floor = 16.0 * f64::EPSILON * loss.abs();
            let sufficient_decrease = decrement > noise_floor && cand_loss <= loss - decrement;
            let cand_sq: f64 = cand_grad.iter().map(|g| g * g).sum();
            let flat_progress =
                cand_loss <= loss + 1e-12 * loss.abs().max(1e-12) && cand_sq <= 0.999 * grad_sq;
            if sufficient_decrease || flat_progress {
                x = candidate;
                loss = cand_loss;
                grad = cand_grad;
                step = (step * 2.0).min(1e6);
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return Err(Error::NoConvergence {
                    iterations: MAX_ITERATIONS,
                    grad_norm,
                });
            }
        }
    }
    let grad_norm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        grad_norm,
    })
}

/// Least-squares slope of `ln R(T)` against `ln T` over `T` in
/// `[t_lo, t_hi]` (1-based steps). Nonpositive regret values are skipped.
pub fn loglog_slope(regret: &[f64], t_lo: usize, t_hi: usize) -> f64 {
    let mut points = Vec::new();
    for t in t_lo..=t_hi.min(regret.len()) {
        let r = regret[t - 1];
        if r > 0.0 {
            points.push(((t as f64).ln(), r.ln()));
        }
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in points {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::OptimizerKind;
    use approx::assert_relative_eq;

    fn tiny_data() -> DataSpec {
        DataSpec::Synthetic {
            seed: 11,
            train_samples: 40,
            test_samples: 20,
            features: 4,
            classes: 2,
            separation: 2.0,
        }
    }

    #[test]
    fn sgd_on_quadratic_descends_monotonically() {
        let mut sgd = OptimizerSpec::from_kind(OptimizerKind::Sgd);
        // Comfortably below 2/L for the seeded instance.
        let q = Quadratic::seeded(6, 5);
        sgd.hp.eta = 1.0 / q.curvature_bound();
        let spec = ExperimentSpec {
            name: "quad".into(),
            model: ModelSpec::Quadratic { dim: 6, seed: 5 },
            data: tiny_data(),
            optimizers: vec![sgd],
            epochs: 40,
            batch_size: 8,
            seeds: vec![0],
            track_regret: false,
            early_stop: false,
        };
        let records = run_experiment(&spec).unwrap();
        let losses = &records[0].train_loss;
        assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
        assert!(records[0].train_acc.is_empty());
    }

    #[test]
    fn shared_initialization_gives_identical_epoch_zero() {
        let spec = ExperimentSpec {
            name: "shared".into(),
            model: ModelSpec::Logreg { l2: 0.0 },
            data: tiny_data(),
            optimizers: vec![
                OptimizerSpec::from_kind(OptimizerKind::Adam),
                OptimizerSpec::from_kind(OptimizerKind::AdamT),
            ],
            epochs: 2,
            batch_size: 16,
            seeds: vec![3, 4],
            track_regret: false,
            early_stop: false,
        };
        let records = run_experiment(&spec).unwrap();
        // records are optimizer-major: [adam s3, adam s4, adamt s3, adamt s4]
        assert_eq!(records[0].train_loss[0].to_bits(), records[2].train_loss[0].to_bits());
        assert_eq!(records[1].train_loss[0].to_bits(), records[3].train_loss[0].to_bits());
        assert_eq!(records[0].batch_hash, records[2].batch_hash);
        assert_ne!(records[0].train_loss[0].to_bits(), records[1].train_loss[0].to_bits());
    }

    #[test]
    fn loss_difference_basics() {
        let a = [1.0, 2.0, 3.0];
        let b = [1.0, 2.0, 3.0];
        assert_eq!(loss_difference(&a, &b).unwrap(), vec![0.0; 3]);
        let c = [0.5, 1.5, 2.5];
        assert_eq!(loss_difference(&a, &c).unwrap(), vec![0.5; 3]);
        assert!(matches!(
            loss_difference(&a, &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn aggregate_mean_and_sample_std() {
        let mk = |name: &str, seed: u64, fin: f64| RunRecord {
            optimizer: name.into(),
            seed,
            train_loss: vec![1.0, fin],
            train_acc: vec![0.5, 0.9],
            test_loss: vec![1.0, fin],
            test_acc: vec![0.5, 0.8],
            step_losses: vec![],
            batch_hash: 0,
            diverged: false,
            wall_secs: 0.0,
        };
        let rows = aggregate_runs(&[mk("a", 0, 0.3), mk("a", 1, 0.5)]);
        assert_eq!(rows.len(), 1);
        assert_relative_eq!(rows[0].final_train_loss.mean, 0.4, max_relative = 1e-15);
        assert_relative_eq!(
            rows[0].final_train_loss.std,
            0.1414213562373095,
            max_relative = 1e-12
        );

        let identical = aggregate_runs(&[mk("b", 0, 0.3), mk("b", 1, 0.3)]);
        assert_eq!(identical[0].final_train_loss.std, 0.0);
    }

    #[test]
    fn regret_trivial_series() {
        let zero = compute_regret(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(zero.regret, vec![0.0, 0.0]);

        let constant_gap = compute_regret(&[2.0; 4], &[1.5; 4]).unwrap();
        assert_eq!(constant_gap.regret, vec![0.5, 1.0, 1.5, 2.0]);
        assert_relative_eq!(
            constant_gap.regret_over_sqrt_t[3],
            2.0 / 2.0,
            max_relative = 1e-15
        );

        assert!(compute_regret(&[1.0], &[]).is_err());
    }

    #[test]
    fn find_optimum_on_quadratic_recovers_minimizer() {
        let q = Quadratic::seeded(5, 1);
        let (train, _) = tiny_data().build().unwrap();
        let idx = train.all_indices();
        let batch = Batch::new(&train, &idx);
        let x = find_optimum(&q, &batch, &vec![0.0; 5], 1e-10).unwrap();
        for (a, b) in x.iter().zip(q.minimizer()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn find_optimum_on_regularized_logreg_is_unique() {
        let (train, _) = tiny_data().build().unwrap();
        let model = LogisticRegression::new(train.dim(), train.classes()).with_l2(0.1);
        let idx = train.all_indices();
        let batch = Batch::new(&train, &idx);

        let x1 = find_optimum(&model, &batch, &vec![0.0; model.dim()], 1e-10).unwrap();
        let (_, grad) = model.eval_inference(&x1, &batch).unwrap();
        assert!(grad.iter().all(|g| g.abs() <= 1e-10));

        let start2: Vec<f64> = (0..model.dim()).map(|i| 0.3 * (i as f64 + 1.0)).collect();
        let x2 = find_optimum(&model, &batch, &start2, 1e-10).unwrap();
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn best_fixed_point_minimizes_regret() {
        use rand::Rng;
        let (train, _) = tiny_data().build().unwrap();
        let model = LogisticRegression::new(train.dim(), train.classes()).with_l2(1e-2);
        let idx = train.all_indices();
        let batch = Batch::new(&train, &idx);
        let x_star = find_optimum(&model, &batch, &vec![0.0; model.dim()], 1e-10).unwrap();

        let steps = 200;
        let stream_seed = shuffle_seed(0);
        let star_losses =
            minibatch_losses_at(&model, &train, &x_star, 8, stream_seed, steps).unwrap();

        // The run stream: pretend the iterates sat at a fixed random point.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..5 {
            let z: Vec<f64> = (0..model.dim()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let z_losses =
                minibatch_losses_at(&model, &train, &z, 8, stream_seed, steps).unwrap();
            let total_star: f64 = star_losses.iter().sum();
            let total_z: f64 = z_losses.iter().sum();
            assert!(total_star <= total_z + 1e-9);
        }
    }

    #[test]
    fn loglog_slope_of_linear_series_is_one() {
        let series: Vec<f64> = (1..=1000).map(|t| 3.0 * t as f64).collect();
        let slope = loglog_slope(&series, 10, 1000);
        assert_relative_eq!(slope, 1.0, max_relative = 1e-9);
        let sqrt_series: Vec<f64> = (1..=1000).map(|t| (t as f64).sqrt()).collect();
        assert_relative_eq!(
            loglog_slope(&sqrt_series, 10, 1000),
            0.5,
            max_relative = 1e-9
        );
    }
}

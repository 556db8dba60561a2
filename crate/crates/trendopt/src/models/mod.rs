//! Benchmark objectives with analytic gradients.
//!
//! Parameter flattening order is part of the public contract: weight
//! matrices are row-major (output-major), each followed by its bias vector,
//! layer by layer. Optimizers never look inside the flat vector.

mod logreg;
mod mlp;
mod simple;

pub use logreg::LogisticRegression;
pub use mlp::{Mlp, MlpSpec};
pub use simple::{Quadratic, Rosenbrock};

use rand::RngCore;

use crate::data::Dataset;
use crate::error::Result;

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub(crate) fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative with respect to the pre-activation. The ReLU subgradient at
    /// zero is taken as 0.
    pub(crate) fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

/// A view of selected samples of a dataset.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    data: &'a Dataset,
    indices: &'a [usize],
}

impl<'a> Batch<'a> {
    pub fn new(data: &'a Dataset, indices: &'a [usize]) -> Self {
        Self { data, indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn features(&self, i: usize) -> &'a [f64] {
        self.data.feature_row(self.indices[i])
    }

    pub fn label(&self, i: usize) -> usize {
        self.data.label(self.indices[i])
    }
}

/// A (loss, gradient) evaluator over a flat parameter vector and a batch.
///
/// With a fixed RNG stream the evaluation is a pure function; only models
/// with active dropout consume the stream at all.
pub trait Objective: Sync {
    /// Parameter dimensionality.
    fn dim(&self) -> usize;

    /// Mean loss over the batch and its exact gradient. `rng` drives any
    /// stochastic regularization (dropout masks).
    fn eval(&self, params: &[f64], batch: &Batch<'_>, rng: &mut dyn RngCore)
        -> Result<(f64, Vec<f64>)>;

    /// Deterministic evaluation with stochastic layers disabled; used for
    /// loss reporting and as the objective for full-batch solvers.
    fn eval_inference(&self, params: &[f64], batch: &Batch<'_>) -> Result<(f64, Vec<f64>)> {
        // Objectives without stochastic layers ignore the RNG entirely.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        use rand::SeedableRng;
        self.eval(params, batch, &mut rng)
    }

    /// False only when dropout (or another sampled regularizer) is active.
    fn deterministic(&self) -> bool {
        true
    }
}

/// Classification objectives additionally expose hard predictions.
pub trait Classifier: Objective {
    /// Predicted class for one feature row (stochastic layers disabled).
    fn predict(&self, params: &[f64], features: &[f64]) -> Result<usize>;

    /// Fraction of correctly classified samples in the batch.
    fn accuracy(&self, params: &[f64], batch: &Batch<'_>) -> Result<f64> {
        let mut correct = 0usize;
        for i in 0..batch.len() {
            if self.predict(params, batch.features(i))? == batch.label(i) {
                correct += 1;
            }
        }
        Ok(correct as f64 / batch.len() as f64)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable log(sum(exp(z))).
pub(crate) fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    max + sum.ln()
}

//! Dataset acquisition and minibatching.
//!
//! Datasets are immutable after construction: a flat row-major feature
//! matrix, integer class labels and a little provenance metadata. Minibatch
//! order comes from [`BatchStream`], which reshuffles deterministically per
//! epoch from its seed.

mod batch;
mod idx;
mod synth;

pub use batch::BatchStream;
pub use idx::load_idx;
pub use synth::synth_classification;

use crate::error::{Error, Result};
use crate::util::first_non_finite;

/// Which split a dataset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// How raw feature values were normalized at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Values used as generated.
    None,
    /// Scaled into [0, 1].
    UnitInterval,
    /// Scaled into [-1, 1].
    SignedUnit,
}

/// An immutable classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    samples: usize,
    dim: usize,
    classes: usize,
    split: Split,
    normalization: Normalization,
}

impl Dataset {
    /// Builds a dataset from a flat row-major feature matrix.
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        dim: usize,
        classes: usize,
        split: Split,
        normalization: Normalization,
    ) -> Result<Self> {
        let samples = labels.len();
        if samples == 0 {
            return Err(Error::InvalidArgument("dataset must be nonempty".into()));
        }
        if features.len() != samples * dim {
            return Err(Error::DimensionMismatch {
                expected: samples * dim,
                got: features.len(),
            });
        }
        if let Some(i) = labels.iter().position(|&l| l >= classes) {
            return Err(Error::InvalidArgument(format!(
                "label {} at sample {i} is out of range for {classes} classes",
                labels[i]
            )));
        }
        if let Some(i) = first_non_finite(&features) {
            return Err(Error::NonFiniteInput {
                what: "feature",
                index: i,
            });
        }
        Ok(Self {
            features,
            labels,
            samples,
            dim,
            classes,
            split,
            normalization,
        })
    }

    pub fn len(&self) -> usize {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }

    /// Feature dimensionality.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn feature_row(&self, sample: usize) -> &[f64] {
        &self.features[sample * self.dim..(sample + 1) * self.dim]
    }

    pub fn label(&self, sample: usize) -> usize {
        self.labels[sample]
    }

    /// Retags the split marker (datasets are otherwise immutable).
    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    /// Indices 0..n, for full-batch evaluation.
    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.samples).collect()
    }
}

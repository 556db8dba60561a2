//! Multinomial logistic regression with softmax cross-entropy loss.

use rand::RngCore;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::{argmax, log_sum_exp, Batch, Classifier, Objective};

/// Softmax regression over `classes` labels on `features`-dimensional input.
///
/// Parameters are the row-major `classes x features` weight matrix followed
/// by one bias per class. The optional L2 term `lambda/2 * ||theta||^2`
/// covers the whole parameter vector, which makes the regularized loss
/// strictly convex (softmax is invariant to shifting all class logits, so
/// penalizing weights alone would leave a flat direction).
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    features: usize,
    classes: usize,
    l2: f64,
}

impl LogisticRegression {
    pub fn new(features: usize, classes: usize) -> Self {
        Self {
            features,
            classes,
            l2: 0.0,
        }
    }

    /// Adds an L2 penalty with weight `lambda` (used by the regret oracle).
    pub fn with_l2(mut self, lambda: f64) -> Self {
        self.l2 = lambda;
        self
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    /// Small random normal initialization.
    pub fn init_params(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        use rand::Rng;
        (0..self.dim())
            .map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn logits(&self, params: &[f64], x: &[f64], out: &mut [f64]) {
        let (w, b) = params.split_at(self.classes * self.features);
        for k in 0..self.classes {
            let row = &w[k * self.features..(k + 1) * self.features];
            out[k] = b[k] + row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
        }
    }
}

impl Objective for LogisticRegression {
    fn dim(&self) -> usize {
        self.classes * (self.features + 1)
    }

    fn eval(
        &self,
        params: &[f64],
        batch: &Batch<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<(f64, Vec<f64>)> {
        if params.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: params.len(),
            });
        }
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }

        let n = batch.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.dim()];
        let mut logits = vec![0.0; self.classes];
        let weight_len = self.classes * self.features;
        for i in 0..batch.len() {
            let x = batch.features(i);
            let y = batch.label(i);
            if y >= self.classes {
                return Err(Error::InvalidArgument(format!(
                    "label {y} out of range for {} classes",
                    self.classes
                )));
            }
            self.logits(params, x, &mut logits);
            let lse = log_sum_exp(&logits);
            loss += lse - logits[y];
            for k in 0..self.classes {
                let mut delta = (logits[k] - lse).exp();
                if k == y {
                    delta -= 1.0;
                }
                let row = &mut grad[k * self.features..(k + 1) * self.features];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g += delta * xi;
                }
                grad[weight_len + k] += delta;
            }
        }
        loss /= n;
        for g in grad.iter_mut() {
            *g /= n;
        }

        if self.l2 > 0.0 {
            let mut sq = 0.0;
            for (g, p) in grad.iter_mut().zip(params) {
                sq += p * p;
                *g += self.l2 * p;
            }
            loss += 0.5 * self.l2 * sq;
        }
        Ok((loss, grad))
    }
}

impl Classifier for LogisticRegression {
    fn predict(&self, params: &[f64], features: &[f64]) -> Result<usize> {
        if params.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: params.len(),
            });
        }
        let mut logits = vec![0.0; self.classes];
        self.logits(params, features, &mut logits);
        Ok(argmax(&logits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_classification, Dataset, Normalization, Split};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dummy_rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn zero_weights_give_ln_k_loss() {
        for classes in [2usize, 5, 10] {
            let ds = synth_classification(3, 40, 6, classes, 1.5).unwrap();
            let model = LogisticRegression::new(6, classes);
            let idx = ds.all_indices();
            let batch = Batch::new(&ds, &idx);
            let (loss, _) = model
                .eval(&vec![0.0; model.dim()], &batch, &mut dummy_rng())
                .unwrap();
            assert_relative_eq!(loss, (classes as f64).ln(), max_relative = 1e-12);
        }
    }

    #[test]
    fn two_class_bias_gradient_at_uniform_logits() {
        // One sample, two classes, zero input: logits are (0, 0) and the
        // gradient lands entirely on the biases as (-0.5, +0.5).
        let ds = Dataset::new(
            vec![0.0],
            vec![0],
            1,
            2,
            Split::Train,
            Normalization::None,
        )
        .unwrap();
        let model = LogisticRegression::new(1, 2);
        let idx = [0usize];
        let batch = Batch::new(&ds, &idx);
        let (_, grad) = model
            .eval(&vec![0.0; model.dim()], &batch, &mut dummy_rng())
            .unwrap();
        assert_relative_eq!(grad[2], -0.5, max_relative = 1e-15);
        assert_relative_eq!(grad[3], 0.5, max_relative = 1e-15);
        assert_eq!(&grad[..2], &[0.0, 0.0]);
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let ds = Dataset::new(
            vec![1.0, 2.0],
            vec![0, 2],
            1,
            3,
            Split::Train,
            Normalization::None,
        )
        .unwrap();
        // Model believes there are only 2 classes.
        let model = LogisticRegression::new(1, 2);
        let idx = ds.all_indices();
        let batch = Batch::new(&ds, &idx);
        let err = model
            .eval(&vec![0.0; model.dim()], &batch, &mut dummy_rng())
            .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn loss_is_convex_along_random_segments() {
        let ds = synth_classification(8, 60, 5, 3, 1.0).unwrap();
        let model = LogisticRegression::new(5, 3);
        let idx = ds.all_indices();
        let batch = Batch::new(&ds, &idx);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        use rand::Rng;
        for _ in 0..50 {
            let a: Vec<f64> = (0..model.dim()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let b: Vec<f64> = (0..model.dim()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let (fa, _) = model.eval(&a, &batch, &mut dummy_rng()).unwrap();
            let (fb, _) = model.eval(&b, &batch, &mut dummy_rng()).unwrap();
            let (fm, _) = model.eval(&mid, &batch, &mut dummy_rng()).unwrap();
            assert!(fm <= 0.5 * (fa + fb) + 1e-10);
        }
    }
}

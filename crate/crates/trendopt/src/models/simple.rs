//! Convex and non-convex smoke-test surfaces with closed-form gradients.
//! Both ignore the batch and the RNG.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::{Batch, Objective};

/// `f(x) = 1/2 (x - x*)^T A (x - x*)` with a fixed SPD matrix `A`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    matrix: Vec<f64>,
    x_star: Vec<f64>,
    dim: usize,
}

impl Quadratic {
    /// Builds from an explicit row-major matrix, which must be square and
    /// symmetric (positive definiteness is the caller's responsibility).
    pub fn new(matrix: Vec<f64>, x_star: Vec<f64>) -> Result<Self> {
        let dim = x_star.len();
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: matrix.len(),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                if (matrix[i * dim + j] - matrix[j * dim + i]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            matrix,
            x_star,
            dim,
        })
    }

    /// Random well-conditioned instance: `A = I + G G^T / dim`.
    pub fn seeded(dim: usize, seed: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = (0..dim * dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut dot = 0.0;
                for k in 0..dim {
                    dot += g[i * dim + k] * g[j * dim + k];
                }
                matrix[i * dim + j] = dot / dim as f64 + if i == j { 1.0 } else { 0.0 };
            }
        }
        let x_star = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Self {
            matrix,
            x_star,
            dim,
        }
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.x_star
    }

    /// Upper bound on the largest eigenvalue (max absolute row sum); any
    /// step size below `2 / bound` makes plain gradient descent contract.
    pub fn curvature_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                self.matrix[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .map(|a| a.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn init_params(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(
        &self,
        params: &[f64],
        _batch: &Batch<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<(f64, Vec<f64>)> {
        if params.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: params.len(),
            });
        }
        let diff: Vec<f64> = params.iter().zip(&self.x_star).map(|(p, s)| p - s).collect();
        let mut grad = vec![0.0; self.dim];
        let mut loss = 0.0;
        for i in 0..self.dim {
            let mut dot = 0.0;
            for j in 0..self.dim {
                dot += self.matrix[i * self.dim + j] * diff[j];
            }
            grad[i] = dot;
            loss += 0.5 * diff[i] * dot;
        }
        Ok((loss, grad))
    }
}

/// The standard 2-D Rosenbrock valley `(1-x)^2 + 100 (y - x^2)^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rosenbrock;

impl Rosenbrock {
    pub fn init_params(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..2).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        2
    }

    fn eval(
        &self,
        params: &[f64],
        _batch: &Batch<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<(f64, Vec<f64>)> {
        if params.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: params.len(),
            });
        }
        let (x, y) = (params[0], params[1]);
        let loss = (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2);
        let grad = vec![
            -2.0 * (1.0 - x) - 400.0 * x * (y - x * x),
            200.0 * (y - x * x),
        ];
        Ok((loss, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Normalization, Split};

    fn dummy_batch_parts() -> Dataset {
        Dataset::new(
            vec![0.0],
            vec![0],
            1,
            1,
            Split::Train,
            Normalization::None,
        )
        .unwrap()
    }

    #[test]
    fn quadratic_vanishes_at_minimizer() {
        let q = Quadratic::seeded(5, 3);
        let ds = dummy_batch_parts();
        let idx = [0usize];
        let batch = Batch::new(&ds, &idx);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        use rand::SeedableRng;
        let (loss, grad) = q.eval(q.minimizer(), &batch, &mut rng).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn rosenbrock_minimum_and_origin() {
        let ds = dummy_batch_parts();
        let idx = [0usize];
        let batch = Batch::new(&ds, &idx);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        use rand::SeedableRng;
        let (loss, grad) = Rosenbrock.eval(&[1.0, 1.0], &batch, &mut rng).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grad, vec![0.0, 0.0]);

        let (loss, grad) = Rosenbrock.eval(&[0.0, 0.0], &batch, &mut rng).unwrap();
        assert_eq!(loss, 1.0);
        assert_eq!(grad, vec![-2.0, 0.0]);
    }
}

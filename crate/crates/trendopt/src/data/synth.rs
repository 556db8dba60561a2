//! Seeded synthetic classification data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::{Dataset, Normalization, Split};

/// Gaussian class-conditional data with unit covariance.
///
/// Class means sit at distance `separation` from the origin along mutually
/// orthogonal random directions (orthogonality holds for the first `dim`
/// classes; any surplus classes fall back to unnormalized random directions).
/// Labels are assigned round-robin so classes stay balanced. The result is
/// bitwise-deterministic per seed.
pub fn synth_classification(
    seed: u64,
    samples: usize,
    dim: usize,
    classes: usize,
    separation: f64,
) -> Result<Dataset> {
    if samples == 0 || dim == 0 || classes == 0 {
        return Err(Error::InvalidArgument(
            "samples, dim and classes must all be at least 1".into(),
        ));
    }
    if classes > samples {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {classes} classes from {samples} samples"
        )));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "separation must be a nonnegative real, got {separation}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(classes);
    for k in 0..classes {
        let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if k < dim {
            // Gram-Schmidt against the accepted directions.
            for prev in &directions[..k.min(directions.len())] {
                let dot: f64 = dir.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (d, p) in dir.iter_mut().zip(prev) {
                    *d -= dot * p;
                }
            }
        }
        let norm: f64 = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for d in &mut dir {
                *d /= norm;
            }
        }
        directions.push(dir);
    }

    let mut features = Vec::with_capacity(samples * dim);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let class = i % classes;
        labels.push(class);
        for j in 0..dim {
            let noise: f64 = rng.sample(StandardNormal);
            features.push(separation * directions[class][j] + noise);
        }
    }

    Dataset::new(
        features,
        labels,
        dim,
        classes,
        Split::Train,
        Normalization::None,
    )
}

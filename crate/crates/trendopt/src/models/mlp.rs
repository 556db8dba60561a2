//! Feedforward networks with manual backpropagation and optional inverted
//! dropout.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::{argmax, log_sum_exp, Activation, Batch, Classifier, Objective};

/// Architecture of a fully-connected classifier.
#[derive(Debug, Clone)]
pub struct MlpSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
    pub activation: Activation,
    /// One keep-rate complement per hidden layer; 0 disables dropout after
    /// that layer. The mask after the last hidden layer sits directly before
    /// the output layer.
    pub dropout: Vec<f64>,
}

/// Softmax cross-entropy network over an [`MlpSpec`].
///
/// Inverted dropout scales kept activations by `1/(1-p)` at training time, so
/// inference needs no rescaling.
#[derive(Debug, Clone)]
pub struct Mlp {
    spec: MlpSpec,
    widths: Vec<usize>,
}

impl Mlp {
    pub fn new(spec: MlpSpec) -> Result<Self> {
        if spec.input == 0 || spec.classes == 0 || spec.hidden.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument(
                "layer widths must be at least 1".into(),
            ));
        }
        if spec.dropout.len() != spec.hidden.len() {
            return Err(Error::InvalidArgument(format!(
                "need one dropout probability per hidden layer ({} != {})",
                spec.dropout.len(),
                spec.hidden.len()
            )));
        }
        if let Some(&p) = spec.dropout.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!(
                "dropout probability {p} outside [0, 1)"
            )));
        }
        let mut widths = Vec::with_capacity(spec.hidden.len() + 2);
        widths.push(spec.input);
        widths.extend_from_slice(&spec.hidden);
        widths.push(spec.classes);
        Ok(Self { spec, widths })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// Offset of layer `l`'s weight block in the flat parameter vector.
    fn layer_offset(&self, layer: usize) -> usize {
        (0..layer)
            .map(|l| self.widths[l + 1] * (self.widths[l] + 1))
            .sum()
    }

    /// Fan-in-scaled normal initialization (He for ReLU, Xavier for tanh);
    /// biases start at zero.
    pub fn init_params(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut params = vec![0.0; self.dim()];
        for l in 0..self.layers() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let scale = match self.spec.activation {
                Activation::Relu => (2.0 / fan_in as f64).sqrt(),
                Activation::Tanh => (1.0 / fan_in as f64).sqrt(),
            };
            let offset = self.layer_offset(l);
            for w in params[offset..offset + fan_out * fan_in].iter_mut() {
                *w = scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        params
    }

    /// Forward pass for one sample. Fills per-layer pre-activations and
    /// post-activation outputs; `masks` receives the dropout multipliers when
    /// an RNG is supplied, and is consumed as-is otherwise.
    #[allow(clippy::too_many_arguments)]
    fn forward_sample(
        &self,
        params: &[f64],
        x: &[f64],
        zs: &mut [Vec<f64>],
        acts: &mut [Vec<f64>],
        masks: &mut [Vec<f64>],
        rng: &mut Option<&mut dyn RngCore>,
        min_abs_z: &mut f64,
    ) -> Result<()> {
        let layers = self.layers();
        for l in 0..layers {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let offset = self.layer_offset(l);
            let weights = &params[offset..offset + fan_out * fan_in];
            let biases = &params[offset + fan_out * fan_in..offset + fan_out * (fan_in + 1)];
            let input: &[f64] = if l == 0 { x } else { &acts[l - 1] };

            for o in 0..fan_out {
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                let z = biases[o] + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
                if !z.is_finite() {
                    return Err(Error::NonFiniteActivation { layer: l });
                }
                zs[l][o] = z;
            }

            if l < layers - 1 {
                for o in 0..fan_out {
                    *min_abs_z = min_abs_z.min(zs[l][o].abs());
                }
                let p = self.spec.dropout[l];
                if let Some(rng) = rng {
                    if p > 0.0 {
                        let keep = 1.0 - p;
                        for m in masks[l].iter_mut() {
                            *m = if rng.random::<f64>() < keep {
                                1.0 / keep
                            } else {
                                0.0
                            };
                        }
                    } else {
                        masks[l].fill(1.0);
                    }
                }
                for o in 0..fan_out {
                    acts[l][o] = self.spec.activation.apply(zs[l][o]) * masks[l][o];
                }
            }
        }
        Ok(())
    }

    fn eval_with(
        &self,
        params: &[f64],
        batch: &Batch<'_>,
        mut rng: Option<&'_ mut dyn RngCore>,
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

        let layers = self.layers();
        let mut zs: Vec<Vec<f64>> = (1..=layers).map(|l| vec![0.0; self.widths[l]]).collect();
        let mut acts: Vec<Vec<f64>> = (1..layers).map(|l| vec![0.0; self.widths[l]]).collect();
        let mut masks: Vec<Vec<f64>> = (1..layers).map(|l| vec![1.0; self.widths[l]]).collect();
        let mut deltas: Vec<Vec<f64>> = (1..=layers).map(|l| vec![0.0; self.widths[l]]).collect();

        let n = batch.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.dim()];
        let mut min_abs_z = f64::INFINITY;

        for i in 0..batch.len() {
            let x = batch.features(i);
            let y = batch.label(i);
            if y >= self.spec.classes {
                return Err(Error::InvalidArgument(format!(
                    "label {y} out of range for {} classes",
                    self.spec.classes
                )));
            }
            self.forward_sample(
                params,
                x,
                &mut zs,
                &mut acts,
                &mut masks,
                &mut rng,
                &mut min_abs_z,
            )?;

            let logits = &zs[layers - 1];
            let lse = log_sum_exp(logits);
            loss += lse - logits[y];

            // Output delta: softmax - onehot.
            for k in 0..self.spec.classes {
                deltas[layers - 1][k] = (logits[k] - lse).exp();
            }
            deltas[layers - 1][y] -= 1.0;

            // Backward through the hidden stack.
            for l in (0..layers - 1).rev() {
                let (fan_in_next, fan_out_next) = (self.widths[l + 1], self.widths[l + 2]);
                let next_offset = self.layer_offset(l + 1);
                let next_weights = &params[next_offset..next_offset + fan_out_next * fan_in_next];
                for h in 0..fan_in_next {
                    let mut upstream = 0.0;
                    for o in 0..fan_out_next {
                        upstream += next_weights[o * fan_in_next + h] * deltas[l + 1][o];
                    }
                    deltas[l][h] =
                        upstream * masks[l][h] * self.spec.activation.derivative(zs[l][h]);
                }
            }

            // Accumulate parameter gradients.
            for l in 0..layers {
                let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
                let offset = self.layer_offset(l);
                let input: &[f64] = if l == 0 { x } else { &acts[l - 1] };
                for o in 0..fan_out {
                    let d = deltas[l][o];
                    let row = &mut grad[offset + o * fan_in..offset + (o + 1) * fan_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                    grad[offset + fan_out * fan_in + o] += d;
                }
            }
        }

        loss /= n;
        for g in grad.iter_mut() {
            *g /= n;
        }
        Ok((loss, grad))
    }

    /// Smallest `|pre-activation|` over all hidden units in the batch, with
    /// masks drawn from `rng` exactly as [`Objective::eval`] would. Used to
    /// exclude ReLU kink neighborhoods from finite-difference checks.
    pub fn min_abs_preactivation(
        &self,
        params: &[f64],
        batch: &Batch<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let layers = self.layers();
        let mut zs: Vec<Vec<f64>> = (1..=layers).map(|l| vec![0.0; self.widths[l]]).collect();
        let mut acts: Vec<Vec<f64>> = (1..layers).map(|l| vec![0.0; self.widths[l]]).collect();
        let mut masks: Vec<Vec<f64>> = (1..layers).map(|l| vec![1.0; self.widths[l]]).collect();
        let mut min_abs_z = f64::INFINITY;
        let mut rng: Option<&mut dyn RngCore> = Some(rng);
        for i in 0..batch.len() {
            self.forward_sample(
                params,
                batch.features(i),
                &mut zs,
                &mut acts,
                &mut masks,
                &mut rng,
                &mut min_abs_z,
            )?;
        }
        Ok(min_abs_z)
    }
}

impl Objective for Mlp {
    fn dim(&self) -> usize {
        (0..self.layers())
            .map(|l| self.widths[l + 1] * (self.widths[l] + 1))
            .sum()
    }

    fn eval(
        &self,
        params: &[f64],
        batch: &Batch<'_>,
        rng: &mut dyn RngCore,
    ) -> Result<(f64, Vec<f64>)> {
        self.eval_with(params, batch, Some(rng))
    }

    fn eval_inference(&self, params: &[f64], batch: &Batch<'_>) -> Result<(f64, Vec<f64>)> {
        self.eval_with(params, batch, None)
    }

    fn deterministic(&self) -> bool {
        self.spec.dropout.iter().all(|&p| p == 0.0)
    }
}

impl Classifier for Mlp {
    fn predict(&self, params: &[f64], features: &[f64]) -> Result<usize> {
        let layers = self.layers();
        let mut zs: Vec<Vec<f64>> = (1..=layers).map(|l| vec![0.0; self.widths[l]]).collect();
        let mut acts: Vec<Vec<f64>> = (1..layers).map(|l| vec![0.0; self.widths[l]]).collect();
        let mut masks: Vec<Vec<f64>> = (1..layers).map(|l| vec![1.0; self.widths[l]]).collect();
        let mut min_abs_z = f64::INFINITY;
        let mut rng: Option<&mut dyn RngCore> = None;
        self.forward_sample(
            params,
            features,
            &mut zs,
            &mut acts,
            &mut masks,
            &mut rng,
            &mut min_abs_z,
        )?;
        Ok(argmax(&zs[layers - 1]))
    }
}

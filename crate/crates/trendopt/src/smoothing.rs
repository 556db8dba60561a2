//! Damped linear trend smoothing primitives.
//!
//! A [`HoltState`] tracks the level and trend of a vector-valued observation
//! stream. One update step computes, in this order,
//!
//! ```text
//! level_t    = beta * combined_{t-1} + (1 - beta) * obs_t
//! trend_t    = gamma * phi * trend_{t-1} + (1 - gamma) * (level_t - level_{t-1})
//! combined_t = level_t + phi * trend_t
//! ```
//!
//! With `phi = 0` the combined series collapses to a plain exponential moving
//! average of the observations; with `phi = 1` the trend is undamped.
//!
//! Because the series start at zero they are biased towards zero early on;
//! [`bias_correction_factors`] returns the per-step rescaling for the level
//! and the damping-aware rescaling for the trend, so that
//! `level_factor * level_t + trend_factor * trend_t` is the corrected
//! estimate.

use crate::error::{Error, Result};

/// Level/trend state for one smoothed vector series.
///
/// The combined forecast `level + phi * trend` of the previous step is stored
/// explicitly: the level update feeds on it rather than on the bare level, so
/// keeping it removes any ambiguity about evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct HoltState {
    level: Vec<f64>,
    trend: Vec<f64>,
    combined: Vec<f64>,
    step: u64,
}

impl HoltState {
    /// A fresh state of the given dimensionality with all series at zero.
    pub fn new(dim: usize) -> Self {
        Self {
            level: vec![0.0; dim],
            trend: vec![0.0; dim],
            combined: vec![0.0; dim],
            step: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.level.len()
    }

    /// Number of completed updates.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Current level estimate.
    pub fn level(&self) -> &[f64] {
        &self.level
    }

    /// Current trend estimate.
    pub fn trend(&self) -> &[f64] {
        &self.trend
    }

    /// Most recent combined forecast `level + phi * trend` (zero before the
    /// first update). This is the raw, uncorrected series value.
    pub fn combined(&self) -> &[f64] {
        &self.combined
    }

    /// Advances the series by one observation and returns the new combined
    /// forecast.
    ///
    /// `beta` and `gamma` are the level and trend smoothing factors in
    /// `[0, 1)`, `phi` the damping factor in `[0, 1]`.
    pub fn update(
        &mut self,
        observation: &[f64],
        beta: f64,
        gamma: f64,
        phi: f64,
    ) -> Result<&[f64]> {
        if observation.len() != self.level.len() {
            return Err(Error::DimensionMismatch {
                expected: self.level.len(),
                got: observation.len(),
            });
        }
        for i in 0..self.level.len() {
            let prev_level = self.level[i];
            let level = beta * self.combined[i] + (1.0 - beta) * observation[i];
            let trend = gamma * phi * self.trend[i] + (1.0 - gamma) * (level - prev_level);
            self.level[i] = level;
            self.trend[i] = trend;
            self.combined[i] = level + phi * trend;
        }
        self.step += 1;
        Ok(&self.combined)
    }
}

/// Bias-correction factors for a zero-initialized level/trend pair after `t`
/// updates.
///
/// Returns `(level_factor, trend_factor)` with
/// `level_factor = 1 / (1 - beta^t)` and
/// `trend_factor = (1 - gamma*phi) / ((1 - gamma) * (1 - (gamma*phi)^t))`.
/// Requires `t >= 1`; at `t = 0` the level factor would divide by zero.
pub fn bias_correction_factors(t: u64, beta: f64, gamma: f64, phi: f64) -> Result<(f64, f64)> {
    if t == 0 {
        return Err(Error::InvalidArgument(
            "bias correction undefined at step 0".into(),
        ));
    }
    let gp = gamma * phi;
    let level_factor = 1.0 / (1.0 - powi_u64(beta, t));
    let trend_factor = (1.0 - gp) / ((1.0 - gamma) * (1.0 - powi_u64(gp, t)));
    Ok((level_factor, trend_factor))
}

/// `base^exp` for potentially large integer exponents.
fn powi_u64(base: f64, exp: u64) -> f64 {
    if exp <= i32::MAX as u64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const BETA: f64 = 0.9;
    const GAMMA: f64 = 0.9;
    const PHI: f64 = 0.5;

    #[test]
    fn one_step_from_zero_state() {
        // First update from zeros: level = 0.1 g, trend = 0.01 g,
        // combined = 0.105 g.
        let g = [3.7, -1.2];
        let mut state = HoltState::new(2);
        state.update(&g, BETA, GAMMA, PHI).unwrap();
        for i in 0..2 {
            assert_relative_eq!(state.level()[i], 0.1 * g[i], max_relative = 1e-14);
            assert_relative_eq!(state.trend()[i], 0.01 * g[i], max_relative = 1e-14);
            assert_relative_eq!(state.combined()[i], 0.105 * g[i], max_relative = 1e-14);
        }
        assert_eq!(state.step(), 1);
    }

    #[test]
    fn zero_observations_stay_zero() {
        let mut state = HoltState::new(3);
        for _ in 0..10 {
            state.update(&[0.0; 3], BETA, GAMMA, PHI).unwrap();
        }
        assert!(state.level().iter().all(|&v| v == 0.0));
        assert!(state.trend().iter().all(|&v| v == 0.0));
        assert!(state.combined().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn phi_zero_is_plain_ema() {
        let obs = [0.3, -1.7, 2.2, 0.9, -0.4];
        let mut state = HoltState::new(1);
        let mut ema = 0.0;
        for &y in &obs {
            state.update(&[y], 0.7, 0.3, 0.0).unwrap();
            ema = 0.7 * ema + 0.3 * y;
            assert_relative_eq!(state.combined()[0], ema, max_relative = 1e-15);
            assert_relative_eq!(state.level()[0], ema, max_relative = 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut state = HoltState::new(2);
        let err = state.update(&[1.0], BETA, GAMMA, PHI).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                got: 1
            }
        ));
    }

    #[test]
    fn factors_at_step_one() {
        let (lf, tf) = bias_correction_factors(1, BETA, GAMMA, PHI).unwrap();
        assert_relative_eq!(lf, 10.0, max_relative = 1e-12);
        // (1 - 0.45) / (0.1 * (1 - 0.45)) = 10
        assert_relative_eq!(tf, 10.0, max_relative = 1e-12);
    }

    #[test]
    fn factors_at_step_one_cancel_damping() {
        // At t = 1 the (1 - gamma*phi) terms cancel: trend factor is
        // 1 / (1 - gamma).
        let (_, tf) = bias_correction_factors(1, BETA, 0.999, 0.5).unwrap();
        assert_relative_eq!(tf, 1000.0, max_relative = 1e-12);
    }

    #[test]
    fn factors_limit_for_large_t() {
        let (lf, tf) = bias_correction_factors(10_000_000, BETA, GAMMA, PHI).unwrap();
        assert_relative_eq!(lf, 1.0, max_relative = 1e-12);
        assert_relative_eq!(tf, (1.0 - 0.45) / 0.1, max_relative = 1e-12);
    }

    #[test]
    fn factors_reject_step_zero() {
        assert!(matches!(
            bias_correction_factors(0, BETA, GAMMA, PHI),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn corrected_constant_stream_converges() {
        // A constant observation held long enough drives the corrected
        // estimate to that constant.
        for &c in &[5.0, -0.021, 3.3e4] {
            let mut state = HoltState::new(1);
            for _ in 0..10_000 {
                state.update(&[c], BETA, GAMMA, PHI).unwrap();
            }
            let (lf, tf) = bias_correction_factors(state.step(), BETA, GAMMA, PHI).unwrap();
            let corrected = lf * state.level()[0] + tf * state.trend()[0];
            assert!(
                (corrected - c).abs() <= 1e-6 * c.abs().max(1.0),
                "corrected {corrected} vs {c}"
            );
        }
    }
}

//! Independent oracles backing the test suite and `trendopt verify`.
//!
//! Everything in this module deliberately re-derives its results from first
//! principles — explicit summation forms, central finite differences, Monte
//! Carlo sampling — and shares no update code with the modules it checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::{Batch, Objective};

/// Level, trend and combined series reconstructed by direct summation.
#[derive(Debug, Clone)]
pub struct HoltUnroll {
    /// `levels[t-1]` is the level after observation `t` (1-based).
    pub levels: Vec<f64>,
    /// Trends computed from the explicit geometric weighted sum
    /// `(1-gamma) * sum_i (gamma*phi)^(t-i) * (level_i - level_{i-1})`.
    pub trends: Vec<f64>,
    /// `levels + phi * trends`.
    pub combined: Vec<f64>,
}

/// Reconstructs a damped-trend smoothing run in O(t^2) time.
///
/// Levels follow their sequential definition; each trend value is rebuilt
/// from scratch via the compact summation form rather than the one-step
/// recursion, which makes this an independent cross-check for the
/// incremental implementation.
pub fn holt_unroll_oracle(observations: &[f64], beta: f64, gamma: f64, phi: f64) -> HoltUnroll {
    let t_max = observations.len();
    let mut levels = Vec::with_capacity(t_max);
    let mut trends = Vec::with_capacity(t_max);
    let mut combined = Vec::with_capacity(t_max);

    for (t, &obs) in observations.iter().enumerate() {
        let prev_combined = if t == 0 { 0.0 } else { combined[t - 1] };
        let level = beta * prev_combined + (1.0 - beta) * obs;
        levels.push(level);

        // b_t = (1-gamma) * sum_{i=1..t} (gamma*phi)^(t-i) (l_i - l_{i-1})
        let mut trend = 0.0;
        for i in 0..=t {
            let delta = levels[i] - if i == 0 { 0.0 } else { levels[i - 1] };
            trend += (gamma * phi).powi((t - i) as i32) * delta;
        }
        trend *= 1.0 - gamma;
        trends.push(trend);
        combined.push(level + phi * trend);
    }

    HoltUnroll {
        levels,
        trends,
        combined,
    }
}

/// `(1-gamma) * sum_{i=1..t} (gamma*phi)^(t-i)`, summed term by term.
///
/// This is the reciprocal of the closed-form trend bias-correction factor;
/// the identity between the two routes is what the acceptance suite checks.
pub fn unrolled_weight_sum(t: u64, gamma: f64, phi: f64) -> f64 {
    let mut sum = 0.0;
    for i in 1..=t {
        sum += (gamma * phi).powi((t - i) as i32);
    }
    (1.0 - gamma) * sum
}

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone, Copy)]
pub struct FdReport {
    /// Worst relative error over all coordinates.
    pub max_rel_error: f64,
    /// Coordinate achieving the worst error.
    pub worst_coordinate: usize,
}

/// Central-difference gradient check against the analytic gradient.
///
/// Per coordinate the step is `h_scale * max(1, |theta_i|)`; the relative
/// error is `|g_a - g_fd| / max(1, |g_a|, |g_fd|)`. Stochastic objectives are
/// made repeatable by cloning `rng` for every evaluation, so dropout masks
/// are identical across all probes.
pub fn finite_diff_check(
    objective: &dyn Objective,
    params: &[f64],
    batch: &Batch<'_>,
    rng: &ChaCha8Rng,
    h_scale: f64,
) -> Result<FdReport> {
    let eval = |p: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut r = rng.clone();
        objective.eval(p, batch, &mut r)
    };

    let (_, analytic) = eval(params)?;
    let mut probe = params.to_vec();
    let mut max_rel_error = 0.0_f64;
    let mut worst_coordinate = 0;
    for i in 0..params.len() {
        let h = h_scale * params[i].abs().max(1.0);
        probe[i] = params[i] + h;
        let (loss_plus, _) = eval(&probe)?;
        probe[i] = params[i] - h;
        let (loss_minus, _) = eval(&probe)?;
        probe[i] = params[i];

        let fd = (loss_plus - loss_minus) / (2.0 * h);
        let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1.0);
        if rel > max_rel_error {
            max_rel_error = rel;
            worst_coordinate = i;
        }
    }
    Ok(FdReport {
        max_rel_error,
        worst_coordinate,
    })
}

/// Distribution of the i.i.d. scalar gradient stream fed to
/// [`expectation_mc_check`].
#[derive(Debug, Clone, Copy)]
pub enum GradientDistribution {
    Constant(f64),
    Uniform(f64, f64),
    Normal(f64, f64),
}

impl GradientDistribution {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            GradientDistribution::Constant(c) => c,
            GradientDistribution::Uniform(lo, hi) => lo + (hi - lo) * rng.random::<f64>(),
            GradientDistribution::Normal(mean, sd) => {
                mean + sd * rng.sample::<f64, _>(rand_distr::StandardNormal)
            }
        }
    }
}

/// Result of the Monte Carlo check of the trend bias-correction identity.
#[derive(Debug, Clone, Copy)]
pub struct McReport {
    /// `mean(b_t) - factor * mean(delta level_t)` over the ensemble.
    pub discrepancy: f64,
    /// Standard error of the paired statistic.
    pub standard_error: f64,
    pub pass: bool,
}

/// Monte Carlo check that `E[b_t] = E[l_t - l_{t-1}] * (1-gamma) *
/// (1-(gamma*phi)^t) / (1-gamma*phi)` for i.i.d. gradient streams.
///
/// The identity holds in the stationary regime, so every stream is burned in
/// for `burn_in` steps before the measurement window of `t` further steps;
/// the correction factor uses the total step count. The pass criterion is
/// `|discrepancy| <= 3 * SE` plus a small floating-point allowance (which is
/// what remains for variance-zero distributions, where the SE is exactly 0).
#[allow(clippy::too_many_arguments)]
pub fn expectation_mc_check(
    distribution: GradientDistribution,
    t: u64,
    trials: usize,
    beta: f64,
    gamma: f64,
    phi: f64,
    burn_in: u64,
    seed: u64,
) -> McReport {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total_steps = burn_in + t;
    let weight_sum = unrolled_weight_sum(total_steps, gamma, phi);

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut scale: f64 = 0.0;
    for _ in 0..trials {
        // Sequential scalar recursion, written out locally; shares no code
        // with the smoothing module under test.
        let mut level = 0.0;
        let mut trend = 0.0;
        let mut combined = 0.0;
        let mut delta_level = 0.0;
        for _ in 0..total_steps {
            let y = distribution.sample(&mut rng);
            let new_level = beta * combined + (1.0 - beta) * y;
            delta_level = new_level - level;
            trend = gamma * phi * trend + (1.0 - gamma) * delta_level;
            level = new_level;
            combined = level + phi * trend;
        }
        let paired = trend - weight_sum * delta_level;
        sum += paired;
        sum_sq += paired * paired;
        scale = scale.max(trend.abs()).max((weight_sum * delta_level).abs());
    }

    let n = trials as f64;
    let discrepancy = sum / n;
    let variance = (sum_sq / n - discrepancy * discrepancy).max(0.0);
    let standard_error = (variance / n).sqrt();
    let pass = discrepancy.abs() <= 3.0 * standard_error + 1e-12 * scale.max(1.0);
    McReport {
        discrepancy,
        standard_error,
        pass,
    }
}

/// One elementwise violation of the summation-form bound.
#[derive(Debug, Clone, Copy)]
pub struct BoundViolation {
    pub t: u64,
    pub value: f64,
    pub bound: f64,
}

/// Outcome of [`lemma4_bound_check`]. Failures are recorded, not thrown.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub violations: Vec<BoundViolation>,
    /// Largest `value - bound` observed (negative when every step passes).
    pub worst_margin: f64,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the summation-form upper bound on the bias-corrected series for a
/// nonnegative gradient stream:
///
/// ```text
/// m_hat_t <= [ (1-beta)/(1-beta^t)
///            + (1-gamma*phi)(1-beta)/(1-(gamma*phi)^t) ] * sum_{i<=t} g_i
/// ```
///
/// The corrected series is rebuilt through [`holt_unroll_oracle`] rather than
/// the incremental implementation. Mixed-sign streams are rejected: the bound
/// is only claimed for nonnegative inputs. Apply to the squared stream (with
/// the second-moment smoothing parameters) for the `v_hat` analogue.
pub fn lemma4_bound_check(
    stream: &[f64],
    beta: f64,
    gamma: f64,
    phi: f64,
    t_max: usize,
) -> Result<BoundReport> {
    if let Some(i) = stream.iter().position(|&g| g < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bound check requires a nonnegative stream; entry {i} is {}",
            stream[i]
        )));
    }
    let t_max = t_max.min(stream.len());
    let unroll = holt_unroll_oracle(&stream[..t_max], beta, gamma, phi);
    let gp = gamma * phi;

    let mut violations = Vec::new();
    let mut worst_margin = f64::NEG_INFINITY;
    let mut prefix_sum = 0.0;
    for t in 1..=t_max {
        prefix_sum += stream[t - 1];
        let level_factor = 1.0 / (1.0 - beta.powi(t as i32));
        let trend_factor = (1.0 - gp) / ((1.0 - gamma) * (1.0 - gp.powi(t as i32)));
        let corrected = level_factor * unroll.levels[t - 1] + trend_factor * unroll.trends[t - 1];

        let bound_factor = (1.0 - beta) / (1.0 - beta.powi(t as i32))
            + (1.0 - gp) * (1.0 - beta) / (1.0 - gp.powi(t as i32));
        let bound = bound_factor * prefix_sum;

        let margin = corrected - bound;
        worst_margin = worst_margin.max(margin);
        // Allow a few ulps of slack so exact-equality cases (t = 1) do not
        // trip on rounding differences between the two expression routes.
        if margin > 1e-12 * bound.abs().max(1.0) {
            violations.push(BoundViolation {
                t: t as u64,
                value: corrected,
                bound,
            });
        }
    }
    Ok(BoundReport {
        violations,
        worst_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothing::HoltState;
    use rand::SeedableRng;

    #[test]
    fn oracle_matches_incremental_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = 1 + (rng.random::<u64>() % 200) as usize;
            let obs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let beta = rng.random::<f64>() * 0.99;
            let gamma = rng.random::<f64>() * 0.99;
            let phi = rng.random::<f64>();

            let unroll = holt_unroll_oracle(&obs, beta, gamma, phi);
            let mut state = HoltState::new(1);
            for (t, &y) in obs.iter().enumerate() {
                state.update(&[y], beta, gamma, phi).unwrap();
                let scale = unroll.trends[t].abs().max(1e-30);
                assert!(
                    (state.trend()[0] - unroll.trends[t]).abs() / scale < 1e-9,
                    "trend mismatch at t={t}"
                );
                assert!((state.level()[0] - unroll.levels[t]).abs() <= 1e-12);
                assert!((state.combined()[0] - unroll.combined[t]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn oracle_zero_stream_is_zero() {
        let unroll = holt_unroll_oracle(&[0.0; 20], 0.9, 0.9, 0.5);
        assert!(unroll.levels.iter().all(|&v| v == 0.0));
        assert!(unroll.trends.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oracle_single_impulse() {
        // One nonzero observation at t = 1, inspected at t = 5: the trend is
        // the explicitly telescoped weighted sum of the level differences.
        let (beta, gamma, phi) = (0.9, 0.9, 0.5);
        let obs = [2.0, 0.0, 0.0, 0.0, 0.0];
        let unroll = holt_unroll_oracle(&obs, beta, gamma, phi);

        let mut expected = 0.0;
        for i in 0..5 {
            let delta = unroll.levels[i] - if i == 0 { 0.0 } else { unroll.levels[i - 1] };
            expected += (gamma * phi).powi((4 - i) as i32) * delta;
        }
        expected *= 1.0 - gamma;
        // Constant-exponent powi folds differently from the runtime call, so
        // allow a couple of ulps.
        assert!((unroll.trends[4] - expected).abs() <= 1e-15 * expected.abs());
        assert!(unroll.levels[0] > 0.0 && unroll.trends[4] != 0.0);
    }

    #[test]
    fn weight_sum_matches_closed_form() {
        for t in 1..=100u64 {
            let ws = unrolled_weight_sum(t, 0.9, 0.5);
            let closed = (1.0 - 0.9) * (1.0 - 0.45f64.powi(t as i32)) / (1.0 - 0.45);
            assert!((ws - closed).abs() <= 1e-12 * closed.abs());
        }
    }

    #[test]
    fn mc_check_constant_distribution_is_exact() {
        let report = expectation_mc_check(
            GradientDistribution::Constant(3.25),
            10,
            100,
            0.9,
            0.9,
            0.5,
            600,
            1,
        );
        assert_eq!(report.standard_error, 0.0);
        assert!(report.pass, "discrepancy {}", report.discrepancy);
    }

    #[test]
    fn mc_check_uniform_within_three_se() {
        let report = expectation_mc_check(
            GradientDistribution::Uniform(0.0, 1.0),
            10,
            100_000,
            0.9,
            0.9,
            0.5,
            600,
            42,
        );
        assert!(
            report.pass,
            "discrepancy {} vs SE {}",
            report.discrepancy, report.standard_error
        );
    }

    #[test]
    fn weight_sum_with_undamped_trend() {
        // phi = 1: the damping terms cancel and the weight sum reduces to
        // 1 - gamma^t.
        for t in 1..=50u64 {
            let ws = unrolled_weight_sum(t, 0.9, 1.0);
            let direct = 1.0 - 0.9f64.powi(t as i32);
            assert!((ws - direct).abs() <= 1e-12);
        }
    }

    #[test]
    fn lemma4_constant_stream_equality_at_t1() {
        let g = 1.0;
        let report = lemma4_bound_check(&[g; 5], 0.9, 0.9, 0.5, 5).unwrap();
        assert!(report.pass(), "violations: {:?}", report.violations);

        // At t = 1 the bound is met with equality: both sides are (2-beta)g.
        let unroll = holt_unroll_oracle(&[g], 0.9, 0.9, 0.5);
        let corrected = unroll.levels[0] / (1.0 - 0.9)
            + unroll.trends[0] * (1.0 - 0.45) / ((1.0 - 0.9) * (1.0 - 0.45));
        assert!((corrected - (2.0 - 0.9) * g).abs() <= 1e-15 * (2.0 - 0.9) * g);
    }

    #[test]
    fn lemma4_zero_stream_passes() {
        let report = lemma4_bound_check(&[0.0; 10], 0.9, 0.9, 0.5, 10).unwrap();
        assert!(report.pass());
        assert!(report.worst_margin <= 0.0);
    }

    #[test]
    fn lemma4_rejects_negative_entries() {
        assert!(lemma4_bound_check(&[1.0, -0.5], 0.9, 0.9, 0.5, 2).is_err());
    }
}

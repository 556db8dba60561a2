//! Optimizer state machines and single-step update rules.
//!
//! Five optimizers share one interface: SGD, Adam, AMSGrad, and the
//! trend-corrected variants AdamT and AMSGradT. The trend variants smooth the
//! gradient and squared-gradient streams with a damped linear trend
//! ([`crate::smoothing`]) instead of a plain exponential moving average, and
//! rescale both the level and the trend for initialization bias before
//! forming the adaptive step
//!
//! ```text
//! params <- params - eta * m_hat / (sqrt(|v_hat|) + epsilon)
//! ```
//!
//! The absolute value guards against the combined second-moment estimate
//! going negative when its trend is strongly downward.

use crate::error::{Error, Result};
use crate::smoothing::{bias_correction_factors, HoltState};
use crate::util::first_non_finite;

/// Which update rule an optimizer applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Sgd,
    Adam,
    AmsGrad,
    AdamT,
    AmsGradT,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [
        OptimizerKind::Sgd,
        OptimizerKind::Adam,
        OptimizerKind::AmsGrad,
        OptimizerKind::AdamT,
        OptimizerKind::AmsGradT,
    ];

    /// Canonical lowercase name, as used in CLI arguments and file names.
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::AmsGrad => "amsgrad",
            OptimizerKind::AdamT => "adamt",
            OptimizerKind::AmsGradT => "amsgradt",
        }
    }

    /// Whether this rule uses the damping factors `phi1`/`phi2`.
    pub fn trend_corrected(&self) -> bool {
        matches!(self, OptimizerKind::AdamT | OptimizerKind::AmsGradT)
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            "amsgrad" => Ok(OptimizerKind::AmsGrad),
            "adamt" => Ok(OptimizerKind::AdamT),
            "amsgradt" => Ok(OptimizerKind::AmsGradT),
            other => Err(Error::InvalidArgument(format!(
                "unknown optimizer {other:?}; expected one of sgd, adam, amsgrad, adamt, amsgradt"
            ))),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Learning rate, smoothing/damping factors and update-rule selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub eta: f64,
    pub beta1: f64,
    pub gamma1: f64,
    pub phi1: f64,
    pub beta2: f64,
    pub gamma2: f64,
    pub phi2: f64,
    pub epsilon: f64,
    pub kind: OptimizerKind,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            eta: 1e-4,
            beta1: 0.9,
            gamma1: 0.9,
            phi1: 0.5,
            beta2: 0.999,
            gamma2: 0.999,
            phi2: 0.5,
            epsilon: 1e-8,
            kind: OptimizerKind::AdamT,
        }
    }
}

impl HyperParams {
    pub fn with_kind(kind: OptimizerKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn in_unit_half_open(name: &str, v: f64) -> Result<()> {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1), got {v}"
                )));
            }
            Ok(())
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        in_unit_half_open("beta1", self.beta1)?;
        in_unit_half_open("gamma1", self.gamma1)?;
        in_unit_half_open("beta2", self.beta2)?;
        in_unit_half_open("gamma2", self.gamma2)?;
        for (name, phi) in [("phi1", self.phi1), ("phi2", self.phi2)] {
            if !(0.0..=1.0).contains(&phi) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {phi}"
                )));
            }
        }
        if self.gamma1 * self.phi1 >= 1.0 || self.gamma2 * self.phi2 >= 1.0 {
            return Err(Error::InvalidArgument(
                "gamma * phi must stay below 1".into(),
            ));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

fn check_grad(grad: &[f64], dim: usize) -> Result<()> {
    if grad.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: grad.len(),
        });
    }
    if let Some(index) = first_non_finite(grad) {
        return Err(Error::NonFiniteInput {
            what: "gradient",
            index,
        });
    }
    Ok(())
}

fn apply_step(params: &mut [f64], effective: &[f64]) {
    for (p, e) in params.iter_mut().zip(effective) {
        *p -= e;
    }
}

/// First and second moment EMAs for Adam.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Raw first-moment series m_t.
    pub fn m(&self) -> &[f64] {
        &self.m
    }

    /// Raw second-moment series v_t.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// One Adam update; returns the effective step that was subtracted from
    /// `params`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], hp: &HyperParams) -> Result<Vec<f64>> {
        check_grad(grad, self.m.len())?;
        check_grad(params, self.m.len())?;
        let t = self.step + 1;
        let mc = 1.0 - hp.beta1.powi(t as i32);
        let vc = 1.0 - hp.beta2.powi(t as i32);
        let mut effective = vec![0.0; grad.len()];
        for i in 0..grad.len() {
            self.m[i] = hp.beta1 * self.m[i] + (1.0 - hp.beta1) * grad[i];
            self.v[i] = hp.beta2 * self.v[i] + (1.0 - hp.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / mc;
            let v_hat = self.v[i] / vc;
            effective[i] = hp.eta * m_hat / (v_hat.sqrt() + hp.epsilon);
        }
        apply_step(params, &effective);
        self.step = t;
        Ok(effective)
    }
}

/// Adam state plus the running elementwise maximum of the second moment.
#[derive(Debug, Clone)]
pub struct AmsGradState {
    inner: AdamState,
    v_max: Vec<f64>,
}

impl AmsGradState {
    pub fn new(dim: usize) -> Self {
        Self {
            inner: AdamState::new(dim),
            v_max: vec![0.0; dim],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.inner.step
    }

    pub fn v_max(&self) -> &[f64] {
        &self.v_max
    }

    /// One AMSGrad update. Both moments are bias-corrected; the maximum is
    /// tracked on the raw second-moment series and the correction applied at
    /// the current step, as in the stock deep-learning-framework
    /// implementations the published comparisons actually ran against. An
    /// uncorrected denominator would hand the baseline a ~1/sqrt(1-beta2^t)
    /// step-size boost for the first ~1/(1-beta2) steps, which at small step
    /// counts dominates any difference between the update rules.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], hp: &HyperParams) -> Result<Vec<f64>> {
        check_grad(grad, self.v_max.len())?;
        check_grad(params, self.v_max.len())?;
        let t = self.inner.step + 1;
        let mc = 1.0 - hp.beta1.powi(t as i32);
        let vc = 1.0 - hp.beta2.powi(t as i32);
        let mut effective = vec![0.0; grad.len()];
        for i in 0..grad.len() {
            self.inner.m[i] = hp.beta1 * self.inner.m[i] + (1.0 - hp.beta1) * grad[i];
            self.inner.v[i] = hp.beta2 * self.inner.v[i] + (1.0 - hp.beta2) * grad[i] * grad[i];
            if self.inner.v[i] > self.v_max[i] {
                self.v_max[i] = self.inner.v[i];
            }
            let m_hat = self.inner.m[i] / mc;
            let v_hat_max = self.v_max[i] / vc;
            effective[i] = hp.eta * m_hat / (v_hat_max.sqrt() + hp.epsilon);
        }
        apply_step(params, &effective);
        self.inner.step = t;
        Ok(effective)
    }
}

/// Damped-trend smoothing states for the gradient and squared-gradient
/// streams.
#[derive(Debug, Clone)]
pub struct AdamTState {
    first: HoltState,
    second: HoltState,
    step: u64,
}

impl AdamTState {
    pub fn new(dim: usize) -> Self {
        Self {
            first: HoltState::new(dim),
            second: HoltState::new(dim),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Smoothing state of the first moment; its combined series is the raw
    /// m_t.
    pub fn first(&self) -> &HoltState {
        &self.first
    }

    /// Smoothing state of the second raw moment; its combined series is the
    /// raw v_t.
    pub fn second(&self) -> &HoltState {
        &self.second
    }

    /// Bias-corrected estimates (m_hat, v_hat) at the current step.
    pub fn corrected(&self, hp: &HyperParams) -> Result<(Vec<f64>, Vec<f64>)> {
        let (lf1, tf1) = bias_correction_factors(self.step, hp.beta1, hp.gamma1, hp.phi1)?;
        let (lf2, tf2) = bias_correction_factors(self.step, hp.beta2, hp.gamma2, hp.phi2)?;
        let m_hat = self
            .first
            .level()
            .iter()
            .zip(self.first.trend())
            .map(|(l, b)| lf1 * l + tf1 * b)
            .collect();
        let v_hat = self
            .second
            .level()
            .iter()
            .zip(self.second.trend())
            .map(|(l, b)| lf2 * l + tf2 * b)
            .collect();
        Ok((m_hat, v_hat))
    }

    /// One AdamT update; returns the effective step.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], hp: &HyperParams) -> Result<Vec<f64>> {
        check_grad(grad, self.first.dim())?;
        check_grad(params, self.first.dim())?;
        let t = self.step + 1;
        let squared: Vec<f64> = grad.iter().map(|g| g * g).collect();
        self.first.update(grad, hp.beta1, hp.gamma1, hp.phi1)?;
        self.second.update(&squared, hp.beta2, hp.gamma2, hp.phi2)?;
        let (lf1, tf1) = bias_correction_factors(t, hp.beta1, hp.gamma1, hp.phi1)?;
        let (lf2, tf2) = bias_correction_factors(t, hp.beta2, hp.gamma2, hp.phi2)?;

        let mut effective = vec![0.0; grad.len()];
        for i in 0..grad.len() {
            let m_hat = lf1 * self.first.level()[i] + tf1 * self.first.trend()[i];
            let v_hat = lf2 * self.second.level()[i] + tf2 * self.second.trend()[i];
            effective[i] = hp.eta * m_hat / (v_hat.abs().sqrt() + hp.epsilon);
        }
        apply_step(params, &effective);
        self.step = t;
        Ok(effective)
    }
}

/// AdamT state extended with the long-term maximum of the raw second-moment
/// series and the level/trend pair that produced it.
#[derive(Debug, Clone)]
pub struct AmsGradTState {
    base: AdamTState,
    v_max: Vec<f64>,
    level_at_max: Vec<f64>,
    trend_at_max: Vec<f64>,
}

impl AmsGradTState {
    pub fn new(dim: usize) -> Self {
        Self {
            base: AdamTState::new(dim),
            v_max: vec![0.0; dim],
            level_at_max: vec![0.0; dim],
            trend_at_max: vec![0.0; dim],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.base.step
    }

    pub fn base(&self) -> &AdamTState {
        &self.base
    }

    /// Running elementwise maximum of the raw combined series v_t.
    pub fn v_max(&self) -> &[f64] {
        &self.v_max
    }

    /// One AMSGradT update. Where the raw v_t strictly exceeds the running
    /// maximum, the maximum and its associated level/trend pair are replaced;
    /// ties keep the earlier pair. The denominator uses the bias-corrected
    /// estimate formed from the stored pair at the current step index.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], hp: &HyperParams) -> Result<Vec<f64>> {
        check_grad(grad, self.base.first.dim())?;
        check_grad(params, self.base.first.dim())?;
        let t = self.base.step + 1;
        let squared: Vec<f64> = grad.iter().map(|g| g * g).collect();
        self.base.first.update(grad, hp.beta1, hp.gamma1, hp.phi1)?;
        self.base
            .second
            .update(&squared, hp.beta2, hp.gamma2, hp.phi2)?;
        let (lf1, tf1) = bias_correction_factors(t, hp.beta1, hp.gamma1, hp.phi1)?;
        let (lf2, tf2) = bias_correction_factors(t, hp.beta2, hp.gamma2, hp.phi2)?;

        let mut effective = vec![0.0; grad.len()];
        for i in 0..grad.len() {
            let v = self.base.second.combined()[i];
            if v > self.v_max[i] {
                self.v_max[i] = v;
                self.level_at_max[i] = self.base.second.level()[i];
                self.trend_at_max[i] = self.base.second.trend()[i];
            }
            let m_hat = lf1 * self.base.first.level()[i] + tf1 * self.base.first.trend()[i];
            let v_hat_max = lf2 * self.level_at_max[i] + tf2 * self.trend_at_max[i];
            effective[i] = hp.eta * m_hat / (v_hat_max.abs().sqrt() + hp.epsilon);
        }
        apply_step(params, &effective);
        self.base.step = t;
        Ok(effective)
    }
}

/// Per-optimizer persistent buffers.
#[derive(Debug, Clone)]
pub enum OptimizerState {
    Sgd,
    Adam(AdamState),
    AmsGrad(AmsGradState),
    AdamT(AdamTState),
    AmsGradT(AmsGradTState),
}

/// A ready-to-step optimizer: hyperparameters plus state buffers.
#[derive(Debug, Clone)]
pub struct Optimizer {
    hp: HyperParams,
    state: OptimizerState,
}

impl Optimizer {
    /// Builds an optimizer for `dim` parameters, validating the
    /// hyperparameters.
    pub fn new(hp: HyperParams, dim: usize) -> Result<Self> {
        hp.validate()?;
        let state = match hp.kind {
            OptimizerKind::Sgd => OptimizerState::Sgd,
            OptimizerKind::Adam => OptimizerState::Adam(AdamState::new(dim)),
            OptimizerKind::AmsGrad => OptimizerState::AmsGrad(AmsGradState::new(dim)),
            OptimizerKind::AdamT => OptimizerState::AdamT(AdamTState::new(dim)),
            OptimizerKind::AmsGradT => OptimizerState::AmsGradT(AmsGradTState::new(dim)),
        };
        Ok(Self { hp, state })
    }

    pub fn hp(&self) -> &HyperParams {
        &self.hp
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    /// Applies one update in place and returns the effective step vector.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<Vec<f64>> {
        match &mut self.state {
            OptimizerState::Sgd => step_sgd(params, grad, &self.hp),
            OptimizerState::Adam(s) => s.step(params, grad, &self.hp),
            OptimizerState::AmsGrad(s) => s.step(params, grad, &self.hp),
            OptimizerState::AdamT(s) => s.step(params, grad, &self.hp),
            OptimizerState::AmsGradT(s) => s.step(params, grad, &self.hp),
        }
    }
}

/// Plain gradient descent: `params - eta * grad`.
pub fn step_sgd(params: &mut [f64], grad: &[f64], hp: &HyperParams) -> Result<Vec<f64>> {
    check_grad(grad, params.len())?;
    let effective: Vec<f64> = grad.iter().map(|g| hp.eta * g).collect();
    apply_step(params, &effective);
    Ok(effective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn defaults(kind: OptimizerKind) -> HyperParams {
        HyperParams::with_kind(kind)
    }

    #[test]
    fn default_hyperparams_match_suggested_values() {
        let hp = HyperParams::default();
        assert_eq!(hp.eta, 1e-4);
        assert_eq!((hp.beta1, hp.gamma1), (0.9, 0.9));
        assert_eq!((hp.beta2, hp.gamma2), (0.999, 0.999));
        assert_eq!((hp.phi1, hp.phi2), (0.5, 0.5));
        assert_eq!(hp.epsilon, 1e-8);
        assert!(hp.validate().is_ok());
    }

    #[test]
    fn validate_rejects_undamped_unit_gamma_product() {
        let hp = HyperParams {
            gamma1: 0.999,
            phi1: 1.5,
            ..HyperParams::default()
        };
        assert!(hp.validate().is_err());
    }

    #[test]
    fn sgd_is_plain_descent() {
        let hp = defaults(OptimizerKind::Sgd);
        let mut params = vec![1.0, -2.0, 0.5];
        let grad = vec![10.0, 0.0, -4.0];
        step_sgd(&mut params, &grad, &hp).unwrap();
        assert_eq!(params, vec![1.0 - 1e-3, -2.0, 0.5 + 4e-4]);
    }

    #[test]
    fn adam_first_step_hand_unroll() {
        // Constant gradient g at t = 1: m_hat = g, v_hat = g^2,
        // step = eta * g / (|g| + eps).
        let hp = defaults(OptimizerKind::Adam);
        let g = -2.5;
        let mut state = AdamState::new(1);
        let mut params = vec![0.0];
        let eff = state.step(&mut params, &[g], &hp).unwrap();
        assert_relative_eq!(
            eff[0],
            hp.eta * g / (g.abs() + hp.epsilon),
            max_relative = 1e-12
        );
        assert_relative_eq!(state.m()[0] / (1.0 - hp.beta1), g, max_relative = 1e-12);
        assert_relative_eq!(state.v()[0] / (1.0 - hp.beta2), g * g, max_relative = 1e-12);
    }

    #[test]
    fn adamt_first_step_hand_unroll() {
        // With the defaults, m_hat_1 = (2 - beta1) g = 1.1 g and
        // v_hat_1 = (2 - beta2) g^2 = 1.001 g^2, so the first effective step
        // is eta * 1.1 * sign(g) / sqrt(1.001) as epsilon -> 0.
        let mut hp = defaults(OptimizerKind::AdamT);
        hp.epsilon = 0.0;
        let g = 0.37;
        let mut state = AdamTState::new(1);
        let mut params = vec![0.0];
        let eff = state.step(&mut params, &[g], &hp).unwrap();

        let (m_hat, v_hat) = state.corrected(&hp).unwrap();
        assert_relative_eq!(m_hat[0], 1.1 * g, max_relative = 1e-12);
        assert_relative_eq!(v_hat[0], 1.001 * g * g, max_relative = 1e-12);
        assert_relative_eq!(
            eff[0],
            hp.eta * 1.1 * g.signum() / 1.001f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn adamt_zero_gradient_is_a_no_op() {
        let hp = defaults(OptimizerKind::AdamT);
        let mut state = AdamTState::new(3);
        let mut params = vec![0.4, -1.0, 2.0];
        let before = params.clone();
        for _ in 0..25 {
            let eff = state.step(&mut params, &[0.0; 3], &hp).unwrap();
            assert!(eff.iter().all(|&e| e == 0.0));
        }
        assert_eq!(params, before);
    }

    #[test]
    fn amsgradt_zero_gradient_is_a_no_op() {
        let hp = defaults(OptimizerKind::AmsGradT);
        let mut state = AmsGradTState::new(2);
        let mut params = vec![1.5, -0.5];
        let before = params.clone();
        for _ in 0..25 {
            state.step(&mut params, &[0.0; 2], &hp).unwrap();
        }
        assert_eq!(params, before);
    }

    #[test]
    fn adamt_phi_zero_raw_series_match_adam() {
        let mut hp = defaults(OptimizerKind::AdamT);
        hp.phi1 = 0.0;
        hp.phi2 = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut adamt = AdamTState::new(4);
        let mut adam = AdamState::new(4);
        let mut p1 = vec![0.0; 4];
        let mut p2 = vec![0.0; 4];
        for _ in 0..1000 {
            let grad: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            adamt.step(&mut p1, &grad, &hp).unwrap();
            adam.step(&mut p2, &grad, &hp).unwrap();
            for i in 0..4 {
                let m_ref = adam.m()[i];
                let v_ref = adam.v()[i];
                assert!((adamt.first().combined()[i] - m_ref).abs() <= 1e-12 * m_ref.abs().max(1.0));
                assert!((adamt.second().combined()[i] - v_ref).abs() <= 1e-12 * v_ref.abs().max(1.0));
            }
        }
    }

    #[test]
    fn amsgradt_first_step_equals_adamt() {
        let hp = defaults(OptimizerKind::AmsGradT);
        let grad = [0.8, -0.3, 0.0];
        let mut a = AdamTState::new(3);
        let mut b = AmsGradTState::new(3);
        let mut pa = vec![0.1, 0.2, 0.3];
        let mut pb = pa.clone();
        let ea = a.step(&mut pa, &grad, &hp).unwrap();
        let eb = b.step(&mut pb, &grad, &hp).unwrap();
        assert_eq!(ea, eb);
        assert_eq!(pa, pb);
    }

    #[test]
    fn amsgradt_v_max_is_monotone() {
        let hp = defaults(OptimizerKind::AmsGradT);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = AmsGradTState::new(3);
        let mut params = vec![0.0; 3];
        let mut prev = state.v_max().to_vec();
        for _ in 0..500 {
            let grad: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
            state.step(&mut params, &grad, &hp).unwrap();
            for i in 0..3 {
                assert!(state.v_max()[i] >= prev[i]);
                assert!(state.v_max()[i] >= 0.0);
            }
            prev = state.v_max().to_vec();
        }
    }

    #[test]
    fn effective_steps_are_scale_invariant_without_epsilon() {
        // Scaling every gradient by c > 0 must leave the effective steps (and
        // hence the trajectory) unchanged when epsilon = 0.
        for kind in [OptimizerKind::AdamT, OptimizerKind::AmsGradT] {
            let mut hp = defaults(kind);
            hp.epsilon = 0.0;
            let c = 7.3;
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let grads: Vec<Vec<f64>> = (0..500)
                .map(|_| (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
                .collect();

            let mut base = Optimizer::new(hp, 3).unwrap();
            let mut scaled = Optimizer::new(hp, 3).unwrap();
            let mut p_base = vec![0.2, -0.4, 1.0];
            let mut p_scaled = p_base.clone();
            for g in &grads {
                let gs: Vec<f64> = g.iter().map(|x| c * x).collect();
                base.step(&mut p_base, g).unwrap();
                scaled.step(&mut p_scaled, &gs).unwrap();
                for i in 0..3 {
                    let scale = p_base[i].abs().max(1.0);
                    assert!(
                        (p_base[i] - p_scaled[i]).abs() <= 1e-9 * scale,
                        "{kind:?}: trajectories diverged"
                    );
                }
            }
        }
    }

    #[test]
    fn adamt_stationary_limit() {
        // Constant gradient for 1e4 steps: m_hat -> g and v_hat -> g^2.
        let hp = defaults(OptimizerKind::AdamT);
        let g = -1.7;
        let mut state = AdamTState::new(1);
        let mut params = vec![0.0];
        for _ in 0..10_000 {
            state.step(&mut params, &[g], &hp).unwrap();
        }
        let (m_hat, v_hat) = state.corrected(&hp).unwrap();
        assert_relative_eq!(m_hat[0], g, max_relative = 1e-5);
        assert_relative_eq!(v_hat[0], g * g, max_relative = 1e-5);
    }

    #[test]
    fn non_finite_gradient_names_offending_index() {
        let hp = defaults(OptimizerKind::AdamT);
        let mut state = AdamTState::new(3);
        let mut params = vec![0.0; 3];
        let err = state
            .step(&mut params, &[0.0, f64::NAN, 1.0], &hp)
            .unwrap_err();
        match err {
            Error::NonFiniteInput { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn determinism_within_one_build() {
        let hp = defaults(OptimizerKind::AmsGradT);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut opt = Optimizer::new(hp, 2).unwrap();
            let mut params = vec![0.5, -0.5];
            for _ in 0..200 {
                let grad: Vec<f64> = (0..2).map(|_| rng.random::<f64>() - 0.5).collect();
                opt.step(&mut params, &grad).unwrap();
            }
            params
        };
        assert_eq!(run(), run());
    }
}

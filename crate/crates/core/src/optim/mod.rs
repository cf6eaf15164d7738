//! Iterative updating rules behind one stepping interface.
//!
//! Every rule shares the first-order momentum update
//! `v⁺ = β₁ v + (1 - β₁) g` (except SGD) and differs in how `v⁺` is turned
//! into a parameter step:
//!
//! | tag             | update                                                              |
//! |-----------------|---------------------------------------------------------------------|
//! | `SGD`           | `θ⁺ = θ - α g`                                                      |
//! | `HB`            | `θ⁺ = θ - α v⁺`                                                     |
//! | `NAG`           | `θ⁺ = θ - α ½ (β₁ v⁺ + (1 - β₁) g)`                                  |
//! | `DLPF`          | `θ⁺ = θ - α ½ (β₁ + 1) v⁺`                                           |
//! | `RGD`           | `θ⁺ = θ - α v⁺ / √(δ² ‖v⁺‖² + 1)`                                    |
//! | `RAD1_ORIGINAL` | `θ⁺ = θ - α v⁺ / √(δ² v⁺² + 1)` elementwise                           |
//! | `RAD1`          | `θ⁺ = θ - α √(1-β₂^{k+1}) / √(δ² y⁺ + ζ_k) · v⁺ / (1-β₁^{k+1})`       |
//! | `RAD2`          | `θ⁺ = θ - (α/2) v⁺ [1/√(δ² v⁺² + 1) + 1/√(δ² v⁺² + 1/β₁²)]`            |
//! | `ADAM`          | `θ⁺ = θ - α √(1-β₂^{k+1}) / √(y⁺ + ε) · v⁺ / (1-β₁^{k+1})`            |
//! | `ADAM_ORIGINAL` | `θ⁺ = θ - α / (√ŷ + ε) · v̂`                                           |
//!
//! with `y⁺ = β₂ y + (1 - β₂) g²` for the adaptive rules. `k` is the 0-based
//! index of the step being taken, so bias corrections use `β^{k+1}`.

mod physics;
mod schedule;
mod theory;

use core::fmt;
use core::str::FromStr;

use crate::vector::{check_len, NumError, Vector};

pub use physics::{
    hyper_to_physics, momenta_from_velocity, momentum_hamiltonian, physics_to_hyper, velocity_from_momenta,
    Hyperparams, PhysicalParams,
};
pub use schedule::{ZetaSchedule, DEFAULT_KAPPA};
pub use theory::{check_theorem_conditions, ConditionCheck, TheoremReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptError {
    #[error("invalid hyperparameter {name} = {value}")]
    InvalidHyper { name: &'static str, value: f64 },
    #[error("non-finite gradient at index {0}")]
    NonFiniteGradient(usize),
    #[error("update produced a non-finite value")]
    NonFinite,
    #[error("negative second-order momentum")]
    NegativeSecondMoment,
    #[error("{0} carries no momentum")]
    NoMomentum(Algorithm),
    #[error("unknown optimizer tag {0:?}")]
    UnknownAlgorithm(alloc::string::String),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Sgd,
    Hb,
    Nag,
    Dlpf,
    Rgd,
    Rad1Original,
    Rad1,
    Rad2,
    Adam,
    AdamOriginal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Sgd,
        Algorithm::Hb,
        Algorithm::Nag,
        Algorithm::Dlpf,
        Algorithm::Rgd,
        Algorithm::Rad1Original,
        Algorithm::Rad1,
        Algorithm::Rad2,
        Algorithm::Adam,
        Algorithm::AdamOriginal,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Sgd => "SGD",
            Algorithm::Hb => "HB",
            Algorithm::Nag => "NAG",
            Algorithm::Dlpf => "DLPF",
            Algorithm::Rgd => "RGD",
            Algorithm::Rad1Original => "RAD1_ORIGINAL",
            Algorithm::Rad1 => "RAD1",
            Algorithm::Rad2 => "RAD2",
            Algorithm::Adam => "ADAM",
            Algorithm::AdamOriginal => "ADAM_ORIGINAL",
        }
    }

    /// Whether the rule keeps a second-order momentum `y`.
    pub fn uses_second_moment(self) -> bool {
        matches!(self, Algorithm::Rad1 | Algorithm::Adam | Algorithm::AdamOriginal)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = OptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| OptError::UnknownAlgorithm(s.into()))
    }
}

/// Algorithm plus hyperparameters. Fields an algorithm does not use are
/// ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    /// α
    pub lr: f64,
    /// β₁; `0` is allowed and makes `v⁺ = g`.
    pub beta1: f64,
    /// β₂
    pub beta2: f64,
    /// Speed coefficient δ (RGD and the RAD family).
    pub delta: f64,
    /// Rational factor ε (ADAM, ADAM_ORIGINAL).
    pub epsilon: f64,
    /// Symplectic factor schedule (RAD1).
    pub zeta: ZetaSchedule,
}

impl OptimizerConfig {
    /// Defaults: `β₁ = 0.9`, `β₂ = 0.999`, `δ = 1`, `ε = 1e-16` and a constant
    /// `ζ = 1e-16`. The annealed schedule needs the run length, so it is
    /// opt-in through [`OptimizerConfig::with_zeta`].
    pub fn new(algorithm: Algorithm, lr: f64) -> Self {
        Self {
            algorithm,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            delta: 1.0,
            epsilon: 1e-16,
            zeta: ZetaSchedule::Constant(1e-16),
        }
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_zeta(mut self, zeta: ZetaSchedule) -> Self {
        self.zeta = zeta;
        self
    }

    pub fn validate(&self) -> Result<(), OptError> {
        let bad = |name, value| Err(OptError::InvalidHyper { name, value });
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr", self.lr);
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return bad("beta1", self.beta1);
        }
        if !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("beta2", self.beta2);
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("delta", self.delta);
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon", self.epsilon);
        }
        match self.zeta {
            ZetaSchedule::Constant(eps) if !(eps > 0.0 && eps <= 1.0) => bad("zeta", eps),
            ZetaSchedule::Annealed { kappa, .. } if !(kappa > 0.0) => bad("kappa", kappa),
            ZetaSchedule::Annealed { horizon: 0, .. } => bad("horizon", 0.0),
            _ => Ok(()),
        }
    }
}

/// Parameters, momenta and the index of the next step.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    theta: Vector,
    v: Vector,
    y: Vector,
    k: u64,
}

impl OptState {
    /// Fresh state with zero momenta.
    pub fn new(theta: impl Into<Vector>) -> Self {
        let theta = theta.into();
        let n = theta.len();
        Self { theta, v: Vector::zeros(n), y: Vector::zeros(n), k: 0 }
    }

    pub fn from_parts(theta: Vector, v: Vector, y: Vector, k: u64) -> Result<Self, OptError> {
        check_len(theta.len(), v.len())?;
        check_len(theta.len(), y.len())?;
        if y.iter().any(|&y| y < 0.0) {
            return Err(OptError::NegativeSecondMoment);
        }
        Ok(Self { theta, v, y, k })
    }

    pub fn theta(&self) -> &Vector {
        &self.theta
    }

    pub fn v(&self) -> &Vector {
        &self.v
    }

    pub fn y(&self) -> &Vector {
        &self.y
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn into_theta(self) -> Vector {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

/// Result of one step with the per-coordinate rate that was applied.
///
/// `rates[i]` multiplies the rule's search direction: `g` for SGD, `v⁺` for
/// HB/DLPF/RGD/RAD1_ORIGINAL/RAD2 (DLPF and RAD2 fold their extra factors
/// into the rate), `½(β₁v⁺ + (1-β₁)g)` for NAG, and the bias-corrected `v⁺`
/// for RAD1 and both ADAMs, so that `θ⁺ = θ - rates ⊙ direction`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: OptState,
    pub rates: Vector,
}

/// Apply one update. Pure: the input state is not modified.
pub fn step(cfg: &OptimizerConfig, state: &OptState, grad: &[f64]) -> Result<OptState, OptError> {
    step_with_rates(cfg, state, grad).map(|o| o.state)
}

pub fn step_with_rates(cfg: &OptimizerConfig, state: &OptState, grad: &[f64]) -> Result<StepOutcome, OptError> {
    check_len(state.dim(), grad.len())?;
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(OptError::NonFiniteGradient(i));
    }
    let n = state.dim();
    let (alpha, b1, b2, delta) = (cfg.lr, cfg.beta1, cfg.beta2, cfg.delta);
    let k = state.k;
    let exponent = (k + 1) as f64;

    let v: alloc::vec::Vec<f64> = if cfg.algorithm == Algorithm::Sgd {
        state.v.to_vec()
    } else {
        state.v.iter().zip(grad).map(|(v, g)| b1 * v + (1.0 - b1) * g).collect()
    };
    let y: alloc::vec::Vec<f64> = if cfg.algorithm.uses_second_moment() {
        state.y.iter().zip(grad).map(|(y, g)| b2 * y + (1.0 - b2) * g * g).collect()
    } else {
        state.y.to_vec()
    };

    let mut theta = state.theta.to_vec();
    let mut rates = alloc::vec![0.0; n];
    match cfg.algorithm {
        Algorithm::Sgd => {
            for i in 0..n {
                rates[i] = alpha;
                theta[i] -= alpha * grad[i];
            }
        }
        Algorithm::Hb => {
            for i in 0..n {
                rates[i] = alpha;
                theta[i] -= alpha * v[i];
            }
        }
        Algorithm::Nag => {
            for i in 0..n {
                let g_k = 0.5 * (b1 * v[i] + (1.0 - b1) * grad[i]);
                rates[i] = alpha;
                theta[i] -= alpha * g_k;
            }
        }
        Algorithm::Dlpf => {
            for i in 0..n {
                let g_k = 0.5 * (b1 + 1.0) * v[i];
                rates[i] = 0.5 * (b1 + 1.0) * alpha;
                theta[i] -= alpha * g_k;
            }
        }
        Algorithm::Rgd => {
            let norm_sq: f64 = v.iter().map(|v| v * v).sum();
            let alpha_k = alpha / libm::sqrt(delta * delta * norm_sq + 1.0);
            for i in 0..n {
                rates[i] = alpha_k;
                theta[i] -= alpha_k * v[i];
            }
        }
        Algorithm::Rad1Original => {
            for i in 0..n {
                let alpha_k = alpha / libm::sqrt(delta * delta * v[i] * v[i] + 1.0);
                rates[i] = alpha_k;
                theta[i] -= alpha_k * v[i];
            }
        }
        Algorithm::Rad2 => {
            for i in 0..n {
                let s = delta * delta * v[i] * v[i];
                let bracket = 1.0 / libm::sqrt(s + 1.0) + 1.0 / libm::sqrt(s + 1.0 / (b1 * b1));
                let alpha_k = 0.5 * alpha * bracket;
                rates[i] = alpha_k;
                theta[i] -= alpha_k * v[i];
            }
        }
        Algorithm::Rad1 => {
            let bc1 = 1.0 - libm::pow(b1, exponent);
            let bc2 = libm::sqrt(1.0 - libm::pow(b2, exponent));
            let zeta = cfg.zeta.value(b2, k);
            for i in 0..n {
                let g_k = v[i] / bc1;
                let alpha_k = bc2 / libm::sqrt(delta * delta * y[i] + zeta) * alpha;
                rates[i] = alpha_k;
                theta[i] -= alpha_k * g_k;
            }
        }
        Algorithm::Adam => {
            let bc1 = 1.0 - libm::pow(b1, exponent);
            let bc2 = libm::sqrt(1.0 - libm::pow(b2, exponent));
            for i in 0..n {
                let g_k = v[i] / bc1;
                let alpha_k = bc2 / libm::sqrt(y[i] + cfg.epsilon) * alpha;
                rates[i] = alpha_k;
                theta[i] -= alpha_k * g_k;
            }
        }
        Algorithm::AdamOriginal => {
            let bc1 = 1.0 - libm::pow(b1, exponent);
            let bc2 = 1.0 - libm::pow(b2, exponent);
            for i in 0..n {
                let v_hat = v[i] / bc1;
                let y_hat = y[i] / bc2;
                let alpha_k = alpha / (libm::sqrt(y_hat) + cfg.epsilon);
                rates[i] = alpha_k;
                theta[i] -= alpha_k * v_hat;
            }
        }
    }

    let state = OptState { theta: theta.into(), v: v.into(), y: y.into(), k: k + 1 };
    if !(state.theta.is_finite() && state.v.is_finite() && state.y.is_finite()) {
        return Err(OptError::NonFinite);
    }
    Ok(StepOutcome { state, rates: rates.into() })
}

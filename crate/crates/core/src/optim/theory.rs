//! Checks of the step-size conditions under which RAD's averaged squared
//! gradient norm is bounded:
//!
//! ```text
//! α ≤ √ζ₀ / (2L),      β₂ ≥ 1 - ζ₀ / (16 M² δ²)
//! ```
//!
//! with `L` the smoothness constant and `M` the per-coordinate gradient bound.

use crate::optim::{OptError, OptimizerConfig};

/// One inequality: `value` against `bound`. `margin` is positive when the
/// inequality holds with room to spare.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremReport {
    pub learning_rate: ConditionCheck,
    pub beta2: ConditionCheck,
}

impl TheoremReport {
    pub fn holds(&self) -> bool {
        self.learning_rate.holds && self.beta2.holds
    }
}

pub fn check_theorem_conditions(
    cfg: &OptimizerConfig,
    smoothness: f64,
    grad_bound: f64,
    zeta0: f64,
) -> Result<TheoremReport, OptError> {
    for (name, value) in [("smoothness", smoothness), ("grad_bound", grad_bound), ("zeta0", zeta0)] {
        if !(value > 0.0) {
            return Err(OptError::InvalidHyper { name, value });
        }
    }
    let lr_bound = libm::sqrt(zeta0) / (2.0 * smoothness);
    let beta2_bound = 1.0 - zeta0 / (16.0 * grad_bound * grad_bound * cfg.delta * cfg.delta);
    Ok(TheoremReport {
        learning_rate: ConditionCheck {
            value: cfg.lr,
            bound: lr_bound,
            margin: lr_bound - cfg.lr,
            holds: cfg.lr <= lr_bound,
        },
        beta2: ConditionCheck {
            value: cfg.beta2,
            bound: beta2_bound,
            margin: cfg.beta2 - beta2_bound,
            holds: cfg.beta2 >= beta2_bound,
        },
    })
}

//! Change of variables between physical constants and hyperparameters.
//!
//! Discretizing a conformal Hamiltonian system with step `h`, damping `r`,
//! particle mass `m` and light speed `c` gives an optimizer with
//!
//! ```text
//! β₁ = e^{-rh},   α = h² / (m (1 - e^{-rh})),   δ = h / (c m (1 - e^{-rh})),
//! v  = -(1 - e^{-rh}) p / h.
//! ```
//!
//! Four constants map onto three hyperparameters, so the inverse map fixes
//! `h = 1`. The inverse is only used to read an energy off optimizer state.

use crate::hamiltonian::KineticEnergy;
use crate::optim::{Algorithm, OptError, OptState, OptimizerConfig};
use crate::vector::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub step: f64,
    pub damping: f64,
    pub mass: f64,
    pub light_speed: f64,
}

/// `(α, β₁, δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub lr: f64,
    pub beta1: f64,
    pub delta: f64,
}

pub fn physics_to_hyper(phys: &PhysicalParams) -> Hyperparams {
    let PhysicalParams { step: h, damping: r, mass: m, light_speed: c } = *phys;
    let beta1 = libm::exp(-r * h);
    // 1 - e^{-rh} without cancellation for small rh.
    let one_minus = -libm::expm1(-r * h);
    Hyperparams { lr: h * h / (m * one_minus), beta1, delta: h / (c * m * one_minus) }
}

/// Inverse of [`physics_to_hyper`] under the convention `h = 1`:
/// `r = -ln β₁`, `m = 1 / (α (1 - β₁))`, `c = α / δ`.
pub fn hyper_to_physics(lr: f64, beta1: f64, delta: f64) -> Result<PhysicalParams, OptError> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(OptError::InvalidHyper { name: "lr", value: lr });
    }
    open_unit("beta1", beta1)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(OptError::InvalidHyper { name: "delta", value: delta });
    }
    Ok(PhysicalParams {
        step: 1.0,
        damping: -libm::log(beta1),
        mass: 1.0 / (lr * (1.0 - beta1)),
        light_speed: lr / delta,
    })
}

/// Physical momenta behind the optimizer's first-order momenta:
/// `p = -v / (1 - β₁)` (`h = 1`).
pub fn momenta_from_velocity(v: &[f64], beta1: f64) -> Result<Vector, OptError> {
    open_unit("beta1", beta1)?;
    Ok(v.iter().map(|v| -v / (1.0 - beta1)).collect())
}

/// Forward map `v = -(1 - e^{-rh}) p / h`.
pub fn velocity_from_momenta(p: &[f64], phys: &PhysicalParams) -> Vector {
    let one_minus = -libm::expm1(-phys.damping * phys.step);
    p.iter().map(|p| -one_minus * p / phys.step).collect()
}

/// Total energy `T(p) + J` of the system an optimizer state discretizes.
///
/// The kinetic form follows the algorithm: classical `Σ p²/2m` for HB, NAG
/// and DLPF; a single relativistic particle `c √(‖p‖² + m²c²)` for RGD; a
/// system of one-dimensional relativistic particles `Σ c √(p_i² + m²c²)`
/// for RAD and ADAM (ADAM uses `δ = 1`). Rest energy is kept. SGD carries
/// no momentum and has no such energy.
pub fn momentum_hamiltonian(cfg: &OptimizerConfig, state: &OptState, objective_value: f64) -> Result<f64, OptError> {
    let delta = match cfg.algorithm {
        Algorithm::Sgd => return Err(OptError::NoMomentum(cfg.algorithm)),
        Algorithm::Adam | Algorithm::AdamOriginal => 1.0,
        _ => cfg.delta,
    };
    let phys = hyper_to_physics(cfg.lr, cfg.beta1, delta)?;
    let p = momenta_from_velocity(state.v(), cfg.beta1)?;
    let kinetic = match cfg.algorithm {
        Algorithm::Hb | Algorithm::Nag | Algorithm::Dlpf => KineticEnergy::Classical { mass: phys.mass }.value(&p),
        Algorithm::Rgd => {
            let c = phys.light_speed;
            let mc = phys.mass * c;
            c * libm::sqrt(p.norm_sq() + mc * mc)
        }
        _ => KineticEnergy::Relativistic { mass: phys.mass, light_speed: phys.light_speed }.value(&p),
    };
    let h = kinetic + objective_value;
    if h.is_finite() {
        Ok(h)
    } else {
        Err(OptError::NonFinite)
    }
}

fn open_unit(name: &'static str, value: f64) -> Result<(), OptError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(OptError::InvalidHyper { name, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn hand_evaluated_forward_map() {
        let hp = physics_to_hyper(&PhysicalParams {
            step: 1.0,
            damping: core::f64::consts::LN_2,
            mass: 2.0,
            light_speed: 1.0,
        });
        assert!(close(hp.beta1, 0.5, 1e-15));
        assert!(close(hp.lr, 1.0, 1e-15));
        assert!(close(hp.delta, 1.0, 1e-15));
    }

    #[test]
    fn beta1_round_trip() {
        let alpha = 1e-3;
        let phys = PhysicalParams {
            step: 1.0,
            damping: -libm::log(0.9),
            mass: 1.0 / (alpha * (1.0 - 0.9)),
            light_speed: 1.0,
        };
        let hp = physics_to_hyper(&phys);
        assert!(close(hp.beta1, 0.9, 1e-15));
        assert!(close(hp.lr, alpha, 1e-13));
    }

    #[test]
    fn delta_identity() {
        for &(h, r, m, c) in &[(1.0, 0.1, 3.0, 0.2), (0.01, 5.0, 1e-3, 40.0), (2.5, 1e-4, 7.0, 1.0)] {
            let hp = physics_to_hyper(&PhysicalParams { step: h, damping: r, mass: m, light_speed: c });
            assert!(close(hp.delta * c * m * (1.0 - hp.beta1), h, 1e-12));
        }
    }

    #[test]
    fn inverse_map_hand_values() {
        let p = hyper_to_physics(1e-3, 0.9, 1.0).unwrap();
        assert!(close(p.damping, 0.105_360_515_657_826_3, 1e-14));
        assert!(close(p.mass, 1e4, 1e-12));
        assert!(close(p.light_speed, 1e-3, 1e-15));
        assert_eq!(p.step, 1.0);
    }

    #[test]
    fn round_trip_identity() {
        for &(a, b, d) in &[(1e-3, 0.9, 1.0), (0.5, 0.01, 3.0), (5e-4, 0.999, 0.2)] {
            let hp = physics_to_hyper(&hyper_to_physics(a, b, d).unwrap());
            assert!(close(hp.lr, a, 1e-12) && close(hp.beta1, b, 1e-12) && close(hp.delta, d, 1e-12));
        }
    }

    #[test]
    fn heavy_particle_limit() {
        let m1 = hyper_to_physics(1e-3, 0.99, 1.0).unwrap().mass;
        let m2 = hyper_to_physics(1e-3, 0.999_999, 1.0).unwrap().mass;
        assert!(m2 > 1e3 * m1);
        assert!(hyper_to_physics(1e-3, 1.0, 1.0).is_err());
    }

    #[test]
    fn momenta_conversion() {
        assert_eq!(momenta_from_velocity(&[0.0], 0.9).unwrap().as_slice(), &[-0.0]);
        let p = momenta_from_velocity(&[0.1], 0.9).unwrap();
        assert!(close(p[0], -1.0, 1e-15));
        let phys = hyper_to_physics(1e-3, 0.9, 1.0).unwrap();
        let v = velocity_from_momenta(&p, &phys);
        assert!(close(v[0], 0.1, 1e-12));
    }
}

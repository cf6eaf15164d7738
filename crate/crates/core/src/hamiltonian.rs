//! Conformal Hamiltonian systems and their conformal symplectic integrators.
//!
//! A conformal Hamiltonian system with total energy `H(q, p) = T(p) + U(q)`
//! evolves as
//!
//! ```text
//! dp/dt = -∇_q H - r p,      dq/dt = ∇_p H,
//! ```
//!
//! so energy is dissipated and phase area contracts as `e^{-rt}`. The
//! integrators below split the flow into its conservative part (handled by
//! symplectic Euler or leapfrog) and its dissipative part (handled exactly,
//! `p ↦ e^{-rh} p`). One step of either integrator therefore contracts phase
//! area by exactly `e^{-rh}`.
//!
//! Only separable Hamiltonians are supported, which keeps every stage
//! explicit.

use alloc::vec::Vec;

use crate::vector::{check_len, NumError, Vector};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum HamiltonianError {
    #[error("step size must be positive, got {0}")]
    InvalidStep(f64),
    #[error("invalid physical constant {name} = {value}")]
    InvalidConstant { name: &'static str, value: f64 },
    #[error("phase-area check needs a one-dimensional system, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("non-finite state or energy")]
    NonFinite,
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Potential energy `U(q)` together with its gradient oracle.
pub trait Potential {
    fn value(&self, q: &[f64]) -> f64;
    fn gradient(&self, q: &[f64]) -> Vector;
}

impl<P: Potential + ?Sized> Potential for &P {
    fn value(&self, q: &[f64]) -> f64 {
        (**self).value(q)
    }

    fn gradient(&self, q: &[f64]) -> Vector {
        (**self).gradient(q)
    }
}

/// A potential built from two closures.
#[derive(Clone)]
pub struct FnPotential<V, G> {
    value: V,
    gradient: G,
}

impl<V, G> FnPotential<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vector,
{
    pub fn new(value: V, gradient: G) -> Self {
        Self { value, gradient }
    }
}

impl<V, G> Potential for FnPotential<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vector,
{
    fn value(&self, q: &[f64]) -> f64 {
        (self.value)(q)
    }

    fn gradient(&self, q: &[f64]) -> Vector {
        (self.gradient)(q)
    }
}

/// `U(q) = ½ k ‖q‖²`, the harmonic well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicWell {
    pub stiffness: f64,
}

impl Potential for HarmonicWell {
    fn value(&self, q: &[f64]) -> f64 {
        0.5 * self.stiffness * q.iter().map(|x| x * x).sum::<f64>()
    }

    fn gradient(&self, q: &[f64]) -> Vector {
        q.iter().map(|x| self.stiffness * x).collect()
    }
}

/// Kinetic energy of `n` equal-mass one-dimensional particles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KineticEnergy {
    /// `T(p) = Σ p_i² / 2m`
    Classical { mass: f64 },
    /// `T(p) = Σ c √(p_i² + m²c²)`, rest energy included.
    Relativistic { mass: f64, light_speed: f64 },
}

impl KineticEnergy {
    pub fn classical(mass: f64) -> Result<Self, HamiltonianError> {
        positive("mass", mass)?;
        Ok(Self::Classical { mass })
    }

    pub fn relativistic(mass: f64, light_speed: f64) -> Result<Self, HamiltonianError> {
        positive("mass", mass)?;
        positive("light_speed", light_speed)?;
        Ok(Self::Relativistic { mass, light_speed })
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        match *self {
            Self::Classical { mass } => p.iter().map(|x| x * x).sum::<f64>() / (2.0 * mass),
            Self::Relativistic { mass, light_speed: c } => {
                let mc2 = mass * mass * c * c;
                p.iter().map(|x| c * libm::sqrt(x * x + mc2)).sum()
            }
        }
    }

    /// `∇_p T`, i.e. the velocity `dq/dt`.
    pub fn gradient(&self, p: &[f64]) -> Vector {
        match *self {
            Self::Classical { mass } => p.iter().map(|x| x / mass).collect(),
            Self::Relativistic { mass, light_speed: c } => {
                let mc2 = mass * mass * c * c;
                p.iter().map(|x| c * x / libm::sqrt(x * x + mc2)).collect()
            }
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), HamiltonianError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(HamiltonianError::InvalidConstant { name, value })
    }
}

/// A point `(q, p)` of phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vector,
    pub p: Vector,
}

impl PhasePoint {
    pub fn new(q: impl Into<Vector>, p: impl Into<Vector>) -> Result<Self, NumError> {
        let (q, p) = (q.into(), p.into());
        check_len(q.len(), p.len())?;
        Ok(Self { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        let dq: f64 = self.q.iter().zip(other.q.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        let dp: f64 = self.p.iter().zip(other.p.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        libm::sqrt(dq + dp)
    }
}

/// Which splitting scheme one step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Dissipate, then symplectic Euler. Order 1.
    FirstOrder,
    /// Half dissipation, leapfrog, half dissipation. Order 2.
    SecondOrder,
}

#[derive(Debug, Clone)]
pub struct HamiltonianSystem<P> {
    pub potential: P,
    pub kinetic: KineticEnergy,
    pub damping: f64,
}

impl<P: Potential> HamiltonianSystem<P> {
    /// `damping` may be zero, in which case the integrators are the plain
    /// symplectic ones.
    pub fn new(potential: P, kinetic: KineticEnergy, damping: f64) -> Result<Self, HamiltonianError> {
        if !(damping >= 0.0 && damping.is_finite()) {
            return Err(HamiltonianError::InvalidConstant { name: "damping", value: damping });
        }
        Ok(Self { potential, kinetic, damping })
    }

    pub fn hamiltonian_value(&self, z: &PhasePoint) -> Result<f64, HamiltonianError> {
        let h = self.kinetic.value(&z.p) + self.potential.value(&z.q);
        if h.is_finite() {
            Ok(h)
        } else {
            Err(HamiltonianError::NonFinite)
        }
    }

    /// `p⁺ = e^{-rh} p - h ∇U(q)`, `q⁺ = q + h ∇T(p⁺)`.
    pub fn step_first_order(&self, z: &PhasePoint, h: f64) -> Result<PhasePoint, HamiltonianError> {
        check_step(h)?;
        let decay = libm::exp(-self.damping * h);
        let force = self.potential.gradient(&z.q);
        check_len(force.len(), z.dim())?;
        let p: Vector = z.p.iter().zip(force.iter()).map(|(p, f)| decay * p - h * f).collect();
        let velocity = self.kinetic.gradient(&p);
        let q: Vector = z.q.iter().zip(velocity.iter()).map(|(q, v)| q + h * v).collect();
        finite_point(q, p)
    }

    /// Half dissipation, leapfrog drift–kick–drift, half dissipation.
    pub fn step_second_order(&self, z: &PhasePoint, h: f64) -> Result<PhasePoint, HamiltonianError> {
        check_step(h)?;
        let half_decay = libm::exp(-0.5 * self.damping * h);
        let p_damped: Vector = z.p.iter().map(|p| half_decay * p).collect();
        let q_half = self.half_drift(&z.q, &p_damped, h);
        let force = self.potential.gradient(&q_half);
        check_len(force.len(), z.dim())?;
        let p_half: Vector = p_damped.iter().zip(force.iter()).map(|(p, f)| p - h * f).collect();
        let q = self.half_drift(&q_half, &p_half, h);
        let p: Vector = p_half.iter().map(|p| half_decay * p).collect();
        finite_point(q, p)
    }

    /// Midpoint position of a second-order step started at `z`, i.e. the
    /// point where the force is evaluated.
    pub fn second_order_midpoint(&self, z: &PhasePoint, h: f64) -> Vector {
        let half_decay = libm::exp(-0.5 * self.damping * h);
        let p_damped: Vector = z.p.iter().map(|p| half_decay * p).collect();
        self.half_drift(&z.q, &p_damped, h)
    }

    fn half_drift(&self, q: &[f64], p: &[f64], h: f64) -> Vector {
        let velocity = self.kinetic.gradient(p);
        q.iter().zip(velocity.iter()).map(|(q, v)| q + 0.5 * h * v).collect()
    }

    pub fn step(&self, integrator: Integrator, z: &PhasePoint, h: f64) -> Result<PhasePoint, HamiltonianError> {
        match integrator {
            Integrator::FirstOrder => self.step_first_order(z, h),
            Integrator::SecondOrder => self.step_second_order(z, h),
        }
    }

    /// Run `steps` steps and return every visited point, `z0` included.
    pub fn trajectory(
        &self,
        integrator: Integrator,
        z0: &PhasePoint,
        h: f64,
        steps: usize,
    ) -> Result<Vec<PhasePoint>, HamiltonianError> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(z0.clone());
        for _ in 0..steps {
            let next = self.step(integrator, out.last().expect("non-empty"), h)?;
            out.push(next);
        }
        Ok(out)
    }

    /// Determinant of the Jacobian of one step at `z`, by central finite
    /// differences with perturbation [`AREA_PERTURBATION`]. For a conformal
    /// symplectic step this is `e^{-rh}`.
    pub fn phase_area_contraction(
        &self,
        integrator: Integrator,
        z: &PhasePoint,
        h: f64,
    ) -> Result<f64, HamiltonianError> {
        if z.dim() != 1 {
            return Err(HamiltonianError::NotOneDimensional(z.dim()));
        }
        let eps = AREA_PERTURBATION;
        let at = |q: f64, p: f64| -> Result<(f64, f64), HamiltonianError> {
            let out = self.step(integrator, &PhasePoint::new([q], [p])?, h)?;
            Ok((out.q[0], out.p[0]))
        };
        let (q, p) = (z.q[0], z.p[0]);
        let (qa, pa) = at(q + eps, p)?;
        let (qb, pb) = at(q - eps, p)?;
        let (qc, pc) = at(q, p + eps)?;
        let (qd, pd) = at(q, p - eps)?;
        let dq_dq = (qa - qb) / (2.0 * eps);
        let dp_dq = (pa - pb) / (2.0 * eps);
        let dq_dp = (qc - qd) / (2.0 * eps);
        let dp_dp = (pc - pd) / (2.0 * eps);
        Ok(dq_dq * dp_dp - dq_dp * dp_dq)
    }
}

/// Finite-difference perturbation used by the phase-area check.
pub const AREA_PERTURBATION: f64 = 1e-6;

fn check_step(h: f64) -> Result<(), HamiltonianError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(HamiltonianError::InvalidStep(h))
    }
}

fn finite_point(q: Vector, p: Vector) -> Result<PhasePoint, HamiltonianError> {
    if q.is_finite() && p.is_finite() {
        Ok(PhasePoint { q, p })
    } else {
        Err(HamiltonianError::NonFinite)
    }
}

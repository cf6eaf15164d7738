//! Conformal symplectic optimization.
//!
//! Optimizers are read as discretizations of a damped (conformal) Hamiltonian
//! system: parameters are positions, optimizer momenta are rescaled physical
//! momenta, and the objective is the potential energy. Choosing the kinetic
//! energy and the integrator yields the classical family (heavy ball,
//! dissipative leapfrog) or the relativistic family (RGD, RAD), and setting
//! RAD's symplectic factor to a constant recovers ADAM.
//!
//! The crate is `no_std` and only needs `alloc`. Floating-point math goes
//! through [`libm`], so results are bit-identical across platforms.
//!
//! Layout:
//!
//! * [`vector`], [`rng`], [`trace`]: numeric primitives.
//! * [`hamiltonian`]: conformal Hamiltonian systems and their integrators.
//! * [`optim`]: the updating rules, the symplectic-factor schedule and the
//!   physics/hyperparameter change of variables.
//! * [`objectives`]: deterministic and stochastic test objectives, mini-batch
//!   gradients and convergence diagnostics.
//! * [`nn`]: a small multilayer perceptron with explicit backpropagation.
//! * [`rl`]: CartPole, a replay buffer and a DQN learner.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod hamiltonian;
pub mod nn;
pub mod objectives;
pub mod optim;
pub mod rl;
pub mod rng;
pub mod trace;
pub mod vector;

pub use hamiltonian::{HamiltonianSystem, Integrator, KineticEnergy, PhasePoint, Potential};
pub use optim::{Algorithm, OptError, OptState, OptimizerConfig, PhysicalParams, ZetaSchedule};
pub use rng::Rng;
pub use trace::{Trace, TraceError, TraceRow};
pub use vector::{NumError, Vector};

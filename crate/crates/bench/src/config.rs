//! Experiment configuration files.
//!
//! Configs are TOML: top-level keys name the experiment, a `[objective]`,
//! `[cartpole]` or `[hamiltonian]` section describes what is optimized or
//! simulated, and each `[[optimizer]]` table adds one optimizer.
//!
//! ```toml
//! name = "noisy_quadratic"
//! kind = "stochastic-objective"
//! seeds = [0, 1, 2]
//! budget = 10000
//!
//! [objective]
//! name = "quadratic"
//! dim = 10
//! condition_number = 10.0
//! noise_std = 1.0
//!
//! [[optimizer]]
//! algorithm = "RAD1"
//! lr = 1e-3
//! zeta = "annealed"
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rad_core::nn::LossSpec;
use rad_core::objectives::BatchSchedule;
use rad_core::rl::{DqnConfig, MIN_BUDGET};
use rad_core::{Algorithm, Integrator, OptimizerConfig, ZetaSchedule};
use serde::Deserialize;

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    DeterministicObjective,
    StochasticObjective,
    Cartpole,
    HamiltonianDiagnostics,
}

impl Kind {
    pub const ALL: [Kind; 4] =
        [Kind::DeterministicObjective, Kind::StochasticObjective, Kind::Cartpole, Kind::HamiltonianDiagnostics];

    pub fn tag(self) -> &'static str {
        match self {
            Kind::DeterministicObjective => "deterministic-objective",
            Kind::StochasticObjective => "stochastic-objective",
            Kind::Cartpole => "cartpole",
            Kind::HamiltonianDiagnostics => "hamiltonian-diagnostics",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveName {
    Quadratic { condition_number: f64 },
    Rosenbrock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub name: ObjectiveName,
    pub dim: usize,
    /// θ₀ ~ N(init, init_std²) per coordinate.
    pub init: f64,
    pub init_std: f64,
    /// Gradient noise; `None` for a deterministic objective.
    pub noise: Option<NoiseSpec>,
    pub slope_window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub std: f64,
    pub batch: BatchSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialName {
    Harmonic { stiffness: f64 },
    /// `U(q) = Σ q⁴/4 - q²/2`.
    DoubleWell,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KineticName {
    Classical,
    Relativistic { light_speed: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub potential: PotentialName,
    pub kinetic: KineticName,
    pub mass: f64,
    pub damping: f64,
    pub step: f64,
    pub dim: usize,
    pub init_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerEntry {
    /// Used in file names; defaults to the algorithm tag.
    pub label: String,
    pub config: OptimizerConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartpoleSpec {
    /// Optimizer field is a placeholder replaced per run.
    pub dqn: DqnConfig,
    /// First update index of the window over which `stability` is measured.
    pub stability_from: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Objective { objective: ObjectiveSpec, optimizers: Vec<OptimizerEntry> },
    Cartpole { cartpole: CartpoleSpec, optimizers: Vec<OptimizerEntry> },
    Hamiltonian { system: HamiltonianSpec, integrators: Vec<Integrator> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: Kind,
    pub seeds: Vec<u64>,
    pub budget: u64,
    pub out: Option<PathBuf>,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        parse(&text).map_err(|e| match e {
            BenchError::Parse(msg) => BenchError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Labels of the runs per seed: optimizer labels, or integrator tags.
    pub fn labels(&self) -> Vec<String> {
        match &self.experiment {
            Experiment::Objective { optimizers, .. } | Experiment::Cartpole { optimizers, .. } => {
                optimizers.iter().map(|o| o.label.clone()).collect()
            }
            Experiment::Hamiltonian { integrators, .. } => integrators.iter().map(|&i| integrator_tag(i).into()).collect(),
        }
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Result<Self, BenchError> {
        check_seeds(&seeds)?;
        self.seeds = seeds;
        Ok(self)
    }
}

pub fn integrator_tag(i: Integrator) -> &'static str {
    match i {
        Integrator::FirstOrder => "first-order",
        Integrator::SecondOrder => "second-order",
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    kind: String,
    seeds: Vec<u64>,
    budget: u64,
    out: Option<PathBuf>,
    objective: Option<RawObjective>,
    cartpole: Option<RawCartpole>,
    hamiltonian: Option<RawHamiltonian>,
    #[serde(default, rename = "optimizer")]
    optimizers: Vec<RawOptimizer>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObjective {
    name: String,
    dim: usize,
    condition_number: Option<f64>,
    init: Option<f64>,
    init_std: Option<f64>,
    noise_std: Option<f64>,
    batch: Option<u64>,
    batch_schedule: Option<String>,
    slope_window: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    algorithm: String,
    label: Option<String>,
    lr: f64,
    beta1: Option<f64>,
    beta2: Option<f64>,
    delta: Option<f64>,
    epsilon: Option<f64>,
    zeta: Option<String>,
    zeta_epsilon: Option<f64>,
    kappa: Option<f64>,
    horizon: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCartpole {
    gamma: Option<f64>,
    epsilon_start: Option<f64>,
    epsilon_end: Option<f64>,
    epsilon_fraction: Option<f64>,
    target_sync: Option<u64>,
    batch_size: Option<usize>,
    buffer_capacity: Option<usize>,
    learning_starts: Option<u64>,
    train_every: Option<u64>,
    hidden: Option<Vec<usize>>,
    loss: Option<String>,
    huber_delta: Option<f64>,
    stability_from: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHamiltonian {
    potential: String,
    stiffness: Option<f64>,
    kinetic: String,
    mass: f64,
    light_speed: Option<f64>,
    damping: f64,
    step: f64,
    dim: usize,
    init_std: Option<f64>,
    integrators: Vec<String>,
}

fn invalid(msg: impl Into<String>) -> BenchError {
    BenchError::Invalid(msg.into())
}

fn unknown(kind: &'static str, name: &str) -> BenchError {
    BenchError::Unknown { kind, name: name.into() }
}

fn check_name(what: &str, name: &str) -> Result<(), BenchError> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(invalid(format!("{what} `{name}` must be non-empty and use only [A-Za-z0-9_.-]")))
    }
}

fn check_seeds(seeds: &[u64]) -> Result<(), BenchError> {
    if seeds.is_empty() {
        return Err(invalid("at least one seed is required"));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = seeds.iter().find(|s| !seen.insert(**s)) {
        return Err(invalid(format!("seed {dup} is listed twice")));
    }
    Ok(())
}

fn positive(name: &str, value: f64) -> Result<f64, BenchError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(format!("{name} must be positive, got {value}")))
    }
}

fn forbid<T>(kind: Kind, section: &str, value: &Option<T>) -> Result<(), BenchError> {
    if value.is_some() {
        return Err(invalid(format!("[{section}] does not apply to kind `{}`", kind.tag())));
    }
    Ok(())
}

pub fn parse(text: &str) -> Result<ExperimentConfig, BenchError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| BenchError::Parse(e.to_string().trim_end().into()))?;
    let kind = Kind::ALL.into_iter().find(|k| k.tag() == raw.kind).ok_or_else(|| unknown("experiment kind", &raw.kind))?;
    check_name("experiment name", &raw.name)?;
    check_seeds(&raw.seeds)?;
    if raw.budget == 0 {
        return Err(invalid("budget must be positive"));
    }

    let experiment = match kind {
        Kind::DeterministicObjective | Kind::StochasticObjective => {
            forbid(kind, "cartpole", &raw.cartpole)?;
            forbid(kind, "hamiltonian", &raw.hamiltonian)?;
            let obj = raw.objective.ok_or_else(|| invalid("missing [objective] section"))?;
            let objective = objective_spec(kind, obj, raw.budget)?;
            let optimizers = optimizer_entries(raw.optimizers, raw.budget)?;
            Experiment::Objective { objective, optimizers }
        }
        Kind::Cartpole => {
            forbid(kind, "objective", &raw.objective)?;
            forbid(kind, "hamiltonian", &raw.hamiltonian)?;
            if raw.budget < MIN_BUDGET {
                return Err(invalid(format!("cartpole budget must be at least {MIN_BUDGET}")));
            }
            let cp = raw.cartpole.ok_or_else(|| invalid("missing [cartpole] section"))?;
            let dqn = dqn_config(&cp)?;
            let updates = raw.budget.saturating_sub(dqn.learning_starts) / dqn.train_every;
            let optimizers = optimizer_entries(raw.optimizers, updates.max(1))?;
            let stability_from = cp.stability_from.unwrap_or_else(|| {
                optimizers
                    .iter()
                    .filter_map(|o| zeta_switch(&o.config))
                    .min()
                    .map_or(0, |k| k as usize)
            });
            Experiment::Cartpole { cartpole: CartpoleSpec { dqn, stability_from }, optimizers }
        }
        Kind::HamiltonianDiagnostics => {
            forbid(kind, "objective", &raw.objective)?;
            forbid(kind, "cartpole", &raw.cartpole)?;
            if !raw.optimizers.is_empty() {
                return Err(invalid("[[optimizer]] does not apply to kind `hamiltonian-diagnostics`"));
            }
            let h = raw.hamiltonian.ok_or_else(|| invalid("missing [hamiltonian] section"))?;
            hamiltonian_experiment(h)?
        }
    };

    Ok(ExperimentConfig { name: raw.name, kind, seeds: raw.seeds, budget: raw.budget, out: raw.out, experiment })
}

/// Step at which RAD1's annealed ζ turns symplectic.
pub fn zeta_switch(cfg: &OptimizerConfig) -> Option<u64> {
    if cfg.algorithm == Algorithm::Rad1 {
        cfg.zeta.switch_step(cfg.beta2)
    } else {
        None
    }
}

fn objective_spec(kind: Kind, raw: RawObjective, budget: u64) -> Result<ObjectiveSpec, BenchError> {
    let name = match raw.name.as_str() {
        "quadratic" => {
            let cond = raw.condition_number.unwrap_or(10.0);
            if !(cond >= 1.0 && cond.is_finite()) {
                return Err(invalid("condition_number must be at least 1"));
            }
            ObjectiveName::Quadratic { condition_number: cond }
        }
        "rosenbrock" => {
            if raw.condition_number.is_some() {
                return Err(invalid("condition_number applies only to the quadratic"));
            }
            if raw.dim < 2 {
                return Err(invalid("rosenbrock needs dim >= 2"));
            }
            ObjectiveName::Rosenbrock
        }
        other => return Err(unknown("objective", other)),
    };
    if raw.dim == 0 {
        return Err(invalid("dim must be positive"));
    }
    let init_std = raw.init_std.unwrap_or(0.0);
    if !(init_std >= 0.0 && init_std.is_finite()) {
        return Err(invalid("init_std must be non-negative"));
    }
    let init = raw.init.unwrap_or(match name {
        ObjectiveName::Quadratic { .. } => 1.0,
        ObjectiveName::Rosenbrock => -1.0,
    });
    if !init.is_finite() {
        return Err(invalid("init must be finite"));
    }

    let noise = match kind {
        Kind::StochasticObjective => {
            let std = raw.noise_std.unwrap_or(1.0);
            if !(std >= 0.0 && std.is_finite()) {
                return Err(invalid("noise_std must be non-negative"));
            }
            let b = raw.batch.unwrap_or(1);
            if b == 0 {
                return Err(invalid("batch must be positive"));
            }
            let batch = match raw.batch_schedule.as_deref().unwrap_or("constant") {
                "constant" => BatchSchedule::Constant(b),
                "linear" => BatchSchedule::Linear(b),
                other => return Err(unknown("batch schedule", other)),
            };
            Some(NoiseSpec { std, batch })
        }
        _ => {
            if raw.noise_std.is_some() || raw.batch.is_some() || raw.batch_schedule.is_some() {
                return Err(invalid("noise settings require kind = \"stochastic-objective\""));
            }
            None
        }
    };

    let slope_window = raw.slope_window.unwrap_or((budget / 10).max(1) as usize);
    if slope_window < 2 || slope_window as u64 > budget {
        return Err(invalid("slope_window must lie in [2, budget]"));
    }
    Ok(ObjectiveSpec { name, dim: raw.dim, init, init_std, noise, slope_window })
}

fn optimizer_entries(raw: Vec<RawOptimizer>, default_horizon: u64) -> Result<Vec<OptimizerEntry>, BenchError> {
    if raw.is_empty() {
        return Err(invalid("at least one [[optimizer]] is required"));
    }
    let mut entries = Vec::with_capacity(raw.len());
    let mut labels = HashSet::new();
    for o in raw {
        let algorithm: Algorithm = o.algorithm.parse().map_err(|_| unknown("algorithm", &o.algorithm))?;
        let label = o.label.unwrap_or_else(|| algorithm.tag().into());
        check_name("optimizer label", &label)?;
        if !labels.insert(label.clone()) {
            return Err(invalid(format!("optimizer label `{label}` is used twice; set distinct `label`s")));
        }
        let zeta = match o.zeta.as_deref() {
            None | Some("constant") => {
                if o.kappa.is_some() || o.horizon.is_some() {
                    return Err(invalid(format!("{label}: kappa and horizon need zeta = \"annealed\"")));
                }
                ZetaSchedule::Constant(o.zeta_epsilon.unwrap_or(1e-16))
            }
            Some("annealed") => {
                if o.zeta_epsilon.is_some() {
                    return Err(invalid(format!("{label}: zeta_epsilon needs zeta = \"constant\"")));
                }
                let kappa = o.kappa.map_or(Ok(rad_core::optim::DEFAULT_KAPPA), |k| positive("kappa", k))?;
                let horizon = o.horizon.unwrap_or(default_horizon);
                if horizon == 0 {
                    return Err(invalid(format!("{label}: horizon must be positive")));
                }
                ZetaSchedule::Annealed { kappa, horizon }
            }
            Some(other) => return Err(unknown("zeta schedule", other)),
        };
        let defaults = OptimizerConfig::new(algorithm, o.lr);
        let config = OptimizerConfig {
            beta1: o.beta1.unwrap_or(defaults.beta1),
            beta2: o.beta2.unwrap_or(defaults.beta2),
            delta: o.delta.unwrap_or(defaults.delta),
            epsilon: o.epsilon.unwrap_or(defaults.epsilon),
            zeta,
            ..defaults
        };
        config.validate().map_err(|e| invalid(format!("{label}: {e}")))?;
        if let ZetaSchedule::Constant(eps) = config.zeta {
            positive("zeta_epsilon", eps)?;
        }
        entries.push(OptimizerEntry { label, config });
    }
    Ok(entries)
}

fn dqn_config(raw: &RawCartpole) -> Result<DqnConfig, BenchError> {
    let mut cfg = DqnConfig::new(OptimizerConfig::new(Algorithm::Adam, 1e-3));
    cfg.gamma = raw.gamma.unwrap_or(cfg.gamma);
    cfg.epsilon_start = raw.epsilon_start.unwrap_or(cfg.epsilon_start);
    cfg.epsilon_end = raw.epsilon_end.unwrap_or(cfg.epsilon_end);
    cfg.epsilon_fraction = raw.epsilon_fraction.unwrap_or(cfg.epsilon_fraction);
    cfg.target_sync = raw.target_sync.unwrap_or(cfg.target_sync);
    cfg.batch_size = raw.batch_size.unwrap_or(cfg.batch_size);
    cfg.buffer_capacity = raw.buffer_capacity.unwrap_or(cfg.buffer_capacity);
    cfg.learning_starts = raw.learning_starts.unwrap_or(cfg.learning_starts);
    cfg.train_every = raw.train_every.unwrap_or(cfg.train_every);
    if let Some(hidden) = &raw.hidden {
        cfg.hidden = hidden.clone();
    }
    cfg.loss = match raw.loss.as_deref().unwrap_or("huber") {
        "huber" => LossSpec::Huber { delta: positive("huber_delta", raw.huber_delta.unwrap_or(1.0))? },
        "mse" => {
            if raw.huber_delta.is_some() {
                return Err(invalid("huber_delta needs loss = \"huber\""));
            }
            LossSpec::Mse
        }
        other => return Err(unknown("loss", other)),
    };
    cfg.validate().map_err(|e| invalid(format!("[cartpole]: {e}")))?;
    cfg.network().map_err(|e| invalid(format!("[cartpole] hidden: {e}")))?;
    Ok(cfg)
}

fn hamiltonian_experiment(raw: RawHamiltonian) -> Result<Experiment, BenchError> {
    let potential = match raw.potential.as_str() {
        "harmonic" => PotentialName::Harmonic { stiffness: positive("stiffness", raw.stiffness.unwrap_or(1.0))? },
        "double-well" => {
            if raw.stiffness.is_some() {
                return Err(invalid("stiffness applies only to the harmonic potential"));
            }
            PotentialName::DoubleWell
        }
        other => return Err(unknown("potential", other)),
    };
    let kinetic = match raw.kinetic.as_str() {
        "classical" => {
            if raw.light_speed.is_some() {
                return Err(invalid("light_speed applies only to relativistic kinetic energy"));
            }
            KineticName::Classical
        }
        "relativistic" => {
            KineticName::Relativistic { light_speed: positive("light_speed", raw.light_speed.unwrap_or(1.0))? }
        }
        other => return Err(unknown("kinetic energy", other)),
    };
    positive("mass", raw.mass)?;
    positive("step", raw.step)?;
    if !(raw.damping >= 0.0 && raw.damping.is_finite()) {
        return Err(invalid("damping must be non-negative"));
    }
    if raw.dim == 0 {
        return Err(invalid("dim must be positive"));
    }
    let init_std = raw.init_std.unwrap_or(1.0);
    if !(init_std >= 0.0 && init_std.is_finite()) {
        return Err(invalid("init_std must be non-negative"));
    }
    if raw.integrators.is_empty() {
        return Err(invalid("at least one integrator is required"));
    }
    let mut integrators = Vec::new();
    for name in &raw.integrators {
        let i = [Integrator::FirstOrder, Integrator::SecondOrder]
            .into_iter()
            .find(|&i| integrator_tag(i) == name)
            .ok_or_else(|| unknown("integrator", name))?;
        if integrators.contains(&i) {
            return Err(invalid(format!("integrator `{name}` is listed twice")));
        }
        integrators.push(i);
    }
    let system = HamiltonianSpec {
        potential,
        kinetic,
        mass: raw.mass,
        damping: raw.damping,
        step: raw.step,
        dim: raw.dim,
        init_std,
    };
    Ok(Experiment::Hamiltonian { system, integrators })
}

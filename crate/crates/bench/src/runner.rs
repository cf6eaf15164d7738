//! Executes experiments and lays out their artifacts.
//!
//! Traces go to `{out}/{name}/{label}_seed{seed}.csv` and one summary per
//! optimizer to `{out}/{name}/{label}_summary.csv`. Every run draws from its
//! own generator seeded with the run's seed, so artifacts do not depend on
//! execution order or on `--parallel`.

use std::fs;
use std::path::{Path, PathBuf};

use rad_core::hamiltonian::HarmonicWell;
use rad_core::objectives::{convergence_slope, make_quadratic, make_rosenbrock, Noise, Objective, Quadratic, Rosenbrock, StochasticObjective, SLOPE_MIN_TRACE};
use rad_core::optim::{self, momentum_hamiltonian, OptError};
use rad_core::rl::{stability_fraction, train_dqn};
use rad_core::trace::delta_from_min;
use rad_core::{HamiltonianSystem, Integrator, KineticEnergy, OptState, PhasePoint, Potential, Rng, Trace, Vector};
use rayon::prelude::*;

use crate::config::{
    CartpoleSpec, Experiment, ExperimentConfig, HamiltonianSpec, KineticName, ObjectiveName,
    ObjectiveSpec, OptimizerEntry, PotentialName,
};
use crate::error::BenchError;
use crate::output::write_trace;
use crate::summary::{SeedResult, Summary};

pub const OBJECTIVE_COLUMNS: [&str; 6] = ["J", "grad_norm_sq", "H", "delta_h", "lr_min", "lr_max"];
pub const HAMILTONIAN_COLUMNS: [&str; 3] = ["H", "delta_h", "area_error"];

/// One finished run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub label: String,
    pub trace: Trace,
    pub result: SeedResult,
}

/// A file to be written, relative to the output root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

pub fn trace_path(name: &str, label: &str, seed: u64) -> PathBuf {
    Path::new(name).join(format!("{label}_seed{seed}.csv"))
}

pub fn summary_path(name: &str, label: &str) -> PathBuf {
    Path::new(name).join(format!("{label}_summary.csv"))
}

/// Metric and extra column names of the summaries an experiment produces.
pub fn summary_columns(experiment: &Experiment) -> (&'static str, &'static [&'static str]) {
    match experiment {
        Experiment::Objective { .. } => ("final_J", &["slope", "final_grad_norm_sq"]),
        Experiment::Cartpole { .. } => ("final_return", &["best_return", "solved", "stability"]),
        Experiment::Hamiltonian { .. } => ("final_H", &["max_area_error", "monotone_fraction"]),
    }
}

/// Run one (label, seed) pair. `label` indexes [`ExperimentConfig::labels`].
pub fn run_one(cfg: &ExperimentConfig, label: usize, seed: u64) -> Result<RunRecord, BenchError> {
    let name = cfg.labels()[label].clone();
    let fail = |reason: String| BenchError::Run { label: name.clone(), seed, reason };
    let (trace, result) = match &cfg.experiment {
        Experiment::Objective { objective, optimizers } => {
            run_objective(objective, &optimizers[label], seed, cfg.budget).map_err(fail)?
        }
        Experiment::Cartpole { cartpole, optimizers } => {
            run_cartpole(cartpole, &optimizers[label], seed, cfg.budget).map_err(fail)?
        }
        Experiment::Hamiltonian { system, integrators } => {
            run_hamiltonian(system, integrators[label], seed, cfg.budget).map_err(fail)?
        }
    };
    Ok(RunRecord { label: name, trace, result })
}

/// All runs of an experiment, ordered by label then seed. `parallel > 1`
/// spreads whole runs over that many threads.
pub fn execute(cfg: &ExperimentConfig, parallel: usize) -> Result<Vec<RunRecord>, BenchError> {
    let jobs: Vec<(usize, u64)> =
        (0..cfg.labels().len()).flat_map(|l| cfg.seeds.iter().map(move |&s| (l, s))).collect();
    if parallel <= 1 {
        return jobs.iter().map(|&(l, s)| run_one(cfg, l, s)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| BenchError::Run { label: "*".into(), seed: 0, reason: e.to_string() })?;
    pool.install(|| jobs.par_iter().map(|&(l, s)| run_one(cfg, l, s)).collect())
}

pub fn summaries(cfg: &ExperimentConfig, records: &[RunRecord]) -> Vec<(String, Summary)> {
    let (metric, extras) = summary_columns(&cfg.experiment);
    cfg.labels()
        .into_iter()
        .map(|label| {
            let mut s = Summary::new(metric, extras);
            s.rows = records.iter().filter(|r| r.label == label).map(|r| r.result.clone()).collect();
            (label, s)
        })
        .collect()
}

fn artifacts(cfg: &ExperimentConfig, records: &[RunRecord]) -> (Vec<Artifact>, Vec<(String, Summary)>) {
    let mut files = Vec::with_capacity(records.len() + cfg.labels().len());
    for r in records {
        let mut bytes = Vec::new();
        write_trace(&mut bytes, &r.trace).expect("writing to memory");
        files.push(Artifact { path: trace_path(&cfg.name, &r.label, r.result.seed), bytes });
    }
    let sums = summaries(cfg, records);
    for (label, s) in &sums {
        files.push(Artifact { path: summary_path(&cfg.name, label), bytes: s.to_bytes() });
    }
    (files, sums)
}

/// Run the experiment and return its files without touching the disk.
pub fn render(cfg: &ExperimentConfig, parallel: usize) -> Result<Vec<Artifact>, BenchError> {
    Ok(artifacts(cfg, &execute(cfg, parallel)?).0)
}

/// Check that `out/name` can be created and written to.
pub fn prepare_output(out: &Path, name: &str) -> Result<PathBuf, BenchError> {
    let dir = out.join(name);
    let err = |source| BenchError::OutputDir { path: dir.clone(), source };
    fs::create_dir_all(&dir).map_err(err)?;
    let probe = dir.join(".radbench-write-check");
    fs::write(&probe, b"").map_err(err)?;
    fs::remove_file(&probe).map_err(err)?;
    Ok(dir)
}

/// Run the experiment and write its artifacts under `out`. The output
/// directory is checked before any run starts.
pub fn run(cfg: &ExperimentConfig, out: &Path, parallel: usize) -> Result<Vec<(String, Summary)>, BenchError> {
    prepare_output(out, &cfg.name)?;
    let (files, sums) = artifacts(cfg, &execute(cfg, parallel)?);
    for f in files {
        let path = out.join(&f.path);
        fs::write(&path, &f.bytes).map_err(|e| BenchError::io(&path, e))?;
    }
    Ok(sums)
}

enum AnyObjective {
    Quadratic(Quadratic),
    Rosenbrock(Rosenbrock),
}

impl Objective for AnyObjective {
    fn dim(&self) -> usize {
        match self {
            Self::Quadratic(o) => o.dim(),
            Self::Rosenbrock(o) => o.dim(),
        }
    }
    fn value(&self, theta: &[f64]) -> f64 {
        match self {
            Self::Quadratic(o) => o.value(theta),
            Self::Rosenbrock(o) => o.value(theta),
        }
    }
    fn grad(&self, theta: &[f64]) -> Vector {
        match self {
            Self::Quadratic(o) => o.grad(theta),
            Self::Rosenbrock(o) => o.grad(theta),
        }
    }
}

/// NaN where the energy is undefined: SGD, `β₁ = 0`, or overflow.
fn hamiltonian_or_nan(cfg: &optim::OptimizerConfig, state: &OptState, j: f64) -> f64 {
    momentum_hamiltonian(cfg, state, j).unwrap_or(f64::NAN)
}

fn run_objective(
    spec: &ObjectiveSpec,
    opt: &OptimizerEntry,
    seed: u64,
    budget: u64,
) -> Result<(Trace, SeedResult), String> {
    let base = match spec.name {
        ObjectiveName::Quadratic { condition_number } => {
            AnyObjective::Quadratic(make_quadratic(spec.dim, condition_number).map_err(|e| e.to_string())?)
        }
        ObjectiveName::Rosenbrock => AnyObjective::Rosenbrock(make_rosenbrock(spec.dim).map_err(|e| e.to_string())?),
    };
    let (noise, batch) = match spec.noise {
        Some(n) => (Vector::filled(spec.dim, n.std), n.batch),
        None => (Vector::zeros(spec.dim), rad_core::objectives::BatchSchedule::Constant(1)),
    };
    let stochastic = spec.noise.is_some();
    let obj = StochasticObjective::new(base, Noise::Gaussian(noise), batch).map_err(|e| e.to_string())?;

    let mut rng = Rng::new(seed);
    let cfg = &opt.config;
    let mut state = OptState::new(rng.gaussian(spec.dim, spec.init, spec.init_std));
    let mut trace = Trace::new(&OBJECTIVE_COLUMNS);
    let mut diverged = false;
    for k in 0..=budget {
        let j = obj.value(state.theta());
        let full = obj.full_grad(state.theta());
        let gnsq = full.norm_sq();
        let h = hamiltonian_or_nan(cfg, &state, j);
        if !(j.is_finite() && gnsq.is_finite()) {
            diverged = true;
        }
        if k == budget || diverged {
            trace.push(k, vec![j, gnsq, h, f64::NAN, f64::NAN, f64::NAN]).map_err(|e| e.to_string())?;
            break;
        }
        let g = if stochastic { obj.minibatch_grad(state.theta(), k, &mut rng) } else { full };
        let (lo, hi, next) = match optim::step_with_rates(cfg, &state, &g) {
            Ok(out) => {
                let lo = out.rates.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = out.rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi, Some(out.state))
            }
            Err(OptError::NonFinite | OptError::NonFiniteGradient(_)) => (f64::NAN, f64::NAN, None),
            Err(e) => return Err(e.to_string()),
        };
        trace.push(k, vec![j, gnsq, h, f64::NAN, lo, hi]).map_err(|e| e.to_string())?;
        match next {
            Some(s) => state = s,
            None => {
                diverged = true;
                break;
            }
        }
    }
    let hs = trace.column("H").map_err(|e| e.to_string())?;
    trace.set_column("delta_h", &delta_from_min(&hs)).map_err(|e| e.to_string())?;

    let gn = trace.column("grad_norm_sq").map_err(|e| e.to_string())?;
    let slope = if !diverged && gn.len() >= SLOPE_MIN_TRACE && spec.slope_window <= gn.len() {
        convergence_slope(&gn, spec.slope_window).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let last = trace.rows().last().expect("at least one row");
    let result = SeedResult { seed, diverged, metric: last.values[0], extras: vec![slope, last.values[1]] };
    Ok((trace, result))
}

fn run_cartpole(spec: &CartpoleSpec, opt: &OptimizerEntry, seed: u64, budget: u64) -> Result<(Trace, SeedResult), String> {
    let mut dqn = spec.dqn.clone();
    dqn.optimizer = opt.config;
    let out = train_dqn(&dqn, budget, &mut Rng::new(seed)).map_err(|e| e.to_string())?;
    let h = out.trace.column("H").map_err(|e| e.to_string())?;
    let stability = h.get(spec.stability_from..).and_then(|w| stability_fraction(w).ok()).unwrap_or(f64::NAN);
    let result = SeedResult {
        seed,
        diverged: out.diverged(),
        metric: out.final_mean_return.unwrap_or(f64::NAN),
        extras: vec![
            out.best_mean_return.unwrap_or(f64::NAN),
            if out.solved_at.is_some() { 1.0 } else { 0.0 },
            stability,
        ],
    };
    Ok((out.trace, result))
}

/// `U(q) = Σ q⁴/4 - q²/2`, minima at `±1`.
struct DoubleWell;

impl Potential for DoubleWell {
    fn value(&self, q: &[f64]) -> f64 {
        q.iter().map(|x| 0.25 * x * x * x * x - 0.5 * x * x).sum()
    }
    fn gradient(&self, q: &[f64]) -> Vector {
        q.iter().map(|x| x * x * x - x).collect()
    }
}

fn run_hamiltonian(spec: &HamiltonianSpec, integrator: Integrator, seed: u64, budget: u64) -> Result<(Trace, SeedResult), String> {
    let kinetic = match spec.kinetic {
        KineticName::Classical => KineticEnergy::classical(spec.mass),
        KineticName::Relativistic { light_speed } => KineticEnergy::relativistic(spec.mass, light_speed),
    }
    .map_err(|e| e.to_string())?;
    match spec.potential {
        PotentialName::Harmonic { stiffness } => {
            let sys = HamiltonianSystem::new(HarmonicWell { stiffness }, kinetic, spec.damping).map_err(|e| e.to_string())?;
            simulate(&sys, spec, integrator, seed, budget)
        }
        PotentialName::DoubleWell => {
            let sys = HamiltonianSystem::new(DoubleWell, kinetic, spec.damping).map_err(|e| e.to_string())?;
            simulate(&sys, spec, integrator, seed, budget)
        }
    }
}

fn simulate<P: Potential>(
    sys: &HamiltonianSystem<P>,
    spec: &HamiltonianSpec,
    integrator: Integrator,
    seed: u64,
    budget: u64,
) -> Result<(Trace, SeedResult), String> {
    let mut rng = Rng::new(seed);
    let q = rng.gaussian(spec.dim, 0.0, spec.init_std);
    let p = rng.gaussian(spec.dim, 0.0, spec.init_std);
    let mut z = PhasePoint::new(q, p).map_err(|e| e.to_string())?;
    let expected = (-spec.damping * spec.step).exp();
    let mut trace = Trace::new(&HAMILTONIAN_COLUMNS);
    let mut diverged = false;
    for k in 0..=budget {
        let h = sys.hamiltonian_value(&z).unwrap_or(f64::NAN);
        let area = if spec.dim == 1 {
            sys.phase_area_contraction(integrator, &z, spec.step).map_or(f64::NAN, |d| d - expected)
        } else {
            f64::NAN
        };
        trace.push(k, vec![h, f64::NAN, area]).map_err(|e| e.to_string())?;
        if !h.is_finite() {
            diverged = true;
            break;
        }
        if k < budget {
            match sys.step(integrator, &z, spec.step) {
                Ok(next) => z = next,
                Err(_) => {
                    diverged = true;
                    break;
                }
            }
        }
    }
    let hs = trace.column("H").map_err(|e| e.to_string())?;
    trace.set_column("delta_h", &delta_from_min(&hs)).map_err(|e| e.to_string())?;
    let area = trace.column("area_error").map_err(|e| e.to_string())?;
    let max_area = if spec.dim == 1 { area.iter().map(|a| a.abs()).fold(0.0, f64::max) } else { f64::NAN };
    let monotone = stability_fraction(&hs).unwrap_or(f64::NAN);
    let result = SeedResult { seed, diverged, metric: *hs.last().expect("non-empty"), extras: vec![max_area, monotone] };
    Ok((trace, result))
}

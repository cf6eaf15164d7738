//! CartPole, a replay buffer and a DQN learner with a hard-synced target
//! network, for comparing optimizers on a small control task.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::nn::{LossSpec, Mlp, NnError};
use crate::optim::{self, momentum_hamiltonian, Algorithm, OptError, OptState, OptimizerConfig};
use crate::rng::Rng;
use crate::trace::{delta_from_min, Trace, TraceError};
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RlError {
    #[error("step called on a finished episode")]
    EpisodeDone,
    #[error("invalid action {0}")]
    InvalidAction(usize),
    #[error("invalid config: {0}")]
    Config(&'static str),
    #[error("training budget {0} is below the minimum of {MIN_BUDGET}")]
    Budget(u64),
    #[error("no update steps in the measured window")]
    EmptyWindow,
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Opt(#[from] OptError),
}

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const POLE_HALF_LENGTH: f64 = 0.5;
pub const FORCE: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_LIMIT: f64 = 2.4;
pub const ANGLE_LIMIT: f64 = 12.0 * 2.0 * core::f64::consts::PI / 360.0;
pub const MAX_EPISODE_STEPS: u32 = 500;

/// `(x, ẋ, φ, φ̇)`
pub type CartState = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvStep {
    pub state: CartState,
    pub reward: f64,
    /// Pole fell or cart left the track.
    pub terminal: bool,
    /// Episode hit the step limit without terminating.
    pub truncated: bool,
}

impl EnvStep {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Cart-pole balancing with the usual benchmark constants, integrated with
/// semi-implicit Euler.
#[derive(Debug, Clone, PartialEq)]
pub struct CartPole {
    state: CartState,
    steps: u32,
    done: bool,
}

impl CartPole {
    /// Start state with every component uniform in `[-0.05, 0.05]`.
    pub fn reset(rng: &mut Rng) -> Self {
        let mut state = [0.0; 4];
        for s in &mut state {
            *s = rng.uniform_in(-0.05, 0.05);
        }
        Self::with_state(state)
    }

    pub fn with_state(state: CartState) -> Self {
        Self { state, steps: 0, done: false }
    }

    pub fn state(&self) -> CartState {
        self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Push left (`0`) or right (`1`). Reward is 1 for every step taken,
    /// including the one that ends the episode.
    pub fn step(&mut self, action: usize) -> Result<EnvStep, RlError> {
        if self.done {
            return Err(RlError::EpisodeDone);
        }
        let force = match action {
            0 => -FORCE,
            1 => FORCE,
            a => return Err(RlError::InvalidAction(a)),
        };
        let [x, x_dot, phi, phi_dot] = self.state;
        let total_mass = CART_MASS + POLE_MASS;
        let pole_moment = POLE_MASS * POLE_HALF_LENGTH;
        let (sin, cos) = (libm::sin(phi), libm::cos(phi));
        let temp = (force + pole_moment * phi_dot * phi_dot * sin) / total_mass;
        let phi_acc =
            (GRAVITY * sin - cos * temp) / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total_mass));
        let x_acc = temp - pole_moment * phi_acc * cos / total_mass;

        let x_dot = x_dot + TAU * x_acc;
        let x = x + TAU * x_dot;
        let phi_dot = phi_dot + TAU * phi_acc;
        let phi = phi + TAU * phi_dot;
        self.state = [x, x_dot, phi, phi_dot];
        self.steps += 1;

        let terminal = x.abs() > X_LIMIT || phi.abs() > ANGLE_LIMIT;
        let truncated = !terminal && self.steps >= MAX_EPISODE_STEPS;
        self.done = terminal || truncated;
        Ok(EnvStep { state: self.state, reward: 1.0, terminal, truncated })
    }
}

/// Fixed-capacity FIFO store with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    next: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self { items: Vec::with_capacity(capacity.min(1 << 16)), capacity, next: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Append, overwriting the oldest entry when full.
    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, index: usize) -> Option<&T> {
        self.items.get(index)
    }

    /// Indices drawn uniformly with replacement. Empty if the buffer is.
    pub fn sample_indices(&self, count: usize, rng: &mut Rng) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..count).map(|_| rng.below(self.items.len())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: CartState,
    pub action: usize,
    pub reward: f64,
    pub next_state: CartState,
    /// Only true terminations; truncated episodes still bootstrap.
    pub terminal: bool,
}

/// DQN settings. Defaults follow common CartPole practice with a 4-64-64-2
/// network.
#[derive(Debug, Clone, PartialEq)]
pub struct DqnConfig {
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the budget over which ε decays linearly.
    pub epsilon_fraction: f64,
    pub target_sync: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Environment steps collected before the first update.
    pub learning_starts: u64,
    /// Environment steps between updates.
    pub train_every: u64,
    pub hidden: Vec<usize>,
    pub loss: LossSpec,
    pub optimizer: OptimizerConfig,
}

impl DqnConfig {
    pub fn new(optimizer: OptimizerConfig) -> Self {
        Self {
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_fraction: 0.1,
            target_sync: 2_000,
            batch_size: 64,
            buffer_capacity: 50_000,
            learning_starts: 1_000,
            train_every: 1,
            hidden: vec![64, 64],
            loss: LossSpec::Huber { delta: 1.0 },
            optimizer,
        }
    }

    pub fn validate(&self) -> Result<(), RlError> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(RlError::Config("gamma must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return Err(RlError::Config("epsilon must lie in [0, 1]"));
        }
        if self.epsilon_end > self.epsilon_start {
            return Err(RlError::Config("epsilon must not increase"));
        }
        if !(self.epsilon_fraction > 0.0 && self.epsilon_fraction <= 1.0) {
            return Err(RlError::Config("epsilon_fraction must lie in (0, 1]"));
        }
        if self.target_sync == 0 || self.train_every == 0 {
            return Err(RlError::Config("target_sync and train_every must be at least 1"));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err(RlError::Config("batch_size and buffer_capacity must be positive"));
        }
        self.optimizer.validate()?;
        Ok(())
    }

    /// ε at environment step `t` of a run with `budget` steps.
    pub fn epsilon(&self, t: u64, budget: u64) -> f64 {
        let span = (self.epsilon_fraction * budget as f64).max(1.0);
        let frac = t as f64 / span;
        if frac >= 1.0 {
            return self.epsilon_end;
        }
        self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)
    }

    pub fn network(&self) -> Result<Mlp, NnError> {
        let mut sizes = vec![4];
        sizes.extend_from_slice(&self.hidden);
        sizes.push(2);
        Mlp::new(&sizes)
    }
}

pub const MIN_BUDGET: u64 = 10_000;
/// Q-values beyond this magnitude count as divergence.
pub const Q_LIMIT: f64 = 1e6;
pub const RETURN_WINDOW: usize = 100;

pub const DQN_COLUMNS: [&str; 6] = ["episode", "return", "loss", "grad_norm_sq", "H", "delta_h"];

#[derive(Debug, Clone, PartialEq)]
pub struct DqnOutcome {
    /// One row per update, keyed by environment step. `return` is the
    /// most recent finished episode's return (NaN before the first), `H`
    /// the optimizer-state energy with the mini-batch TD loss as potential
    /// (NaN for SGD), `delta_h = H - min H`.
    pub trace: Trace,
    pub episode_returns: Vec<f64>,
    /// Set when training stopped on a non-finite loss or exploding Q-values.
    pub divergence: Option<String>,
    /// Best and last mean over 100 consecutive finished episodes.
    pub best_mean_return: Option<f64>,
    pub final_mean_return: Option<f64>,
    /// Environment step at which the 100-episode mean first reached 195.
    pub solved_at: Option<u64>,
    pub env_steps: u64,
    pub updates: u64,
}

impl DqnOutcome {
    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }
}

pub const SOLVED_RETURN: f64 = 195.0;

/// Train a Q-network for `budget` environment steps.
pub fn train_dqn(cfg: &DqnConfig, budget: u64, rng: &mut Rng) -> Result<DqnOutcome, RlError> {
    let mut trainer = DqnTrainer::new(cfg, budget, rng)?;
    while !trainer.is_finished() {
        trainer.advance(rng)?;
    }
    trainer.finish()
}

/// Step-by-step form of [`train_dqn`].
#[derive(Debug, Clone)]
pub struct DqnTrainer {
    cfg: DqnConfig,
    budget: u64,
    net: Mlp,
    opt: OptState,
    target: Vector,
    buffer: ReplayBuffer<Transition>,
    trace: Trace,
    returns: Vec<f64>,
    window_sum: f64,
    best: Option<f64>,
    solved_at: Option<u64>,
    divergence: Option<String>,
    updates: u64,
    env: CartPole,
    episode_return: f64,
    t: u64,
}

impl DqnTrainer {
    /// Initializes the network and the first episode from `rng`.
    pub fn new(cfg: &DqnConfig, budget: u64, rng: &mut Rng) -> Result<Self, RlError> {
        cfg.validate()?;
        if budget < MIN_BUDGET {
            return Err(RlError::Budget(budget));
        }
        let net = cfg.network()?;
        let opt = OptState::new(net.init(rng));
        let target = opt.theta().clone();
        let env = CartPole::reset(rng);
        Ok(Self {
            cfg: cfg.clone(),
            budget,
            net,
            opt,
            target,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            trace: Trace::new(&DQN_COLUMNS),
            returns: Vec::new(),
            window_sum: 0.0,
            best: None,
            solved_at: None,
            divergence: None,
            updates: 0,
            env,
            episode_return: 0.0,
            t: 0,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.budget || self.divergence.is_some()
    }

    pub fn env_steps(&self) -> u64 {
        self.t
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn online_params(&self) -> &Vector {
        self.opt.theta()
    }

    pub fn target_params(&self) -> &Vector {
        &self.target
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }

    /// One environment step, followed by an update when one is due.
    pub fn advance(&mut self, rng: &mut Rng) -> Result<(), RlError> {
        if self.is_finished() {
            return Ok(());
        }
        let s = self.env.state();
        let action = if rng.uniform() < self.cfg.epsilon(self.t, self.budget) {
            rng.below(2)
        } else {
            greedy(&self.net.forward(self.opt.theta(), &s)?)
        };
        let out = self.env.step(action)?;
        self.t += 1;
        let t = self.t;
        self.episode_return += out.reward;
        self.buffer.push(Transition {
            state: s,
            action,
            reward: out.reward,
            next_state: out.state,
            terminal: out.terminal,
        });
        if out.done() {
            self.finish_episode();
            self.env = CartPole::reset(rng);
        }
        if t < self.cfg.learning_starts || !t.is_multiple_of(self.cfg.train_every) {
            return Ok(());
        }
        self.update(rng)
    }

    fn finish_episode(&mut self) {
        let ret = self.episode_return;
        self.returns.push(ret);
        self.window_sum += ret;
        if self.returns.len() > RETURN_WINDOW {
            self.window_sum -= self.returns[self.returns.len() - 1 - RETURN_WINDOW];
        }
        if self.returns.len() >= RETURN_WINDOW {
            let mean = self.window_sum / RETURN_WINDOW as f64;
            self.best = Some(self.best.map_or(mean, |b: f64| b.max(mean)));
            if self.solved_at.is_none() && mean >= SOLVED_RETURN {
                self.solved_at = Some(self.t);
            }
        }
        self.episode_return = 0.0;
    }

    fn update(&mut self, rng: &mut Rng) -> Result<(), RlError> {
        let cfg = &self.cfg;
        let idx = self.buffer.sample_indices(cfg.batch_size, rng);
        let batch: Vec<&Transition> = idx.iter().map(|&i| self.buffer.get(i).unwrap()).collect();
        let mut targets = Vec::with_capacity(batch.len());
        for tr in &batch {
            let bootstrap = if tr.terminal {
                0.0
            } else {
                let q = self.net.forward(&self.target, &tr.next_state)?;
                q[0].max(q[1])
            };
            targets.push(tr.reward + cfg.gamma * bootstrap);
        }
        let inputs: Vec<&[f64]> = batch.iter().map(|tr| tr.state.as_slice()).collect();
        let mut q_max: f64 = 0.0;
        let (loss, grad) = self.net.backward_with(self.opt.theta(), &inputs, |i, q, d_q| {
            q_max = q_max.max(q[0].abs()).max(q[1].abs());
            let a = batch[i].action;
            let (l, d) = cfg.loss.eval(q[a] - targets[i]);
            d_q[a] = d;
            l
        })?;
        if !loss.is_finite() || !grad.is_finite() {
            self.divergence = Some("non-finite TD loss".to_string());
            return Ok(());
        }
        if !(q_max <= Q_LIMIT) {
            self.divergence = Some("Q-value magnitude above 1e6".to_string());
            return Ok(());
        }
        let h = match cfg.optimizer.algorithm {
            Algorithm::Sgd => f64::NAN,
            _ => momentum_hamiltonian(&cfg.optimizer, &self.opt, loss)?,
        };
        let last_return = self.returns.last().copied().unwrap_or(f64::NAN);
        let t = self.t;
        self.trace.push(t, vec![self.returns.len() as f64, last_return, loss, grad.norm_sq(), h, 0.0])?;
        self.opt = match optim::step(&cfg.optimizer, &self.opt, &grad) {
            Ok(next) => next,
            Err(OptError::NonFinite) => {
                self.divergence = Some("non-finite parameters".to_string());
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        self.updates += 1;
        if self.updates.is_multiple_of(cfg.target_sync) {
            self.target = self.opt.theta().clone();
        }
        Ok(())
    }

    /// Fill in `delta_h` and summarize.
    pub fn finish(mut self) -> Result<DqnOutcome, RlError> {
        let h = self.trace.column("H")?;
        let delta = if !h.is_empty() && h.iter().all(|v| v.is_finite()) {
            delta_from_min(&h)
        } else {
            vec![f64::NAN; h.len()]
        };
        self.trace.set_column("delta_h", &delta)?;
        let final_mean = (self.returns.len() >= RETURN_WINDOW).then(|| self.window_sum / RETURN_WINDOW as f64);
        Ok(DqnOutcome {
            trace: self.trace,
            episode_returns: self.returns,
            divergence: self.divergence,
            best_mean_return: self.best,
            final_mean_return: final_mean,
            solved_at: self.solved_at,
            env_steps: self.t,
            updates: self.updates,
        })
    }
}

fn greedy(q: &[f64]) -> usize {
    if q[1] > q[0] {
        1
    } else {
        0
    }
}

/// Fraction of consecutive pairs with `H_{k+1} ≤ H_k + 1e-9`.
pub fn stability_fraction(h: &[f64]) -> Result<f64, RlError> {
    if h.len() < 2 {
        return Err(RlError::EmptyWindow);
    }
    let ok = h.windows(2).filter(|w| w[1] <= w[0] + 1e-9).count();
    Ok(ok as f64 / (h.len() - 1) as f64)
}

/// [`stability_fraction`] of the trace's `H` column over rows whose step is
/// at least `from_step`.
pub fn stability_metric(trace: &Trace, from_step: u64) -> Result<f64, RlError> {
    let col = trace.column_index("H")?;
    let h: Vec<f64> = trace.rows().iter().filter(|r| r.step >= from_step).map(|r| r.values[col]).collect();
    stability_fraction(&h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_actions_survive() {
        let mut env = CartPole::with_state([0.0; 4]);
        for i in 0..10 {
            assert!(!env.step(i % 2).unwrap().done());
        }
    }

    #[test]
    fn tilted_pole_terminates_immediately() {
        let mut env = CartPole::with_state([0.0, 0.0, ANGLE_LIMIT + 1e-3, 0.0]);
        let out = env.step(0).unwrap();
        assert!(out.terminal);
        assert_eq!(env.step(0), Err(RlError::EpisodeDone));
    }

    #[test]
    fn truncates_at_step_limit() {
        let mut env = CartPole::with_state([0.0; 4]);
        // keep it upright by a simple angle-feedback controller
        for i in 0..MAX_EPISODE_STEPS {
            let s = env.state();
            let out = env.step(usize::from(s[2] + 0.5 * s[3] > 0.0)).unwrap();
            assert!(!out.terminal, "fell at {i}");
            assert_eq!(out.truncated, i + 1 == MAX_EPISODE_STEPS);
        }
    }

    #[test]
    fn same_seed_same_episode() {
        let run = || {
            let mut rng = Rng::new(4);
            let mut env = CartPole::reset(&mut rng);
            let mut states = Vec::new();
            while !env.is_done() {
                states.push(env.step(rng.below(2)).unwrap().state);
            }
            states
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn replay_buffer_is_fifo() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(i);
        }
        assert_eq!(b.len(), 3);
        let mut held: Vec<i32> = (0..3).map(|i| *b.get(i).unwrap()).collect();
        held.sort();
        assert_eq!(held, vec![2, 3, 4]);
        let mut rng = Rng::new(0);
        assert!(b.sample_indices(100, &mut rng).iter().all(|&i| i < 3));
    }

    #[test]
    fn epsilon_schedule() {
        let cfg = DqnConfig::new(OptimizerConfig::new(Algorithm::Rad1, 5e-4));
        assert_eq!(cfg.epsilon(0, 10_000), 1.0);
        assert!((cfg.epsilon(500, 10_000) - 0.525).abs() < 1e-12);
        assert_eq!(cfg.epsilon(1_000, 10_000), 0.05);
        assert_eq!(cfg.epsilon(9_999, 10_000), 0.05);
    }

    #[test]
    fn stability_fraction_examples() {
        assert_eq!(stability_fraction(&[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap(), 1.0);
        assert_eq!(stability_fraction(&[1.0, 2.0, 1.0, 2.0, 1.0]).unwrap(), 0.5);
        assert_eq!(stability_fraction(&[1.0]), Err(RlError::EmptyWindow));
        let t = Trace::new(&["step", "loss"]);
        assert!(matches!(stability_metric(&t, 0), Err(RlError::Trace(TraceError::MissingColumn(_)))));
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = DqnConfig::new(OptimizerConfig::new(Algorithm::Rad1, 5e-4));
        cfg.gamma = 1.0;
        assert!(cfg.validate().is_err());
        cfg.gamma = 0.99;
        cfg.target_sync = 0;
        assert!(cfg.validate().is_err());
        let cfg = DqnConfig::new(OptimizerConfig::new(Algorithm::Rad1, 5e-4));
        assert_eq!(train_dqn(&cfg, 100, &mut Rng::new(0)).unwrap_err(), RlError::Budget(100));
    }
}

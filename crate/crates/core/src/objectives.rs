//! Test objectives, stochastic gradient oracles and convergence diagnostics.

use alloc::vec::Vec;

use crate::rng::Rng;
use crate::vector::{check_len, NumError, Vector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObjectiveError {
    #[error("invalid argument {name} = {value}")]
    InvalidArgument { name: &'static str, value: f64 },
    #[error("trace has {len} entries, at least {min} required")]
    ShortTrace { len: usize, min: usize },
    #[error("trace is identically zero")]
    DegenerateTrace,
    #[error(transparent)]
    Num(#[from] NumError),
}

/// A differentiable scalar objective `J(θ)`.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, theta: &[f64]) -> f64;
    fn grad(&self, theta: &[f64]) -> Vector;

    /// Smoothness constant `L`, if known.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// A minimizer, if known.
    fn optimum(&self) -> Option<Vector> {
        None
    }
}

impl<O: Objective + ?Sized> Objective for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, theta: &[f64]) -> f64 {
        (**self).value(theta)
    }
    fn grad(&self, theta: &[f64]) -> Vector {
        (**self).grad(theta)
    }
    fn smoothness(&self) -> Option<f64> {
        (**self).smoothness()
    }
    fn optimum(&self) -> Option<Vector> {
        (**self).optimum()
    }
}

/// `J(θ) = ½ θᵀ D θ` with diagonal `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    eigenvalues: Vector,
}

impl Quadratic {
    pub fn from_eigenvalues(eigenvalues: impl Into<Vector>) -> Result<Self, ObjectiveError> {
        let eigenvalues = eigenvalues.into();
        if let Some(&bad) = eigenvalues.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
            return Err(ObjectiveError::InvalidArgument { name: "eigenvalue", value: bad });
        }
        if eigenvalues.is_empty() {
            return Err(ObjectiveError::InvalidArgument { name: "n", value: 0.0 });
        }
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &Vector {
        &self.eigenvalues
    }
}

/// Quadratic with eigenvalues log-spaced in `[1, condition_number]`.
pub fn make_quadratic(n: usize, condition_number: f64) -> Result<Quadratic, ObjectiveError> {
    if n == 0 {
        return Err(ObjectiveError::InvalidArgument { name: "n", value: 0.0 });
    }
    if !(condition_number >= 1.0 && condition_number.is_finite()) {
        return Err(ObjectiveError::InvalidArgument { name: "condition_number", value: condition_number });
    }
    // The last eigenvalue is set exactly so that L = condition_number. A
    // one-dimensional quadratic has the single eigenvalue condition_number.
    let eig = (0..n).map(|i| {
        if i + 1 == n {
            condition_number
        } else {
            libm::pow(condition_number, i as f64 / (n - 1) as f64)
        }
    });
    Quadratic::from_eigenvalues(eig.collect::<Vector>())
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        0.5 * self.eigenvalues.iter().zip(theta).map(|(d, t)| d * t * t).sum::<f64>()
    }

    fn grad(&self, theta: &[f64]) -> Vector {
        self.eigenvalues.iter().zip(theta).map(|(d, t)| d * t).collect()
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.eigenvalues.max_abs())
    }

    fn optimum(&self) -> Option<Vector> {
        Some(Vector::zeros(self.dim()))
    }
}

/// `J(θ) = Σ_{i<n-1} [100 (θ_{i+1} - θ_i²)² + (1 - θ_i)²]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rosenbrock {
    n: usize,
}

pub fn make_rosenbrock(n: usize) -> Result<Rosenbrock, ObjectiveError> {
    if n < 2 {
        return Err(ObjectiveError::InvalidArgument { name: "n", value: n as f64 });
    }
    Ok(Rosenbrock { n })
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, theta: &[f64]) -> f64 {
        theta
            .windows(2)
            .map(|w| {
                let a = w[1] - w[0] * w[0];
                let b = 1.0 - w[0];
                100.0 * a * a + b * b
            })
            .sum()
    }

    fn grad(&self, theta: &[f64]) -> Vector {
        let mut g = alloc::vec![0.0; theta.len()];
        for i in 0..theta.len().saturating_sub(1) {
            let a = theta[i + 1] - theta[i] * theta[i];
            g[i] += -400.0 * theta[i] * a - 2.0 * (1.0 - theta[i]);
            g[i + 1] += 200.0 * a;
        }
        g.into()
    }

    fn optimum(&self) -> Option<Vector> {
        Some(Vector::filled(self.n, 1.0))
    }
}

/// Mini-batch size per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSchedule {
    /// `B_k = B`
    Constant(u64),
    /// `B_k = B (k + 1)`
    Linear(u64),
}

impl BatchSchedule {
    pub fn size(&self, k: u64) -> u64 {
        match *self {
            BatchSchedule::Constant(b) => b,
            BatchSchedule::Linear(b) => b.saturating_mul(k.saturating_add(1)),
        }
    }
}

/// Source of gradient noise.
#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    /// Each sample gradient is `∇J(θ) + ξ` with `ξ_i ~ N(0, σ_i²)`.
    Gaussian(Vector),
    /// A finite dataset: sample `j` has loss `J(θ) + d_jᵀ θ`, so its gradient
    /// is `∇J(θ) + d_j`. The objective is the dataset mean.
    Dataset(Vec<Vector>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticObjective<O> {
    base: O,
    noise: Noise,
    batch: BatchSchedule,
    offset_mean: Vector,
}

impl<O: Objective> StochasticObjective<O> {
    pub fn new(base: O, noise: Noise, batch: BatchSchedule) -> Result<Self, ObjectiveError> {
        let n = base.dim();
        let offset_mean = match &noise {
            Noise::Gaussian(sigma) => {
                check_len(n, sigma.len())?;
                if let Some(&s) = sigma.iter().find(|&&s| !(s >= 0.0 && s.is_finite())) {
                    return Err(ObjectiveError::InvalidArgument { name: "sigma", value: s });
                }
                Vector::zeros(n)
            }
            Noise::Dataset(samples) => {
                if samples.is_empty() {
                    return Err(ObjectiveError::InvalidArgument { name: "dataset_size", value: 0.0 });
                }
                let mut mean = alloc::vec![0.0; n];
                for s in samples {
                    check_len(n, s.len())?;
                    for (m, d) in mean.iter_mut().zip(s.iter()) {
                        *m += d / samples.len() as f64;
                    }
                }
                mean.into()
            }
        };
        if batch.size(0) == 0 {
            return Err(ObjectiveError::InvalidArgument { name: "batch", value: 0.0 });
        }
        Ok(Self { base, noise, batch, offset_mean })
    }

    pub fn base(&self) -> &O {
        &self.base
    }

    pub fn batch(&self) -> BatchSchedule {
        self.batch
    }

    pub fn with_batch(mut self, batch: BatchSchedule) -> Self {
        self.batch = batch;
        self
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Full objective (the dataset mean in dataset mode).
    pub fn value(&self, theta: &[f64]) -> f64 {
        self.base.value(theta) + self.offset_mean.iter().zip(theta).map(|(d, t)| d * t).sum::<f64>()
    }

    /// Full gradient `∇J(θ)`.
    pub fn full_grad(&self, theta: &[f64]) -> Vector {
        let g = self.base.grad(theta);
        g.iter().zip(self.offset_mean.iter()).map(|(g, d)| g + d).collect()
    }

    /// Per-coordinate variance `σ_i²` of a single-sample gradient.
    pub fn coordinate_variance(&self) -> Vector {
        match &self.noise {
            Noise::Gaussian(sigma) => sigma.iter().map(|s| s * s).collect(),
            Noise::Dataset(samples) => {
                let count = samples.len() as f64;
                (0..self.dim())
                    .map(|i| {
                        let m = self.offset_mean[i];
                        samples.iter().map(|s| (s[i] - m) * (s[i] - m)).sum::<f64>() / count
                    })
                    .collect()
            }
        }
    }

    /// Mean of `B_k` sample gradients at `θ`.
    ///
    /// In Gaussian mode the mean of `B` independent `N(0, σ²)` draws is drawn
    /// directly as one `N(0, σ²/B)` variate per coordinate, so the cost does
    /// not grow with the batch. Dataset mode samples indices with
    /// replacement.
    pub fn minibatch_grad(&self, theta: &[f64], k: u64, rng: &mut Rng) -> Vector {
        let b = self.batch.size(k);
        let g = self.base.grad(theta);
        match &self.noise {
            Noise::Gaussian(sigma) => {
                let scale = 1.0 / libm::sqrt(b as f64);
                g.iter()
                    .zip(sigma.iter())
                    .map(|(&g, &s)| if s == 0.0 { g } else { g + s * scale * rng.standard_normal() })
                    .collect()
            }
            Noise::Dataset(samples) => {
                let mut acc = alloc::vec![0.0; g.len()];
                for _ in 0..b {
                    let s = &samples[rng.below(samples.len())];
                    for (a, d) in acc.iter_mut().zip(s.iter()) {
                        *a += d;
                    }
                }
                g.iter().zip(acc).map(|(g, a)| g + a / b as f64).collect()
            }
        }
    }
}

/// One coordinate of a second-moment check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    /// Monte-Carlo estimate of `E[g_i² | θ]`.
    pub estimate: f64,
    pub std_error: f64,
    /// `σ_i²/B_k + [∇J(θ)]_i²`
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondMomentReport {
    pub batch: u64,
    pub coords: Vec<MomentCheck>,
}

impl SecondMomentReport {
    pub fn holds(&self) -> bool {
        self.coords.iter().all(|c| c.holds)
    }
}

pub const SECOND_MOMENT_MIN_TRIALS: usize = 10_000;

/// Monte-Carlo check of `E[g_{k,i}² | θ] ≤ σ_i²/B_k + [∇J(θ)]_i²`, allowing
/// three standard errors.
pub fn verify_second_moment_bound<O: Objective>(
    sobj: &StochasticObjective<O>,
    theta: &[f64],
    k: u64,
    trials: usize,
    rng: &mut Rng,
) -> Result<SecondMomentReport, ObjectiveError> {
    if trials < SECOND_MOMENT_MIN_TRIALS {
        return Err(ObjectiveError::InvalidArgument { name: "trials", value: trials as f64 });
    }
    check_len(sobj.dim(), theta.len())?;
    let n = sobj.dim();
    let mut sum = alloc::vec![0.0; n];
    let mut sum_sq = alloc::vec![0.0; n];
    for _ in 0..trials {
        let g = sobj.minibatch_grad(theta, k, rng);
        for i in 0..n {
            let s = g[i] * g[i];
            sum[i] += s;
            sum_sq[i] += s * s;
        }
    }
    let batch = sobj.batch().size(k);
    let var = sobj.coordinate_variance();
    let grad = sobj.full_grad(theta);
    let t = trials as f64;
    let coords = (0..n)
        .map(|i| {
            let estimate = sum[i] / t;
            let sample_var = ((sum_sq[i] / t - estimate * estimate) * t / (t - 1.0)).max(0.0);
            let std_error = libm::sqrt(sample_var / t);
            let bound = var[i] / batch as f64 + grad[i] * grad[i];
            MomentCheck { estimate, std_error, bound, holds: estimate <= bound + 3.0 * std_error }
        })
        .collect();
    Ok(SecondMomentReport { batch, coords })
}

pub const SLOPE_MIN_TRACE: usize = 1_000;

/// Least-squares slope of `log(running mean)` against `log N` over the last
/// `window` values of `N`, where the running mean at `N` averages the first
/// `N` entries of `values`.
///
/// Zero running means (a trace that starts with exact zeros) are skipped.
pub fn convergence_slope(values: &[f64], window: usize) -> Result<f64, ObjectiveError> {
    if values.len() < SLOPE_MIN_TRACE {
        return Err(ObjectiveError::ShortTrace { len: values.len(), min: SLOPE_MIN_TRACE });
    }
    if window < 2 || window > values.len() {
        return Err(ObjectiveError::InvalidArgument { name: "window", value: window as f64 });
    }
    if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(ObjectiveError::InvalidArgument { name: "trace value", value: bad });
    }
    if values.iter().all(|&v| v == 0.0) {
        return Err(ObjectiveError::DegenerateTrace);
    }

    let start = values.len() - window;
    let mut sum = 0.0;
    let mut points = Vec::with_capacity(window);
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= start && sum > 0.0 {
            let n = (i + 1) as f64;
            points.push((libm::log(n), libm::log(sum / n)));
        }
    }
    if points.len() < 2 {
        return Err(ObjectiveError::DegenerateTrace);
    }
    let count = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / count;
    let my = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// Largest relative error between `grad` and central differences of `f`
/// (perturbation `eps`) over the listed coordinates. Relative error is
/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn gradcheck(
    f: impl Fn(&[f64]) -> f64,
    theta: &[f64],
    grad: &[f64],
    coords: impl IntoIterator<Item = usize>,
    eps: f64,
) -> f64 {
    let mut x = theta.to_vec();
    let mut worst: f64 = 0.0;
    for i in coords {
        let orig = x[i];
        x[i] = orig + eps;
        let plus = f(&x);
        x[i] = orig - eps;
        let minus = f(&x);
        x[i] = orig;
        let fd = (plus - minus) / (2.0 * eps);
        let denom = fd.abs().max(grad[i].abs()).max(1e-8);
        worst = worst.max((fd - grad[i]).abs() / denom);
    }
    worst
}

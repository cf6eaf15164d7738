use core::f64::consts::PI;

/// The symplectic factor `ζ_k` in RAD's effective learning rate
/// `α √(1-β₂^{k+1}) / √(δ² y + ζ_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaSchedule {
    /// `ζ_k = ε` for every step. With `δ = 1` this is ADAM.
    Constant(f64),
    /// `ζ_k = min{ e^{κ(k/N - 1)}, 1 - β₂^{k+1} }`: starts near zero (ADAM-like,
    /// large effective rates) and returns to `1 - β₂^{k+1}` (symplectic) before
    /// step `N`.
    Annealed { kappa: f64, horizon: u64 },
}

/// The annealing rate that works across tasks, `12π`.
pub const DEFAULT_KAPPA: f64 = 12.0 * PI;

impl ZetaSchedule {
    pub fn annealed(horizon: u64) -> Self {
        Self::Annealed { kappa: DEFAULT_KAPPA, horizon }
    }

    /// `ζ_k` for the 0-based step `k`.
    pub fn value(&self, beta2: f64, k: u64) -> f64 {
        match *self {
            Self::Constant(eps) => eps,
            Self::Annealed { kappa, horizon } => {
                let ramp = libm::exp(kappa * (k as f64 / horizon as f64 - 1.0));
                let symplectic = 1.0 - libm::pow(beta2, (k + 1) as f64);
                ramp.min(symplectic)
            }
        }
    }

    /// First step at which an annealed schedule has returned to
    /// `1 - β₂^{k+1}`; `None` for a constant schedule.
    pub fn switch_step(&self, beta2: f64) -> Option<u64> {
        match *self {
            Self::Constant(_) => None,
            Self::Annealed { kappa, horizon } => (0..=horizon).find(|&k| {
                let ramp = libm::exp(kappa * (k as f64 / horizon as f64 - 1.0));
                ramp >= 1.0 - libm::pow(beta2, (k + 1) as f64)
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annealed_endpoints() {
        let s = ZetaSchedule::annealed(10_000);
        let at_end = s.value(0.999, 10_000);
        assert_eq!(at_end, 1.0 - libm::pow(0.999, 10_001.0));

        let at_start = s.value(0.999, 0);
        assert_eq!(at_start, libm::exp(-12.0 * PI));
        assert!((at_start - 4.3e-17).abs() < 0.1e-17, "{at_start:e}");
    }

    #[test]
    fn constant_is_constant() {
        let s = ZetaSchedule::Constant(1e-16);
        assert!([0u64, 1, 17, 1_000_000].iter().all(|&k| s.value(0.999, k) == 1e-16));
        assert_eq!(s.switch_step(0.999), None);
    }

    #[test]
    fn annealed_is_monotone_and_switches() {
        for &(horizon, beta2) in &[(100u64, 0.999), (10_000, 0.999), (5_000, 0.9), (50, 0.5)] {
            let s = ZetaSchedule::annealed(horizon);
            let values: std::vec::Vec<f64> = (0..=horizon).map(|k| s.value(beta2, k)).collect();
            assert!(values.windows(2).all(|w| w[0] <= w[1]));
            assert!(values.iter().all(|&z| z > 0.0 && z <= 1.0));
            let k_hat = s.switch_step(beta2).expect("switches");
            assert!(k_hat <= horizon);
            for k in k_hat..=horizon {
                assert_eq!(s.value(beta2, k), 1.0 - libm::pow(beta2, (k + 1) as f64));
            }
        }
    }
}

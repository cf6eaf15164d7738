use proptest::prelude::*;
use rad_core::optim::{self, step, step_with_rates, Algorithm, OptState, OptimizerConfig, ZetaSchedule};
use rad_core::{Rng, Vector};

fn gradient_stream(rng: &mut Rng, n: usize, steps: usize) -> Vec<Vector> {
    // heavy-tailed scales so that some coordinates see very large gradients
    (0..steps)
        .map(|_| {
            let scale = libm::exp(4.0 * rng.standard_normal());
            rng.gaussian(n, 0.0, scale)
        })
        .collect()
}

#[test]
fn rad1_with_constant_zeta_is_adam() {
    let mut rng = Rng::new(2024);
    let rad = OptimizerConfig::new(Algorithm::Rad1, 1e-3).with_zeta(ZetaSchedule::Constant(1e-16));
    let adam = OptimizerConfig::new(Algorithm::Adam, 1e-3).with_epsilon(1e-16);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let theta0 = rng.gaussian(6, 0.0, 1.0);
        let mut a = OptState::new(theta0.clone());
        let mut b = OptState::new(theta0);
        for g in gradient_stream(&mut rng, 6, 1000) {
            a = step(&rad, &a, &g).unwrap();
            b = step(&adam, &b, &g).unwrap();
            for (x, y) in a.theta().iter().zip(b.theta().iter()) {
                worst = worst.max((x - y).abs() / y.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    assert!(worst < 1e-12, "max relative deviation {worst:e}");
}

#[test]
fn every_rule_ignores_a_zero_gradient() {
    for algo in Algorithm::ALL {
        let cfg = OptimizerConfig::new(algo, 0.3).with_zeta(ZetaSchedule::annealed(10));
        let start = OptState::new([1.5, -2.0]);
        let next = step(&cfg, &start, &[0.0, 0.0]).unwrap();
        assert_eq!(next.theta(), start.theta(), "{algo}");
    }
}

#[test]
fn rad1_rates_are_per_coordinate() {
    let rad = OptimizerConfig::new(Algorithm::Rad1, 1e-3);
    let rgd = OptimizerConfig::new(Algorithm::Rgd, 1e-3);
    let r = step_with_rates(&rad, &OptState::new([0.0, 0.0]), &[100.0, 0.01]).unwrap();
    let g = step_with_rates(&rgd, &OptState::new([0.0, 0.0]), &[100.0, 0.01]).unwrap();
    assert!(r.rates[1] / r.rates[0] > 1e3);
    assert_eq!(g.rates[0], g.rates[1]);
}

#[test]
fn rad1_improved_form_max_step_is_observable() {
    // No closed-form bound exists for the bias-corrected form; its rates are
    // still finite and reported.
    let cfg = OptimizerConfig::new(Algorithm::Rad1, 1e-3).with_zeta(ZetaSchedule::annealed(500));
    let mut rng = Rng::new(8);
    let mut s = OptState::new(Vector::zeros(4));
    for g in gradient_stream(&mut rng, 4, 500) {
        let out = step_with_rates(&cfg, &s, &g).unwrap();
        assert!(out.rates.is_finite());
        s = out.state;
    }
}

fn stream_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    let coord = prop_oneof![-1e6..1e6f64, -1.0..1.0f64, Just(0.0)];
    prop::collection::vec(prop::collection::vec(coord, 3), 1..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rad1_original_moves_each_coordinate_at_most_lr_over_delta(
        stream in stream_strategy(),
        lr in 1e-4..1.0f64,
        delta in 0.05..20.0f64,
        beta1 in 0.0..0.999f64,
    ) {
        let cfg = OptimizerConfig::new(Algorithm::Rad1Original, lr).with_delta(delta).with_betas(beta1, 0.999);
        let mut s = OptState::new(Vector::zeros(3));
        for g in &stream {
            let next = step(&cfg, &s, g).unwrap();
            for (a, b) in next.theta().iter().zip(s.theta().iter()) {
                prop_assert!((a - b).abs() <= lr / delta * (1.0 + 1e-12));
            }
            s = next;
        }
    }

    #[test]
    fn rgd_moves_at_most_lr_over_delta_in_norm(
        stream in stream_strategy(),
        lr in 1e-4..1.0f64,
        delta in 0.05..20.0f64,
    ) {
        let cfg = OptimizerConfig::new(Algorithm::Rgd, lr).with_delta(delta);
        let mut s = OptState::new(Vector::zeros(3));
        for g in &stream {
            let next = step(&cfg, &s, g).unwrap();
            let d = next.theta().sub(s.theta()).unwrap();
            prop_assert!(d.norm() <= lr / delta * (1.0 + 1e-12));
            s = next;
        }
    }

    #[test]
    fn second_moment_stays_nonnegative(stream in stream_strategy(), algo_idx in 0usize..10) {
        let algo = Algorithm::ALL[algo_idx];
        let cfg = OptimizerConfig::new(algo, 1e-3).with_zeta(ZetaSchedule::annealed(60));
        let mut s = OptState::new(Vector::zeros(3));
        for g in &stream {
            s = step(&cfg, &s, g).unwrap();
            prop_assert!(s.y().iter().all(|&y| y >= 0.0));
        }
    }

    #[test]
    fn physics_round_trip(lr in 1e-6..10.0f64, beta1 in 1e-3..0.999f64, delta in 1e-3..1e3f64) {
        let p = optim::hyper_to_physics(lr, beta1, delta).unwrap();
        let h = optim::physics_to_hyper(&p);
        prop_assert!((h.lr - lr).abs() <= 1e-12 * lr);
        prop_assert!((h.beta1 - beta1).abs() <= 1e-12 * beta1);
        prop_assert!((h.delta - delta).abs() <= 1e-12 * delta);
    }
}

#[test]
fn theorem_condition_boundaries() {
    let cfg = OptimizerConfig::new(Algorithm::Rad1, 0.05);
    let report = optim::check_theorem_conditions(&cfg, 1.0, 1.0, 0.01).unwrap();
    assert!(report.learning_rate.holds);
    assert!(!report.beta2.holds);
    let cfg = cfg.with_betas(0.9, 0.9994);
    assert!(optim::check_theorem_conditions(&cfg, 1.0, 1.0, 0.01).unwrap().beta2.holds);
}

use rad_core::hamiltonian::HarmonicWell;
use rad_core::optim::{self, step, Algorithm, OptState, OptimizerConfig, PhysicalParams};
use rad_core::{HamiltonianSystem, Integrator, KineticEnergy, PhasePoint, Potential, Vector};

fn oscillator(damping: f64) -> HamiltonianSystem<HarmonicWell> {
    HamiltonianSystem::new(HarmonicWell { stiffness: 1.0 }, KineticEnergy::classical(1.0).unwrap(), damping).unwrap()
}

/// Exact solution of q'' + r q' + q = 0 (underdamped).
fn damped_exact(r: f64, q0: f64, p0: f64, t: f64) -> (f64, f64) {
    let w = (1.0 - r * r / 4.0).sqrt();
    let a = q0;
    let b = (p0 + 0.5 * r * q0) / w;
    let e = (-0.5 * r * t).exp();
    let (s, c) = (w * t).sin_cos();
    let q = e * (a * c + b * s);
    let dq = -0.5 * r * q + e * (-a * w * s + b * w * c);
    (q, dq)
}

#[test]
fn area_contracts_by_exp_minus_rh_on_the_grid() {
    let points = [(1.0, 0.0), (-0.3, 2.0), (0.7, -1.1)];
    for integrator in [Integrator::FirstOrder, Integrator::SecondOrder] {
        for &r in &[0.0, 0.01, 0.1, 1.0] {
            for &h in &[0.001, 0.01, 0.1] {
                let sys = oscillator(r);
                for &(q, p) in &points {
                    let z = PhasePoint::new([q], [p]).unwrap();
                    let det = sys.phase_area_contraction(integrator, &z, h).unwrap();
                    assert!((det - (-r * h).exp()).abs() < 1e-5, "{integrator:?} r={r} h={h}: {det}");
                }
            }
        }
    }
}

#[test]
fn relativistic_and_anharmonic_steps_also_contract_by_exp_minus_rh() {
    let quartic = rad_core::hamiltonian::FnPotential::new(
        |q: &[f64]| q[0].powi(4) / 4.0 - q[0] * q[0],
        |q: &[f64]| Vector::from([q[0].powi(3) - 2.0 * q[0]]),
    );
    let sys = HamiltonianSystem::new(quartic, KineticEnergy::relativistic(2.0, 0.5).unwrap(), 0.3).unwrap();
    for integrator in [Integrator::FirstOrder, Integrator::SecondOrder] {
        let z = PhasePoint::new([0.4], [-1.7]).unwrap();
        let det = sys.phase_area_contraction(integrator, &z, 0.05).unwrap();
        assert!((det - (-0.3f64 * 0.05).exp()).abs() < 1e-5);
    }
}

#[test]
fn reference_contraction_values() {
    let z = PhasePoint::new([1.0], [0.5]).unwrap();
    let det = oscillator(0.1).phase_area_contraction(Integrator::FirstOrder, &z, 0.01).unwrap();
    assert!((det - 0.999_000_5).abs() < 1e-6);
    let det = oscillator(0.2).phase_area_contraction(Integrator::SecondOrder, &z, 0.05).unwrap();
    assert!((det - (-0.01f64).exp()).abs() < 1e-6);
    let det = oscillator(0.0).phase_area_contraction(Integrator::FirstOrder, &z, 0.1).unwrap();
    assert!((det - 1.0).abs() < 1e-6);
}

fn global_error(integrator: Integrator, r: f64, h: f64, t_end: f64) -> f64 {
    let sys = oscillator(r);
    let steps = (t_end / h).round() as usize;
    let mut z = PhasePoint::new([1.0], [0.0]).unwrap();
    for _ in 0..steps {
        z = sys.step(integrator, &z, h).unwrap();
    }
    let (q, p) = damped_exact(r, 1.0, 0.0, t_end);
    ((z.q[0] - q).powi(2) + (z.p[0] - p).powi(2)).sqrt()
}

#[test]
fn observed_orders_from_step_halving() {
    for &(integrator, expected) in &[(Integrator::FirstOrder, 1.0), (Integrator::SecondOrder, 2.0)] {
        let e1 = global_error(integrator, 0.1, 0.01, 10.0);
        let e2 = global_error(integrator, 0.1, 0.005, 10.0);
        let order = (e1 / e2).log2();
        assert!((order - expected).abs() < 0.2, "{integrator:?}: order {order}");
    }
}

#[test]
fn leapfrog_energy_stays_in_a_band() {
    let sys = oscillator(0.0);
    let h = 0.01;
    let mut z = PhasePoint::new([1.0], [0.0]).unwrap();
    let h0 = sys.hamiltonian_value(&z).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        z = sys.step_second_order(&z, h).unwrap();
        worst = worst.max((sys.hamiltonian_value(&z).unwrap() - h0).abs());
    }
    assert!(worst < h * h, "energy error {worst:e}");
}

#[test]
fn energy_never_increases_when_damping_dominates_the_step() {
    // For a weakly damped oscillator the one-step energy of these schemes
    // can rise (see below), so monotonicity is checked for r ≥ h.
    for integrator in [Integrator::FirstOrder, Integrator::SecondOrder] {
        for &(r, h) in &[(0.1, 0.1), (0.1, 0.01), (0.5, 0.1), (1.0, 0.05), (1.0, 0.001)] {
            let sys = oscillator(r);
            let mut z = PhasePoint::new([1.0], [0.3]).unwrap();
            let mut prev = sys.hamiltonian_value(&z).unwrap();
            for k in 0..10_000 {
                z = sys.step(integrator, &z, h).unwrap();
                let now = sys.hamiltonian_value(&z).unwrap();
                assert!(now <= prev + 1e-9, "{integrator:?} r={r} h={h} step {k}: {prev} -> {now}");
                prev = now;
            }
        }
    }
}

#[test]
fn weak_damping_lets_the_discrete_energy_rise() {
    let sys = oscillator(0.01);
    let mut z = PhasePoint::new([1.0], [0.0]).unwrap();
    let mut rose = false;
    for _ in 0..1000 {
        let before = sys.hamiltonian_value(&z).unwrap();
        z = sys.step_first_order(&z, 0.1).unwrap();
        rose |= sys.hamiltonian_value(&z).unwrap() > before + 1e-9;
    }
    assert!(rose);
}

#[test]
fn one_small_step_moves_order_h() {
    let sys = oscillator(0.3);
    let z = PhasePoint::new([0.8, -0.2], [0.1, 0.4]).unwrap();
    for integrator in [Integrator::FirstOrder, Integrator::SecondOrder] {
        let d1 = sys.step(integrator, &z, 1e-4).unwrap().distance(&z);
        let d2 = sys.step(integrator, &z, 5e-5).unwrap().distance(&z);
        assert!((d1 / d2 - 2.0).abs() < 1e-3);
    }
}

fn quadratic_physics() -> (HamiltonianSystem<rad_core::hamiltonian::FnPotential<impl Fn(&[f64]) -> f64, impl Fn(&[f64]) -> Vector>>, PhysicalParams)
{
    let eig = [1.0, 4.0, 0.25];
    let potential = rad_core::hamiltonian::FnPotential::new(
        move |q: &[f64]| 0.5 * q.iter().zip(eig).map(|(q, d)| d * q * q).sum::<f64>(),
        move |q: &[f64]| q.iter().zip(eig).map(|(q, d)| d * q).collect(),
    );
    let phys = PhysicalParams { step: 0.1, damping: 1.5, mass: 2.0, light_speed: 1.0 };
    let sys = HamiltonianSystem::new(potential, KineticEnergy::classical(phys.mass).unwrap(), phys.damping).unwrap();
    (sys, phys)
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(1e-300)).fold(0.0, f64::max)
}

#[test]
fn heavy_ball_is_the_first_order_integrator() {
    let (sys, phys) = quadratic_physics();
    let hp = optim::physics_to_hyper(&phys);
    let cfg = OptimizerConfig::new(Algorithm::Hb, hp.lr).with_betas(hp.beta1, 0.999);

    let mut z = PhasePoint::new([1.0, -0.5, 2.0], [0.3, 0.0, -0.2]).unwrap();
    let v0 = optim::velocity_from_momenta(&z.p, &phys);
    let mut s = OptState::from_parts(z.q.clone(), v0, Vector::zeros(3), 0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let g = sys.potential.gradient(s.theta());
        s = step(&cfg, &s, &g).unwrap();
        z = sys.step_first_order(&z, phys.step).unwrap();
        worst = worst.max((s.theta().sub(&z.q).unwrap()).max_abs() / z.q.max_abs().max(1e-300));
        let v = optim::velocity_from_momenta(&z.p, &phys);
        assert!(s.v().sub(&v).unwrap().max_abs() <= 1e-10 * v.max_abs().max(1e-300));
    }
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn dlpf_is_the_second_order_integrator_at_half_steps() {
    let (sys, phys) = quadratic_physics();
    let hp = optim::physics_to_hyper(&phys);
    let cfg = OptimizerConfig::new(Algorithm::Dlpf, hp.lr).with_betas(hp.beta1, 0.999);

    let mut z = PhasePoint::new([1.0, -0.5, 2.0], [0.3, 0.0, -0.2]).unwrap();
    // The algorithm's θ_k is the physics position at k + 1/2 and its v_k the
    // momentum at k - 1/2, so it starts from the first midpoint with
    // v_{-1/2} = v_0 / √β₁.
    let v0: Vector = optim::velocity_from_momenta(&z.p, &phys).iter().map(|v| v / hp.beta1.sqrt()).collect();
    let theta0 = sys.second_order_midpoint(&z, phys.step);
    let mut s = OptState::from_parts(theta0, v0, Vector::zeros(3), 0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mid = sys.second_order_midpoint(&z, phys.step);
        worst = worst.max(max_rel(s.theta(), &mid));
        let g = sys.potential.gradient(s.theta());
        s = step(&cfg, &s, &g).unwrap();
        z = sys.step_second_order(&z, phys.step).unwrap();
    }
    assert!(worst < 1e-10, "{worst:e}");
}

use approx::assert_abs_diff_eq;
use spinprobe::dynamics::ode::{integrate, OdeOptions};
use spinprobe::dynamics::{grid_with_interval, linearized_generator, uniform_grid, Evolver};
use spinprobe::hamiltonian::entanglement_approx;
use spinprobe::{
    entanglement_period, evolve_inl, evolve_linear, evolve_linearized, IntegratorConfig, IntegratorConfig64,
    NonlinearSign, RotatingFrameParams, RotatingFrameParams64, SpinState, SpinState64,
};

fn reference() -> RotatingFrameParams64 {
    RotatingFrameParams64::reference()
}

#[test]
fn small_coupling_example() {
    // Decoupled spins precess independently: no entanglement ever builds up.
    let rp = RotatingFrameParams64::new(5.0, 1.0, 0.0, 10.0, 0.0);
    let tr = evolve_linear(&rp, &SpinState64::down_down(), &uniform_grid(200.0, 801)).unwrap();
    assert!(tr.entanglement().iter().all(|&e| e < 1e-12));
    assert!(tr.magnetization().iter().any(|&m| m > 0.1));
}

#[test]
fn entanglement_follows_closed_form() {
    let rp = reference();
    let t_e = entanglement_period(rp.j).unwrap();
    let tr = evolve_linear(&rp, &SpinState64::down_down(), &grid_with_interval(t_e, 0.05)).unwrap();
    for s in &tr.samples {
        let approx = entanglement_approx(&rp, s.t);
        assert!((s.e - approx).abs() < 0.05, "t = {}: {} vs {approx}", s.t, s.e);
    }
}

#[test]
fn nonlinear_without_eta_is_linear() {
    let rp = reference();
    let grid = grid_with_interval(200.0, 0.25);
    let cfg = IntegratorConfig64::default();
    for s0 in [SpinState64::down_down(), SpinState64::up_up(), SpinState64::basis(2)] {
        let a = evolve_inl(&rp, &s0, &grid, &cfg).unwrap();
        let b = evolve_linear(&rp, &s0, &grid).unwrap();
        assert!(a.sup_distance(&b) < 1e-8);
    }
}

#[test]
fn linearized_without_eta_is_linear() {
    let rp = reference();
    let grid = grid_with_interval(700.0, 1.0);
    let a = evolve_linearized(&rp, &SpinState64::down_down(), &grid, 0.3).unwrap();
    let b = evolve_linear(&rp, &SpinState64::down_down(), &grid).unwrap();
    assert!(a.sup_distance(&b) < 1e-10, "{}", a.sup_distance(&b));
}

#[test]
fn phase_shift_by_pi_flips_sign() {
    let rp = reference().with_eta(0.005);
    let flipped = rp.with_sign(NonlinearSign::Plus);
    let g1 = linearized_generator(&rp, 0.4);
    let g2 = linearized_generator(&flipped, 0.4 + std::f64::consts::PI);
    for (r1, r2) in g1.iter().zip(&g2) {
        for (a, b) in r1.iter().zip(r2) {
            assert!((a - b).norm() < 1e-15);
        }
    }
    let grid = grid_with_interval(300.0, 1.0);
    let a = evolve_linearized(&rp, &SpinState64::down_down(), &grid, 0.4).unwrap();
    let b = evolve_linearized(&flipped, &SpinState64::down_down(), &grid, 0.4 + std::f64::consts::PI).unwrap();
    assert!(a.sup_distance(&b) < 1e-10);
}

#[test]
fn nonlinear_run_conserves_norm() {
    let rp = reference().with_eta(0.005);
    let grid = grid_with_interval(300.0, 0.25);
    let tr = evolve_inl(&rp, &SpinState64::down_down(), &grid, &IntegratorConfig64::default()).unwrap();
    assert!(tr.max_norm_drift() < 1e-8);
    // Both signs conserve the norm; they differ in the dynamics.
    let other = evolve_inl(&rp.with_sign(NonlinearSign::Plus), &SpinState64::down_down(), &grid, &Default::default())
        .unwrap();
    assert!(other.max_norm_drift() < 1e-8);
    assert!(tr.sup_distance(&other) > 1e-3);
}

#[test]
fn step_doubling_shows_fifth_order() {
    // y'' = −y on [0, 10]; the tolerance is loose enough that `max_step`
    // alone sets the step, and t = 10 is a step endpoint.
    let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
    let err = |h: f64| {
        let o = OdeOptions { rel_tol: 1.0, abs_tol: 1.0, max_step: h };
        let (ys, stats) = integrate(f, 0.0, [1.0, 0.0], &[10.0], &o).unwrap();
        assert_eq!(stats.rejected, 0);
        let y = ys[0];
        ((y[0] - 10f64.cos()).powi(2) + (y[1] + 10f64.sin()).powi(2)).sqrt()
    };
    let hs = [0.2, 0.1, 0.05];
    let e: Vec<f64> = hs.iter().map(|&h| err(h)).collect();
    // Global error is O(h⁵) for a fifth-order method.
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 5.0).abs() < 0.5, "{e:?}");
    }
}

#[test]
fn output_grid_does_not_change_the_solution() {
    let rp = reference().with_eta(0.005);
    let cfg = IntegratorConfig64::default();
    let coarse = grid_with_interval(100.0, 1.0);
    let fine = grid_with_interval(100.0, 0.25);
    let a = evolve_inl(&rp, &SpinState64::down_down(), &coarse, &cfg).unwrap();
    let b = evolve_inl(&rp, &SpinState64::down_down(), &fine, &cfg).unwrap();
    for (k, s) in a.states.iter().enumerate() {
        assert!(s.distance(&b.states[4 * k]) < 1e-8);
    }
}

#[test]
fn runs_are_deterministic() {
    let rp = reference().with_eta(0.005);
    let grid = grid_with_interval(150.0, 0.25);
    let ev = Evolver::Inl(IntegratorConfig64::default());
    let a = ev.run(&rp, &SpinState64::down_down(), &grid).unwrap();
    let b = ev.run(&rp, &SpinState64::down_down(), &grid).unwrap();
    assert_eq!(a, b);
}

#[test]
fn converges_in_tolerance_at_default_switch_width() {
    let rp = reference().with_eta(0.005);
    let grid = grid_with_interval(300.0, 0.5);
    let run = |rel_tol: f64, switch_width: f64| {
        let cfg = IntegratorConfig64 { rel_tol, abs_tol: rel_tol * 1e-3, switch_width, ..Default::default() };
        evolve_inl(&rp, &SpinState64::down_down(), &grid, &cfg).unwrap()
    };
    let w = IntegratorConfig64::default().switch_width;
    let (a, b, c) = (run(1e-10, w), run(1e-11, w), run(1e-12, w));
    let (d1, d2) = (a.sup_distance(&b), b.sup_distance(&c));
    assert!(d2 < 1e-8 && d2 < d1 / 5.0, "{d1:e} {d2:e}");
    // The birth phase of det C depends on the ramp, but only weakly.
    let wide = run(1e-11, 10.0 * w);
    assert!(wide.sup_distance(&b) < 1e-2);
}

#[test]
fn works_in_single_precision() {
    let rp = RotatingFrameParams::<f32>::reference();
    let grid: Vec<f32> = (0..200).map(|k| k as f32 * 0.5).collect();
    let a = evolve_linear(&rp, &SpinState::<f32>::down_down(), &grid).unwrap();
    let rp64 = reference();
    let grid64: Vec<f64> = grid.iter().map(|&t| t as f64).collect();
    let b = evolve_linear(&rp64, &SpinState64::down_down(), &grid64).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((x.m as f64 - y.m).abs() < 1e-3);
        assert!((x.e as f64 - y.e).abs() < 1e-3);
    }
    let cfg = IntegratorConfig::<f32> { rel_tol: 1e-6, abs_tol: 1e-8, ..Default::default() };
    let c = evolve_inl(&rp.with_eta(0.005), &SpinState::<f32>::down_down(), &grid, &cfg).unwrap();
    assert!(c.max_norm_drift() < 5e-4);
}

#[test]
fn linearized_state_keeps_conjugate_structure() {
    // The lower half of the 8-vector must stay the conjugate of the upper half.
    let rp = reference().with_eta(0.005);
    let g = linearized_generator(&rp, 1.0);
    for r in 0..4 {
        for c in 0..4 {
            assert_abs_diff_eq!((g[r + 4][c + 4] - g[r][c].conj()).norm(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!((g[r + 4][c] - g[r][c + 4].conj()).norm(), 0.0, epsilon = 1e-15);
        }
    }
}

#[test]
fn failed_run_keeps_samples_before_failure() {
    // A step ceiling below the underflow limit fails on the first step.
    let rp = reference().with_eta(0.005);
    let grid = grid_with_interval(50.0, 1.0);
    let cfg = IntegratorConfig64 { max_step: 1e-300, ..Default::default() };
    let (tr, failure) = spinprobe::evolve_inl_partial(&rp, &SpinState64::down_down(), &grid, &cfg).unwrap();
    assert!(matches!(failure, Some(spinprobe::Error::StepUnderflow { .. })));
    assert_eq!(tr.len(), 1);
    assert!(evolve_inl(&rp, &SpinState64::down_down(), &grid, &cfg).is_err());
}

//! Spectral checks against independent oracles: the closed-form quartic for
//! `j = 0`, and a Faddeev–LeVerrier expansion of the characteristic
//! polynomial of the explicit matrix.

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use spinprobe::hamiltonian::{
    build_hamiltonian, dynamical_frequencies, eigensystem, entanglement_approx, kappas, perturbed_eigenvalues,
    stern_gerlach_time, timing_condition, timing_satisfied, to_rotating_frame,
};
use spinprobe::linalg::{matmul, Mat4};
use spinprobe::{PhysicalParams64, RotatingFrameParams64};

/// Roots of x⁴ − (ν² + λ² + d²) x² + ν²d² = 0, ascending.
fn quartic_roots(nu: f64, d: f64, lambda: f64) -> [f64; 4] {
    let s = nu * nu + lambda * lambda + d * d;
    let p = nu * nu * d * d;
    let disc = (s * s - 4.0 * p).sqrt();
    let small = (2.0 * p / (s + disc)).sqrt();
    let large = ((s + disc) / 2.0).sqrt();
    [-large, -small, small, large]
}

/// Coefficients c₀..c₄ of det(xI − H) = x⁴ + c₃x³ + c₂x² + c₁x + c₀, returned
/// as [c0, c1, c2, c3, 1].
fn char_poly(h: &Mat4<f64>) -> [f64; 5] {
    let mut c = [0.0; 5];
    c[4] = 1.0;
    let mut m = [[0.0; 4]; 4];
    for k in 1..=4 {
        // M_k = H M_{k-1} + c_{n-k+1} I
        let mut next = matmul(h, &m);
        for i in 0..4 {
            next[i][i] += c[4 - k + 1];
        }
        m = next;
        let hm = matmul(h, &m);
        let tr: f64 = (0..4).map(|i| hm[i][i]).sum();
        c[4 - k] = -tr / k as f64;
    }
    c
}

fn eval_poly(c: &[f64; 5], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

#[test]
fn quartic_matches_explicit_characteristic_polynomial() {
    let rp = RotatingFrameParams64::reference().with_j(0.0);
    let c = char_poly(&build_hamiltonian(&rp));
    let (nu, d, l) = (rp.nu, rp.d, rp.lambda);
    assert_abs_diff_eq!(c[3], 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!(c[1], 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!(c[2], -(nu * nu + l * l + d * d), epsilon = 1e-10);
    assert_abs_diff_eq!(c[0], nu * nu * d * d, epsilon = 1e-10);
    for r in quartic_roots(nu, d, l) {
        assert!(eval_poly(&c, r).abs() < 1e-9);
    }
}

#[test]
fn odd_coefficients_vanish_at_zero_coupling() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let rp = RotatingFrameParams64::new(
            rng.gen_range(-20.0..20.0),
            rng.gen_range(0.1..3.0),
            0.0,
            rng.gen_range(0.0..30.0),
            0.0,
        );
        let h = build_hamiltonian(&rp);
        let trace: f64 = (0..4).map(|i| h[i][i]).sum();
        assert_eq!(trace, 0.0);
        let c = char_poly(&h);
        assert!(c[1].abs() < 1e-10 && c[3].abs() < 1e-10, "{c:?}");
    }
}

#[test]
fn reference_spectrum() {
    let rp = RotatingFrameParams64::reference().with_j(0.0);
    let es = eigensystem(&build_hamiltonian(&rp)).unwrap();
    let q = quartic_roots(5.0, 1.0, 10.0);
    for k in 0..4 {
        assert_abs_diff_eq!(es.values[k], q[k], epsilon = 1e-9);
    }
    assert_abs_diff_eq!(q[2], 0.4458, epsilon = 5e-5);
    assert_abs_diff_eq!(q[3], 11.2161, epsilon = 5e-5);
    assert!(es.residual < 1e-10);
    let (k0, k1) = kappas(&rp).unwrap();
    assert!(0.0 < k0 && k0 < k1);
}

#[test]
fn eigensystem_matches_quartic_on_random_sweep() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let (nu, d, l) = (rng.gen_range(-15.0..15.0), rng.gen_range(0.05..5.0), rng.gen_range(0.0..25.0));
        let rp = RotatingFrameParams64::new(nu, d, 0.0, l, 0.0);
        let es = eigensystem(&build_hamiltonian(&rp)).unwrap();
        let q = quartic_roots(nu, d, l);
        for k in 0..4 {
            assert!((es.values[k] - q[k]).abs() < 1e-9, "{nu} {d} {l}: {:?} vs {q:?}", es.values);
        }
        // Orthonormal eigenvectors.
        let v = es.vectors;
        for a in 0..4 {
            for b in 0..4 {
                let dot: f64 = (0..4).map(|i| v[i][a] * v[i][b]).sum();
                assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
        assert!(es.residual < 1e-10);
    }
}

#[test]
fn hamiltonian_is_symmetric_for_random_params() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let rp = RotatingFrameParams64::new(
            rng.gen_range(-10.0..10.0),
            rng.gen_range(0.1..2.0),
            rng.gen_range(0.0..0.1),
            rng.gen_range(0.0..20.0),
            0.0,
        );
        let h = build_hamiltonian(&rp);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h[i][j], h[j][i]);
            }
        }
    }
}

#[test]
fn perturbed_values_at_reference() {
    let rp = RotatingFrameParams64::reference();
    let p = perturbed_eigenvalues(&rp).unwrap();
    let q = quartic_roots(5.0, 1.0, 10.0);
    let expect = [q[2] + 0.0025, -q[2] + 0.0025, q[3] - 0.0025, -q[3] - 0.0025];
    for k in 0..4 {
        assert_abs_diff_eq!(p[k], expect[k], epsilon = 1e-12);
    }
    let rounded = [0.4483, -0.4433, 11.2136, -11.2186];
    for k in 0..4 {
        assert_abs_diff_eq!(p[k], rounded[k], epsilon = 5e-5);
    }
    // The κ0 pair combines to the slow beat 2j.
    assert_abs_diff_eq!(p[0] + p[1], 2.0 * rp.j, epsilon = 1e-15);
}

#[test]
fn exact_frequencies_close_to_first_order() {
    let rp = RotatingFrameParams64::reference();
    let mut p = perturbed_eigenvalues(&rp).unwrap();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let exact = dynamical_frequencies(&rp).unwrap();
    for k in 0..4 {
        assert!((exact[k] - p[k]).abs() < 100.0 * rp.j * rp.j);
    }
}

#[test]
fn closed_form_entanglement_peak() {
    let rp = RotatingFrameParams64::reference();
    let t = std::f64::consts::PI / (4.0 * rp.j);
    assert_abs_diff_eq!(t, 314.159, epsilon = 1e-3);
    assert_abs_diff_eq!(entanglement_approx(&rp, t), 0.8, epsilon = 1e-12);
}

fn proton_lab(b_rf: f64, omega_rf: f64) -> PhysicalParams64 {
    // ω̄ = 4e7 rad/s at 1 T with a 20 ppm spread between the two protons.
    PhysicalParams64 {
        b_static: 1.0,
        b_rf,
        gamma1: 4e7 + 400.0,
        gamma2: 4e7 - 400.0,
        omega_rf,
        diameter: 3e-10,
        grad: 100.0,
    }
}

#[test]
fn rotating_frame_conversion() {
    let p = proton_lab(1e-4, 4e7 - 5.0 * 400.0);
    let f = to_rotating_frame(&p).unwrap();
    assert_abs_diff_eq!(f.d_rate, 400.0, epsilon = 1e-6);
    assert_eq!(f.params.d, 1.0);
    assert_abs_diff_eq!(f.params.lambda, 10.0, epsilon = 1e-6);
    assert_abs_diff_eq!(f.params.nu, 5.0, epsilon = 1e-6);

    let tuned = to_rotating_frame(&proton_lab(1e-4, p.mean_gamma() * p.b_static)).unwrap();
    assert_eq!(tuned.params.nu, 0.0);

    let doubled = to_rotating_frame(&proton_lab(2e-4, p.omega_rf)).unwrap();
    assert_abs_diff_eq!(doubled.params.lambda, 2.0 * f.params.lambda, epsilon = 1e-9);
    assert_eq!(doubled.params.nu, f.params.nu);
    assert_eq!(doubled.d_rate, f.d_rate);

    let rp = f.with_rates(1.0, 2.0);
    assert_abs_diff_eq!(rp.j, 0.0025, epsilon = 1e-9);
    assert_abs_diff_eq!(rp.eta, 0.005, epsilon = 1e-9);
}

#[test]
fn timing_condition_examples() {
    let p = proton_lab(1e-4, 4e7 - 2000.0);
    let rp = to_rotating_frame(&p).unwrap().with_rates(1.0, 0.0);
    let ratio = timing_condition(&rp, &p).unwrap();
    assert!(timing_satisfied(ratio), "ratio {ratio}");

    // Tune the gradient so that t_sg equals t_e exactly.
    let t_e = std::f64::consts::FRAC_PI_2;
    let mut q = p;
    q.grad = p.grad * stern_gerlach_time(&p) / t_e;
    assert_abs_diff_eq!(timing_condition(&rp, &q).unwrap(), 1.0, epsilon = 1e-9);

    let fast = to_rotating_frame(&p).unwrap().with_rates(1e4, 0.0);
    assert!(timing_condition(&fast, &p).unwrap() < 1e-3);
    assert!(timing_condition(&rp.with_j(0.0), &p).is_err());
}

/// First-order shifts from ⟨v_k|∂H/∂j|v_k⟩ converge quadratically; the
/// fixed ±j pattern only agrees with them to about 1.3% of j.
#[test]
fn first_order_shifts_from_eigenvectors() {
    let base = RotatingFrameParams64::reference().with_j(0.0);
    let h0 = build_hamiltonian(&base);
    let h1 = build_hamiltonian(&base.with_j(1.0));
    let es = eigensystem(&h0).unwrap();
    let coef: Vec<f64> = (0..4)
        .map(|k| {
            let v = es.vector(k);
            (0..4).map(|a| (0..4).map(|b| v[a] * (h1[a][b] - h0[a][b]) * v[b]).sum::<f64>()).sum()
        })
        .collect();
    for c in &coef {
        assert!((c.abs() - 1.0).abs() < 0.02, "{coef:?}");
    }
    let errs: Vec<f64> = [0.001, 0.002, 0.004]
        .iter()
        .map(|&j| {
            let e = eigensystem(&build_hamiltonian(&base.with_j(j))).unwrap();
            (0..4).map(|k| (e.values[k] - (es.values[k] + coef[k] * j)).abs()).fold(0.0, f64::max)
        })
        .collect();
    let slope = (errs[2] / errs[0]).ln() / 4.0_f64.ln();
    assert!((slope - 2.0).abs() < 0.1, "{errs:?} slope {slope}");
}

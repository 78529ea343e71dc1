//! Rotating-frame Hamiltonian, parameter conversion, spectra and the
//! closed-form time scales.
//!
//! Sign convention: states evolve as `dC/dt = +i H C` with `H` the matrix from
//! [`build_hamiltonian`]. The dynamical frequencies (phases `e^{-iαt}`) are
//! therefore the eigenvalues of `−H`, which is what [`perturbed_eigenvalues`]
//! approximates and [`dynamical_frequencies`] computes exactly. Observables
//! `M` and `E` are unchanged by the choice of sign because the two
//! conventions are complex conjugates of each other.

use crate::error::{invalid, Error, Result};
use crate::linalg::{asymmetry, jacobi_eigen, Mat4};
use crate::scalar::Real;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Orientation of the non-linear term `s·η e^{i arg det C} Υ C*`, with `Υ`
/// holding `−1` at (1,2) and `+1` at (2,1).
///
/// With `Minus` the term drives the entangled `|↑↑⟩/|↓↓⟩` superposition along
/// its own determinant phase: entanglement grows, the transverse-magnetization
/// envelope is depressed around mid-period, and the frozen-phase
/// linearization stays self-consistent over the first half-period. `Plus`
/// pushes the state toward factorization instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonlinearSign {
    Plus,
    #[default]
    Minus,
}

impl NonlinearSign {
    pub fn factor<T: Real>(self) -> T {
        match self {
            NonlinearSign::Plus => T::one(),
            NonlinearSign::Minus => -T::one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NonlinearSign::Plus => "plus",
            NonlinearSign::Minus => "minus",
        }
    }
}

/// Dimensionless rotating-frame parameters, all in units of the chemical-shift
/// half-difference `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingFrameParams<T> {
    /// Detuning `ν` of the mean Larmor frequency from the rf frequency.
    pub nu: T,
    pub d: T,
    /// j-coupling strength.
    pub j: T,
    /// rf coupling `λ`.
    pub lambda: T,
    /// Strength of the induced non-linear collapse term.
    pub eta: T,
    pub sign: NonlinearSign,
}

impl<T: Real> RotatingFrameParams<T> {
    pub fn new(nu: T, d: T, j: T, lambda: T, eta: T) -> Self {
        Self { nu, d, j, lambda, eta, sign: NonlinearSign::default() }
    }

    /// `ν = 5, d = 1, λ = 10, j = 0.0025, η = 0`.
    pub fn reference() -> Self {
        Self::new(T::lit(5.0), T::one(), T::lit(0.0025), T::lit(10.0), T::zero())
    }

    pub fn with_j(self, j: T) -> Self {
        Self { j, ..self }
    }

    pub fn with_eta(self, eta: T) -> Self {
        Self { eta, ..self }
    }

    pub fn with_nu(self, nu: T) -> Self {
        Self { nu, ..self }
    }

    pub fn with_sign(self, sign: NonlinearSign) -> Self {
        Self { sign, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.nu, self.d, self.j, self.lambda, self.eta].iter().all(|x| x.is_finite());
        if !finite {
            return Err(invalid("params", "all parameters must be finite"));
        }
        if self.d <= T::zero() {
            return Err(invalid("d", "must be > 0"));
        }
        for (name, v) in [("j", self.j), ("lambda", self.lambda), ("eta", self.eta)] {
            if v < T::zero() {
                return Err(invalid(name, "must be >= 0"));
            }
        }
        Ok(())
    }

    /// Departures from the `j ≪ ν ≲ λ` regime where the beat analysis holds.
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let nu = self.nu.abs();
        if self.j > T::zero() && self.j * T::lit(10.0) > nu {
            w.push(format!("j = {} is not small compared with |nu| = {}", self.j, nu));
        }
        if nu > self.lambda * T::lit(2.0) {
            w.push(format!("|nu| = {} well above lambda = {}", nu, self.lambda));
        }
        w
    }
}

/// Laboratory quantities. Rates are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams<T> {
    /// Static field `B`, T.
    pub b_static: T,
    /// rf field amplitude `b`, T.
    pub b_rf: T,
    /// Magneto-gyric ratios, rad·s⁻¹·T⁻¹. Label the spins so that `gamma1 > gamma2`.
    pub gamma1: T,
    pub gamma2: T,
    /// rf angular frequency, rad/s.
    pub omega_rf: T,
    /// Molecular diameter, m.
    pub diameter: T,
    /// Field gradient dB/dz, T/m.
    pub grad: T,
}

impl<T: Real> PhysicalParams<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("b_static", self.b_static),
            ("b_rf", self.b_rf),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("omega_rf", self.omega_rf),
            ("diameter", self.diameter),
            ("grad", self.grad),
        ];
        for (name, v) in fields {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(invalid(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let ratio = self.b_rf / self.b_static;
        if ratio > T::lit(0.01) {
            vec![format!("b/B = {ratio} is not small; rf chemical-shift term neglected")]
        } else {
            Vec::new()
        }
    }

    pub fn mean_gamma(&self) -> T {
        (self.gamma1 + self.gamma2) * T::lit(0.5)
    }

    /// `d = (ω₁ − ω₂)/2` in rad/s.
    pub fn shift_half_difference(&self) -> T {
        (self.gamma1 - self.gamma2) * self.b_static * T::lit(0.5)
    }
}

/// Dimensionless parameters together with the rate that maps them back to s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledFrame<T> {
    /// `ν`, `d = 1`, `λ`; `j` and `η` are zero until supplied.
    pub params: RotatingFrameParams<T>,
    /// The physical `d`, rad/s. One simulation time unit is `1/d_rate` seconds.
    pub d_rate: T,
}

impl<T: Real> ScaledFrame<T> {
    /// Attaches measured j-coupling and collapse rates given in s⁻¹.
    pub fn with_rates(self, j_rate: T, eta_rate: T) -> RotatingFrameParams<T> {
        RotatingFrameParams { j: j_rate / self.d_rate, eta: eta_rate / self.d_rate, ..self.params }
    }

    pub fn seconds(&self, t: T) -> T {
        t / self.d_rate
    }
}

/// Converts lab quantities to the rotating frame with `d = 1`.
pub fn to_rotating_frame<T: Real>(p: &PhysicalParams<T>) -> Result<ScaledFrame<T>> {
    p.validate()?;
    let d = p.shift_half_difference();
    if d == T::zero() {
        return Err(invalid("gamma1", "equal Larmor frequencies leave no chemical shift (d = 0)"));
    }
    if d < T::zero() {
        return Err(invalid("gamma1", "must exceed gamma2 so that d > 0"));
    }
    let omega_bar = p.mean_gamma() * p.b_static;
    let nu = omega_bar - p.omega_rf;
    let lambda = p.b_rf / p.b_static * omega_bar;
    Ok(ScaledFrame {
        params: RotatingFrameParams::new(nu / d, T::one(), T::zero(), lambda / d, T::zero()),
        d_rate: d,
    })
}

/// Real symmetric rotating-frame Hamiltonian in the `|↑↑⟩, |↓↓⟩, |↑↓⟩, |↓↑⟩` basis.
pub fn build_hamiltonian<T: Real>(rp: &RotatingFrameParams<T>) -> Mat4<T> {
    let RotatingFrameParams { nu, d, j, lambda, .. } = *rp;
    let l = lambda * T::lit(0.5);
    let jj = j + j;
    let z = T::zero();
    [
        [j - nu, z, l, l],
        [z, j + nu, l, l],
        [l, l, -j + d, jj],
        [l, l, jj, -j - d],
    ]
}

/// Spectral decomposition of a real symmetric 4×4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem<T> {
    /// Ascending.
    pub values: [T; 4],
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Mat4<T>,
    /// `max_k ‖H v_k − κ_k v_k‖`.
    pub residual: T,
}

impl<T: Real> EigenSystem<T> {
    pub fn vector(&self, k: usize) -> [T; 4] {
        std::array::from_fn(|i| self.vectors[i][k])
    }
}

pub fn eigensystem<T: Real>(h: &Mat4<T>) -> Result<EigenSystem<T>> {
    let asym = asymmetry(h);
    if asym > T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) {
        return Err(Error::NotHermitian { asymmetry: asym.as_f64() });
    }
    let e = jacobi_eigen(h)?;
    let mut residual = T::zero();
    for k in 0..4 {
        let v = e.vector(k);
        let mut r = T::zero();
        for i in 0..4 {
            let hv = (0..4).fold(T::zero(), |s, m| s + h[i][m] * v[m]);
            let d = hv - e.values[k] * v[i];
            r = r + d * d;
        }
        residual = residual.max(r.sqrt());
    }
    Ok(EigenSystem { values: e.values, vectors: e.vectors, residual })
}

/// `(κ0, κ1)`, the magnitudes of the two eigenvalue pairs of the `j = 0`
/// Hamiltonian, `0 ≤ κ0 ≤ κ1`.
pub fn kappas<T: Real>(rp: &RotatingFrameParams<T>) -> Result<(T, T)> {
    let e = eigensystem(&build_hamiltonian(&rp.with_j(T::zero())))?;
    let v = e.values;
    let k0 = (v[2] - v[1]) * T::lit(0.5);
    let k1 = (v[3] - v[0]) * T::lit(0.5);
    Ok((k0, k1))
}

/// First-order frequencies `[κ0 + j, −κ0 + j, κ1 − j, −κ1 − j]`.
///
/// These are the j-shifted eigenvalues of the evolution generator `−H`; the
/// low-frequency beat between the κ0 pair is `2j`.
pub fn perturbed_eigenvalues<T: Real>(rp: &RotatingFrameParams<T>) -> Result<[T; 4]> {
    let (k0, k1) = kappas(rp)?;
    let j = rp.j;
    Ok([k0 + j, -k0 + j, k1 - j, -k1 - j])
}

/// Exact eigenvalues of the evolution generator `−H`, ascending.
pub fn dynamical_frequencies<T: Real>(rp: &RotatingFrameParams<T>) -> Result<[T; 4]> {
    let v = eigensystem(&build_hamiltonian(rp))?.values;
    Ok([-v[3], -v[2], -v[1], -v[0]])
}

/// `E(t) ≈ (1 + ν²/λ²)⁻¹ |sin(2jt)|`, valid to lowest order in `j`.
pub fn entanglement_approx<T: Real>(rp: &RotatingFrameParams<T>, t: T) -> T {
    entanglement_prefactor(rp) * (T::lit(2.0) * rp.j * t).sin().abs()
}

/// `(1 + ν²/λ²)⁻¹`.
pub fn entanglement_prefactor<T: Real>(rp: &RotatingFrameParams<T>) -> T {
    T::one() / (T::one() + (rp.nu * rp.nu) / (rp.lambda * rp.lambda))
}

/// `t_e = π/(2j)`, in whatever time unit `j` is the inverse of.
pub fn entanglement_period<T: Real>(j: T) -> Result<T> {
    if !(j > T::zero()) {
        return Err(invalid("j", "entanglement period needs j > 0"));
    }
    Ok(T::FRAC_PI_2() / j)
}

/// `t_sg = ħ / (μ D dB/dz)` for a magnetic moment `μ` in J/T. Returns `+∞`
/// for a vanishing gradient.
pub fn stern_gerlach_time_from_moment<T: Real>(moment: T, diameter: T, grad: T) -> T {
    let rate = moment * diameter * grad / T::lit(HBAR);
    if rate == T::zero() {
        T::infinity()
    } else {
        T::one() / rate
    }
}

/// Proton magnetic moment implied by a magneto-gyric ratio, `μ = ħγ/2`.
pub fn spin_half_moment<T: Real>(gamma: T) -> T {
    T::lit(HBAR) * gamma * T::lit(0.5)
}

/// Stern-Gerlach separation time, seconds, using the mean moment of the two
/// protons.
pub fn stern_gerlach_time<T: Real>(p: &PhysicalParams<T>) -> T {
    stern_gerlach_time_from_moment(spin_half_moment(p.mean_gamma()), p.diameter, p.grad)
}

/// `t_e / t_sg` with both in seconds. A ratio in `[0.1, 10]` counts as
/// satisfying `t_e ≈ t_sg`.
pub fn timing_condition<T: Real>(rp: &RotatingFrameParams<T>, p: &PhysicalParams<T>) -> Result<T> {
    let frame = to_rotating_frame(p)?;
    let t_e = frame.seconds(entanglement_period(rp.j)?);
    Ok(t_e / stern_gerlach_time(p))
}

pub fn timing_satisfied<T: Real>(ratio: T) -> bool {
    ratio >= T::lit(0.1) && ratio <= T::lit(10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hamiltonian_reference_j0() {
        let rp = RotatingFrameParams::<f64>::reference().with_j(0.0);
        let h = build_hamiltonian(&rp);
        let diag: Vec<f64> = (0..4).map(|i| h[i][i]).collect();
        assert_eq!(diag, vec![-5.0, 5.0, 1.0, -1.0]);
        for i in 0..2 {
            for k in 2..4 {
                assert_eq!(h[i][k], 5.0);
                assert_eq!(h[k][i], 5.0);
            }
        }
        assert_eq!(h[0][1], 0.0);
        assert_eq!(h[2][3], 0.0);
    }

    #[test]
    fn hamiltonian_zero_params() {
        let h = build_hamiltonian(&RotatingFrameParams::<f64>::new(0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(h.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn eigensystem_rejects_asymmetric() {
        let mut h = build_hamiltonian(&RotatingFrameParams::<f64>::reference());
        h[0][2] += 1e-6;
        assert!(matches!(eigensystem(&h), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn perturbed_j0_equals_exact() {
        let rp = RotatingFrameParams::<f64>::reference().with_j(0.0);
        let mut p = perturbed_eigenvalues(&rp).unwrap();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let exact = dynamical_frequencies(&rp).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(p[k], exact[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn approx_examples() {
        let rp = RotatingFrameParams::<f64>::reference();
        let quarter = std::f64::consts::PI / (4.0 * rp.j);
        assert_abs_diff_eq!(entanglement_approx(&rp, quarter), 0.8, epsilon = 1e-12);
        assert_eq!(entanglement_approx(&rp, 0.0), 0.0);
        assert_abs_diff_eq!(entanglement_approx(&rp, 2.0 * quarter), 0.0, epsilon = 1e-12);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn period_examples() {
        assert_abs_diff_eq!(entanglement_period(0.0025_f64).unwrap(), 628.3185307179587, epsilon = 1e-9);
        assert_abs_diff_eq!(entanglement_period(1.0_f64).unwrap(), 1.5708, epsilon = 5e-5);
        assert_abs_diff_eq!(
            entanglement_period(0.005_f64).unwrap() * 2.0,
            entanglement_period(0.0025_f64).unwrap(),
            epsilon = 1e-12
        );
        assert!(entanglement_period(0.0_f64).is_err());
        assert!(entanglement_period(-1.0_f64).is_err());
    }

    #[test]
    fn stern_gerlach_examples() {
        let t = stern_gerlach_time_from_moment(1.41e-26_f64, 1e-9, 100.0);
        assert_abs_diff_eq!(t, HBAR / (1.41e-26 * 1e-9 * 100.0), epsilon = 1e-15);
        assert!((0.07..0.08).contains(&t));
        assert_eq!(stern_gerlach_time_from_moment(1.41e-26_f64, 1e-9, 0.0), f64::INFINITY);
        let t2 = stern_gerlach_time_from_moment(1.41e-26_f64, 2e-9, 100.0);
        assert_abs_diff_eq!(t2, t / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn rotating_frame_rejects_equal_gammas() {
        let p = PhysicalParams {
            b_static: 1.0,
            b_rf: 1e-4,
            gamma1: 4e7,
            gamma2: 4e7,
            omega_rf: 4e7,
            diameter: 1e-9,
            grad: 100.0,
        };
        assert!(to_rotating_frame(&p).is_err());
    }
}

//! Two-spin state and its observables.
//!
//! Amplitudes are ordered `|↑↑⟩, |↓↓⟩, |↑↓⟩, |↓↑⟩`, which is also the row and
//! column order of the Hamiltonian in [`crate::hamiltonian`].

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{cmatvec, CMat};
use crate::scalar::{principal_arg, Real};

/// Default threshold on `|det C|` below which the determinant phase is
/// treated as indeterminate.
pub const DEFAULT_EPS_DET: f64 = 1e-12;

/// Tolerance on `|‖ψ‖ - 1|` accepted by observables that need a normalized state.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Single-spin index of each basis state: 0 = up, 1 = down.
const SPINS: [(usize, usize); 4] = [(0, 0), (1, 1), (0, 1), (1, 0)];

/// Two-qubit pure state `c11|↑↑⟩ + c22|↓↓⟩ + c12|↑↓⟩ + c21|↓↑⟩`.
///
/// The amplitudes are kept exactly as produced; nothing renormalizes them, so
/// integrator drift stays visible through [`SpinState::norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState<T> {
    pub c11: Complex<T>,
    pub c22: Complex<T>,
    pub c12: Complex<T>,
    pub c21: Complex<T>,
}

impl<T: Real> SpinState<T> {
    pub fn new(c11: Complex<T>, c22: Complex<T>, c12: Complex<T>, c21: Complex<T>) -> Self {
        Self { c11, c22, c12, c21 }
    }

    pub fn from_array(c: [Complex<T>; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [Complex<T>; 4] {
        [self.c11, self.c22, self.c12, self.c21]
    }

    pub fn up_up() -> Self {
        Self::basis(0)
    }

    pub fn down_down() -> Self {
        Self::basis(1)
    }

    /// Basis state `k` in the `|↑↑⟩, |↓↓⟩, |↑↓⟩, |↓↑⟩` order.
    pub fn basis(k: usize) -> Self {
        let mut c = [Complex::zero(); 4];
        c[k] = Complex::new(T::one(), T::zero());
        Self::from_array(c)
    }

    /// `(|↑↑⟩ + |↓↓⟩)/√2`.
    pub fn bell() -> Self {
        let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        Self::new(h, h, Complex::zero(), Complex::zero())
    }

    pub fn norm_sqr(&self) -> T {
        self.to_array().iter().fold(T::zero(), |s, c| s + c.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// `det C = c11·c22 − c12·c21`.
    pub fn det(&self) -> Complex<T> {
        self.c11 * self.c22 - self.c12 * self.c21
    }

    pub fn check_normalized(&self, tol: T) -> Result<()> {
        let deviation = (self.norm() - T::one()).abs();
        if deviation > tol {
            Err(Error::NotNormalized { deviation: deviation.as_f64() })
        } else {
            Ok(())
        }
    }

    /// `max_k |a_k − b_k|` over the four amplitudes.
    pub fn distance(&self, other: &Self) -> T {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .fold(T::zero(), |m, (a, b)| m.max((*a - b).norm()))
    }
}

/// `E = 2|det C|`.
///
/// Computed on the amplitudes as given; lies in `[0, 1]` for normalized states.
pub fn entanglement<T: Real>(s: &SpinState<T>) -> T {
    T::lit(2.0) * s.det().norm()
}

/// Total-spin Pauli operators `Σ = σ⁽¹⁾ + σ⁽²⁾` in the state basis.
#[derive(Debug, Clone, Copy)]
pub struct TotalSpin<T> {
    pub x: CMat<T, 4>,
    pub y: CMat<T, 4>,
    pub z: CMat<T, 4>,
}

/// `a ⊗ b` re-indexed into the `|↑↑⟩, |↓↓⟩, |↑↓⟩, |↓↑⟩` basis.
pub fn kron2<T: Real>(a: &CMat<T, 2>, b: &CMat<T, 2>) -> CMat<T, 4> {
    let mut m = [[Complex::zero(); 4]; 4];
    for (r, &(r1, r2)) in SPINS.iter().enumerate() {
        for (c, &(c1, c2)) in SPINS.iter().enumerate() {
            m[r][c] = a[r1][c1] * b[r2][c2];
        }
    }
    m
}

/// Single-spin Pauli matrices in the `(↑, ↓)` basis.
pub fn pauli<T: Real>() -> [CMat<T, 2>; 3] {
    let o = Complex::zero();
    let one = T::cplx(1.0, 0.0);
    let i = T::cplx(0.0, 1.0);
    [[[o, one], [one, o]], [[o, -i], [i, o]], [[one, o], [o, -one]]]
}

fn identity2<T: Real>() -> CMat<T, 2> {
    let one = T::cplx(1.0, 0.0);
    [[one, Complex::zero()], [Complex::zero(), one]]
}

impl<T: Real> TotalSpin<T> {
    pub fn new() -> Self {
        let id = identity2::<T>();
        let [sx, sy, sz] = pauli::<T>();
        let total = |s: &CMat<T, 2>| {
            let a = kron2(s, &id);
            let b = kron2(&id, s);
            let mut m = a;
            for (x, y) in m.iter_mut().flatten().zip(b.iter().flatten()) {
                *x = *x + *y;
            }
            m
        };
        Self { x: total(&sx), y: total(&sy), z: total(&sz) }
    }
}

impl<T: Real> Default for TotalSpin<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn expectation<T: Real>(op: &CMat<T, 4>, psi: &[Complex<T>; 4]) -> Complex<T> {
    let h = cmatvec(op, psi);
    psi.iter().zip(h).fold(Complex::zero(), |s, (a, b)| s + a.conj() * b)
}

/// Transverse magnetization `M = (⟨Σx/2⟩² + ⟨Σy/2⟩²)^{1/2}` of the total spin.
///
/// Two spins fully polarized along x give `M = 1`. Rejects states whose norm
/// deviates from one by more than [`NORM_TOLERANCE`].
pub fn transverse_magnetization<T: Real>(s: &SpinState<T>) -> Result<T> {
    s.check_normalized(T::lit(NORM_TOLERANCE))?;
    Ok(transverse_magnetization_with(&TotalSpin::new(), s))
}

/// Same as [`transverse_magnetization`] with prebuilt operators and no norm check.
pub fn transverse_magnetization_with<T: Real>(ops: &TotalSpin<T>, s: &SpinState<T>) -> T {
    let psi = s.to_array();
    let half = T::lit(0.5);
    let mx = expectation(&ops.x, &psi).re * half;
    let my = expectation(&ops.y, &psi).re * half;
    mx.hypot(my)
}

/// Principal argument of `det C` in `(−π, π]` and whether it is defined.
///
/// Returns `(0, false)` when `|det C| < eps_det`.
pub fn arg_det<T: Real>(s: &SpinState<T>, eps_det: T) -> (T, bool) {
    let det = s.det();
    if det.norm() < eps_det {
        (T::zero(), false)
    } else {
        (principal_arg(det), true)
    }
}

/// `U†U − I` measured as the largest entry magnitude.
pub fn unitarity_residual<T: Real>(u: &CMat<T, 2>) -> T {
    let mut worst = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            let mut s = Complex::zero();
            for k in 0..2 {
                s = s + u[k][i].conj() * u[k][j];
            }
            if i == j {
                s = s - T::cplx(1.0, 0.0);
            }
            worst = worst.max(s.norm());
        }
    }
    worst
}

/// Applies the product transformation `u1 ⊗ u2`; `u1` acts on the first spin.
pub fn local_unitary<T: Real>(s: &SpinState<T>, u1: &CMat<T, 2>, u2: &CMat<T, 2>) -> Result<SpinState<T>> {
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0));
    for (which, u) in [("u1", u1), ("u2", u2)] {
        let residual = unitarity_residual(u);
        if residual > tol {
            return Err(Error::NotUnitary { which, residual: residual.as_f64() });
        }
    }
    let op = kron2(u1, u2);
    Ok(SpinState::from_array(cmatvec(&op, &s.to_array())))
}

/// Derived observables at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableSample<T> {
    pub t: T,
    pub m: T,
    pub e: T,
    pub arg_det: T,
    pub arg_det_valid: bool,
    pub norm: T,
}

impl<T: Real> ObservableSample<T> {
    /// Evaluates all observables without the normalization check, so drifted
    /// states still produce a row that records their norm.
    pub fn measure(ops: &TotalSpin<T>, t: T, s: &SpinState<T>, eps_det: T) -> Self {
        let (arg, valid) = arg_det(s, eps_det);
        Self {
            t,
            m: transverse_magnetization_with(ops, s),
            e: entanglement(s),
            arg_det: arg,
            arg_det_valid: valid,
            norm: s.norm(),
        }
    }
}

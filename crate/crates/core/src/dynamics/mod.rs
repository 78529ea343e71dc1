//! Time evolution of the two-spin state.
//!
//! All evolvers use `dC/dt = +i H C + s·η e^{i arg det C} Υ C*`, where `Υ` has
//! `−1` at (1,2) and `+1` at (2,1) and acts only between `|↑↑⟩` and `|↓↓⟩`,
//! and `s = ±1` is [`NonlinearSign`](crate::hamiltonian::NonlinearSign).
//! The phase factor `e^{i arg det C}` is evaluated as `det C / max(|det C|, δ)`
//! with a small switching width `δ`: it equals the unit phase once
//! `|det C| ≥ δ` and fades linearly to zero as the state factorizes. A hard
//! on/off switch makes the equation discontinuous on `det C = 0`, and when
//! the non-linear term pushes the state back onto that surface faster than
//! the linear motion leaves it the solution chatters and an adaptive
//! integrator stalls.
//!
//! With `s = −1` a product state is unstable: near `det C = 0` the term makes
//! `det C` grow at rate `η` along its own phase, so the phase it is born with
//! (set by `δ`, `eps_det` and integration noise) persists as an `O(10⁻³)`
//! offset in the state. Below `δ ≈ 10⁻⁵` the ramp is steep enough that this
//! birth amplifies round-off and results stop converging in the tolerance;
//! the default `δ = 10⁻⁴` keeps runs reproducible to the requested accuracy.

pub mod ode;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{build_hamiltonian, eigensystem, RotatingFrameParams};
use crate::linalg::{cmatvec, expm, CMat, Mat4};
use crate::scalar::Real;
use crate::spin::{ObservableSample, SpinState, TotalSpin, DEFAULT_EPS_DET, NORM_TOLERANCE};

use self::ode::{integrate_partial, OdeOptions};

/// Default `δ` for the phase-factor ramp.
pub const DEFAULT_SWITCH_WIDTH: f64 = 1e-4;

/// Tolerances and sampling for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
    /// Threshold on `|det C|` below which `arg det C` is reported invalid and
    /// the non-linear term is exactly zero.
    pub eps_det: T,
    /// Width `δ` of the linear ramp of the phase factor near `det C = 0`.
    pub switch_width: T,
    pub sample_interval: T,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-11),
            abs_tol: T::lit(1e-14),
            max_step: T::lit(0.5),
            eps_det: T::lit(DEFAULT_EPS_DET),
            switch_width: T::lit(DEFAULT_SWITCH_WIDTH),
            sample_interval: T::lit(0.25),
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("eps_det", self.eps_det),
            ("switch_width", self.switch_width),
            ("sample_interval", self.sample_interval),
        ];
        for (name, v) in fields {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(invalid(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }

    fn ode_options(&self) -> OdeOptions<T> {
        OdeOptions { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_step: self.max_step }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact propagation through the eigen-decomposition of `H`.
    Spectral,
    /// Adaptive Dormand–Prince 5(4) on the full non-linear equation.
    DormandPrince45,
    /// Exponential of the 8×8 generator with the determinant phase frozen.
    LinearizedExpm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::DormandPrince45 => "dopri45",
            Method::LinearizedExpm => "linearized-expm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorMeta<T> {
    pub method: Method,
    pub rel_tol: Option<T>,
    pub abs_tol: Option<T>,
    pub eps_det: T,
    pub frozen_phase: Option<T>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
}

impl<T: Real> IntegratorMeta<T> {
    fn exact(method: Method, eps_det: T, frozen_phase: Option<T>) -> Self {
        Self {
            method,
            rel_tol: None,
            abs_tol: None,
            eps_det,
            frozen_phase,
            accepted_steps: 0,
            rejected_steps: 0,
            rhs_evals: 0,
        }
    }
}

/// Time-ordered states and their observables.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub params: RotatingFrameParams<T>,
    pub states: Vec<SpinState<T>>,
    pub samples: Vec<ObservableSample<T>>,
    pub meta: IntegratorMeta<T>,
}

impl<T: Real> Trajectory<T> {
    fn from_states(
        params: RotatingFrameParams<T>,
        grid: &[T],
        states: Vec<SpinState<T>>,
        meta: IntegratorMeta<T>,
    ) -> Self {
        let ops = TotalSpin::new();
        let samples = grid
            .iter()
            .zip(&states)
            .map(|(&t, s)| ObservableSample::measure(&ops, t, s, meta.eps_det))
            .collect();
        Self { params, states, samples, meta }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn magnetization(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.m).collect()
    }

    pub fn entanglement(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.e).collect()
    }

    pub fn disentanglement(&self) -> Vec<T> {
        self.samples.iter().map(|s| T::one() - s.e).collect()
    }

    pub fn max_norm_drift(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, s| m.max((s.norm - T::one()).abs()))
    }

    /// Largest amplitude difference against another trajectory on the same grid.
    pub fn sup_distance(&self, other: &Self) -> T {
        self.states.iter().zip(&other.states).fold(T::zero(), |m, (a, b)| m.max(a.distance(b)))
    }
}

/// `n` equally spaced times covering `[0, t_end]`.
pub fn uniform_grid<T: Real>(t_end: T, n: usize) -> Vec<T> {
    let last = T::from_usize(n.saturating_sub(1).max(1)).expect("grid size");
    (0..n).map(|k| t_end * T::from_usize(k).expect("grid index") / last).collect()
}

/// Times `0, dt, 2dt, …` not exceeding `t_end` (plus a rounding allowance).
pub fn grid_with_interval<T: Real>(t_end: T, dt: T) -> Vec<T> {
    let n = (t_end / dt + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    (0..=n).map(|k| dt * T::from_usize(k).expect("grid index")).collect()
}

fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.is_empty() || grid[0] < T::zero() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadTimeGrid);
    }
    Ok(())
}

fn check_start<T: Real>(rp: &RotatingFrameParams<T>, s0: &SpinState<T>, grid: &[T]) -> Result<()> {
    check_grid(grid)?;
    s0.check_normalized(T::lit(NORM_TOLERANCE))?;
    if [rp.nu, rp.d, rp.j, rp.lambda, rp.eta].iter().any(|x| !x.is_finite()) {
        return Err(invalid("params", "all parameters must be finite"));
    }
    if rp.eta < T::zero() {
        return Err(invalid("eta", "must be >= 0"));
    }
    Ok(())
}

/// Exact linear evolution (`η` ignored) through the spectral decomposition:
/// `ψ(t) = Σ_k e^{iκ_k t} ⟨v_k|ψ₀⟩ v_k`.
pub fn evolve_linear<T: Real>(rp: &RotatingFrameParams<T>, s0: &SpinState<T>, grid: &[T]) -> Result<Trajectory<T>> {
    check_start(rp, s0, grid)?;
    let es = eigensystem(&build_hamiltonian(rp))?;
    let psi0 = s0.to_array();
    let overlaps: [Complex<T>; 4] = std::array::from_fn(|k| {
        (0..4).fold(Complex::zero(), |acc, i| acc + psi0[i] * es.vectors[i][k])
    });
    let states = grid
        .iter()
        .map(|&t| {
            let mut c = [Complex::zero(); 4];
            for k in 0..4 {
                let phase = Complex::from_polar(T::one(), es.values[k] * t) * overlaps[k];
                for (ci, row) in c.iter_mut().zip(&es.vectors) {
                    *ci = *ci + phase * row[k];
                }
            }
            SpinState::from_array(c)
        })
        .collect();
    let meta = IntegratorMeta::exact(Method::Spectral, T::lit(DEFAULT_EPS_DET), None);
    Ok(Trajectory::from_states(*rp, grid, states, meta))
}

fn pack<T: Real>(s: &SpinState<T>) -> [T; 8] {
    let c = s.to_array();
    std::array::from_fn(|i| if i % 2 == 0 { c[i / 2].re } else { c[i / 2].im })
}

fn unpack<T: Real>(y: &[T; 8]) -> SpinState<T> {
    SpinState::from_array(std::array::from_fn(|k| Complex::new(y[2 * k], y[2 * k + 1])))
}

/// Right-hand side of the full non-linear equation for one state; `eta`
/// carries the sign `s`.
pub fn inl_rhs<T: Real>(h: &Mat4<T>, eta: T, eps_det: T, width: T, c: &[Complex<T>; 4]) -> [Complex<T>; 4] {
    let i = Complex::new(T::zero(), T::one());
    let mut dc: [Complex<T>; 4] =
        std::array::from_fn(|r| i * (0..4).fold(Complex::zero(), |s, k| s + c[k] * h[r][k]));
    if eta != T::zero() {
        let det = c[0] * c[1] - c[2] * c[3];
        let mag = det.norm();
        if mag >= eps_det {
            let g = det / mag.max(width) * eta;
            dc[0] = dc[0] - g * c[1].conj();
            dc[1] = dc[1] + g * c[0].conj();
        }
    }
    dc
}

/// Full non-linear evolution with the adaptive integrator; states at `grid`
/// come from dense output.
pub fn evolve_inl<T: Real>(
    rp: &RotatingFrameParams<T>,
    s0: &SpinState<T>,
    grid: &[T],
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    match evolve_inl_partial(rp, s0, grid, cfg)? {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

/// [`evolve_inl`] that keeps the samples reached before an integrator
/// failure. Invalid inputs are still an `Err`.
pub fn evolve_inl_partial<T: Real>(
    rp: &RotatingFrameParams<T>,
    s0: &SpinState<T>,
    grid: &[T],
    cfg: &IntegratorConfig<T>,
) -> Result<(Trajectory<T>, Option<Error>)> {
    check_start(rp, s0, grid)?;
    cfg.validate()?;
    let h = build_hamiltonian(rp);
    let eta = rp.sign.factor::<T>() * rp.eta;
    let (eps, width) = (cfg.eps_det, cfg.switch_width);
    let rhs = |_t: T, y: &[T; 8]| {
        let c = unpack(y).to_array();
        pack(&SpinState::from_array(inl_rhs(&h, eta, eps, width, &c)))
    };
    let (ys, stats, failure) = integrate_partial(rhs, T::zero(), pack(s0), grid, &cfg.ode_options());
    let states = ys.iter().map(unpack).collect();
    let meta = IntegratorMeta {
        method: Method::DormandPrince45,
        rel_tol: Some(cfg.rel_tol),
        abs_tol: Some(cfg.abs_tol),
        eps_det: cfg.eps_det,
        frozen_phase: None,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
        rhs_evals: stats.rhs_evals,
    };
    Ok((Trajectory::from_states(*rp, &grid[..ys.len()], states, meta), failure))
}

/// Generator of the linear system in `(C, C*)` obtained by freezing
/// `arg det C` at `phase`.
pub fn linearized_generator<T: Real>(rp: &RotatingFrameParams<T>, phase: T) -> CMat<T, 8> {
    let h = build_hamiltonian(rp);
    let mut g = [[Complex::<T>::zero(); 8]; 8];
    for r in 0..4 {
        for c in 0..4 {
            g[r][c] = Complex::new(T::zero(), h[r][c]);
            g[r + 4][c + 4] = Complex::new(T::zero(), -h[r][c]);
        }
    }
    let up = Complex::from_polar(rp.sign.factor::<T>() * rp.eta, phase);
    let down = up.conj();
    // Υ: −1 at (0, 1), +1 at (1, 0).
    g[0][5] = -up;
    g[1][4] = up;
    g[4][1] = -down;
    g[5][0] = down;
    g
}

/// Phase at which [`evolve_linearized`] freezes `arg det C` by default.
pub fn default_frozen_phase<T: Real>() -> T {
    T::FRAC_PI_2()
}

/// Linearized evolution: the phase factor is the constant `e^{i·frozen_phase}`
/// and the resulting eight-variable system is propagated exactly.
pub fn evolve_linearized<T: Real>(
    rp: &RotatingFrameParams<T>,
    s0: &SpinState<T>,
    grid: &[T],
    frozen_phase: T,
) -> Result<Trajectory<T>> {
    check_start(rp, s0, grid)?;
    let g = linearized_generator(rp, frozen_phase);
    let c = s0.to_array();
    let z0: [Complex<T>; 8] = std::array::from_fn(|i| if i < 4 { c[i] } else { c[i - 4].conj() });
    let states = grid
        .iter()
        .map(|&t| {
            let mut gt = g;
            for x in gt.iter_mut().flatten() {
                *x = *x * t;
            }
            let z = cmatvec(&expm(&gt), &z0);
            SpinState::new(z[0], z[1], z[2], z[3])
        })
        .collect();
    let meta = IntegratorMeta::exact(Method::LinearizedExpm, T::lit(DEFAULT_EPS_DET), Some(frozen_phase));
    Ok(Trajectory::from_states(*rp, grid, states, meta))
}

/// Window and bound for [`self_consistency`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyOptions<T> {
    /// Entanglement period `t_e`; the halves are split at `t_e/2`.
    pub t_e: T,
    /// Samples within `margin·t_e` of `0` and `t_e` are skipped, where the
    /// determinant vanishes and its phase is meaningless.
    pub margin: T,
    pub target: T,
    pub bound: T,
}

impl<T: Real> ConsistencyOptions<T> {
    pub fn new(t_e: T) -> Self {
        Self { t_e, margin: T::lit(0.05), target: T::FRAC_PI_2(), bound: T::lit(0.3) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport<T> {
    /// `(t, arg det C)` for every valid sample.
    pub series: Vec<(T, T)>,
    pub first_half_max: Option<T>,
    pub second_half_max: Option<T>,
    pub bound: T,
    pub first_half_pass: bool,
    pub second_half_pass: bool,
}

/// Compares the recomputed determinant phase with the frozen value over the
/// two halves of `[0, t_e]`.
pub fn self_consistency<T: Real>(traj: &Trajectory<T>, opts: &ConsistencyOptions<T>) -> Result<ConsistencyReport<T>> {
    let series: Vec<(T, T)> =
        traj.samples.iter().filter(|s| s.arg_det_valid).map(|s| (s.t, s.arg_det)).collect();
    if series.len() < 2 {
        return Err(Error::Indeterminate);
    }
    let lo = opts.margin * opts.t_e;
    let mid = opts.t_e * T::lit(0.5);
    let hi = opts.t_e - lo;
    let max_dev = |a: T, b: T| {
        series
            .iter()
            .filter(|(t, _)| *t > a && *t <= b)
            .map(|(_, x)| (*x - opts.target).abs())
            .reduce(T::max)
    };
    let first = max_dev(lo, mid);
    let second = max_dev(mid, hi);
    let pass = |d: Option<T>| d.is_some_and(|d| d < opts.bound);
    Ok(ConsistencyReport {
        first_half_pass: pass(first),
        second_half_pass: pass(second),
        first_half_max: first,
        second_half_max: second,
        bound: opts.bound,
        series,
    })
}

/// Which evolver to use where a caller can choose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evolver<T> {
    Linear,
    Inl(IntegratorConfig<T>),
    Linearized { frozen_phase: T },
}

impl<T: Real> Evolver<T> {
    pub fn run(&self, rp: &RotatingFrameParams<T>, s0: &SpinState<T>, grid: &[T]) -> Result<Trajectory<T>> {
        match self {
            Evolver::Linear => evolve_linear(rp, s0, grid),
            Evolver::Inl(cfg) => evolve_inl(rp, s0, grid, cfg),
            Evolver::Linearized { frozen_phase } => evolve_linearized(rp, s0, grid, *frozen_phase),
        }
    }
}

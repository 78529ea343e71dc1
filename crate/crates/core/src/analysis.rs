//! Post-processing of trajectories: the slow envelope of `M(t)`, its
//! correlation with `1 − E`, the collapse-induced envelope depression, the
//! structure of the non-linear coupling in the Hamiltonian eigenbasis, and
//! averaging over a detuning profile across a sample slab.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::dynamics::{evolve_inl, grid_with_interval, Evolver, IntegratorConfig, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{build_hamiltonian, eigensystem, entanglement_period, kappas, RotatingFrameParams};
use crate::linalg::{matmul, transpose, Mat4};
use crate::scalar::Real;
use crate::spin::SpinState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeMethod {
    SlidingMax,
}

/// Slow envelope of a sampled series.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSeries<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub window: T,
    pub method: EnvelopeMethod,
}

/// Default envelope window: four periods of the slowest oscillation riding
/// on the beat, the `2κ0` splitting of the inner eigenvalue pair. Falls back
/// to four `κ1` periods when `κ0` vanishes.
pub fn default_window<T: Real>(rp: &RotatingFrameParams<T>) -> Result<T> {
    let (k0, k1) = kappas(rp)?;
    if k0 > T::zero() {
        Ok(T::lit(4.0) * T::TAU() / (k0 + k0))
    } else if k1 > T::zero() {
        Ok(T::lit(4.0) * T::TAU() / k1)
    } else {
        Err(invalid("lambda", "no oscillation to size the envelope window"))
    }
}

fn sample_step<T: Real>(times: &[T]) -> Result<T> {
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / T::from_usize(n - 1).expect("length");
    if !(dt > T::zero()) {
        return Err(Error::NonUniformSampling);
    }
    let tol = dt * T::lit(1e-6);
    if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > tol) {
        return Err(Error::NonUniformSampling);
    }
    Ok(dt)
}

/// Sliding maximum over a window of `window` time units centred on each
/// sample. Near the ends the window is truncated but always spans at least
/// three samples.
pub fn envelope<T: Real>(times: &[T], values: &[T], window: T) -> Result<EnvelopeSeries<T>> {
    let n = times.len();
    if n < 3 || values.len() != n {
        return Err(Error::SeriesTooShort { len: n.min(values.len()), needed: 3 });
    }
    let dt = sample_step(times)?;
    if window < dt * T::lit(3.0) * (T::one() - T::lit(1e-9)) {
        return Err(invalid("window", "must span at least 3 sample intervals"));
    }
    let half = (window / (dt + dt)).round().to_usize().unwrap_or(1).max(1);

    // Monotone deque of indices with decreasing values.
    let mut out = Vec::with_capacity(n);
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut pushed = 0;
    for i in 0..n {
        let (lo, hi) = bounds(i, half, n);
        while pushed <= hi {
            while dq.back().is_some_and(|&b| values[b] <= values[pushed]) {
                dq.pop_back();
            }
            dq.push_back(pushed);
            pushed += 1;
        }
        while dq.front().is_some_and(|&f| f < lo) {
            dq.pop_front();
        }
        out.push(values[*dq.front().expect("window is non-empty")]);
    }
    Ok(EnvelopeSeries { times: times.to_vec(), values: out, window, method: EnvelopeMethod::SlidingMax })
}

fn bounds(i: usize, half: usize, n: usize) -> (usize, usize) {
    let mut lo = i.saturating_sub(half);
    let mut hi = (i + half).min(n - 1);
    if hi - lo < 2 {
        if lo == 0 {
            hi = (lo + 2).min(n - 1);
        } else {
            lo = hi.saturating_sub(2);
        }
    }
    (lo, hi)
}

/// Linear interpolation of `(xs, ys)` at `x`, clamped at the ends.
fn interpolate<T: Real>(xs: &[T], ys: &[T], x: T) -> T {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + w * (ys[k + 1] - ys[k])
}

/// Pearson correlation coefficient.
pub fn pearson<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    let n = a.len().min(b.len());
    if n < 2 {
        return Err(Error::SeriesTooShort { len: n, needed: 2 });
    }
    let nf = T::from_usize(n).expect("length");
    let ma = a[..n].iter().fold(T::zero(), |s, &x| s + x) / nf;
    let mb = b[..n].iter().fold(T::zero(), |s, &x| s + x) / nf;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a[..n].iter().zip(&b[..n]) {
        let (dx, dy) = (x - ma, y - mb);
        sab = sab + dx * dy;
        saa = saa + dx * dx;
        sbb = sbb + dy * dy;
    }
    if saa == T::zero() || sbb == T::zero() {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).max(-T::one()).min(T::one()))
}

/// Correlation between an envelope and a `(t, 1 − E)` series, with the
/// envelope resampled onto the series' times.
pub fn correlate<T: Real>(env: &EnvelopeSeries<T>, times: &[T], disentanglement: &[T]) -> Result<T> {
    if env.times.len() < 2 {
        return Err(Error::SeriesTooShort { len: env.times.len(), needed: 2 });
    }
    let resampled: Vec<T> = times.iter().map(|&t| interpolate(&env.times, &env.values, t)).collect();
    pearson(&resampled, disentanglement)
}

/// Envelope of `M(t)` for a trajectory with the default window.
pub fn magnetization_envelope<T: Real>(traj: &Trajectory<T>) -> Result<EnvelopeSeries<T>> {
    let window = default_window(&traj.params)?;
    envelope(&traj.times(), &traj.magnetization(), window)
}

/// Mean of `values` over samples whose time lies in `[lo, hi]`.
fn band_mean<T: Real>(times: &[T], values: &[T], lo: T, hi: T) -> Option<T> {
    let (s, n) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .fold((T::zero(), 0usize), |(s, n), (_, &v)| (s + v, n + 1));
    (n > 0).then(|| s / T::from_usize(n).expect("count"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Depression<T> {
    /// Mean envelope over the middle fifth of `[0, t_e]`, with `η`, divided by
    /// the same quantity at `η = 0`.
    pub ratio: T,
    pub t_e: T,
    pub with_collapse: EnvelopeSeries<T>,
    pub without_collapse: EnvelopeSeries<T>,
}

/// Envelope depression with the full non-linear integrator.
pub fn envelope_depression<T: Real>(
    rp: &RotatingFrameParams<T>,
    s0: &SpinState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Depression<T>> {
    envelope_depression_using(&Evolver::Inl(*cfg), rp, s0, cfg.sample_interval)
}

/// Envelope depression computed with any evolver on a grid of spacing
/// `sample_interval` over `[0, t_e]`.
pub fn envelope_depression_using<T: Real>(
    evolver: &Evolver<T>,
    rp: &RotatingFrameParams<T>,
    s0: &SpinState<T>,
    sample_interval: T,
) -> Result<Depression<T>> {
    let t_e = entanglement_period(rp.j)?;
    let grid = grid_with_interval(t_e, sample_interval);
    let with = magnetization_envelope(&evolver.run(rp, s0, &grid)?)?;
    let without = if rp.eta == T::zero() {
        with.clone()
    } else {
        let free = match evolver {
            Evolver::Inl(cfg) => evolve_inl(&rp.with_eta(T::zero()), s0, &grid, cfg)?,
            other => other.run(&rp.with_eta(T::zero()), s0, &grid)?,
        };
        magnetization_envelope(&free)?
    };
    let lo = t_e * T::lit(0.4);
    let hi = t_e * T::lit(0.6);
    let a = band_mean(&with.times, &with.values, lo, hi).ok_or(Error::SeriesTooShort { len: 0, needed: 1 })?;
    let b = band_mean(&without.times, &without.values, lo, hi).ok_or(Error::SeriesTooShort { len: 0, needed: 1 })?;
    if b == T::zero() {
        return Err(Error::ZeroVariance);
    }
    Ok(Depression { ratio: a / b, t_e, with_collapse: with, without_collapse: without })
}

/// The non-linear coupling matrix `Υ`: `−1` at (1,2), `+1` at (2,1).
pub fn upsilon<T: Real>() -> Mat4<T> {
    let mut m = [[T::zero(); 4]; 4];
    m[0][1] = -T::one();
    m[1][0] = T::one();
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpsilonReport<T> {
    /// `Vᵀ Υ V` with the eigenvectors ordered `+κ0, −κ0, +κ1, −κ1`
    /// (eigenvalues of `−H`).
    pub transformed: Mat4<T>,
    pub basis: Mat4<T>,
    /// Frequencies matching the basis columns.
    pub frequencies: [T; 4],
    /// `max |Υ′ + Υ′ᵀ|`.
    pub antisymmetry_residual: T,
    /// `|Υ′₁₂|` over the largest other off-diagonal magnitude.
    pub dominance: T,
}

/// Expresses `Υ` in the eigenbasis of the Hamiltonian.
pub fn upsilon_eigenbasis<T: Real>(rp: &RotatingFrameParams<T>) -> Result<UpsilonReport<T>> {
    let es = eigensystem(&build_hamiltonian(rp))?;
    // Ascending eigenvalues of H are −κ1', −κ0', κ0', κ1' up to j shifts; the
    // generator −H reverses the sign, so +κ0 ↔ index 1 and −κ0 ↔ index 2.
    let order = [1usize, 2, 0, 3];
    let mut basis = [[T::zero(); 4]; 4];
    let mut frequencies = [T::zero(); 4];
    for (col, &k) in order.iter().enumerate() {
        frequencies[col] = -es.values[k];
        for i in 0..4 {
            basis[i][col] = es.vectors[i][k];
        }
    }
    Ok(upsilon_in_basis(&basis, frequencies))
}

/// `Vᵀ Υ V` for an arbitrary real orthogonal `V`.
pub fn upsilon_in_basis<T: Real>(basis: &Mat4<T>, frequencies: [T; 4]) -> UpsilonReport<T> {
    let transformed = matmul(&matmul(&transpose(basis), &upsilon()), basis);
    let mut residual = T::zero();
    let mut other = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            residual = residual.max((transformed[i][j] + transformed[j][i]).abs());
            if i != j && !matches!((i, j), (0, 1) | (1, 0)) {
                other = other.max(transformed[i][j].abs());
            }
        }
    }
    let main = transformed[0][1].abs();
    let dominance = if other == T::zero() { T::infinity() } else { main / other };
    UpsilonReport { transformed, basis: *basis, frequencies, antisymmetry_residual: residual, dominance }
}

/// Equal-weight quadrature of the detuning across a slab in a field gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningProfile<T> {
    /// Slab thickness, m.
    pub thickness: T,
    /// dB/dz, T/m.
    pub grad: T,
    /// Mean magneto-gyric ratio, rad·s⁻¹·T⁻¹.
    pub gamma_bar: T,
    /// Physical `d`, s⁻¹, used to express detunings in simulation units.
    pub d_rate: T,
    /// Detuning at the slab centre, simulation units.
    pub center_nu: T,
    /// `(ν, weight)` per slice.
    pub nodes: Vec<(T, T)>,
}

impl<T: Real> DetuningProfile<T> {
    /// Fraction of weight with `1 ≤ ν ≤ λ`.
    pub fn fraction_in_range(&self, lambda: T) -> T {
        self.nodes
            .iter()
            .filter(|(nu, _)| *nu >= T::one() && *nu <= lambda)
            .fold(T::zero(), |s, (_, w)| s + *w)
    }

    /// `max ν − min ν`.
    pub fn spread(&self) -> T {
        let lo = self.nodes.iter().map(|n| n.0).fold(T::infinity(), T::min);
        let hi = self.nodes.iter().map(|n| n.0).fold(T::neg_infinity(), T::max);
        hi - lo
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(invalid("n_nodes", "profile has no nodes"));
        }
        if self.nodes.iter().any(|(nu, w)| !(*w > T::zero()) || !nu.is_finite()) {
            return Err(invalid("nodes", "weights must be positive and detunings finite"));
        }
        let total = self.nodes.iter().fold(T::zero(), |s, n| s + n.1);
        if (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(64.0)) {
            return Err(invalid("nodes", "weights must sum to 1"));
        }
        Ok(())
    }
}

/// Slices `[−L/2, L/2]` into `n_nodes` equal slabs and assigns each the
/// detuning at its midpoint, `ν(z) = ν_c + γ̄ (dB/dz) z / d`.
pub fn detuning_profile<T: Real>(
    thickness: T,
    grad: T,
    gamma_bar: T,
    d_rate: T,
    center_nu: T,
    n_nodes: usize,
) -> Result<DetuningProfile<T>> {
    if n_nodes < 2 {
        return Err(invalid("n_nodes", "need at least 2 nodes"));
    }
    if !(d_rate > T::zero()) {
        return Err(invalid("d_rate", "must be > 0"));
    }
    let n = T::from_usize(n_nodes).expect("node count");
    let w = T::one() / n;
    let nodes = (0..n_nodes)
        .map(|k| {
            let frac = (T::from_usize(k).expect("index") + T::lit(0.5)) / n - T::lit(0.5);
            let z = frac * thickness;
            (center_nu + gamma_bar * grad * z / d_rate, w)
        })
        .collect();
    Ok(DetuningProfile { thickness, grad, gamma_bar, d_rate, center_nu, nodes })
}

/// Weight-averaged `M(t)` and `E(t)` over a detuning profile.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedSeries<T> {
    pub times: Vec<T>,
    pub m: Vec<T>,
    pub e: Vec<T>,
    /// Node detunings in input order.
    pub nodes: Vec<(T, T)>,
}

/// Runs `evolver` once per node (in parallel) and averages the observables
/// in node order.
pub fn sample_average<T: Real>(
    profile: &DetuningProfile<T>,
    base: &RotatingFrameParams<T>,
    s0: &SpinState<T>,
    grid: &[T],
    evolver: &Evolver<T>,
) -> Result<AveragedSeries<T>> {
    profile.validate()?;
    let runs: Vec<Result<Trajectory<T>>> =
        profile.nodes.par_iter().map(|&(nu, _)| evolver.run(&base.with_nu(nu), s0, grid)).collect();

    let failures: Vec<(usize, Error)> =
        runs.iter().enumerate().filter_map(|(k, r)| r.as_ref().err().map(|e| (k, e.clone()))).collect();
    if !failures.is_empty() {
        return Err(Error::NodeFailures { failures });
    }

    let mut m = vec![T::zero(); grid.len()];
    let mut e = vec![T::zero(); grid.len()];
    for (run, &(_, w)) in runs.iter().zip(&profile.nodes) {
        let traj = run.as_ref().expect("failures handled above");
        for (k, s) in traj.samples.iter().enumerate() {
            m[k] = m[k] + w * s.m;
            e[k] = e[k] + w * s.e;
        }
    }
    Ok(AveragedSeries { times: grid.to_vec(), m, e, nodes: profile.nodes.clone() })
}

//! Dormand–Prince 5(4) with Shampine's fourth-order dense output.

use crate::error::{Error, Result};
use crate::scalar::Real;

const C: [f64; 6] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0];

const A: [[f64; 5]; 6] = [
    [0.0; 5],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
];

pub(crate) const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];

/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    -71.0 / 57600.0,
    0.0,
    71.0 / 16695.0,
    -71.0 / 1920.0,
    17253.0 / 339200.0,
    -22.0 / 525.0,
    1.0 / 40.0,
];

/// Dense-output polynomial coefficients: stage `i` contributes
/// `K_i Σ_m P[i][m] θ^{m+1}`.
pub(crate) const P: [[f64; 4]; 7] = [
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(&[T; N], f64)]) -> [T; N] {
    std::array::from_fn(|i| {
        let s = terms.iter().fold(T::zero(), |s, (k, c)| s + T::lit(*c) * k[i]);
        y[i] + h * s
    })
}

fn rms_error<T: Real, const N: usize>(err: &[T; N], y0: &[T; N], y1: &[T; N], o: &OdeOptions<T>) -> T {
    let n = T::from_usize(N).expect("small dimension");
    let s = (0..N).fold(T::zero(), |s, i| {
        let sc = o.abs_tol + o.rel_tol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        s + r * r
    });
    (s / n).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` and reports `y` at every time in
/// `grid` (which must be non-decreasing and start at or after `t0`).
pub fn integrate<T, const N: usize, F>(
    f: F,
    t0: T,
    y0: [T; N],
    grid: &[T],
    o: &OdeOptions<T>,
) -> Result<(Vec<[T; N]>, OdeStats)>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
{
    let (ys, stats, failure) = integrate_partial(f, t0, y0, grid, o);
    match failure {
        Some(e) => Err(e),
        None => Ok((ys, stats)),
    }
}

/// Like [`integrate`], but on failure returns the outputs produced so far
/// together with the error.
pub fn integrate_partial<T, const N: usize, F>(
    mut f: F,
    t0: T,
    y0: [T; N],
    grid: &[T],
    o: &OdeOptions<T>,
) -> (Vec<[T; N]>, OdeStats, Option<Error>)
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
{
    let mut out = Vec::with_capacity(grid.len());
    let mut stats = OdeStats::default();
    let mut next = 0;
    while next < grid.len() && grid[next] <= t0 {
        out.push(y0);
        next += 1;
    }
    let Some(&t_end) = grid.last() else {
        return (out, stats, None);
    };
    if next == grid.len() {
        return (out, stats, None);
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.rhs_evals += 1;
    let mut h = initial_step(&mut f, t, &y, &k1, o, &mut stats).min(o.max_step);
    let safety = T::lit(0.9);
    let mut last_rejected = false;

    while next < grid.len() {
        let min_step = T::epsilon() * T::lit(16.0) * t.abs().max(T::one());
        if h < min_step {
            return (out, stats, Some(Error::StepUnderflow { t: t.as_f64() }));
        }
        if t + h > t_end {
            h = t_end - t;
        }

        let mut k: [[T; N]; 7] = [[T::zero(); N]; 7];
        k[0] = k1;
        for s in 1..6 {
            let terms: Vec<(&[T; N], f64)> = (0..s).map(|m| (&k[m], A[s][m])).collect();
            let ys = axpy(&y, h, &terms);
            k[s] = f(t + T::lit(C[s]) * h, &ys);
        }
        let y_new = axpy(&y, h, &[(&k[0], B[0]), (&k[2], B[2]), (&k[3], B[3]), (&k[4], B[4]), (&k[5], B[5])]);
        k[6] = f(t + h, &y_new);
        stats.rhs_evals += 6;

        let err: [T; N] = std::array::from_fn(|i| h * (0..7).fold(T::zero(), |s, m| s + T::lit(E[m]) * k[m][i]));
        let en = rms_error(&err, &y, &y_new, o);

        if en <= T::one() {
            stats.accepted += 1;
            let t_new = t + h;
            while next < grid.len() && grid[next] <= t_new {
                let theta = (grid[next] - t) / h;
                out.push(dense(&y, h, &k, theta));
                next += 1;
            }
            t = t_new;
            y = y_new;
            k1 = k[6];
            let mut fac = if en == T::zero() { T::lit(5.0) } else { safety * en.powf(T::lit(-0.2)) };
            fac = fac.min(T::lit(5.0)).max(T::lit(0.2));
            if last_rejected {
                fac = fac.min(T::one());
            }
            last_rejected = false;
            h = (h * fac).min(o.max_step);
        } else {
            stats.rejected += 1;
            last_rejected = true;
            let fac = (safety * en.powf(T::lit(-0.2))).max(T::lit(0.2));
            h = h * fac;
        }
    }
    (out, stats, None)
}

fn dense<T: Real, const N: usize>(y: &[T; N], h: T, k: &[[T; N]; 7], theta: T) -> [T; N] {
    let powers = [theta, theta * theta, theta * theta * theta, theta * theta * theta * theta];
    let weights: [T; 7] = std::array::from_fn(|i| (0..4).fold(T::zero(), |s, m| s + T::lit(P[i][m]) * powers[m]));
    std::array::from_fn(|n| y[n] + h * (0..7).fold(T::zero(), |s, i| s + weights[i] * k[i][n]))
}

fn initial_step<T, const N: usize, F>(f: &mut F, t: T, y: &[T; N], f0: &[T; N], o: &OdeOptions<T>, stats: &mut OdeStats) -> T
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
{
    let scale: [T; N] = std::array::from_fn(|i| o.abs_tol + o.rel_tol * y[i].abs());
    let n = T::from_usize(N).expect("small dimension");
    let rms = |v: &[T; N]| ((0..N).fold(T::zero(), |s, i| s + (v[i] / scale[i]).powi(2)) / n).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let tiny = T::lit(1e-5);
    let h0 = if d0 < tiny || d1 < tiny { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 };
    let y1: [T; N] = std::array::from_fn(|i| y[i] + h0 * f0[i]);
    let f1 = f(t + h0, &y1);
    stats.rhs_evals += 1;
    let diff: [T; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
    };
    (h0 * T::lit(100.0)).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dense_output_reproduces_step_endpoint() {
        for i in 0..7 {
            let s: f64 = P[i].iter().sum();
            assert_abs_diff_eq!(s, B[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn harmonic_oscillator() {
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 0.37).collect();
        let o = OdeOptions { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 1.0 };
        let (ys, stats) = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], &grid, &o).unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            assert_abs_diff_eq!(y[0], t.cos(), epsilon = 1e-8);
            assert_abs_diff_eq!(y[1], -t.sin(), epsilon = 1e-8);
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn underflow_is_reported() {
        // y' = y² blows up at t = 1.
        let o = OdeOptions { rel_tol: 1e-8, abs_tol: 1e-10, max_step: 0.1 };
        let r = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], &[0.0, 2.0], &o);
        match r {
            Err(Error::StepUnderflow { t }) => assert!((0.9..1.01).contains(&t)),
            other => panic!("expected underflow, got {other:?}"),
        }
    }
}

//! Fixed-size dense linear algebra for the 4×4 spin problem and its 8×8
//! doubled (C, C*) form.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square matrix stored row-major.
pub type Mat<T, const N: usize> = [[T; N]; N];
pub type Mat4<T> = Mat<T, 4>;
pub type CMat<T, const N: usize> = [[Complex<T>; N]; N];

pub fn identity<T: Real, const N: usize>() -> Mat<T, N> {
    let mut m = [[T::zero(); N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn transpose<T: Copy, const N: usize>(a: &Mat<T, N>) -> Mat<T, N> {
    let mut t = *a;
    for i in 0..N {
        for j in 0..N {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn matmul<T: Real, const N: usize>(a: &Mat<T, N>, b: &Mat<T, N>) -> Mat<T, N> {
    let mut c = [[T::zero(); N]; N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            for j in 0..N {
                c[i][j] = c[i][j] + aik * b[k][j];
            }
        }
    }
    c
}

pub fn cmatmul<T: Real, const N: usize>(a: &CMat<T, N>, b: &CMat<T, N>) -> CMat<T, N> {
    let mut c = [[Complex::zero(); N]; N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            for j in 0..N {
                c[i][j] = c[i][j] + aik * b[k][j];
            }
        }
    }
    c
}

pub fn cmatvec<T: Real, const N: usize>(a: &CMat<T, N>, x: &[Complex<T>; N]) -> [Complex<T>; N] {
    let mut y = [Complex::zero(); N];
    for (yi, row) in y.iter_mut().zip(a) {
        *yi = row.iter().zip(x).fold(Complex::zero(), |acc, (&aij, &xj)| acc + aij * xj);
    }
    y
}

/// Largest |a_ij - a_ji|.
pub fn asymmetry<T: Real, const N: usize>(a: &Mat<T, N>) -> T {
    let mut worst = T::zero();
    for i in 0..N {
        for j in (i + 1)..N {
            worst = worst.max((a[i][j] - a[j][i]).abs());
        }
    }
    worst
}

fn off_diagonal_norm<T: Real, const N: usize>(a: &Mat<T, N>) -> T {
    let mut s = T::zero();
    for i in 0..N {
        for j in 0..N {
            if i != j {
                s = s + a[i][j] * a[i][j];
            }
        }
    }
    s.sqrt()
}

fn frobenius<T: Real, const N: usize>(a: &Mat<T, N>) -> T {
    a.iter().flatten().fold(T::zero(), |s, &x| s + x * x).sqrt()
}

/// Result of [`jacobi_eigen`]: eigenvalues ascending, eigenvectors as the
/// matching columns of `vectors`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricEigen<T, const N: usize> {
    pub values: [T; N],
    pub vectors: Mat<T, N>,
}

impl<T: Real, const N: usize> SymmetricEigen<T, N> {
    pub fn vector(&self, k: usize) -> [T; N] {
        let mut v = [T::zero(); N];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = self.vectors[i][k];
        }
        v
    }
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalization of a real symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius norm drops below `1e-12` (or a few
/// ulps of the matrix norm when the scalar cannot resolve that).
pub fn jacobi_eigen<T: Real, const N: usize>(m: &Mat<T, N>) -> Result<SymmetricEigen<T, N>> {
    let mut a = *m;
    let mut v = identity::<T, N>();
    let scale = frobenius(&a);
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(4.0) * scale);

    let mut sweeps = 0;
    while off_diagonal_norm(&a) >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).expect("finite eigenvalues"));
    let values = order.map(|k| a[k][k]);
    let mut vectors = [[T::zero(); N]; N];
    for (col, &k) in order.iter().enumerate() {
        for i in 0..N {
            vectors[i][col] = v[i][k];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

fn cnorm1<T: Real, const N: usize>(a: &CMat<T, N>) -> T {
    (0..N)
        .map(|j| (0..N).fold(T::zero(), |s, i| s + a[i][j].norm()))
        .fold(T::zero(), T::max)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The argument is scaled until its 1-norm is at most 1/2, where 30 Taylor
/// terms are far below double-precision round-off.
pub fn expm<T: Real, const N: usize>(a: &CMat<T, N>) -> CMat<T, N> {
    let norm = cnorm1(a);
    let mut squarings = 0u32;
    let half = T::lit(0.5);
    let mut scale = T::one();
    while norm * scale > half {
        scale = scale * half;
        squarings += 1;
    }
    let mut scaled = *a;
    for x in scaled.iter_mut().flatten() {
        *x = *x * scale;
    }

    let mut result = [[Complex::<T>::zero(); N]; N];
    let mut term = [[Complex::<T>::zero(); N]; N];
    for i in 0..N {
        result[i][i] = Complex::one();
        term[i][i] = Complex::one();
    }
    for k in 1..=30 {
        term = cmatmul(&term, &scaled);
        let inv_k = T::one() / T::from_usize(k).expect("small integer");
        for x in term.iter_mut().flatten() {
            *x = *x * inv_k;
        }
        let mut biggest = T::zero();
        for (r, t) in result.iter_mut().flatten().zip(term.iter().flatten()) {
            *r = *r + *t;
            biggest = biggest.max(t.norm());
        }
        if biggest < T::epsilon() * T::lit(1e-3) {
            break;
        }
    }
    for _ in 0..squarings {
        result = cmatmul(&result, &result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jacobi_diagonal_input_is_identity() {
        let m = [
            [3.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 2.0, 0.0],
            [0.0, 0.0, 0.0, 0.5],
        ];
        let e = jacobi_eigen(&m).unwrap();
        assert_eq!(e.values, [-1.0, 0.5, 2.0, 3.0]);
        for k in 0..4 {
            let v = e.vector(k);
            assert_eq!(v.iter().filter(|x: &&f64| x.abs() == 1.0).count(), 1);
        }
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let m = [
            [2.0, 1.0, -0.5, 0.3],
            [1.0, -3.0, 0.2, 0.0],
            [-0.5, 0.2, 1.0, 4.0],
            [0.3, 0.0, 4.0, 0.7],
        ];
        let e = jacobi_eigen(&m).unwrap();
        let mut d = [[0.0; 4]; 4];
        for i in 0..4 {
            d[i][i] = e.values[i];
        }
        let r = matmul(&matmul(&e.vectors, &d), &transpose(&e.vectors));
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(r[i][j], m[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp([[0, -θ], [θ, 0]]) is a rotation by θ.
        let theta = 7.3_f64;
        let z = Complex::new(0.0, 0.0);
        let a = [[z, Complex::new(-theta, 0.0)], [Complex::new(theta, 0.0), z]];
        let r = expm(&a);
        assert_abs_diff_eq!(r[0][0].re, theta.cos(), epsilon = 1e-13);
        assert_abs_diff_eq!(r[1][0].re, theta.sin(), epsilon = 1e-13);
        assert_abs_diff_eq!(r[0][1].re, -theta.sin(), epsilon = 1e-13);
        assert_abs_diff_eq!(r[0][0].im, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn expm_of_diagonal_phase() {
        let a = [[Complex::new(0.0, -250.0)]];
        let r = expm(&a);
        let expect = Complex::new(0.0, -250.0_f64).exp();
        assert_abs_diff_eq!((r[0][0] - expect).norm(), 0.0, epsilon = 1e-11);
    }
}

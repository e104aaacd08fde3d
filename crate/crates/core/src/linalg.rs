//! Small dense linear algebra: matrices up to a few dozen rows.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{Float, One, Zero};

use crate::scalar::{Number, Scalar};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `vᵀ M`, i.e. the action on a covector.
    pub fn vec_mul(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| v[i] * self[(i, j)]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Extracts the square sub-block over the given row/column indices.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn max_abs<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}

/// Singular values in descending order, by one-sided Jacobi rotations.
pub fn singular_values<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    jacobi_svd(m).0
}

/// Singular values (descending) with the matching right singular vectors.
pub fn jacobi_svd<T: Scalar>(m: &Matrix<T>) -> (Vec<T>, Vec<Vec<T>>) {
    let (rows, cols) = (m.rows(), m.cols());
    let mut cs: Vec<Vec<T>> = (0..cols).map(|j| m.column(j)).collect();
    let mut vs: Vec<Vec<T>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let alpha = dot(&cs[i], &cs[i]);
                let beta = dot(&cs[j], &cs[j]);
                let gamma = dot(&cs[i], &cs[j]);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::c(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..rows {
                    let a = cs[i][k];
                    let b = cs[j][k];
                    cs[i][k] = c * a - s * b;
                    cs[j][k] = s * a + c * b;
                }
                for k in 0..cols {
                    let a = vs[i][k];
                    let b = vs[j][k];
                    vs[i][k] = c * a - s * b;
                    vs[j][k] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut pairs: Vec<(T, Vec<T>)> = cs.iter().map(|c| norm(c)).zip(vs).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    pairs.into_iter().unzip()
}

/// Unit vector spanning the numerical kernel when it is one-dimensional.
pub fn null_vector<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    let (_, mut v) = jacobi_svd(m);
    v.pop().unwrap_or_default()
}

/// Number of singular values above `tol · σ_max`.
pub fn numerical_rank<T: Scalar>(m: &Matrix<T>, tol: T) -> usize {
    let sv = singular_values(m);
    let Some(&smax) = sv.first() else { return 0 };
    if smax == T::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting on the
/// leading real part. Works for any [`Number`], so jets propagate through the
/// solution. Returns `None` when a pivot falls below `tol` relative to the
/// largest entry of its column.
pub fn solve<N: Number>(mut a: Vec<Vec<N>>, mut b: Vec<N>, tol: N::Real) -> Option<Vec<N>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    let scale = a.iter().flatten().fold(N::Real::zero(), |m, v| m.max(v.real().abs()));
    if scale == N::Real::zero() {
        return None;
    }
    for col in 0..n {
        let (piv, pval) = (col..n)
            .map(|r| (r, a[r][col].real().abs()))
            .fold((col, N::Real::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pval <= tol * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip();
        for r in (col + 1)..n {
            let f = a[r][col].clone() * inv.clone();
            for c in col..n {
                let v = a[r][c].clone() - f.clone() * a[col][c].clone();
                a[r][c] = v;
            }
            let v = b[r].clone() - f * b[col].clone();
            b[r] = v;
        }
    }
    let mut x: Vec<N> = b.clone();
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in (r + 1)..n {
            acc = acc - a[r][c].clone() * x[c].clone();
        }
        x[r] = acc / a[r][r].clone();
    }
    Some(x)
}

/// Determinant divided by the product of row norms (Hadamard ratio), in [0, 1].
pub fn scaled_determinant<T: Scalar>(m: &Matrix<T>) -> T {
    let n = m.rows();
    assert_eq!(n, m.cols());
    let mut a: Vec<Vec<T>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let norms: T = a.iter().map(|r| norm(r)).fold(T::one(), |p, x| p * x);
    if norms == T::zero() {
        return T::zero();
    }
    let mut det = T::one();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[col..].iter().all(|r| r[col] == T::zero()) {
            return T::zero();
        }
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        det = det * a[col][col];
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] = a[r][c] - f * a[col][c];
            }
        }
    }
    det.abs() / norms
}

/// Characteristic polynomial coefficients `[c0, c1, …, c_{n-1}, 1]` of
/// `det(λI − A)`, by the Faddeev–LeVerrier recursion.
pub fn characteristic_polynomial<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut coeffs = vec![T::zero(); n + 1];
    coeffs[n] = T::one();
    let mut m = Matrix::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = a.matmul(&m);
        for i in 0..n {
            next[(i, i)] = next[(i, i)] + coeffs[n - k + 1];
        }
        m = next;
        let am = a.matmul(&m);
        let trace: T = (0..n).map(|i| am[(i, i)]).sum();
        coeffs[n - k] = -trace / T::c(k as f64);
    }
    coeffs
}

/// All complex roots of a monic polynomial `[c0, …, c_{n-1}, 1]` by
/// Durand–Kerner (Weierstrass) iteration.
pub fn durand_kerner<T: Scalar>(coeffs: &[T], tol: T, max_iter: usize) -> Vec<Complex<T>> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    let c: Vec<Complex<T>> = coeffs.iter().map(|&v| Complex::new(v / lead, T::zero())).collect();
    let eval = |z: Complex<T>| -> Complex<T> { c.iter().rev().fold(Complex::zero(), |acc, &ci| acc * z + ci) };
    // Cauchy bound for the starting radius
    let radius = T::one() + c[..n].iter().fold(T::zero(), |m, v| m.max(v.norm()));
    let seed = Complex::new(T::c(0.4), T::c(0.9));
    let mut z: Vec<Complex<T>> = (0..n)
        .map(|k| seed.powu(k as u32) * Complex::new(radius / (T::one() + T::one()), T::zero()))
        .collect();
    for _ in 0..max_iter {
        let mut delta = T::zero();
        for i in 0..n {
            let mut denom = Complex::<T>::one();
            for j in 0..n {
                if i != j {
                    denom = denom * (z[i] - z[j]);
                }
            }
            if denom.norm() == T::zero() {
                denom = Complex::new(T::epsilon(), T::zero());
            }
            let step: Complex<T> = eval(z[i]) / denom;
            z[i] = z[i] - step;
            delta = delta.max(step.norm() / (T::one() + z[i].norm()));
        }
        if delta < tol {
            break;
        }
    }
    z
}

/// Distance from `v` to the span of `basis`, by modified Gram–Schmidt with
/// one reorthogonalization pass. Basis vectors below `tol` after
/// orthogonalization are dropped.
pub fn projection_residual<T: Scalar>(basis: &[Vec<T>], v: &[T], tol: T) -> T {
    let mut q: Vec<Vec<T>> = Vec::new();
    let scale = basis.iter().map(|b| norm(b)).fold(T::zero(), T::max);
    for b in basis {
        let mut w = b.clone();
        for _ in 0..2 {
            for qi in &q {
                let d = dot(qi, &w);
                for (wk, &qk) in w.iter_mut().zip(qi) {
                    *wk = *wk - d * qk;
                }
            }
        }
        let nw = norm(&w);
        if nw > tol * scale {
            q.push(w.into_iter().map(|x| x / nw).collect());
        }
    }
    let mut r = v.to_vec();
    for _ in 0..2 {
        for qi in &q {
            let d = dot(qi, &r);
            for (rk, &qk) in r.iter_mut().zip(qi) {
                *rk = *rk - d * qk;
            }
        }
    }
    norm(&r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_of_known_matrix() {
        let m = Matrix::from_rows(&[vec![3.0, 0.0], vec![4.0, 5.0]]);
        let sv = singular_values(&m);
        // σ = sqrt(45), sqrt(5)
        assert!((sv[0] - 45f64.sqrt()).abs() < 1e-12);
        assert!((sv[1] - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn null_vector_of_rank_deficient() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.5], vec![0.0, 0.0, 1.0]]);
        let v = null_vector(&m);
        assert!(norm(&m.mul_vec(&v)) < 1e-12);
        assert!((norm(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_of_dependent_columns() {
        let m = Matrix::from_columns(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![0.0, 1.0, 0.0]]);
        assert_eq!(numerical_rank(&m, 1e-9), 2);
        assert_eq!(numerical_rank(&Matrix::<f64>::zeros(3, 2), 1e-9), 0);
    }

    #[test]
    fn solve_with_pivoting() {
        let a = vec![vec![0.0, 2.0], vec![1.0, 1.0]];
        let x = solve(a, vec![4.0, 3.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0], 1e-10).is_none());
    }

    #[test]
    fn char_poly_and_roots() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let c = characteristic_polynomial(&a);
        assert_eq!(c, vec![3.0, -4.0, 1.0]);
        let mut roots: Vec<f64> = durand_kerner(&c, 1e-12, 500).iter().map(|z| z.re).collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((roots[0] - 1.0).abs() < 1e-12 && (roots[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn roots_of_cubic_with_complex_pair() {
        // (λ - 2)(λ² + 1)
        let roots = durand_kerner(&[-2.0, 1.0, -2.0, 1.0], 1e-14, 500);
        let real: Vec<_> = roots.iter().filter(|z| z.im.abs() < 1e-9).collect();
        assert_eq!(real.len(), 1);
        assert!((real[0].re - 2.0).abs() < 1e-10);
        assert!(roots.iter().filter(|z| (z.im.abs() - 1.0).abs() < 1e-10).count() == 2);
    }

    #[test]
    fn scaled_determinant_bounds() {
        assert!((scaled_determinant(&Matrix::<f64>::identity(3)) - 1.0).abs() < 1e-15);
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(scaled_determinant(&s) < 1e-15);
    }

    #[test]
    fn projection_onto_plane() {
        let basis = vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]];
        assert!(projection_residual(&basis, &[3.0, -2.0, 0.0], 1e-12) < 1e-14);
        assert!((projection_residual(&basis, &[0.0, 0.0, 2.0], 1e-12) - 2.0).abs() < 1e-14);
    }
}

//! Dense real linear algebra for the small matrices that appear in
//! Lyapunov inequalities: general rectangular [`Mat`], symmetric [`SymMat`],
//! a cyclic Jacobi eigensolver and a Cholesky factorization.
//!
//! Everything here is sized for dimensions up to a few dozen. No attempt is
//! made at cache blocking or sparsity.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Absolute asymmetry (relative to `1 + max|entry|`) tolerated when
/// building a [`SymMat`]; the two triangles are averaged below it.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Jacobi stops when the off-diagonal Frobenius norm drops below this
/// fraction of the input Frobenius norm.
const JACOBI_REL_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds a matrix from row vectors. Rows must be non-empty, of equal
    /// length and finite.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        if rows.is_empty() || rows[0].as_ref().is_empty() {
            return Err(Error::InvalidInput("matrix must have at least one entry".into()));
        }
        let cols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dims(
                    format!("{cols} columns"),
                    format!("{} in row {i}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        let m = Mat {
            rows: rows.len(),
            cols,
            data,
        };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(rows * cols, data.len()));
        }
        let m = Mat { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    /// `b cᵀ` for column vectors `b`, `c`.
    pub fn outer(b: &[f64], c: &[f64]) -> Self {
        Mat::from_fn(b.len(), c.len(), |i, j| b[i] * c[j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput("matrix has non-finite entries".into()))
        }
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == 0.0))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::dims(
                format!("inner dimension {}", self.cols),
                other.rows,
            ));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    fn zip_with(&self, other: &Mat, f: impl Fn(f64, f64) -> f64) -> Result<Mat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn try_add(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Stacks `[[a, b], [c, d]]` into one matrix.
    pub fn block2x2(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Result<Mat> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(Error::dims("conforming 2x2 blocks", "non-conforming blocks"));
        }
        let rows = a.rows + c.rows;
        let cols = a.cols + b.cols;
        Ok(Mat::from_fn(rows, cols, |i, j| match (i < a.rows, j < a.cols) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - a.cols)],
            (false, true) => c[(i - a.rows, j)],
            (false, false) => d[(i - a.rows, j - a.cols)],
        }))
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

// Operator impls panic on shape mismatch; the `try_*` forms return errors.
impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        self.try_add(rhs).expect("matrix shapes must agree")
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        self.try_sub(rhs).expect("matrix shapes must agree")
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        self.matmul(rhs).expect("matrix shapes must agree")
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for v in self.row(i) {
                write!(f, "{v:>12.5e} ")?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Real symmetric matrix. Symmetry is exact: `self[(i, j)] == self[(j, i)]`.
#[derive(Clone, PartialEq)]
pub struct SymMat {
    inner: Mat,
}

impl SymMat {
    /// Validates and symmetrizes `m`. Asymmetry above [`SYMMETRY_TOL`]
    /// (scaled by the largest entry) is rejected.
    pub fn new(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims("square matrix", format!("{}x{}", m.rows, m.cols)));
        }
        m.check_finite()?;
        let tol = SYMMETRY_TOL * (1.0 + m.max_abs());
        let n = m.rows;
        for i in 0..n {
            for j in i + 1..n {
                if (m[(i, j)] - m[(j, i)]).abs() > tol {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self::symmetrize(&m))
    }

    /// `(m + mᵀ)/2` without any tolerance check.
    pub fn symmetrize(m: &Mat) -> Self {
        assert!(m.is_square(), "symmetrize needs a square matrix");
        let n = m.rows;
        let mut out = m.clone();
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        SymMat { inner: out }
    }

    pub fn identity(n: usize) -> Self {
        SymMat {
            inner: Mat::identity(n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        SymMat {
            inner: Mat::zeros(n, n),
        }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        SymMat {
            inner: Mat::from_diag(d),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        SymMat::new(Mat::from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.inner.rows
    }

    pub fn as_mat(&self) -> &Mat {
        &self.inner
    }

    pub fn into_mat(self) -> Mat {
        self.inner
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.inner[(i, j)] = v;
        self.inner[(j, i)] = v;
    }

    pub fn scale(&self, s: f64) -> SymMat {
        SymMat {
            inner: self.inner.scale(s),
        }
    }

    pub fn add(&self, other: &SymMat) -> Result<SymMat> {
        Ok(SymMat {
            inner: self.inner.try_add(&other.inner)?,
        })
    }

    pub fn sub(&self, other: &SymMat) -> Result<SymMat> {
        Ok(SymMat {
            inner: self.inner.try_sub(&other.inner)?,
        })
    }

    pub fn trace(&self) -> f64 {
        self.inner.diagonal().iter().sum()
    }

    /// Frobenius inner product `tr(self · other)`.
    pub fn dot(&self, other: &SymMat) -> f64 {
        self.inner
            .data
            .iter()
            .zip(&other.inner.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    pub fn eig(&self) -> SymEigen {
        jacobi(self)
    }

    pub fn min_eig(&self) -> f64 {
        self.eig().values[0]
    }

    pub fn max_eig(&self) -> f64 {
        *self.eig().values.last().expect("dim >= 1")
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let y = self.inner.mat_vec(x);
        y.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `self · m + mᵀ · self`.
    pub fn lyapunov(&self, m: &Mat) -> Result<SymMat> {
        lyapunov_form(self, m)
    }

    /// Congruence `t · self · tᵀ`.
    pub fn congruence(&self, t: &Mat) -> Result<SymMat> {
        let a = t.matmul(&self.inner)?;
        let out = a.matmul(&t.transpose())?;
        Ok(SymMat::symmetrize(&out))
    }

    /// Applies `g` to the eigenvalues: `V g(Λ) Vᵀ`.
    pub fn map_eigenvalues(&self, g: impl Fn(f64) -> f64) -> SymMat {
        let e = self.eig();
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        for k in 0..n {
            let gk = g(e.values[k]);
            for i in 0..n {
                let vik = e.vectors[(i, k)] * gk;
                if vik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vik * e.vectors[(j, k)];
                }
            }
        }
        SymMat::symmetrize(&out)
    }

    pub fn cholesky(&self) -> Option<Cholesky> {
        Cholesky::factor(self)
    }
}

impl Index<(usize, usize)> for SymMat {
    type Output = f64;
    #[inline]
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.inner[idx]
    }
}

impl fmt::Debug for SymMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.inner)
    }
}

/// Ascending eigenvalues with eigenvectors stored column-wise.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl SymEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.vectors.rows()).map(|i| self.vectors[(i, k)]).collect()
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigs(m: &SymMat) -> Result<SymEigen> {
    m.as_mat().check_finite()?;
    Ok(jacobi(m))
}

fn jacobi(m: &SymMat) -> SymEigen {
    let n = m.dim();
    let mut a = m.as_mat().clone();
    let mut v = Mat::identity(n);
    let scale = a.frobenius_norm();
    let target = JACOBI_REL_TOL * scale;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |i, k| v[(i, order[k])]);
    SymEigen { values, vectors }
}

/// Largest singular value of `m`.
pub fn spectral_norm(m: &Mat) -> Result<f64> {
    m.check_finite()?;
    // Gram matrix of the smaller side.
    let gram = if m.rows() <= m.cols() {
        m.matmul(&m.transpose())?
    } else {
        m.transpose().matmul(m)?
    };
    let top = SymMat::symmetrize(&gram).max_eig();
    Ok(top.max(0.0).sqrt())
}

/// `p m + mᵀ p`, exactly symmetric.
pub fn lyapunov_form(p: &SymMat, m: &Mat) -> Result<SymMat> {
    if !m.is_square() || m.rows() != p.dim() {
        return Err(Error::dims(
            format!("{0}x{0}", p.dim()),
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    let pm = p.as_mat().matmul(m)?;
    let n = p.dim();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = pm[(i, j)] + pm[(j, i)];
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(SymMat { inner: out })
}

/// Smallest eigenvalue of `p m + mᵀ p`.
pub fn min_eig_of_sym_part(m: &Mat, p: &SymMat) -> Result<f64> {
    m.check_finite()?;
    Ok(lyapunov_form(p, m)?.min_eig())
}

/// Largest eigenvalue of `p m + mᵀ p`.
pub fn max_eig_of_sym_part(m: &Mat, p: &SymMat) -> Result<f64> {
    m.check_finite()?;
    Ok(lyapunov_form(p, m)?.max_eig())
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Mat,
}

impl Cholesky {
    /// Returns `None` when the matrix is not numerically positive definite.
    pub fn factor(a: &SymMat) -> Option<Self> {
        let n = a.dim();
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(Cholesky { l })
    }

    pub fn lower(&self) -> &Mat {
        &self.l
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// `L⁻¹`, by forward substitution on the identity.
    pub fn lower_inverse(&self) -> Mat {
        let n = self.l.rows();
        let mut inv = Mat::zeros(n, n);
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for k in c..i {
                    s -= self.l[(i, k)] * inv[(k, c)];
                }
                inv[(i, c)] = s / self.l[(i, i)];
            }
        }
        inv
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return Err(Error::dims(format!("{n}x{n} system"), b.len()));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .expect("non-empty range");
        if m[(piv, col)].abs() < 1e-300 {
            return Err(Error::InvalidInput("singular linear system".into()));
        }
        if piv != col {
            for j in 0..n {
                let t = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
            x.swap(col, piv);
        }
        for i in col + 1..n {
            let f = m[(i, col)] / m[(col, col)];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[(i, j)] -= f * m[(col, j)];
            }
            x[i] -= f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(e: &SymEigen) -> Mat {
        let lam = Mat::from_diag(&e.values);
        &(&e.vectors * &lam) * &e.vectors.transpose()
    }

    #[test]
    fn identity_eigenvalues() {
        let e = sym_eigs(&SymMat::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let e = sym_eigs(&SymMat::from_diag(&[5.0, -2.0])).unwrap();
        assert_eq!(e.values, vec![-2.0, 5.0]);
    }

    #[test]
    fn two_by_two_eigenvalues() {
        let m = SymMat::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = sym_eigs(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let r = reconstruct(&e);
        assert!((&r - m.as_mat()).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_and_nonfinite() {
        assert!(SymMat::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).is_err());
        assert!(SymMat::from_rows(&[[f64::NAN, 0.0], [0.0, 1.0]]).is_err());
        // below tolerance: averaged
        let s = SymMat::from_rows(&[[1.0, 1.0 + 1e-14], [1.0, 1.0]]).unwrap();
        assert_eq!(s[(0, 1)], s[(1, 0)]);
    }

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm(&Mat::zeros(2, 2)).unwrap(), 0.0);
        let d = Mat::from_diag(&[-3.0, 2.0]);
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn sym_part_examples() {
        let p = SymMat::identity(2);
        let m = Mat::identity(2).scale(-1.0);
        assert!((min_eig_of_sym_part(&m, &p).unwrap() + 2.0).abs() < 1e-14);
        let skew = Mat::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
        assert_eq!(min_eig_of_sym_part(&skew, &p).unwrap(), 0.0);
    }

    #[test]
    fn fhn_symmetrization_at_origin() {
        // c = 2, b = 1, lambda2 = 1, d = (3, 1): J - lambda2 D at x1 = 0.
        let m = Mat::from_rows(&[[2.0 - 3.0, 2.0], [-0.5, -0.5 - 1.0]]).unwrap();
        let p = SymMat::from_diag(&[0.5, 2.0]);
        let s = lyapunov_form(&p, &m).unwrap();
        assert!((s[(0, 0)] + 1.0).abs() < 1e-14);
        assert!((s[(1, 1)] + 6.0).abs() < 1e-14);
        assert!(s[(0, 1)].abs() < 1e-14);
        assert!((min_eig_of_sym_part(&m, &p).unwrap() + 6.0).abs() < 1e-14);
        assert!((max_eig_of_sym_part(&m, &p).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let p = SymMat::identity(3);
        assert!(matches!(
            min_eig_of_sym_part(&Mat::identity(2), &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cholesky_solves() {
        let a = SymMat::from_rows(&[[4.0, 2.0, 0.4], [2.0, 3.0, 0.1], [0.4, 0.1, 2.0]]).unwrap();
        let ch = a.cholesky().unwrap();
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        let ax = a.as_mat().mat_vec(&x);
        for (u, v) in ax.iter().zip([1.0, 2.0, 3.0]) {
            assert!((u - v).abs() < 1e-13);
        }
        let linv = ch.lower_inverse();
        let prod = &linv * ch.lower();
        assert!((&prod - &Mat::identity(3)).max_abs() < 1e-14);
        assert!(SymMat::from_diag(&[1.0, -1.0]).cholesky().is_none());
    }

    #[test]
    fn gaussian_elimination() {
        let a = Mat::from_rows(&[[0.0, 2.0], [3.0, 1.0]]).unwrap();
        let x = solve_linear(&a, &[4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }
}

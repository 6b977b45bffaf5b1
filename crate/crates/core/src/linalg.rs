//! Dense row-major matrices, a rank-revealing least-squares solver and
//! central finite differences.
//!
//! Every matrix produced here holds only finite values. Operations that could
//! overflow check their output and report [`LinalgError::NonFinite`].
//!
//! Weight matrices are vectorized by stacking columns: entry `(d, h)` of an
//! `R x C` matrix sits at position `d + R * h` of the vector. The hidden-layer
//! Jacobian in [`crate::splitboost`] indexes its columns this way.

use std::fmt;

use thiserror::Error;

/// Pivots below this fraction of the largest pivot are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("{op}: shape mismatch between {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid dimensions {rows}x{cols} for {len} values")]
    Dimensions { rows: usize, cols: usize, len: usize },
    #[error("{op}: result contains a non-finite value")]
    NonFinite { op: &'static str },
    #[error("function evaluation is not finite when perturbing entry ({row}, {col})")]
    NonFiniteEvaluation { row: usize, col: usize },
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense 2-D matrix of `f64` in row-major order.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

fn all_finite(data: &[f64]) -> bool {
    data.iter().all(|v| v.is_finite())
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(LinalgError::Dimensions {
                rows,
                cols,
                len: data.len(),
            });
        }
        if !all_finite(&data) {
            return Err(LinalgError::NonFinite { op: "new" });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::Dimensions {
                    rows: rows.len(),
                    cols,
                    len: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Single-column matrix.
    pub fn column(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Wraps already validated data; callers guarantee the shape.
    fn checked(rows: usize, cols: usize, data: Vec<f64>, op: &'static str) -> Result<Self> {
        debug_assert_eq!(data.len(), rows * cols);
        if all_finite(&data) {
            Ok(Self { rows, cols, data })
        } else {
            Err(LinalgError::NonFinite { op })
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Row-major view of the entries.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// # Panics
    /// If `value` is not finite or the index is out of range.
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        assert!(value.is_finite(), "matrix entries must be finite");
        self.data[r * self.cols + c] = value;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column_values(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![0.0; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data: out,
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        matmul(self, other)
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(LinalgError::Shape {
                op: "t_matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (n, p) = (self.cols, other.cols);
        let mut out = vec![0.0; n * p];
        for k in 0..self.rows {
            let a = self.row(k);
            let b = other.row(k);
            for (i, &aki) in a.iter().enumerate() {
                if aki == 0.0 {
                    continue;
                }
                let dst = &mut out[i * p..(i + 1) * p];
                for (d, &bkj) in dst.iter_mut().zip(b) {
                    *d += aki * bkj;
                }
            }
        }
        Self::checked(n, p, out, "t_matmul")
    }

    fn zip_with(&self, other: &Matrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(LinalgError::Shape {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self::checked(self.rows, self.cols, data, op)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    pub fn scale(&self, alpha: f64) -> Result<Matrix> {
        let data = self.data.iter().map(|v| v * alpha).collect();
        Self::checked(self.rows, self.cols, data, "scale")
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "axpy", |a, b| a + alpha * b)
    }

    /// Applies `f` elementwise. `f` must map finite values to finite values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        debug_assert!(all_finite(&data));
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Appends a column of ones (bias augmentation).
    pub fn with_ones_column(&self) -> Matrix {
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.push(1.0);
        }
        Self {
            rows: self.rows,
            cols,
            data,
        }
    }

    /// Copies the given rows, in order.
    ///
    /// # Panics
    /// If `indices` is empty or any index is out of range.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        assert!(!indices.is_empty(), "cannot select zero rows");
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(LinalgError::Shape {
                op: "vstack",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// Leading `rows` rows.
    pub fn top_rows(&self, rows: usize) -> Matrix {
        assert!(rows > 0 && rows <= self.rows);
        Self {
            rows,
            cols: self.cols,
            data: self.data[..rows * self.cols].to_vec(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.sum_of_squares().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Column-stacked vector of the entries as a single column.
    pub fn vectorize(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        Self {
            rows: self.data.len(),
            cols: 1,
            data,
        }
    }

    /// Inverse of [`Matrix::vectorize`].
    pub fn unvectorize(values: &[f64], rows: usize, cols: usize) -> Result<Matrix> {
        if rows * cols != values.len() {
            return Err(LinalgError::Dimensions {
                rows,
                cols,
                len: values.len(),
            });
        }
        let mut out = Matrix::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                out.data[r * cols + c] = values[r + rows * c];
            }
        }
        if !all_finite(&out.data) {
            return Err(LinalgError::NonFinite { op: "unvectorize" });
        }
        Ok(out)
    }
}

/// Standard matrix product.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(LinalgError::Shape {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (n, p) = (a.rows, b.cols);
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        let dst = &mut out[i * p..(i + 1) * p];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (d, &bkj) in dst.iter_mut().zip(b.row(k)) {
                *d += aik * bkj;
            }
        }
    }
    Matrix::checked(n, p, out, "matmul")
}

/// Householder reflector `I - tau * v vᵀ` with `v[0] = 1` implied.
struct Reflector {
    tau: f64,
    /// Entries `v[1..]`.
    tail: Vec<f64>,
}

impl Reflector {
    /// Builds the reflector that maps `x` onto `beta * e1` and returns `beta`.
    fn annihilate(x: &[f64]) -> (Reflector, f64) {
        let head = x[0];
        let tail_norm = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if tail_norm == 0.0 {
            return (
                Reflector {
                    tau: 0.0,
                    tail: vec![0.0; x.len() - 1],
                },
                head,
            );
        }
        let norm = head.hypot(tail_norm);
        let beta = if head >= 0.0 { -norm } else { norm };
        let tau = (beta - head) / beta;
        let denom = head - beta;
        let tail = x[1..].iter().map(|v| v / denom).collect();
        (Reflector { tau, tail }, beta)
    }

    /// Applies the reflector to `y` in place.
    fn apply(&self, y: &mut [f64]) {
        if self.tau == 0.0 {
            return;
        }
        let mut s = y[0];
        for (v, yi) in self.tail.iter().zip(&y[1..]) {
            s += v * yi;
        }
        s *= self.tau;
        y[0] -= s;
        for (v, yi) in self.tail.iter().zip(y[1..].iter_mut()) {
            *yi -= s * v;
        }
    }
}

/// Complete orthogonal decomposition `A P = Q [T 0; 0 0] Zᵀ` built from a
/// column-pivoted Householder QR.
///
/// Gives minimum-norm least-squares solutions for both `A x ≈ b` and
/// `Aᵀ y ≈ c`, i.e. applies `A⁺` and `(Aᵀ)⁺`.
pub struct Cod {
    rows: usize,
    cols: usize,
    rank: usize,
    perm: Vec<usize>,
    q: Vec<Reflector>,
    /// Leading `rank` rows of `R`, row-major `rank x cols`.
    r: Vec<f64>,
    /// Only present when `rank < cols`: reflectors of the QR of `R1ᵀ` and its
    /// triangular factor, row-major `rank x rank`.
    z: Option<(Vec<Reflector>, Vec<f64>)>,
}

impl Cod {
    pub fn new(a: &Matrix) -> Cod {
        let (m, n) = a.shape();
        let k = m.min(n);
        // Column-major working copy keeps reflector application contiguous.
        let mut cols: Vec<Vec<f64>> = (0..n).map(|c| a.column_values(c)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut q = Vec::with_capacity(k);
        let mut diag = Vec::with_capacity(k);

        for j in 0..k {
            let pivot = (j..n)
                .map(|c| (c, cols[c][j..].iter().map(|v| v * v).sum::<f64>()))
                .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
                .0;
            cols.swap(j, pivot);
            perm.swap(j, pivot);

            let (h, beta) = Reflector::annihilate(&cols[j][j..]);
            cols[j][j] = beta;
            for v in cols[j][j + 1..].iter_mut() {
                *v = 0.0;
            }
            for c in cols.iter_mut().skip(j + 1) {
                h.apply(&mut c[j..]);
            }
            diag.push(beta.abs());
            q.push(h);
        }

        let largest = diag.first().copied().unwrap_or(0.0);
        let rank = if largest == 0.0 {
            0
        } else {
            diag.iter().take_while(|&&d| d > RANK_TOLERANCE * largest).count()
        };
        q.truncate(rank);

        let mut r = vec![0.0; rank * n];
        for (c, col) in cols.iter().enumerate() {
            for i in 0..rank.min(c + 1) {
                r[i * n + c] = col[i];
            }
        }

        let z = (rank > 0 && rank < n).then(|| {
            // QR of R1ᵀ (n x rank), column by column.
            let mut rt: Vec<Vec<f64>> = (0..rank).map(|i| r[i * n..(i + 1) * n].to_vec()).collect();
            let mut refl = Vec::with_capacity(rank);
            let mut t = vec![0.0; rank * rank];
            for j in 0..rank {
                let (h, beta) = Reflector::annihilate(&rt[j][j..]);
                rt[j][j] = beta;
                for c in rt.iter_mut().skip(j + 1) {
                    h.apply(&mut c[j..]);
                }
                refl.push(h);
            }
            for (c, col) in rt.iter().enumerate() {
                for i in 0..=c {
                    t[i * rank + c] = col[i];
                }
            }
            (refl, t)
        });

        Cod {
            rows: m,
            cols: n,
            rank,
            perm,
            q,
            r,
            z,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Minimum-norm minimizer of `‖A x − b‖` for every column of `b`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows != self.rows {
            return Err(LinalgError::Shape {
                op: "least_squares",
                left: (self.rows, self.cols),
                right: b.shape(),
            });
        }
        let mut out = Matrix::zeros(self.cols, b.cols);
        let (n, r) = (self.cols, self.rank);
        for j in 0..b.cols {
            if r == 0 {
                break;
            }
            let mut y = b.column_values(j);
            for (i, h) in self.q.iter().enumerate() {
                h.apply(&mut y[i..]);
            }
            let mut xp = vec![0.0; n];
            match &self.z {
                None => {
                    // R1 x' = Q1ᵀ b, upper triangular.
                    for i in (0..r).rev() {
                        let row = &self.r[i * n..(i + 1) * n];
                        let s: f64 = (i + 1..n).map(|c| row[c] * xp[c]).sum();
                        xp[i] = (y[i] - s) / row[i];
                    }
                }
                Some((zr, t)) => {
                    // Tᵀ w = Q1ᵀ b, then x' = Z [w; 0].
                    for i in 0..r {
                        let s: f64 = (0..i).map(|c| t[c * r + i] * xp[c]).sum();
                        xp[i] = (y[i] - s) / t[i * r + i];
                    }
                    for (i, h) in zr.iter().enumerate().rev() {
                        h.apply(&mut xp[i..]);
                    }
                }
            }
            for (i, &p) in self.perm.iter().enumerate() {
                out.data[p * b.cols + j] = xp[i];
            }
        }
        if !all_finite(&out.data) {
            return Err(LinalgError::NonFinite { op: "least_squares" });
        }
        Ok(out)
    }

    /// Minimum-norm minimizer of `‖Aᵀ y − c‖` for every column of `c`.
    pub fn solve_transposed(&self, c: &Matrix) -> Result<Matrix> {
        if c.rows != self.cols {
            return Err(LinalgError::Shape {
                op: "least_squares_transposed",
                left: (self.cols, self.rows),
                right: c.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, c.cols);
        let (n, r) = (self.cols, self.rank);
        for j in 0..c.cols {
            if r == 0 {
                break;
            }
            let mut cp: Vec<f64> = self.perm.iter().map(|&p| c.get(p, j)).collect();
            let mut v = vec![0.0; self.rows];
            match &self.z {
                None => {
                    // R1ᵀ v = Pᵀ c, lower triangular.
                    for i in 0..r {
                        let s: f64 = (0..i).map(|k| self.r[k * n + i] * v[k]).sum();
                        v[i] = (cp[i] - s) / self.r[i * n + i];
                    }
                }
                Some((zr, t)) => {
                    // T v = (Zᵀ Pᵀ c)[..r].
                    for (i, h) in zr.iter().enumerate() {
                        h.apply(&mut cp[i..]);
                    }
                    for i in (0..r).rev() {
                        let s: f64 = (i + 1..r).map(|k| t[i * r + k] * v[k]).sum();
                        v[i] = (cp[i] - s) / t[i * r + i];
                    }
                }
            }
            for (i, h) in self.q.iter().enumerate().rev() {
                h.apply(&mut v[i..]);
            }
            for (i, val) in v.into_iter().enumerate() {
                out.data[i * c.cols + j] = val;
            }
        }
        if !all_finite(&out.data) {
            return Err(LinalgError::NonFinite {
                op: "least_squares_transposed",
            });
        }
        Ok(out)
    }
}

/// Minimum-norm least-squares solution `w` of `a · w ≈ y` for a single-column `y`.
///
/// Rank is decided on the pivots of a column-pivoted QR at [`RANK_TOLERANCE`]
/// relative to the largest pivot. An all-zero `a` yields the zero vector.
pub fn least_squares(a: &Matrix, y: &Matrix) -> Result<Matrix> {
    if y.rows != a.rows || y.cols != 1 {
        return Err(LinalgError::Shape {
            op: "least_squares",
            left: a.shape(),
            right: y.shape(),
        });
    }
    Cod::new(a).solve(y)
}

/// Central-difference gradient of a scalar function, entry by entry.
pub fn finite_diff_gradient<F>(mut f: F, at: &Matrix, step: f64) -> Result<Matrix>
where
    F: FnMut(&Matrix) -> f64,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(LinalgError::InvalidStep(step));
    }
    let mut probe = at.clone();
    let mut grad = Matrix::zeros(at.rows, at.cols);
    for idx in 0..at.data.len() {
        let orig = probe.data[idx];
        probe.data[idx] = orig + step;
        let plus = f(&probe);
        probe.data[idx] = orig - step;
        let minus = f(&probe);
        probe.data[idx] = orig;
        let g = (plus - minus) / (2.0 * step);
        if !g.is_finite() {
            return Err(LinalgError::NonFiniteEvaluation {
                row: idx / at.cols,
                col: idx % at.cols,
            });
        }
        grad.data[idx] = g;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(matmul(&a, &Matrix::identity(2)).unwrap(), a);
    }

    #[test]
    fn matmul_hand_product() {
        let a = m(&[&[1.0, 2.0]]);
        let b = m(&[&[1.0, 0.0], &[-1.0, 1.0]]);
        assert_eq!(matmul(&a, &b).unwrap(), m(&[&[-1.0, 2.0]]));
    }

    #[test]
    fn matmul_zero() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let z = Matrix::zeros(2, 4);
        assert_eq!(matmul(&a, &z).unwrap(), Matrix::zeros(3, 4));
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let err = matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3)).unwrap_err();
        assert_eq!(
            err,
            LinalgError::Shape {
                op: "matmul",
                left: (2, 3),
                right: (2, 3)
            }
        );
        assert!(err.to_string().contains("(2, 3)"));
    }

    #[test]
    fn matmul_overflow_is_reported() {
        let a = m(&[&[1e300]]);
        assert_eq!(matmul(&a, &a).unwrap_err(), LinalgError::NonFinite { op: "matmul" });
    }

    #[test]
    fn construction_rejects_nan_and_empty() {
        assert!(Matrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(Matrix::new(0, 1, vec![]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn t_matmul_matches_transpose() {
        let a = m(&[&[1.0, 2.0, 0.5], &[3.0, -4.0, 1.0]]);
        let b = m(&[&[1.0], &[2.0]]);
        assert_eq!(a.t_matmul(&b).unwrap(), a.transpose().matmul(&b).unwrap());
    }

    #[test]
    fn lstsq_exact_column_space() {
        let a = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let y = Matrix::column(&[1.0, 2.0, 3.0]).unwrap();
        let w = least_squares(&a, &y).unwrap();
        assert!((w.get(0, 0) - 1.0).abs() < 1e-14);
        assert!((w.get(1, 0) - 2.0).abs() < 1e-14);
        let resid = a.matmul(&w).unwrap().sub(&y).unwrap();
        assert!(resid.max_abs() < 1e-14);
    }

    #[test]
    fn lstsq_identity_design() {
        let y = Matrix::column(&[0.3, -7.0, 2.5]).unwrap();
        let w = least_squares(&Matrix::identity(3), &y).unwrap();
        assert!(w.sub(&y).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn lstsq_duplicated_column_splits_weight() {
        // Columns identical: every w with w0 + w1 = c fits, minimum norm is c/2 each.
        let a = m(&[&[1.0, 1.0], &[2.0, 2.0], &[-1.0, -1.0]]);
        let y = Matrix::column(&[2.0, 4.0, -2.0]).unwrap();
        let cod = Cod::new(&a);
        assert_eq!(cod.rank(), 1);
        let w = cod.solve(&y).unwrap();
        assert!((w.get(0, 0) - 1.0).abs() < 1e-14, "{w:?}");
        assert!((w.get(1, 0) - 1.0).abs() < 1e-14, "{w:?}");
    }

    #[test]
    fn lstsq_zero_matrix_gives_zero() {
        let y = Matrix::column(&[1.0, 2.0]).unwrap();
        let w = least_squares(&Matrix::zeros(2, 3), &y).unwrap();
        assert_eq!(w, Matrix::zeros(3, 1));
    }

    #[test]
    fn lstsq_rejects_bad_shapes() {
        let y = Matrix::column(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            least_squares(&Matrix::zeros(3, 2), &y),
            Err(LinalgError::Shape { .. })
        ));
        assert!(least_squares(&Matrix::zeros(2, 2), &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn solve_transposed_underdetermined_min_norm() {
        // Aᵀ = [1 1], min-norm solution of y0 + y1 = 2 is (1, 1).
        let a = m(&[&[1.0], &[1.0]]);
        let y = Cod::new(&a).solve_transposed(&m(&[&[2.0]])).unwrap();
        assert!((y.get(0, 0) - 1.0).abs() < 1e-14);
        assert!((y.get(1, 0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fd_quadratic() {
        let x = m(&[&[0.5, -1.5], &[2.0, 3.0]]);
        let g = finite_diff_gradient(|v| 0.5 * v.sum_of_squares(), &x, 1e-5).unwrap();
        assert!(g.sub(&x).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn fd_constant_is_zero() {
        let x = m(&[&[0.5, -1.5, 7.0]]);
        let g = finite_diff_gradient(|_| 4.2, &x, 1e-3).unwrap();
        assert_eq!(g, Matrix::zeros(1, 3));
    }

    #[test]
    fn fd_linear_sum() {
        let x = m(&[&[0.5, -1.5], &[1.0, 10.0]]);
        let g = finite_diff_gradient(|v| v.sum(), &x, 1e-5).unwrap();
        assert!(g.sub(&m(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn fd_reports_perturbed_entry() {
        let x = m(&[&[0.0, 1.0]]);
        let err = finite_diff_gradient(|v| if v.get(0, 1) > 1.0 { f64::NAN } else { 0.0 }, &x, 1e-3).unwrap_err();
        assert_eq!(err, LinalgError::NonFiniteEvaluation { row: 0, col: 1 });
        assert!(finite_diff_gradient(|v| v.sum(), &x, 0.0).is_err());
    }

    #[test]
    fn vectorize_is_column_stacking() {
        let w = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let v = w.vectorize();
        // entry (d, h) at d + rows * h
        assert_eq!(v.as_slice(), &[1.0, 3.0, 5.0, 2.0, 4.0, 6.0]);
        assert_eq!(Matrix::unvectorize(v.as_slice(), 3, 2).unwrap(), w);
    }
}

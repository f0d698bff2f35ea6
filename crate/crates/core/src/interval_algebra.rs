//! Dense matrices plus the positive/negative-part, Metzler and interval
//! operators that the observer and the synthesis LP are written in.
//!
//! Positive and negative parts copy or zero each entry and never combine
//! entries arithmetically, so `pos_part(M) - neg_part(M) == M` holds bit for
//! bit.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgebraError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("matrix needs at least one row and one column")]
    Empty,
    #[error("ragged rows: row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("interval lower bound exceeds upper bound at component {index} ({lower} > {upper})")]
    InvertedInterval { index: usize, lower: f64, upper: f64 },
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, AlgebraError> {
        let first = rows.first().ok_or(AlgebraError::Empty)?.as_ref().len();
        if first == 0 {
            return Err(AlgebraError::Empty);
        }
        let mut data = Vec::with_capacity(rows.len() * first);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != first {
                return Err(AlgebraError::Ragged { row: i, expected: first, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols: first, data })
    }

    pub fn column(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        Self { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    pub fn row(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        Self { rows: 1, cols: values.len(), data: values.to_vec() }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
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

    pub fn scale(&self, k: f64) -> Self {
        self.map(|x| k * x)
    }

    pub fn try_mul(&self, rhs: &Matrix) -> Result<Matrix, AlgebraError> {
        if self.cols != rhs.rows {
            return Err(AlgebraError::DimensionMismatch {
                expected: format!("{} rows on the right operand", self.cols),
                found: format!("{}x{}", rhs.rows, rhs.cols),
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    fn try_zip(&self, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix, AlgebraError> {
        if self.shape() != rhs.shape() {
            return Err(AlgebraError::DimensionMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                found: format!("{}x{}", rhs.rows, rhs.cols),
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn try_add(&self, rhs: &Matrix) -> Result<Matrix, AlgebraError> {
        self.try_zip(rhs, |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &Matrix) -> Result<Matrix, AlgebraError> {
        self.try_zip(rhs, |a, b| a - b)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "vector length must equal column count");
        (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.data.chunks(self.cols).map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn all(&self, pred: impl Fn(f64) -> bool) -> bool {
        self.data.iter().all(|&x| pred(x))
    }

    fn require_square(&self) -> Result<(), AlgebraError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(AlgebraError::NotSquare { rows: self.rows, cols: self.cols })
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.try_mul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        self.try_add(rhs).expect("matrix sum dimension mismatch")
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        self.try_sub(rhs).expect("matrix difference dimension mismatch")
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.map(|x| -x)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{:?}", self.to_rows())
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = AlgebraError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// `M^⊕`: entries copied where positive, zero elsewhere.
pub fn pos_part(m: &Matrix) -> Matrix {
    m.map(|x| if x > 0.0 { x } else { 0.0 })
}

/// `M^⊖ = M^⊕ - M`: negated copy of the negative entries, zero elsewhere.
pub fn neg_part(m: &Matrix) -> Matrix {
    m.map(|x| if x < 0.0 { -x } else { 0.0 })
}

pub fn abs_mat(m: &Matrix) -> Matrix {
    m.map(f64::abs)
}

/// Returns `(M^d, M^nd)`.
pub fn diag_split(m: &Matrix) -> Result<(Matrix, Matrix), AlgebraError> {
    m.require_square()?;
    let n = m.rows();
    let mut d = Matrix::zeros(n, n);
    let mut nd = m.clone();
    for i in 0..n {
        d[(i, i)] = m[(i, i)];
        nd[(i, i)] = 0.0;
    }
    Ok((d, nd))
}

/// `M^m = M^d + |M^nd|`.
pub fn metzlerize(m: &Matrix) -> Result<Matrix, AlgebraError> {
    let (d, nd) = diag_split(m)?;
    Ok(&d + &abs_mat(&nd))
}

/// Returns `(M^↑, M^↓)` with `M^↑ = M^d + (M^nd)^⊕` and `M^↓ = (M^nd)^⊖`.
pub fn up_down_split(m: &Matrix) -> Result<(Matrix, Matrix), AlgebraError> {
    let (d, nd) = diag_split(m)?;
    Ok((&d + &pos_part(&nd), neg_part(&nd)))
}

pub fn is_metzler(m: &Matrix) -> bool {
    m.is_square() && (0..m.rows()).all(|i| (0..m.cols()).all(|j| i == j || m[(i, j)] >= 0.0))
}

/// Elementwise `[lower, upper]` box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl IntervalVector {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, AlgebraError> {
        if lower.len() != upper.len() {
            return Err(AlgebraError::DimensionMismatch {
                expected: format!("upper of length {}", lower.len()),
                found: format!("length {}", upper.len()),
            });
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            // `!(lo <= hi)` also rejects NaN bounds.
            if !(lo <= hi) {
                return Err(AlgebraError::InvertedInterval { index: i, lower: lo, upper: hi });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn degenerate(point: Vec<f64>) -> Self {
        Self { lower: point.clone(), upper: point }
    }

    /// Box of half-widths `radius` around `center`.
    pub fn around(center: &[f64], radius: &[f64]) -> Result<Self, AlgebraError> {
        if center.len() != radius.len() {
            return Err(AlgebraError::DimensionMismatch {
                expected: format!("radius of length {}", center.len()),
                found: format!("length {}", radius.len()),
            });
        }
        Self::new(
            center.iter().zip(radius).map(|(c, r)| c - r).collect(),
            center.iter().zip(radius).map(|(c, r)| c + r).collect(),
        )
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, z: &[f64]) -> Result<bool, AlgebraError> {
        if z.len() != self.len() {
            return Err(AlgebraError::DimensionMismatch {
                expected: format!("vector of length {}", self.len()),
                found: format!("length {}", z.len()),
            });
        }
        Ok(z.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&x, (&lo, &hi))| lo <= x && x <= hi))
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn width(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo).collect()
    }
}

pub fn interval_contains(iv: &IntervalVector, z: &[f64]) -> Result<bool, AlgebraError> {
    iv.contains(z)
}

pub fn midpoint(iv: &IntervalVector) -> Vec<f64> {
    iv.midpoint()
}

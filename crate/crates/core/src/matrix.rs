//! Dense row-major `f64` matrices and the handful of kernels the network needs.
//!
//! Products go through `matrixmultiply::dgemm`, which packs panels and walks the
//! inner dimension in a fixed order, so every output element is summed the same
//! way regardless of how many columns are in the batch.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Whether an operand enters a product as stored or transposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    N,
    T,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// A single-column matrix.
    pub fn column_vector(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    /// Builds a `len x columns.len()` matrix whose columns are the given slices.
    pub fn from_columns<S: AsRef<[f64]>>(columns: &[S]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let mut m = Matrix::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::Dimension(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            for (i, &v) in c.iter().enumerate() {
                m.data[i * cols + j] = v;
            }
        }
        Ok(m)
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
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Shape of `op(self)`.
    fn shape(&self, op: Op) -> (usize, usize) {
        match op {
            Op::N => (self.rows, self.cols),
            Op::T => (self.cols, self.rows),
        }
    }

    /// Row and column strides of `op(self)`.
    fn strides(&self, op: Op) -> (isize, isize) {
        let (rs, cs) = (self.cols as isize, 1isize);
        match op {
            Op::N => (rs, cs),
            Op::T => (cs, rs),
        }
    }
}

/// `c = alpha * op_a(a) * op_b(b) + beta * c`.
pub fn gemm(alpha: f64, a: &Matrix, op_a: Op, b: &Matrix, op_b: Op, beta: f64, c: &mut Matrix) -> Result<()> {
    let (m, k) = a.shape(op_a);
    let (kb, n) = b.shape(op_b);
    if k != kb || c.rows != m || c.cols != n {
        return Err(Error::Dimension(format!(
            "gemm {m}x{k} * {kb}x{n} into {}x{}",
            c.rows, c.cols
        )));
    }
    if m == 0 || n == 0 {
        return Ok(());
    }
    if k == 0 {
        c.data.iter_mut().for_each(|v| *v *= beta);
        return Ok(());
    }
    let (rsa, csa) = a.strides(op_a);
    let (rsb, csb) = b.strides(op_b);
    // SAFETY: shapes were checked above and the strides describe views that
    // stay inside each buffer; `c` is uniquely borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
    Ok(())
}

/// `op_a(a) * op_b(b)` into a fresh matrix.
pub fn matmul(a: &Matrix, op_a: Op, b: &Matrix, op_b: Op) -> Result<Matrix> {
    let (m, _) = a.shape(op_a);
    let (_, n) = b.shape(op_b);
    let mut c = Matrix::zeros(m, n);
    gemm(1.0, a, op_a, b, op_b, 0.0, &mut c)?;
    Ok(c)
}

/// Adds `bias[r]` to every entry of row `r`.
pub fn add_row_bias(m: &mut Matrix, bias: &[f64]) {
    debug_assert_eq!(bias.len(), m.rows);
    for (r, &b) in bias.iter().enumerate() {
        m.row_mut(r).iter_mut().for_each(|v| *v += b);
    }
}

/// Row sums, i.e. the bias gradient of a batch of column deltas.
pub fn row_sums(m: &Matrix) -> Vec<f64> {
    (0..m.rows).map(|r| m.row(r).iter().sum()).collect()
}

pub fn relu(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    out.data.iter_mut().for_each(|v| {
        if *v <= 0.0 {
            *v = 0.0
        }
    });
    out
}

/// Zeroes `grad` wherever the pre-activation is not strictly positive.
pub fn relu_backward(grad: &mut Matrix, pre_activation: &Matrix) {
    debug_assert_eq!(grad.data.len(), pre_activation.data.len());
    for (g, &a) in grad.data.iter_mut().zip(&pre_activation.data) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

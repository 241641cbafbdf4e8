//! Dense N-way tensors, matricization, folding, mode products and norms.
//!
//! Layout: mode-0-fastest linearization, i.e. the linear index of entry
//! `(i_0, i_1, ..., i_{N-1})` is `i_0 + I_0*i_1 + I_0*I_1*i_2 + ...`.
//! With this layout the mode-0 unfolding is a plain reshape. Modes are
//! 0-based everywhere in the library; the CLI reports them 1-based.

use crate::error::{Result, TensorError};
use crate::svdrank;
use nalgebra::{DMatrix, DMatrixView};

/// Element cap for Kronecker products; guards accidental huge allocations.
pub const KRON_ELEM_CAP: usize = 1 << 26;

/// Dense matrix of 64-bit floats, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(TensorError::InvalidArgument(
                "matrix dimensions must be positive".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(TensorError::ShapeMismatch(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(TensorError::NonFiniteEntry(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + n * i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column-major entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r + self.rows * c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r + self.rows * c] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.data[c + self.cols * r] = self.data[r + self.rows * c];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn as_view(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data, self.rows, self.cols)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Matrix {
        Matrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.as_slice().to_vec(),
        }
    }

    /// `self * other` (or with either side transposed).
    pub fn matmul(&self, other: &Matrix, transpose_self: bool, transpose_other: bool) -> Result<Matrix> {
        let (lr, lc) = if transpose_self {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        };
        let (rr, rc) = if transpose_other {
            (other.cols, other.rows)
        } else {
            (other.rows, other.cols)
        };
        if lc != rr {
            return Err(TensorError::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                lr, lc, rr, rc
            )));
        }
        let a = self.as_view();
        let b = other.as_view();
        let prod = match (transpose_self, transpose_other) {
            (false, false) => a * b,
            (true, false) => a.transpose() * b,
            (false, true) => a * b.transpose(),
            (true, true) => a.transpose() * b.transpose(),
        };
        Ok(Matrix::from_dmatrix(&prod))
    }
}

/// Dense N-way array of 64-bit floats with explicit shape.
///
/// Immutable after construction; all operations return fresh values.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(TensorError::InvalidArgument(
                "tensor order must be at least 1".into(),
            ));
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(TensorError::InvalidArgument(
                "every tensor dimension must be positive".into(),
            ));
        }
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(TensorError::ShapeMismatch(format!(
                "shape {:?} requires {} entries, got {}",
                shape,
                len,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(TensorError::NonFiniteEntry(i));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len: usize = shape.iter().product();
        Self::from_vec(shape, vec![0.0; len])
    }

    /// Build entrywise from multi-indices (0-based).
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for (i, d) in idx.iter_mut().zip(shape.iter()) {
                *i += 1;
                if *i < *d {
                    break;
                }
                *i = 0;
            }
        }
        Self::from_vec(shape, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut lin = 0;
        let mut stride = 1;
        for (i, d) in idx.iter().zip(self.shape.iter()) {
            debug_assert!(i < d);
            lin += i * stride;
            stride *= d;
        }
        lin
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>()
    }

    /// Mode-n matricization: rows index mode `mode`, columns run over the
    /// remaining modes with the lower modes fastest.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        let n = self.order();
        if mode >= n {
            return Err(TensorError::ModeOutOfRange { mode, order: n });
        }
        let rows = self.shape[mode];
        let cols = self.len() / rows;
        if mode == 0 {
            // Mode-0 rows are the fastest-varying index: plain reshape.
            return Matrix::from_col_major(rows, cols, self.data.clone());
        }
        let left: usize = self.shape[..mode].iter().product();
        let right: usize = self.shape[mode + 1..].iter().product();
        let mut out = vec![0.0; self.len()];
        for r in 0..right {
            for i in 0..rows {
                let src_base = left * (i + rows * r);
                let dst_base = i + rows * left * r;
                for l in 0..left {
                    out[dst_base + rows * l] = self.data[src_base + l];
                }
            }
        }
        Matrix::from_col_major(rows, cols, out)
    }

    /// Inverse of `unfold`; `unfold(fold(M, mode, shape), mode)` is `M` bit-exactly.
    pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
        let n = shape.len();
        if mode >= n {
            return Err(TensorError::ModeOutOfRange { mode, order: n });
        }
        let len: usize = shape.iter().product();
        if m.rows() != shape[mode] || m.rows() * m.cols() != len {
            return Err(TensorError::ShapeMismatch(format!(
                "cannot fold {}x{} matrix at mode {} into shape {:?}",
                m.rows(),
                m.cols(),
                mode,
                shape
            )));
        }
        if mode == 0 {
            return DenseTensor::from_vec(shape.to_vec(), m.data().to_vec());
        }
        let rows = shape[mode];
        let left: usize = shape[..mode].iter().product();
        let right: usize = shape[mode + 1..].iter().product();
        let src = m.data();
        let mut out = vec![0.0; len];
        for r in 0..right {
            for i in 0..rows {
                let dst_base = left * (i + rows * r);
                let src_base = i + rows * left * r;
                for l in 0..left {
                    out[dst_base + l] = src[src_base + rows * l];
                }
            }
        }
        DenseTensor::from_vec(shape.to_vec(), out)
    }

    /// Mode-n tensor-times-matrix product: `B_(n) = U * A_(n)` (or `U^T * A_(n)`).
    pub fn ttm(&self, u: &Matrix, mode: usize, transpose: bool) -> Result<DenseTensor> {
        let n = self.order();
        if mode >= n {
            return Err(TensorError::ModeOutOfRange { mode, order: n });
        }
        let (in_dim, out_dim) = if transpose {
            (u.rows(), u.cols())
        } else {
            (u.cols(), u.rows())
        };
        if in_dim != self.shape[mode] {
            return Err(TensorError::ShapeMismatch(format!(
                "ttm at mode {}: matrix contracts dimension {}, tensor has {}",
                mode, in_dim, self.shape[mode]
            )));
        }
        let unfolded = self.unfold(mode)?;
        let prod = u.matmul(&unfolded, transpose, false)?;
        let mut new_shape = self.shape.clone();
        new_shape[mode] = out_dim;
        Self::fold(&prod, mode, &new_shape)
    }

    /// Applies a sequence of mode products on distinct modes.
    ///
    /// Contraction order is chosen greedily (smallest intermediate first);
    /// the result is order-independent up to rounding.
    pub fn ttm_chain(&self, factors: &[(&Matrix, usize, bool)]) -> Result<DenseTensor> {
        let mut seen = vec![false; self.order()];
        for &(u, mode, transpose) in factors {
            if mode >= self.order() {
                return Err(TensorError::ModeOutOfRange {
                    mode,
                    order: self.order(),
                });
            }
            if seen[mode] {
                return Err(TensorError::DuplicateMode(mode));
            }
            seen[mode] = true;
            let in_dim = if transpose { u.rows() } else { u.cols() };
            if in_dim != self.shape[mode] {
                return Err(TensorError::ShapeMismatch(format!(
                    "ttm_chain at mode {}: matrix contracts dimension {}, tensor has {}",
                    mode, in_dim, self.shape[mode]
                )));
            }
        }
        let mut remaining: Vec<usize> = (0..factors.len()).collect();
        let mut current = self.clone();
        while !remaining.is_empty() {
            let best = remaining
                .iter()
                .enumerate()
                .min_by_key(|&(_, &fi)| {
                    let (u, mode, transpose) = factors[fi];
                    let out_dim = if transpose { u.cols() } else { u.rows() };
                    current.len() / current.shape[mode] * out_dim
                })
                .map(|(pos, _)| pos)
                .expect("remaining is non-empty");
            let (u, mode, transpose) = factors[remaining.swap_remove(best)];
            current = current.ttm(u, mode, transpose)?;
        }
        Ok(current)
    }
}

/// Numerical multilinear rank of a tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankEstimate {
    /// Per-mode count of singular values above `tol * sigma_max`.
    pub ranks: Vec<usize>,
    /// Set for the all-zero tensor, whose ranks are reported as zeros.
    pub degenerate: bool,
}

/// Per-mode rank of the unfoldings: singular values above `tol * sigma_max`.
pub fn multilinear_rank(t: &DenseTensor, tol: f64) -> Result<RankEstimate> {
    if tol < 0.0 {
        return Err(TensorError::InvalidArgument("tol must be non-negative".into()));
    }
    if t.frobenius_norm() == 0.0 {
        return Ok(RankEstimate {
            ranks: vec![0; t.order()],
            degenerate: true,
        });
    }
    let mut ranks = Vec::with_capacity(t.order());
    for mode in 0..t.order() {
        let svd = svdrank::full_svd(&t.unfold(mode)?)?;
        let smax = svd.sigma[0];
        ranks.push(svd.sigma.iter().filter(|&&s| s > tol * smax).count());
    }
    Ok(RankEstimate {
        ranks,
        degenerate: false,
    })
}

/// Kronecker product of `a` and `b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let elems = rows.checked_mul(cols).unwrap_or(usize::MAX);
    if elems > KRON_ELEM_CAP {
        return Err(TensorError::SizeCapExceeded {
            elems,
            cap: KRON_ELEM_CAP,
        });
    }
    let mut out = Matrix::zeros(rows, cols);
    for ac in 0..a.cols() {
        for ar in 0..a.rows() {
            let av = a.get(ar, ac);
            if av == 0.0 {
                continue;
            }
            for bc in 0..b.cols() {
                for br in 0..b.rows() {
                    out.set(ar * b.rows() + br, ac * b.cols() + bc, av * b.get(br, bc));
                }
            }
        }
    }
    Ok(out)
}

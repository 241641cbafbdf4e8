//! Deterministic generators for the experiment tensors.
//!
//! All randomness goes through ChaCha8 seeded explicitly, so every generated
//! tensor is bit-stable across runs and platforms.

use crate::error::{Result, TensorError};
use crate::tensor::{DenseTensor, Matrix};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_col_major(rows, cols, data).expect("gaussian draws are finite")
}

/// Orthonormalizes a Gaussian draw via thin QR.
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    assert!(cols <= rows, "cannot build {cols} orthonormal columns in R^{rows}");
    let g = gaussian_matrix(rows, cols, rng);
    let q = g.to_dmatrix().qr().q();
    Matrix::from_dmatrix(&q)
}

/// Gaussian core times random orthonormal factors; the result has
/// multilinear rank `trunc` almost surely.
pub fn random_low_rank_tensor(shape: &[usize], trunc: &[usize], seed: u64) -> Result<DenseTensor> {
    if trunc.len() != shape.len() || trunc.iter().zip(shape).any(|(&r, &d)| r == 0 || r > d) {
        return Err(TensorError::InvalidArgument(format!(
            "truncation {trunc:?} incompatible with shape {shape:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core_len: usize = trunc.iter().product();
    let core_data: Vec<f64> = (0..core_len).map(|_| rng.sample(StandardNormal)).collect();
    let core = DenseTensor::from_vec(trunc.to_vec(), core_data)?;
    let factors: Vec<Matrix> = shape
        .iter()
        .zip(trunc)
        .map(|(&d, &r)| random_orthonormal(d, r, &mut rng))
        .collect();
    let chain: Vec<(&Matrix, usize, bool)> = factors
        .iter()
        .enumerate()
        .map(|(n, f)| (f, n, false))
        .collect();
    core.ttm_chain(&chain)
}

/// `A / ||A|| + delta * E / ||E||` with standard Gaussian `E`; the noise
/// distance from the normalized tensor is exactly `delta` by construction.
pub fn add_gaussian_noise(a: &DenseTensor, delta: f64, seed: u64) -> Result<DenseTensor> {
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Err(TensorError::ZeroNorm);
    }
    if delta < 0.0 {
        return Err(TensorError::InvalidArgument("delta must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..a.len()).map(|_| rng.sample(StandardNormal)).collect();
    let noise_norm = noise.iter().map(|x| x * x).sum::<f64>().sqrt();
    let data = a
        .data()
        .iter()
        .zip(&noise)
        .map(|(x, e)| x / norm + delta * e / noise_norm)
        .collect();
    DenseTensor::from_vec(a.shape().to_vec(), data)
}

/// Regularized 2D Coulomb kernel sampled on a uniform inclusive grid:
/// `f(x1,x2,x3,x4) = ln(0.1 + |x1-x2| + |x3-x4|)`, shape `(I,I,I,I)`.
pub fn coulomb_kernel_tensor(i: usize, lo: f64, hi: f64) -> Result<DenseTensor> {
    if i < 2 {
        return Err(TensorError::InvalidArgument("grid needs at least 2 points".into()));
    }
    if !(lo < hi) {
        return Err(TensorError::InvalidArgument(format!(
            "invalid interval [{lo}, {hi}]"
        )));
    }
    let grid: Vec<f64> = (0..i)
        .map(|k| lo + k as f64 * (hi - lo) / (i - 1) as f64)
        .collect();
    DenseTensor::from_fn(vec![i; 4], |idx| {
        let d12 = (grid[idx[0]] - grid[idx[1]]).abs();
        let d34 = (grid[idx[2]] - grid[idx[3]]).abs();
        (0.1 + d12 + d34).ln()
    })
}

//! Matrix SVD access and the tail-energy rank-selection rule.
//!
//! Every tolerance-driven truncation decision in the library goes through
//! `select_rank`, which picks the smallest rank whose discarded tail energy
//! fits a squared-error budget.

use crate::error::{Result, TensorError};
use crate::tensor::Matrix;

/// Thin SVD factors of a matrix: `U * diag(sigma) * Vt`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// Columns orthonormal.
    pub u: Matrix,
    /// Non-increasing, all non-negative.
    pub sigma: Vec<f64>,
    /// Rows orthonormal.
    pub vt: Matrix,
}

impl SvdFactors {
    pub fn rank_count(&self) -> usize {
        self.sigma.len()
    }

    /// Leading-`r` restriction of the factors.
    pub fn truncate(&self, r: usize) -> Result<SvdFactors> {
        if r == 0 || r > self.sigma.len() {
            return Err(TensorError::RankOutOfRange {
                rank: r,
                max: self.sigma.len(),
            });
        }
        let u = Matrix::from_col_major(
            self.u.rows(),
            r,
            self.u.data()[..self.u.rows() * r].to_vec(),
        )?;
        let mut vt_data = Vec::with_capacity(r * self.vt.cols());
        for c in 0..self.vt.cols() {
            for row in 0..r {
                vt_data.push(self.vt.get(row, c));
            }
        }
        let vt = Matrix::from_col_major(r, self.vt.cols(), vt_data)?;
        Ok(SvdFactors {
            u,
            sigma: self.sigma[..r].to_vec(),
            vt,
        })
    }

    /// `diag(sigma) * Vt`, the coefficient matrix of the decomposition.
    pub fn sigma_vt(&self) -> Matrix {
        let r = self.sigma.len();
        let mut out = Matrix::zeros(r, self.vt.cols());
        for c in 0..self.vt.cols() {
            for row in 0..r {
                out.set(row, c, self.sigma[row] * self.vt.get(row, c));
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Result<Matrix> {
        self.u.matmul(&self.sigma_vt(), false, false)
    }
}

/// Thin SVD with `min(rows, cols)` singular triplets, sigma descending.
///
/// Rectangular inputs are reduced to a square core by transposition and a
/// thin QR, which keeps the expensive step at the small dimension. The core
/// SVD result is verified against the energy identity `sum sigma^2 = ||M||^2`;
/// the LAPACK-style bidiagonal iteration in the backend can silently
/// mis-converge on rank-deficient inputs, in which case a one-sided Jacobi
/// SVD is used instead.
pub fn full_svd(m: &Matrix) -> Result<SvdFactors> {
    if m.rows() >= m.cols() {
        full_svd_tall(m)
    } else {
        let f = full_svd_tall(&m.transpose())?;
        Ok(SvdFactors {
            u: f.vt.transpose(),
            sigma: f.sigma,
            vt: f.u.transpose(),
        })
    }
}

fn full_svd_tall(m: &Matrix) -> Result<SvdFactors> {
    let k = m.cols();
    if m.rows() == k {
        return square_svd(m);
    }
    let qr = m.to_dmatrix().qr();
    let r = Matrix::from_dmatrix(&qr.r());
    let q = Matrix::from_dmatrix(&qr.q());
    let f = square_svd(&r)?;
    Ok(SvdFactors {
        u: q.matmul(&f.u, false, false)?,
        sigma: f.sigma,
        vt: f.vt,
    })
}

fn square_svd(m: &Matrix) -> Result<SvdFactors> {
    let (rows, cols) = (m.rows(), m.cols());
    let sq_norm: f64 = m.data().iter().map(|x| x * x).sum();
    if let Some(svd) = m.to_dmatrix().try_svd(true, true, f64::EPSILON, 0) {
        let u = svd.u.expect("requested U");
        let vt = svd.v_t.expect("requested Vt");
        let k = svd.singular_values.len();
        let energy: f64 = svd.singular_values.iter().map(|s| s * s).sum();
        let consistent = svd.singular_values.iter().all(|s| s.is_finite() && *s >= 0.0)
            && (energy - sq_norm).abs() <= 1e-8 * sq_norm.max(f64::MIN_POSITIVE);
        if consistent {
            // Enforce descending order; the backend usually sorts already.
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| {
                svd.singular_values[b]
                    .partial_cmp(&svd.singular_values[a])
                    .expect("singular values are finite")
            });
            let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
            let mut u_data = Vec::with_capacity(rows * k);
            for &i in &order {
                u_data.extend_from_slice(u.column(i).as_slice());
            }
            let mut vt_data = vec![0.0; k * cols];
            for (new_row, &old_row) in order.iter().enumerate() {
                for c in 0..cols {
                    vt_data[new_row + k * c] = vt[(old_row, c)];
                }
            }
            return Ok(SvdFactors {
                u: Matrix::from_col_major(rows, k, u_data)?,
                sigma,
                vt: Matrix::from_col_major(k, cols, vt_data)?,
            });
        }
    }
    jacobi_svd(m)
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// One-sided Jacobi SVD of a square matrix: rotate column pairs until all
/// columns are mutually orthogonal, then read off `sigma` as column norms.
/// Slower than bidiagonalization but does not mis-converge.
fn jacobi_svd(m: &Matrix) -> Result<SvdFactors> {
    let n = m.rows();
    debug_assert_eq!(n, m.cols());
    let mut a = m.data().to_vec();
    let mut v = Matrix::identity(n);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut app, mut aqq, mut apq) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    let x = a[i + n * p];
                    let y = a[i + n * q];
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq.abs() <= 1e-15 * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let x = a[i + n * p];
                    let y = a[i + n * q];
                    a[i + n * p] = c * x - s * y;
                    a[i + n * q] = s * x + c * y;
                }
                for i in 0..n {
                    let x = v.get(i, p);
                    let y = v.get(i, q);
                    v.set(i, p, c * x - s * y);
                    v.set(i, q, s * x + c * y);
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(TensorError::SvdFailed { rows: n, cols: n });
    }
    let mut sigma: Vec<f64> = (0..n)
        .map(|j| a[n * j..n * (j + 1)].iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sigma[y].partial_cmp(&sigma[x]).expect("finite norms"));
    sigma = order.iter().map(|&j| sigma[j]).collect();
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let cutoff = sigma_max * 1e-14;
    let mut u = Matrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        if sigma[new_j] > cutoff {
            for i in 0..n {
                u.set(i, new_j, a[i + n * old_j] / sigma[new_j]);
            }
        }
    }
    // Sigma is sorted descending, so negligible columns come last; fill each
    // by Gram-Schmidt against everything before it so U stays orthonormal.
    for j in 0..n {
        if sigma[j] > cutoff {
            continue;
        }
        'basis: for e in 0..n {
            let mut w = vec![0.0; n];
            w[e] = 1.0;
            for prev in 0..j {
                let dot: f64 = (0..n).map(|i| w[i] * u.get(i, prev)).sum();
                for i in 0..n {
                    w[i] -= dot * u.get(i, prev);
                }
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.5 {
                for i in 0..n {
                    u.set(i, j, w[i] / norm);
                }
                break 'basis;
            }
        }
    }
    let mut vt = Matrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vt.set(new_j, i, v.get(i, old_j));
        }
    }
    Ok(SvdFactors {
        u,
        sigma,
        vt,
    })
}

/// Leading-`r` SVD triplets of `m`.
pub fn truncated_svd(m: &Matrix, r: usize) -> Result<SvdFactors> {
    let max = m.rows().min(m.cols());
    if r == 0 || r > max {
        return Err(TensorError::RankOutOfRange { rank: r, max });
    }
    full_svd(m)?.truncate(r)
}

/// Sum of squared singular values beyond index `r`, accumulated from the
/// smallest upward so tiny tails are not swamped by head energy.
pub fn tail_energy(sigma: &[f64], r: usize) -> f64 {
    sigma[r.min(sigma.len())..].iter().rev().map(|s| s * s).sum()
}

/// Smallest `R >= 1` with `tail_energy(sigma, R) <= budget`; `sigma.len()`
/// if no tail fits. Never returns 0: every mode keeps at least one direction.
pub fn select_rank(sigma: &[f64], budget: f64) -> Result<usize> {
    if sigma.windows(2).any(|w| w[0] < w[1]) {
        return Err(TensorError::UnsortedSingularValues);
    }
    if !budget.is_finite() || budget < 0.0 {
        return Err(TensorError::InvalidArgument(format!(
            "budget must be finite and non-negative, got {budget}"
        )));
    }
    if sigma.is_empty() {
        return Ok(1);
    }
    // Suffix sums from the smallest singular value upward.
    let n = sigma.len();
    let mut tail = 0.0;
    let mut best = n;
    for r in (1..n).rev() {
        tail += sigma[r] * sigma[r];
        if tail <= budget {
            best = r;
        } else {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix::from_col_major(rows, cols, data).unwrap()
    }

    fn assert_factors_valid(m: &Matrix, f: &SvdFactors) {
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(f.sigma.iter().all(|&s| s >= 0.0));
        let utu = f.u.matmul(&f.u, true, false).unwrap();
        let vvt = f.vt.matmul(&f.vt, false, true).unwrap();
        for (g, n) in [(&utu, f.u.cols()), (&vvt, f.vt.rows())] {
            for c in 0..n {
                for r in 0..n {
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!((g.get(r, c) - want).abs() < 1e-10);
                }
            }
        }
        if f.sigma.len() == m.rows().min(m.cols()) {
            let rec = f.reconstruct().unwrap();
            let scale = m.frobenius_norm().max(1e-300);
            for c in 0..m.cols() {
                for r in 0..m.rows() {
                    assert!((rec.get(r, c) - m.get(r, c)).abs() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn full_svd_diagonal() {
        let mut m = Matrix::zeros(3, 3);
        m.set(0, 0, 3.0);
        m.set(1, 1, 2.0);
        m.set(2, 2, 1.0);
        let f = full_svd(&m).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-12);
        assert!((f.sigma[1] - 2.0).abs() < 1e-12);
        assert!((f.sigma[2] - 1.0).abs() < 1e-12);
        assert_factors_valid(&m, &f);
        // U columns are signed unit vectors in order.
        for (col, row) in [(0, 0), (1, 1), (2, 2)] {
            assert!((f.u.get(row, col).abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_svd_rank_one() {
        let a = [1.0, -2.0, 2.0];
        let b = [3.0, 4.0];
        let mut m = Matrix::zeros(3, 2);
        for c in 0..2 {
            for r in 0..3 {
                m.set(r, c, a[r] * b[c]);
            }
        }
        let f = full_svd(&m).unwrap();
        assert!((f.sigma[0] - 15.0).abs() < 1e-12); // |a| * |b| = 3 * 5
        assert!(f.sigma[1].abs() < 1e-12);
        assert_factors_valid(&m, &f);
    }

    #[test]
    fn full_svd_reconstruction_random() {
        let m = random_matrix(8, 5, 17);
        let f = full_svd(&m).unwrap();
        assert_eq!(f.sigma.len(), 5);
        assert_factors_valid(&m, &f);
    }

    #[test]
    fn truncated_full_rank_equals_full() {
        let m = random_matrix(4, 6, 3);
        let f = full_svd(&m).unwrap();
        let t = truncated_svd(&m, 4).unwrap();
        assert_eq!(f.sigma, t.sigma);
    }

    #[test]
    fn truncated_diag_residual() {
        let mut m = Matrix::zeros(3, 3);
        m.set(0, 0, 3.0);
        m.set(1, 1, 2.0);
        m.set(2, 2, 1.0);
        let t = truncated_svd(&m, 2).unwrap();
        let rec = t.reconstruct().unwrap();
        let mut resid = 0.0;
        for c in 0..3 {
            for r in 0..3 {
                let d = m.get(r, c) - rec.get(r, c);
                resid += d * d;
            }
        }
        assert!((resid.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_residual_matches_tail_energy() {
        let m = random_matrix(10, 7, 23);
        let f = full_svd(&m).unwrap();
        let t = truncated_svd(&m, 3).unwrap();
        let rec = t.reconstruct().unwrap();
        let mut resid2 = 0.0;
        for c in 0..7 {
            for r in 0..10 {
                let d = m.get(r, c) - rec.get(r, c);
                resid2 += d * d;
            }
        }
        let tail = tail_energy(&f.sigma, 3);
        assert!((resid2 - tail).abs() <= 1e-12 * tail);
    }

    #[test]
    fn truncated_rank_out_of_range() {
        let m = random_matrix(3, 4, 5);
        assert!(truncated_svd(&m, 0).is_err());
        assert!(truncated_svd(&m, 4).is_err());
    }

    #[test]
    fn full_svd_rank_deficient_energy_identity() {
        // Products of thin random factors exercise the mis-convergence path
        // of the backend's bidiagonal iteration.
        for seed in 0..30 {
            let (rows, cols, rank) = (7, 6, 4);
            let left = random_matrix(rows, rank, 2 * seed);
            let right = random_matrix(rank, cols, 2 * seed + 1);
            let m = left.matmul(&right, false, false).unwrap();
            let f = full_svd(&m).unwrap();
            let energy: f64 = f.sigma.iter().map(|s| s * s).sum();
            let sq = m.frobenius_norm().powi(2);
            assert!(
                (energy - sq).abs() <= 1e-10 * sq,
                "seed {seed}: sigma energy {energy} vs norm {sq}"
            );
            assert!(f.sigma[rank..].iter().all(|&s| s < 1e-10 * f.sigma[0]));
            assert_factors_valid(&m, &f);
        }
    }

    #[test]
    fn jacobi_svd_matches_reference() {
        for seed in 0..10 {
            let m = random_matrix(6, 6, 900 + seed);
            let f = super::jacobi_svd(&m).unwrap();
            assert_factors_valid(&m, &f);
            let g = full_svd(&m).unwrap();
            for (a, b) in f.sigma.iter().zip(&g.sigma) {
                assert!((a - b).abs() <= 1e-10 * g.sigma[0]);
            }
        }
    }

    #[test]
    fn jacobi_svd_rank_deficient_completion() {
        let left = random_matrix(5, 2, 77);
        let right = random_matrix(2, 5, 78);
        let m = left.matmul(&right, false, false).unwrap();
        let f = super::jacobi_svd(&m).unwrap();
        assert_factors_valid(&m, &f);
        assert!(f.sigma[2] < 1e-12 * f.sigma[0]);
    }

    #[test]
    fn select_rank_examples() {
        let sigma = [3.0, 2.0, 1.0];
        assert_eq!(select_rank(&sigma, 1.0).unwrap(), 2);
        assert_eq!(select_rank(&sigma, 0.99).unwrap(), 3);
        assert_eq!(select_rank(&sigma, 100.0).unwrap(), 1);
        assert_eq!(select_rank(&sigma, 0.0).unwrap(), 3);
    }

    #[test]
    fn select_rank_rejects_unsorted() {
        assert!(matches!(
            select_rank(&[1.0, 2.0], 0.5),
            Err(TensorError::UnsortedSingularValues)
        ));
        assert!(select_rank(&[1.0, 2.0].map(|x| -x), -1.0).is_err());
    }

    #[test]
    fn select_rank_monotone_in_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut sigma: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..5.0)).collect();
            sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let b1 = rng.gen_range(0.0..30.0);
            let b2 = rng.gen_range(0.0..30.0);
            let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
            assert!(select_rank(&sigma, hi).unwrap() <= select_rank(&sigma, lo).unwrap());
        }
    }

    #[test]
    fn tail_energy_examples() {
        let sigma = [3.0, 2.0, 1.0];
        assert_eq!(tail_energy(&sigma, 3), 0.0);
        assert_eq!(tail_energy(&sigma, 0), 14.0);
        assert_eq!(tail_energy(&sigma, 1), 5.0);
    }

    #[test]
    fn selected_rank_tail_fits_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let mut sigma: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..3.0)).collect();
            sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let budget = rng.gen_range(0.0..10.0);
            let r = select_rank(&sigma, budget).unwrap();
            let total = tail_energy(&sigma, 0);
            assert!(tail_energy(&sigma, r) <= budget || (r == 1 && budget >= total - sigma[0] * sigma[0]));
        }
    }
}

//! Fixed-rank HOOI, rank-adaptive HOOI with the tail-energy rank rule,
//! classical Tucker-ALS as contrast, feasible initializers, and the
//! brute-force sub-problem oracle used by the test suites.

use crate::error::{Result, TensorError};
use crate::hosvd::{self, TuckerModel, Truncation};
use crate::svdrank::{self, SvdFactors};
use crate::tensor::{self, DenseTensor, Matrix};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Iteration controls shared by the alternating algorithms.
#[derive(Debug, Clone)]
pub struct HooiConfig {
    pub max_iter: usize,
    /// Stagnation threshold on the core-norm change, relative to `||A||`.
    pub fit_tol: f64,
    /// Relative error tolerance; adaptive mode only.
    pub epsilon: Option<f64>,
}

impl Default for HooiConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            fit_tol: 1e-8,
            epsilon: None,
        }
    }
}

impl HooiConfig {
    pub fn adaptive(epsilon: f64) -> Self {
        Self {
            epsilon: Some(epsilon),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(TensorError::InvalidArgument("max_iter must be at least 1".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(TensorError::InvalidArgument(format!(
                    "tolerance must lie in (0, 1), got {e}"
                )));
            }
        }
        Ok(())
    }
}

/// How `update_mode` picks the new mode rank.
#[derive(Debug, Clone, Copy)]
pub enum RankRule {
    Fixed(usize),
    /// Tail-energy budget `||B||^2 - (1 - eps^2) ||A||^2`.
    Adaptive { epsilon: f64 },
}

/// Result of a single mode update.
#[derive(Debug)]
pub struct ModeUpdate {
    /// Leading left singular vectors of the contracted unfolding.
    pub factor: Matrix,
    /// Full SVD of `B_(n)`.
    pub svd: SvdFactors,
    pub rank: usize,
    /// Set when the adaptive budget came out negative and was clamped to 0.
    pub budget_clamped: bool,
}

impl ModeUpdate {
    /// Squared core norm if the sweep stopped after this update.
    pub fn head_energy(&self) -> f64 {
        self.svd.sigma[..self.rank].iter().rev().map(|s| s * s).sum()
    }

    /// Global objective `||A - model||` achieved by this update.
    pub fn achieved_objective(&self, a_squared_norm: f64) -> f64 {
        (a_squared_norm - self.head_energy()).max(0.0).sqrt()
    }
}

/// One HOOI/adaptive-HOOI mode update: contract `a` with every other
/// factor transposed, then truncate the SVD of the mode-`n` unfolding.
pub fn update_mode(
    a: &DenseTensor,
    factors: &[Matrix],
    n: usize,
    rule: RankRule,
) -> Result<ModeUpdate> {
    if n >= a.order() {
        return Err(TensorError::ModeOutOfRange {
            mode: n,
            order: a.order(),
        });
    }
    if factors.len() != a.order() {
        return Err(TensorError::ShapeMismatch(format!(
            "{} factors for an order-{} tensor",
            factors.len(),
            a.order()
        )));
    }
    let chain: Vec<(&Matrix, usize, bool)> = factors
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != n)
        .map(|(k, f)| (f, k, true))
        .collect();
    let b = a.ttm_chain(&chain)?;
    let svd = svdrank::full_svd(&b.unfold(n)?)?;
    let (rank, budget_clamped) = match rule {
        RankRule::Fixed(r) => {
            if r == 0 || r > svd.sigma.len() {
                return Err(TensorError::RankOutOfRange {
                    rank: r,
                    max: svd.sigma.len(),
                });
            }
            (r, false)
        }
        RankRule::Adaptive { epsilon } => {
            let budget = b.squared_norm() - (1.0 - epsilon * epsilon) * a.squared_norm();
            let clamped = budget < 0.0;
            (svdrank::select_rank(&svd.sigma, budget.max(0.0))?, clamped)
        }
    };
    let factor = svd.truncate(rank)?.u;
    Ok(ModeUpdate {
        factor,
        svd,
        rank,
        budget_clamped,
    })
}

/// Per-sweep record of an adaptive run.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub truncation: Vec<usize>,
    pub rel_error: f64,
    pub budget_clamped: bool,
}

/// Truncation and error trajectory of a rank-adaptive run.
#[derive(Debug, Clone, Default)]
pub struct RankHistory {
    pub sweeps: Vec<SweepRecord>,
}

impl RankHistory {
    /// Componentwise non-increasing truncation sequence.
    pub fn is_monotone(&self) -> bool {
        self.sweeps.windows(2).all(|w| {
            w[0].truncation
                .iter()
                .zip(&w[1].truncation)
                .all(|(prev, next)| next <= prev)
        })
    }
}

/// Trace of a fixed-rank HOOI or ALS run.
#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    /// Relative error after every individual update, in execution order.
    pub step_errors: Vec<f64>,
    pub sweeps: usize,
}

fn fold_core(svd: &SvdFactors, rank: usize, last_mode: usize, ranks: &[usize]) -> Result<DenseTensor> {
    let coeff = svd.truncate(rank)?.sigma_vt();
    DenseTensor::fold(&coeff, last_mode, ranks)
}

/// Fixed-rank HOOI (alternating truncated SVDs of the contracted unfoldings).
pub fn hooi(
    a: &DenseTensor,
    trunc: &Truncation,
    init: &[Matrix],
    cfg: &HooiConfig,
) -> Result<(TuckerModel, IterationTrace)> {
    cfg.validate()?;
    let n = a.order();
    if trunc.order() != n || init.len() != n {
        return Err(TensorError::ShapeMismatch(format!(
            "truncation/init arity does not match order {n}"
        )));
    }
    for (mode, (f, &r)) in init.iter().zip(trunc.ranks()).enumerate() {
        if f.rows() != a.shape()[mode] || f.cols() != r {
            return Err(TensorError::ShapeMismatch(format!(
                "init factor {} is {}x{}, expected {}x{}",
                mode,
                f.rows(),
                f.cols(),
                a.shape()[mode],
                r
            )));
        }
    }
    let a_sq = a.squared_norm();
    let a_norm = a_sq.sqrt();
    let mut factors = init.to_vec();
    let mut trace = IterationTrace::default();
    let mut prev_core_norm = f64::NAN;
    let mut last_svd: Option<SvdFactors> = None;
    let mut last_rank = 0;
    for _ in 0..cfg.max_iter {
        let mut core_norm = 0.0;
        for mode in 0..n {
            let mu = update_mode(a, &factors, mode, RankRule::Fixed(trunc.ranks()[mode]))?;
            core_norm = mu.head_energy().sqrt();
            trace
                .step_errors
                .push(mu.achieved_objective(a_sq) / a_norm);
            factors[mode] = mu.factor;
            if mode == n - 1 {
                last_rank = mu.rank;
                last_svd = Some(mu.svd);
            }
        }
        trace.sweeps += 1;
        if (core_norm - prev_core_norm).abs() < cfg.fit_tol * a_norm {
            break;
        }
        prev_core_norm = core_norm;
    }
    let svd = last_svd.expect("at least one sweep ran");
    let core = fold_core(&svd, last_rank, n - 1, trunc.ranks())?;
    Ok((TuckerModel::new(core, factors)?, trace))
}

fn pythagorean_error(a_sq: f64, core_sq: f64) -> f64 {
    (a_sq - core_sq).max(0.0).sqrt() / a_sq.sqrt()
}

/// Rank-adaptive HOOI: every mode update re-selects its rank by the minimal
/// tail-energy rule under the global budget, so the model stays feasible
/// after every sweep and the truncation sequence never increases.
pub fn rank_adaptive_hooi(
    a: &DenseTensor,
    cfg: &HooiConfig,
    init: &[Matrix],
) -> Result<(TuckerModel, RankHistory)> {
    cfg.validate()?;
    let epsilon = cfg.epsilon.ok_or_else(|| {
        TensorError::InvalidArgument("rank_adaptive_hooi requires a tolerance".into())
    })?;
    let n = a.order();
    if init.len() != n {
        return Err(TensorError::ShapeMismatch(format!(
            "{} init factors for an order-{n} tensor",
            init.len()
        )));
    }
    let a_sq = a.squared_norm();
    if a_sq == 0.0 {
        return Err(TensorError::ZeroNorm);
    }
    let a_norm = a_sq.sqrt();

    // The initial guess must already satisfy the tolerance.
    let core0 = hosvd::project_core(a, init)?;
    let init_error = pythagorean_error(a_sq, core0.squared_norm());
    if init_error > epsilon {
        return Err(TensorError::InfeasibleInit {
            rel_error: init_error,
            epsilon,
        });
    }

    let mut factors = init.to_vec();
    let mut history = RankHistory::default();
    let mut prev_ranks: Vec<usize> = factors.iter().map(Matrix::cols).collect();
    let mut prev_core_norm = f64::NAN;
    let mut last_svd: Option<SvdFactors> = None;
    let mut last_rank = 0;
    for _ in 0..cfg.max_iter {
        let mut clamped = false;
        let mut core_norm = 0.0;
        for mode in 0..n {
            let mu = update_mode(a, &factors, mode, RankRule::Adaptive { epsilon })?;
            clamped |= mu.budget_clamped;
            core_norm = mu.head_energy().sqrt();
            factors[mode] = mu.factor;
            if mode == n - 1 {
                last_rank = mu.rank;
                last_svd = Some(mu.svd);
            }
        }
        let ranks: Vec<usize> = factors.iter().map(Matrix::cols).collect();
        history.sweeps.push(SweepRecord {
            truncation: ranks.clone(),
            rel_error: pythagorean_error(a_sq, core_norm * core_norm),
            budget_clamped: clamped,
        });
        let stagnant =
            ranks == prev_ranks && (core_norm - prev_core_norm).abs() < cfg.fit_tol * a_norm;
        prev_ranks = ranks;
        prev_core_norm = core_norm;
        if stagnant {
            break;
        }
    }
    let svd = last_svd.expect("at least one sweep ran");
    let ranks: Vec<usize> = factors.iter().map(Matrix::cols).collect();
    let core = fold_core(&svd, last_rank, n - 1, &ranks)?;
    Ok((TuckerModel::new(core, factors)?, history))
}

/// Feasible initial factors from tolerance-driven st-HOSVD.
pub fn init_st_hosvd(a: &DenseTensor, epsilon: f64) -> Result<Vec<Matrix>> {
    Ok(hosvd::st_hosvd_tol(a, epsilon)?.factors)
}

/// Random orthonormal factors, ranks doubled until the induced model is
/// feasible. Deterministic for a fixed seed; always terminates because full
/// rank gives zero error.
pub fn init_random(a: &DenseTensor, epsilon: f64, seed: u64) -> Result<Vec<Matrix>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(TensorError::InvalidArgument(format!(
            "tolerance must lie in (0, 1), got {epsilon}"
        )));
    }
    let a_sq = a.squared_norm();
    if a_sq == 0.0 {
        return Err(TensorError::ZeroNorm);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks: Vec<usize> = a.shape().iter().map(|&d| d.min(1)).collect();
    loop {
        let factors: Vec<Matrix> = a
            .shape()
            .iter()
            .zip(&ranks)
            .map(|(&d, &r)| crate::synth::random_orthonormal(d, r, &mut rng))
            .collect();
        let core = hosvd::project_core(a, &factors)?;
        if pythagorean_error(a_sq, core.squared_norm()) <= epsilon {
            return Ok(factors);
        }
        let at_full = ranks.iter().zip(a.shape()).all(|(&r, &d)| r == d);
        assert!(!at_full, "full-rank random init must be feasible");
        for (r, &d) in ranks.iter_mut().zip(a.shape()) {
            *r = (*r * 2).min(d);
        }
    }
}

/// Relative cutoff for pseudoinverse singular values.
const PINV_CUTOFF: f64 = 1e-12;

fn pinv(m: &Matrix) -> Result<Matrix> {
    let svd = svdrank::full_svd(m)?;
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    // pinv = V * diag(1/sigma) * U^T, zeroing sigma below the cutoff.
    let mut scaled_u = svd.u.clone();
    let rows = scaled_u.rows();
    let mut data = scaled_u.data().to_vec();
    for (j, &s) in svd.sigma.iter().enumerate() {
        let inv = if s > PINV_CUTOFF * smax { 1.0 / s } else { 0.0 };
        for i in 0..rows {
            data[i + rows * j] *= inv;
        }
    }
    scaled_u = Matrix::from_col_major(rows, svd.sigma.len(), data)?;
    svd.vt.matmul(&scaled_u, true, true)
}

/// Kronecker chain of the per-mode matrices excluding `skip`, ordered so the
/// lowest mode varies fastest, matching the unfolding's column order.
fn kron_chain_excluding<'a, F>(n: usize, skip: usize, mat: F) -> Result<Matrix>
where
    F: Fn(usize) -> &'a Matrix,
{
    let mut acc: Option<Matrix> = None;
    for k in 0..n {
        if k == skip {
            continue;
        }
        acc = Some(match acc {
            None => mat(k).clone(),
            Some(prev) => tensor::kron(mat(k), &prev)?,
        });
    }
    acc.ok_or_else(|| TensorError::InvalidArgument("order-1 tensor has no kron chain".into()))
}

/// Classical Tucker-ALS: core and factors updated as separate unconstrained
/// least-squares steps, factors left non-orthogonal.
pub fn classical_als(
    a: &DenseTensor,
    trunc: &Truncation,
    init: Option<TuckerModel>,
    cfg: &HooiConfig,
) -> Result<(TuckerModel, IterationTrace)> {
    cfg.validate()?;
    let n = a.order();
    if trunc.order() != n {
        return Err(TensorError::ShapeMismatch(format!(
            "truncation arity does not match order {n}"
        )));
    }
    let model = match init {
        Some(m) => m,
        None => hosvd::t_hosvd_rank(a, trunc)?,
    };
    if model.truncation != *trunc || model.full_shape() != a.shape() {
        return Err(TensorError::ShapeMismatch(
            "init model does not match tensor shape and truncation".into(),
        ));
    }
    let a_norm = a.frobenius_norm();
    let mut core = model.core;
    let mut factors = model.factors;
    let mut trace = IterationTrace::default();
    let mut prev_obj = f64::NAN;
    for _ in 0..cfg.max_iter {
        // Core step: exact least-squares fit given the factors, via the
        // per-mode pseudoinverses (the Kronecker pseudoinverse factorizes).
        let pinvs: Vec<Matrix> = factors.iter().map(pinv).collect::<Result<Vec<_>>>()?;
        let chain: Vec<(&Matrix, usize, bool)> =
            pinvs.iter().enumerate().map(|(k, p)| (p, k, false)).collect();
        core = a.ttm_chain(&chain)?;
        trace
            .step_errors
            .push(objective(a, &core, &factors)? / a_norm);

        // Factor steps: X minimizing ||A_(n) - X M1^T||^2 via the normal
        // equations, with M1 never formed explicitly.
        for mode in 0..n {
            let contraction: Vec<(&Matrix, usize, bool)> = factors
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != mode)
                .map(|(k, f)| (f, k, true))
                .collect();
            let c = a.ttm_chain(&contraction)?;
            let g_unf = core.unfold(mode)?;
            let p = c.unfold(mode)?.matmul(&g_unf, false, true)?;
            let grams: Vec<Matrix> = factors
                .iter()
                .map(|f| f.matmul(f, true, false))
                .collect::<Result<Vec<_>>>()?;
            let s = kron_chain_excluding(n, mode, |k| &grams[k])?;
            let w = g_unf.matmul(&s.matmul(&g_unf, false, true)?, false, false)?;
            factors[mode] = p.matmul(&pinv(&w)?, false, false)?;
            trace
                .step_errors
                .push(objective(a, &core, &factors)? / a_norm);
        }
        trace.sweeps += 1;
        let obj = *trace.step_errors.last().expect("steps recorded");
        if (obj - prev_obj).abs() < cfg.fit_tol {
            break;
        }
        prev_obj = obj;
    }
    Ok((TuckerModel::new(core, factors)?, trace))
}

fn objective(a: &DenseTensor, core: &DenseTensor, factors: &[Matrix]) -> Result<f64> {
    let chain: Vec<(&Matrix, usize, bool)> =
        factors.iter().enumerate().map(|(k, f)| (f, k, false)).collect();
    let rec = core.ttm_chain(&chain)?;
    Ok(a.data()
        .iter()
        .zip(rec.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Element cap for the explicit Kronecker oracle.
const BRUTEFORCE_ELEM_CAP: usize = 1 << 22;

/// Optimal objective of the constrained sub-problem
/// `min ||A_(n) - X M2^T|| s.t. rank(X) <= r`, with `M2` the explicit
/// Kronecker chain of the other (orthonormal) factors. Test oracle only.
pub fn subproblem_bruteforce(
    a: &DenseTensor,
    factors: &[Matrix],
    n: usize,
    r: usize,
) -> Result<f64> {
    if n >= a.order() {
        return Err(TensorError::ModeOutOfRange {
            mode: n,
            order: a.order(),
        });
    }
    if factors.len() != a.order() {
        return Err(TensorError::ShapeMismatch(format!(
            "{} factors for an order-{} tensor",
            factors.len(),
            a.order()
        )));
    }
    let rows: usize = (0..a.order()).filter(|&k| k != n).map(|k| factors[k].rows()).product();
    let cols: usize = (0..a.order()).filter(|&k| k != n).map(|k| factors[k].cols()).product();
    let elems = rows.checked_mul(cols).unwrap_or(usize::MAX);
    if elems > BRUTEFORCE_ELEM_CAP {
        return Err(TensorError::SizeCapExceeded {
            elems,
            cap: BRUTEFORCE_ELEM_CAP,
        });
    }
    let m2 = kron_chain_excluding(a.order(), n, |k| &factors[k])?;
    let b = a.unfold(n)?.matmul(&m2, false, false)?;
    let sigma = svdrank::full_svd(&b)?.sigma;
    let r = r.min(sigma.len());
    // ||A_(n) - X M2^T||^2 = ||A_(n) M2 - X||^2 + ||A||^2 - ||A_(n) M2||^2.
    let b_sq: f64 = b.data().iter().map(|x| x * x).sum();
    let obj_sq = a.squared_norm() - b_sq + svdrank::tail_energy(&sigma, r);
    Ok(obj_sq.max(0.0).sqrt())
}

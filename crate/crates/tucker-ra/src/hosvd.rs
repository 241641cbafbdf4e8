//! One-pass HOSVD-family baselines: fixed-truncation and tolerance-driven
//! t-HOSVD / st-HOSVD, plus the greedy truncation searches.

use crate::error::{Result, TensorError};
use crate::svdrank::{self, SvdFactors};
use crate::tensor::{self, DenseTensor, Matrix};

/// Target multilinear rank, one positive entry per mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    ranks: Vec<usize>,
}

impl Truncation {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        if ranks.is_empty() || ranks.iter().any(|&r| r == 0) {
            return Err(TensorError::InvalidArgument(
                "truncation ranks must all be positive".into(),
            ));
        }
        Ok(Self { ranks })
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn order(&self) -> usize {
        self.ranks.len()
    }

    pub fn componentwise_le(&self, other: &[usize]) -> bool {
        self.ranks.len() == other.len()
            && self.ranks.iter().zip(other).all(|(a, b)| a <= b)
    }
}

/// Core tensor plus per-mode factor matrices.
///
/// Factors produced by the HOSVD/HOOI family have orthonormal columns;
/// classical ALS factors need not (that is its defining difference), so
/// orthonormality is a per-algorithm postcondition, not a structural one.
#[derive(Debug, Clone)]
pub struct TuckerModel {
    pub core: DenseTensor,
    pub factors: Vec<Matrix>,
    pub truncation: Truncation,
}

impl TuckerModel {
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        if core.order() != factors.len() {
            return Err(TensorError::ShapeMismatch(format!(
                "core order {} does not match {} factors",
                core.order(),
                factors.len()
            )));
        }
        for (n, f) in factors.iter().enumerate() {
            if f.cols() != core.shape()[n] {
                return Err(TensorError::ShapeMismatch(format!(
                    "factor {} has {} columns, core dimension is {}",
                    n,
                    f.cols(),
                    core.shape()[n]
                )));
            }
            if f.cols() > f.rows() {
                return Err(TensorError::ShapeMismatch(format!(
                    "factor {} is {}x{}: rank exceeds mode dimension",
                    n,
                    f.rows(),
                    f.cols()
                )));
            }
        }
        let truncation = Truncation::new(core.shape().to_vec())?;
        Ok(Self {
            core,
            factors,
            truncation,
        })
    }

    /// Shape of the tensor the model reconstructs.
    pub fn full_shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    /// Max-abs deviation of `U^T U` from the identity, over all factors.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for f in &self.factors {
            let g = f.matmul(f, true, false).expect("square gram");
            for c in 0..g.cols() {
                for r in 0..g.rows() {
                    let want = if r == c { 1.0 } else { 0.0 };
                    worst = worst.max((g.get(r, c) - want).abs());
                }
            }
        }
        worst
    }
}

/// Multilinear product of the core with every factor.
pub fn reconstruct(model: &TuckerModel) -> Result<DenseTensor> {
    let chain: Vec<(&Matrix, usize, bool)> = model
        .factors
        .iter()
        .enumerate()
        .map(|(n, f)| (f, n, false))
        .collect();
    model.core.ttm_chain(&chain)
}

/// `||A - reconstruct(model)|| / ||A||`, by direct subtraction.
pub fn rel_error(a: &DenseTensor, model: &TuckerModel) -> Result<f64> {
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Err(TensorError::ZeroNorm);
    }
    let rec = reconstruct(model)?;
    if rec.shape() != a.shape() {
        return Err(TensorError::ShapeMismatch(format!(
            "model reconstructs {:?}, input is {:?}",
            rec.shape(),
            a.shape()
        )));
    }
    let diff2: f64 = a
        .data()
        .iter()
        .zip(rec.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(diff2.sqrt() / norm)
}

/// Core size plus factor sizes.
pub fn num_params(model: &TuckerModel) -> usize {
    let core: usize = model.truncation.ranks().iter().product();
    let factors: usize = model
        .factors
        .iter()
        .map(|f| f.rows() * f.cols())
        .sum();
    core + factors
}

/// Ratio of full tensor size to core size.
pub fn compression_rate(model: &TuckerModel) -> f64 {
    model
        .factors
        .iter()
        .map(|f| f.rows() as f64 / f.cols() as f64)
        .product()
}

fn check_trunc(shape: &[usize], trunc: &Truncation) -> Result<()> {
    if trunc.order() != shape.len() {
        return Err(TensorError::ShapeMismatch(format!(
            "truncation {:?} does not match shape {:?}",
            trunc.ranks(),
            shape
        )));
    }
    for (n, (&r, &d)) in trunc.ranks().iter().zip(shape).enumerate() {
        if r > d {
            return Err(TensorError::InvalidArgument(format!(
                "mode {n}: rank {r} exceeds dimension {d}"
            )));
        }
    }
    Ok(())
}

/// Core of `a` against the given orthonormal factors: `A x_n U^(n)^T` over all modes.
pub fn project_core(a: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    let chain: Vec<(&Matrix, usize, bool)> = factors
        .iter()
        .enumerate()
        .map(|(n, f)| (f, n, true))
        .collect();
    a.ttm_chain(&chain)
}

/// Model induced by orthonormal factors: core is the projection of `a`.
pub fn model_from_factors(a: &DenseTensor, factors: Vec<Matrix>) -> Result<TuckerModel> {
    let core = project_core(a, &factors)?;
    TuckerModel::new(core, factors)
}

/// t-HOSVD at a fixed truncation: per-mode leading singular vectors of the
/// unfoldings of `a` itself.
pub fn t_hosvd_rank(a: &DenseTensor, trunc: &Truncation) -> Result<TuckerModel> {
    check_trunc(a.shape(), trunc)?;
    let mut factors = Vec::with_capacity(a.order());
    for (mode, &r) in trunc.ranks().iter().enumerate() {
        let svd = svdrank::truncated_svd(&a.unfold(mode)?, r)?;
        factors.push(svd.u);
    }
    model_from_factors(a, factors)
}

/// st-HOSVD at a fixed truncation, processing modes in `order` and
/// contracting after each step.
pub fn st_hosvd_rank(a: &DenseTensor, trunc: &Truncation, order: &[usize]) -> Result<TuckerModel> {
    check_trunc(a.shape(), trunc)?;
    check_mode_order(a.order(), order)?;
    let mut current = a.clone();
    let mut factors: Vec<Option<Matrix>> = vec![None; a.order()];
    for &mode in order {
        let svd = svdrank::truncated_svd(&current.unfold(mode)?, trunc.ranks()[mode])?;
        current = current.ttm(&svd.u, mode, true)?;
        factors[mode] = Some(svd.u);
    }
    let factors: Vec<Matrix> = factors.into_iter().map(|f| f.expect("all modes visited")).collect();
    TuckerModel::new(current, factors)
}

fn check_mode_order(n: usize, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(TensorError::InvalidArgument(format!(
            "mode order {order:?} is not a permutation of 0..{n}"
        )));
    }
    for &m in order {
        if m >= n || seen[m] {
            return Err(TensorError::InvalidArgument(format!(
                "mode order {order:?} is not a permutation of 0..{n}"
            )));
        }
        seen[m] = true;
    }
    Ok(())
}

pub fn ascending_order(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(TensorError::InvalidArgument(format!(
            "tolerance must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// t-HOSVD with the uniform budget split: each mode gets `eps^2 ||A||^2 / N`
/// of squared error and picks its rank by `select_rank` on the unfolding of `a`.
pub fn t_hosvd_tol(a: &DenseTensor, epsilon: f64) -> Result<TuckerModel> {
    check_epsilon(epsilon)?;
    let n = a.order();
    let budget = epsilon * epsilon * a.squared_norm() / n as f64;
    let mut factors = Vec::with_capacity(n);
    let mut ranks = Vec::with_capacity(n);
    for mode in 0..n {
        let svd = svdrank::full_svd(&a.unfold(mode)?)?;
        let r = svdrank::select_rank(&svd.sigma, budget)?;
        factors.push(svd.truncate(r)?.u);
        ranks.push(r);
    }
    model_from_factors(a, factors)
}

/// st-HOSVD with the uniform budget split; each step selects the rank from
/// the unfolding of the partially compressed tensor, then contracts.
pub fn st_hosvd_tol(a: &DenseTensor, epsilon: f64) -> Result<TuckerModel> {
    st_hosvd_tol_ordered(a, epsilon, &ascending_order(a.order()))
}

pub fn st_hosvd_tol_ordered(
    a: &DenseTensor,
    epsilon: f64,
    order: &[usize],
) -> Result<TuckerModel> {
    check_epsilon(epsilon)?;
    check_mode_order(a.order(), order)?;
    let n = a.order();
    let budget = epsilon * epsilon * a.squared_norm() / n as f64;
    let mut current = a.clone();
    let mut factors: Vec<Option<Matrix>> = vec![None; n];
    for &mode in order {
        let svd = svdrank::full_svd(&current.unfold(mode)?)?;
        let r = svdrank::select_rank(&svd.sigma, budget)?;
        let u = svd.truncate(r)?.u;
        current = current.ttm(&u, mode, true)?;
        factors[mode] = Some(u);
    }
    let factors: Vec<Matrix> = factors.into_iter().map(|f| f.expect("all modes visited")).collect();
    TuckerModel::new(current, factors)
}

/// Per-mode full SVD spectra of the unfoldings of `a`, shared by the greedy
/// searches.
struct ModeSpectra {
    svds: Vec<SvdFactors>,
}

impl ModeSpectra {
    fn compute(a: &DenseTensor) -> Result<Self> {
        let svds = (0..a.order())
            .map(|mode| svdrank::full_svd(&a.unfold(mode)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { svds })
    }

    /// Sum-of-tails surrogate for the squared t-HOSVD error at `ranks`.
    fn surrogate(&self, ranks: &[usize]) -> f64 {
        self.svds
            .iter()
            .zip(ranks)
            .map(|(svd, &r)| svdrank::tail_energy(&svd.sigma, r))
            .sum()
    }

    fn materialize(&self, a: &DenseTensor, ranks: &[usize]) -> Result<TuckerModel> {
        let factors = self
            .svds
            .iter()
            .zip(ranks)
            .map(|(svd, &r)| Ok(svd.truncate(r)?.u))
            .collect::<Result<Vec<_>>>()?;
        model_from_factors(a, factors)
    }

    /// Mode whose next increment removes the most surrogate error.
    /// Ties go to the lowest mode.
    fn best_increment(&self, ranks: &[usize]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (mode, svd) in self.svds.iter().enumerate() {
            let r = ranks[mode];
            if r >= svd.sigma.len() {
                continue;
            }
            let gain = svd.sigma[r] * svd.sigma[r];
            match best {
                Some((_, g)) if gain <= g => {}
                _ => best = Some((mode, gain)),
            }
        }
        best.map(|(m, _)| m)
    }
}

/// Greedy truncation search growing from `(1, ..., 1)` against the
/// sum-of-tails surrogate, then materialized as t-HOSVD at the result.
pub fn greedy_hosvd_bottom_up(a: &DenseTensor, epsilon: f64) -> Result<TuckerModel> {
    check_epsilon(epsilon)?;
    let spectra = ModeSpectra::compute(a)?;
    let target = epsilon * epsilon * a.squared_norm();
    let mut ranks = vec![1usize; a.order()];
    while spectra.surrogate(&ranks) > target {
        match spectra.best_increment(&ranks) {
            Some(mode) => ranks[mode] += 1,
            None => break,
        }
    }
    finalize_greedy(a, &spectra, ranks, epsilon)
}

/// Greedy truncation search shrinking from the numerical multilinear rank;
/// decrements the mode that adds the least surrogate error while staying
/// within budget.
pub fn greedy_hosvd_top_down(a: &DenseTensor, epsilon: f64) -> Result<TuckerModel> {
    check_epsilon(epsilon)?;
    let spectra = ModeSpectra::compute(a)?;
    let target = epsilon * epsilon * a.squared_norm();
    let est = tensor::multilinear_rank(a, 1e-10)?;
    if est.degenerate {
        return Err(TensorError::ZeroNorm);
    }
    let mut ranks = est.ranks;
    loop {
        let current = spectra.surrogate(&ranks);
        let mut best: Option<(usize, f64)> = None;
        for (mode, svd) in spectra.svds.iter().enumerate() {
            let r = ranks[mode];
            if r <= 1 {
                continue;
            }
            let added = svd.sigma[r - 1] * svd.sigma[r - 1];
            if current + added > target {
                continue;
            }
            match best {
                Some((_, g)) if added >= g => {}
                _ => best = Some((mode, added)),
            }
        }
        match best {
            Some((mode, _)) => ranks[mode] -= 1,
            None => break,
        }
    }
    finalize_greedy(a, &spectra, ranks, epsilon)
}

/// Materialize and re-check the exact error; the surrogate upper-bounds it,
/// so the fallback loop only guards against implementation bugs.
fn finalize_greedy(
    a: &DenseTensor,
    spectra: &ModeSpectra,
    mut ranks: Vec<usize>,
    epsilon: f64,
) -> Result<TuckerModel> {
    let mut model = spectra.materialize(a, &ranks)?;
    while rel_error(a, &model)? > epsilon {
        match spectra.best_increment(&ranks) {
            Some(mode) => ranks[mode] += 1,
            None => break,
        }
        model = spectra.materialize(a, &ranks)?;
    }
    Ok(model)
}

//! Fixed-point updates for one component's mean and scatter matrix under
//! per-sample weights, plus the combined component M-step.

use nalgebra::{DMatrix, DVector};

use super::config::EmConfig;
use super::shape::newton_update_beta;
use super::{check_data, weighted_mean, weighted_scatter};
use crate::error::{Error, Result};
use crate::ggd::{cholesky, symmetrize, GgdParams};

fn clamped_deltas(params: &GgdParams, data: &DMatrix<f64>, floor: f64) -> Result<Vec<f64>> {
    Ok(params
        .mahalanobis_sq_batch(data)?
        .into_iter()
        .map(|d| d.max(floor))
        .collect())
}

fn check_alphas(data: &DMatrix<f64>, alphas: &[f64]) -> Result<()> {
    if alphas.len() != data.ncols() {
        return Err(Error::DimensionMismatch {
            expected: data.ncols(),
            got: alphas.len(),
        });
    }
    let s: f64 = alphas.iter().sum();
    if !(s > 0.0) {
        return Err(Error::Numerical("responsibilities sum to zero".into()));
    }
    Ok(())
}

/// `mu <- Σ α_i δ_i^{β-1} x_i / Σ α_i δ_i^{β-1}` with `δ_i` taken against the
/// current parameters and clamped below by `delta_floor`.
pub fn fp_update_mean(
    data: &DMatrix<f64>,
    alphas: &[f64],
    current: &GgdParams,
    delta_floor: f64,
) -> Result<DVector<f64>> {
    check_data(data, current.dim())?;
    check_alphas(data, alphas)?;
    let beta = current.beta();
    let coef: Vec<f64> = if beta == 1.0 {
        alphas.to_vec()
    } else {
        clamped_deltas(current, data, delta_floor)?
            .iter()
            .zip(alphas)
            .map(|(d, a)| a * d.powf(beta - 1.0))
            .collect()
    };
    weighted_mean(data, &coef)
}

/// Scatter-matrix fixed point
/// `Σ <- β Σ α_i δ_i^{β-1} (x_i-μ)(x_i-μ)^T / Σ α_i + cov_reg I`, symmetrized.
///
/// `δ_i` uses the updated mean and the current scatter matrix. With `literal`
/// set, the leading `β` is omitted.
pub fn fp_update_cov(
    data: &DMatrix<f64>,
    alphas: &[f64],
    current: &GgdParams,
    updated_mu: &DVector<f64>,
    cov_reg: f64,
    delta_floor: f64,
    literal: bool,
) -> Result<DMatrix<f64>> {
    check_data(data, current.dim())?;
    check_alphas(data, alphas)?;
    if updated_mu.len() != current.dim() {
        return Err(Error::DimensionMismatch {
            expected: current.dim(),
            got: updated_mu.len(),
        });
    }
    let p = current.dim();
    let beta = current.beta();
    let coef: Vec<f64> = if beta == 1.0 {
        alphas.to_vec()
    } else {
        let centred = GgdParams::new(updated_mu.clone(), current.sigma().clone(), beta)?;
        clamped_deltas(&centred, data, delta_floor)?
            .iter()
            .zip(alphas)
            .map(|(d, a)| a * d.powf(beta - 1.0))
            .collect()
    };
    let alpha_sum: f64 = alphas.iter().sum();
    let lead = if literal { 1.0 } else { beta };
    let mut sigma = weighted_scatter(data, updated_mu, &coef) * (lead / alpha_sum);
    for i in 0..p {
        sigma[(i, i)] += cov_reg;
    }
    symmetrize(&mut sigma);
    cholesky(&sigma)?;
    Ok(sigma)
}

/// Relative slack on the weighted log-likelihood when screening a step.
const LOGLIK_SLACK: f64 = 1e-12;

fn weighted_loglik(params: &GgdParams, data: &DMatrix<f64>, alphas: &[f64]) -> Result<f64> {
    let lp = params.log_pdf_batch(data)?;
    let q: f64 = lp.iter().zip(alphas).map(|(l, a)| a * l).sum();
    Ok(if q.is_nan() { f64::NEG_INFINITY } else { q })
}

fn screen(
    cand: GgdParams,
    params: &mut GgdParams,
    q: &mut f64,
    data: &DMatrix<f64>,
    alphas: &[f64],
) -> Result<()> {
    let q_new = weighted_loglik(&cand, data, alphas)?;
    let unchecked = cand.beta() == 1.0 && params.beta() == 1.0;
    if unchecked || q_new >= *q - LOGLIK_SLACK * q.abs().max(1.0) {
        *q = q_new;
        *params = cand;
    }
    Ok(())
}

/// One M-step for a single component: `fp_inner_iters` rounds of mean, scatter,
/// then shape.
///
/// For `β != 1` the mean and scatter fixed-point steps are not ascent steps in
/// general, so each candidate is kept only if the weighted log-likelihood
/// `Σ α_i log f(x_i)` does not drop by more than rounding slack. At `β = 1` the
/// closed-form updates are applied unchecked; the shape step maximizes the
/// objective in β and is always kept.
pub fn fp_component_update(
    data: &DMatrix<f64>,
    alphas: &[f64],
    current: &GgdParams,
    cov_reg: f64,
    config: &EmConfig,
) -> Result<GgdParams> {
    let mut params = match config.fix_beta {
        Some(b) if b != current.beta() => current.with_beta(b)?,
        _ => current.clone(),
    };
    let mut q = weighted_loglik(&params, data, alphas)?;
    for _ in 0..config.fp_inner_iters {
        let mu = fp_update_mean(data, alphas, &params, config.delta_floor)?;
        let cand = GgdParams::new(mu, params.sigma().clone(), params.beta())?;
        screen(cand, &mut params, &mut q, data, alphas)?;
        let sigma = fp_update_cov(
            data,
            alphas,
            &params,
            params.mu(),
            cov_reg,
            config.delta_floor,
            config.paper_literal_cov,
        )?;
        let cand = GgdParams::new(params.mu().clone(), sigma, params.beta())?;
        screen(cand, &mut params, &mut q, data, alphas)?;
        if config.fix_beta.is_none() {
            let deltas = clamped_deltas(&params, data, config.delta_floor)?;
            let beta = newton_update_beta(&deltas, alphas, params.dim(), params.beta(), config);
            params = params.with_beta(beta)?;
            q = weighted_loglik(&params, data, alphas)?;
        }
    }
    Ok(params)
}

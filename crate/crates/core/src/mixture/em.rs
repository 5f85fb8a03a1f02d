//! The outer EM loop.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::EmConfig;
use super::fixed_point::fp_component_update;
use super::init::init_model;
use super::{
    check_data, e_step_with_loglik, m_step_weights, mean_variance, neg_mean_log_likelihood,
    weighted_mean, weighted_scatter, Ggmm,
};
use crate::error::{Error, Result};
use crate::ggd::{symmetrize, GgdParams};

/// Components whose weight falls below this are re-seeded.
pub const COLLAPSE_WEIGHT: f64 = 1e-8;

/// Allowed NLL increase per outer iteration before it is flagged.
pub const MONOTONICITY_TOL: f64 = 1e-6;

/// A component that collapsed and was re-seeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReset {
    pub iteration: usize,
    pub component: usize,
    pub reason: String,
}

/// Diagnostics collected by [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// NLL of the initial model followed by one entry per outer iteration.
    pub nll_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub resets: Vec<ComponentReset>,
    /// Outer iterations (1-based) whose NLL rose by more than
    /// [`MONOTONICITY_TOL`] without an intervening reset.
    pub monotonicity_violations: Vec<usize>,
    pub cov_reg: f64,
    pub paper_literal_cov: bool,
}

impl FitReport {
    pub fn final_nll(&self) -> f64 {
        *self.nll_trace.last().expect("trace holds the initial value")
    }
}

/// Resolves the covariance ridge: explicit value, or `1e-6 * mean variance`.
pub(crate) fn resolve_cov_reg(data: &DMatrix<f64>, config: &EmConfig) -> f64 {
    config
        .cov_reg
        .unwrap_or_else(|| (1e-6 * mean_variance(data)).max(1e-12))
}

/// One EM iteration: E-step, weight update, then the fixed-point M-step for each
/// component. Collapsed components are re-seeded at the worst-explained samples.
pub fn em_step(
    model: &Ggmm,
    data: &DMatrix<f64>,
    config: &EmConfig,
    cov_reg: f64,
    iteration: usize,
) -> Result<(Ggmm, Vec<ComponentReset>)> {
    let (resp, loglik) = e_step_with_loglik(model, data)?;
    let mut weights = m_step_weights(&resp);

    let updates: Vec<Result<GgdParams>> = (0..model.len())
        .into_par_iter()
        .map(|k| {
            if weights[k] < COLLAPSE_WEIGHT {
                return Err(Error::Numerical(format!("weight {:e}", weights[k])));
            }
            let alphas = resp.column(k);
            fp_component_update(data, &alphas, &model.components()[k], cov_reg, config)
        })
        .collect();

    let mut order: Vec<usize> = (0..loglik.len()).collect();
    order.sort_by(|&a, &b| loglik[a].total_cmp(&loglik[b]));
    let mut worst = order.into_iter();
    let mut resets = Vec::new();
    let mut components = Vec::with_capacity(model.len());
    let mut fallback_sigma = None;
    for (k, update) in updates.into_iter().enumerate() {
        match update {
            Ok(c) => components.push(c),
            Err(e) => {
                let idx = worst.next().unwrap_or(0);
                let sigma = match &fallback_sigma {
                    Some(s) => s,
                    None => fallback_sigma.insert(global_covariance(data, cov_reg)?),
                };
                let beta = config.fix_beta.unwrap_or(1.0);
                components.push(GgdParams::new(
                    data.column(idx).clone_owned(),
                    sigma.clone(),
                    beta,
                )?);
                weights[k] = 1.0 / data.ncols() as f64;
                resets.push(ComponentReset {
                    iteration,
                    component: k,
                    reason: e.to_string(),
                });
            }
        }
    }
    if !resets.is_empty() {
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
    }
    Ok((Ggmm::new(weights, components)?, resets))
}

fn global_covariance(data: &DMatrix<f64>, cov_reg: f64) -> Result<DMatrix<f64>> {
    let ones = vec![1.0; data.ncols()];
    let mu = weighted_mean(data, &ones)?;
    let mut s = weighted_scatter(data, &mu, &ones) / data.ncols() as f64;
    symmetrize(&mut s);
    let floor = cov_reg.max(1e-12);
    for i in 0..s.nrows() {
        s[(i, i)] += floor;
    }
    Ok(s)
}

/// Fits a mixture to `data` (one sample per column).
pub fn fit(data: &DMatrix<f64>, config: &EmConfig) -> Result<(Ggmm, FitReport)> {
    config.validate()?;
    check_data(data, data.nrows())?;
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite sample value".into()));
    }
    if data.ncols() <= config.components {
        return Err(Error::InsufficientData(format!(
            "{} samples for {} components",
            data.ncols(),
            config.components
        )));
    }
    let cov_reg = resolve_cov_reg(data, config);
    let mut model = init_model(data, config, cov_reg)?;
    let mut prev = neg_mean_log_likelihood(&model, data)?;
    let mut report = FitReport {
        nll_trace: vec![prev],
        outer_iterations: 0,
        converged: false,
        resets: Vec::new(),
        monotonicity_violations: Vec::new(),
        cov_reg,
        paper_literal_cov: config.paper_literal_cov,
    };
    for it in 1..=config.max_outer_iters {
        let (next, resets) = em_step(&model, data, config, cov_reg, it)?;
        model = next;
        let nll = neg_mean_log_likelihood(&model, data)?;
        report.nll_trace.push(nll);
        report.outer_iterations = it;
        let reset = !resets.is_empty();
        report.resets.extend(resets);
        if reset {
            prev = nll;
            continue;
        }
        if nll - prev > MONOTONICITY_TOL {
            report.monotonicity_violations.push(it);
        }
        let rel = (prev - nll) / prev.abs().max(f64::MIN_POSITIVE);
        prev = nll;
        if rel.abs() < config.rel_tol {
            report.converged = true;
            break;
        }
    }
    Ok((model, report))
}

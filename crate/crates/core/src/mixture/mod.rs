//! Generalized Gaussian mixture models and their EM/fixed-point estimation.

mod config;
mod em;
mod fixed_point;
mod init;
mod serial;
mod shape;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ggd::GgdParams;

pub use config::{EmConfig, InitMethod};
pub use em::{em_step, fit, ComponentReset, FitReport};
pub use fixed_point::{fp_component_update, fp_update_cov, fp_update_mean};
pub use init::init_model;
pub use serial::{GgmmDocument, GGMM_FORMAT_VERSION};
pub use shape::{beta_score, newton_update_beta, shape_objective};

const WEIGHT_SUM_TOL: f64 = 1e-10;

/// A K-component mixture of generalized Gaussians sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Ggmm {
    weights: Vec<f64>,
    components: Vec<GgdParams>,
}

impl Ggmm {
    pub fn new(weights: Vec<f64>, components: Vec<GgdParams>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::DimensionMismatch {
                expected: components.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("mixture weights must be positive".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Domain(format!("mixture weights sum to {sum}")));
        }
        let p = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: c.dim(),
            });
        }
        Ok(Self {
            weights,
            components,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[GgdParams] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// `log w_k + log f(x_i | theta_k)` as an N x K matrix.
    pub fn weighted_log_densities(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_data(data, self.dim())?;
        let cols: Vec<Vec<f64>> = self
            .components
            .par_iter()
            .zip(self.weights.par_iter())
            .map(|(c, &w)| {
                let lw = w.ln();
                c.log_pdf_batch(data)
                    .map(|v| v.into_iter().map(|l| l + lw).collect())
            })
            .collect::<Result<_>>()?;
        let n = data.ncols();
        Ok(DMatrix::from_fn(n, self.len(), |i, k| cols[k][i]))
    }

    /// Per-sample log-density of the mixture.
    pub fn log_pdf_batch(&self, data: &DMatrix<f64>) -> Result<Vec<f64>> {
        let lw = self.weighted_log_densities(data)?;
        Ok(lw
            .row_iter()
            .map(|r| log_sum_exp(&r.iter().copied().collect::<Vec<_>>()))
            .collect())
    }
}

/// Posterior component probabilities, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities(DMatrix<f64>);

impl Responsibilities {
    /// Wraps an N x K matrix, checking that rows are stochastic.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        for (i, row) in m.row_iter().enumerate() {
            if row.iter().any(|&a| !(a >= 0.0)) {
                return Err(Error::Domain(format!("row {i} has a negative entry")));
            }
            let s = row.sum();
            if (s - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::Domain(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n_samples(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.0.ncols()
    }

    /// Column `k` as a plain vector.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.0.column(k).iter().copied().collect()
    }
}

/// Numerically stable `log Σ exp(v)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max.is_infinite() {
        return max;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// `-(1/N) Σ_i log Σ_k w_k f(x_i | theta_k)`.
pub fn neg_mean_log_likelihood(model: &Ggmm, data: &DMatrix<f64>) -> Result<f64> {
    let ll = model.log_pdf_batch(data)?;
    Ok(-ll.iter().sum::<f64>() / ll.len() as f64)
}

/// E-step: responsibilities computed row-wise in log-space.
pub fn e_step(model: &Ggmm, data: &DMatrix<f64>) -> Result<Responsibilities> {
    e_step_with_loglik(model, data).map(|(r, _)| r)
}

/// E-step that also returns the per-sample mixture log-density.
pub(crate) fn e_step_with_loglik(
    model: &Ggmm,
    data: &DMatrix<f64>,
) -> Result<(Responsibilities, Vec<f64>)> {
    let mut lw = model.weighted_log_densities(data)?;
    let mut loglik = Vec::with_capacity(lw.nrows());
    for mut row in lw.row_iter_mut() {
        let lse = log_sum_exp(&row.iter().copied().collect::<Vec<_>>());
        if !lse.is_finite() {
            return Err(Error::Numerical("non-finite mixture log-density".into()));
        }
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - lse).exp();
            s += *v;
        }
        row /= s;
        loglik.push(lse);
    }
    Ok((Responsibilities(lw), loglik))
}

/// M-step for the weights: column means of the responsibilities.
pub fn m_step_weights(resp: &Responsibilities) -> Vec<f64> {
    let n = resp.n_samples() as f64;
    let mut w: Vec<f64> = resp.0.column_iter().map(|c| c.sum() / n).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

pub(crate) fn check_data(data: &DMatrix<f64>, p: usize) -> Result<()> {
    if data.ncols() == 0 {
        return Err(Error::InsufficientData("no samples".into()));
    }
    if data.nrows() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: data.nrows(),
        });
    }
    Ok(())
}

/// Packs row vectors into a `p x N` matrix, one sample per column.
pub fn samples_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let p = rows.first().map(Vec::len).unwrap_or(0);
    if let Some(r) = rows.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: r.len(),
        });
    }
    Ok(DMatrix::from_fn(p, rows.len(), |i, j| rows[j][i]))
}

/// Per-coordinate population variance averaged over coordinates.
pub fn mean_variance(data: &DMatrix<f64>) -> f64 {
    let n = data.ncols() as f64;
    let mut total = 0.0;
    for row in data.row_iter() {
        let m = row.sum() / n;
        total += row.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    }
    total / data.nrows() as f64
}

pub(crate) fn weighted_mean(data: &DMatrix<f64>, weights: &[f64]) -> Result<DVector<f64>> {
    let s: f64 = weights.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Numerical(format!("degenerate weight sum {s}")));
    }
    let mut mu = DVector::zeros(data.nrows());
    for (col, &w) in data.column_iter().zip(weights) {
        if w != 0.0 {
            mu.axpy(w, &col, 1.0);
        }
    }
    Ok(mu / s)
}

/// `Σ_i c_i (x_i - mu)(x_i - mu)^T`.
pub(crate) fn weighted_scatter(data: &DMatrix<f64>, mu: &DVector<f64>, coef: &[f64]) -> DMatrix<f64> {
    let p = data.nrows();
    let mut centered = data.clone();
    for (mut col, &c) in centered.column_iter_mut().zip(coef) {
        col -= mu;
        col *= c.max(0.0).sqrt();
    }
    let mut s = DMatrix::zeros(p, p);
    s.gemm(1.0, &centered, &centered.transpose(), 0.0);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gauss1(mu: f64) -> GgdParams {
        GgdParams::new(DVector::from_element(1, mu), DMatrix::from_element(1, 1, 1.0), 1.0).unwrap()
    }

    fn data1(xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, xs.len(), xs)
    }

    #[test]
    fn ggmm_validation() {
        assert!(Ggmm::new(vec![0.5, 0.5], vec![gauss1(0.0)]).is_err());
        assert!(Ggmm::new(vec![0.6, 0.5], vec![gauss1(0.0), gauss1(1.0)]).is_err());
        assert!(Ggmm::new(vec![1.0, 0.0], vec![gauss1(0.0), gauss1(1.0)]).is_err());
        assert!(Ggmm::new(vec![0.5, 0.5], vec![gauss1(0.0), GgdParams::standard(2)]).is_err());
        assert!(Ggmm::new(vec![0.5, 0.5], vec![gauss1(0.0), gauss1(1.0)]).is_ok());
    }

    #[test]
    fn nll_examples() {
        let m = Ggmm::new(vec![1.0], vec![gauss1(0.0)]).unwrap();
        assert_abs_diff_eq!(
            neg_mean_log_likelihood(&m, &data1(&[0.0])).unwrap(),
            0.918_938_533_204_672_7,
            epsilon = 1e-12
        );
        let one = neg_mean_log_likelihood(&m, &data1(&[0.7])).unwrap();
        let two = neg_mean_log_likelihood(&m, &data1(&[0.7, 0.7])).unwrap();
        assert_abs_diff_eq!(one, two, epsilon = 1e-15);

        let m = Ggmm::new(vec![0.5, 0.5], vec![gauss1(-1.0), gauss1(1.0)]).unwrap();
        assert_abs_diff_eq!(
            neg_mean_log_likelihood(&m, &data1(&[0.0])).unwrap(),
            1.418_938_533_204_672_7,
            epsilon = 1e-12
        );
        assert!(neg_mean_log_likelihood(&m, &DMatrix::zeros(1, 0)).is_err());
        assert!(neg_mean_log_likelihood(&m, &DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn e_step_examples() {
        let m = Ggmm::new(vec![1.0], vec![gauss1(3.0)]).unwrap();
        let r = e_step(&m, &data1(&[0.0, 5.0, -100.0])).unwrap();
        assert!(r.matrix().iter().all(|&a| a == 1.0));

        let m = Ggmm::new(vec![0.3, 0.7], vec![gauss1(2.0), gauss1(2.0)]).unwrap();
        let r = e_step(&m, &data1(&[0.0, 5.0, -10.0])).unwrap();
        for row in r.matrix().row_iter() {
            assert_abs_diff_eq!(row[0], 0.3, epsilon = 1e-12);
            assert_abs_diff_eq!(row[1], 0.7, epsilon = 1e-12);
        }

        let m = Ggmm::new(vec![0.5, 0.5], vec![gauss1(-1.0), gauss1(1.0)]).unwrap();
        let r = e_step(&m, &data1(&[0.5])).unwrap();
        let expected = (-1.125f64).exp() / ((-1.125f64).exp() + (-0.125f64).exp());
        assert_abs_diff_eq!(r.matrix()[(0, 0)], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(r.matrix()[(0, 0)], 0.268_941_421_369_995, epsilon = 1e-12);
    }

    #[test]
    fn e_step_far_tail_is_finite() {
        let m = Ggmm::new(vec![0.5, 0.5], vec![gauss1(-1.0), gauss1(1.0)]).unwrap();
        let r = e_step(&m, &data1(&[1e3, -1e3])).unwrap();
        assert_abs_diff_eq!(r.matrix()[(0, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.matrix()[(1, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn weights_examples() {
        let r = Responsibilities::new(DMatrix::from_element(4, 4, 0.25)).unwrap();
        assert_eq!(m_step_weights(&r), vec![0.25; 4]);
        let r = Responsibilities::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(m_step_weights(&r), vec![0.5, 0.5]);
        assert!(Responsibilities::new(DMatrix::from_row_slice(1, 2, &[0.6, 0.6])).is_err());
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert_abs_diff_eq!(log_sum_exp(&[-1000.0, -1000.0]), -1000.0 + 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(log_sum_exp(&[800.0, 0.0]), 800.0, epsilon = 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn responsibilities_rows_and_weights_sum_to_one(
            xs in proptest::collection::vec(-20.0f64..20.0, 1..40),
            w0 in 0.01f64..0.99,
            m0 in -5.0f64..5.0,
            m1 in -5.0f64..5.0,
        ) {
            let m = Ggmm::new(vec![w0, 1.0 - w0], vec![gauss1(m0), gauss1(m1)]).unwrap();
            let r = e_step(&m, &data1(&xs)).unwrap();
            for row in r.matrix().row_iter() {
                proptest::prop_assert!((row.sum() - 1.0).abs() < 1e-10);
            }
            let w = m_step_weights(&r);
            proptest::prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

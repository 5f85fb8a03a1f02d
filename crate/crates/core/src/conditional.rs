//! Conditioning a joint generalized Gaussian on its low-resolution block.
//!
//! For `x = (x_H, x_L)` with mean `(mu_H, mu_L)` and scatter
//! `[[S_H, S_HL], [S_HL^T, S_L]]`, the conditional law of `x_H` given `x_L` is
//! generalized Gaussian with mean `mu_H + S_HL S_L^{-1} (x_L - mu_L)`, scatter
//! equal to the Schur complement `S_H - S_HL S_L^{-1} S_HL^T`, and the same
//! shape. Its mean is the minimum mean squared error estimate of `x_H`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ggd::{symmetrize, GgdParams};
use crate::mixture::Ggmm;

/// Split of a joint vector into a leading HR block and a trailing LR block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPartition {
    d_h: usize,
    d_l: usize,
}

impl BlockPartition {
    pub fn new(d_h: usize, d_l: usize) -> Result<Self> {
        if d_h == 0 || d_l == 0 {
            return Err(Error::Domain(format!(
                "block dimensions must be >= 1, got ({d_h}, {d_l})"
            )));
        }
        Ok(Self { d_h, d_l })
    }

    pub fn d_h(&self) -> usize {
        self.d_h
    }

    pub fn d_l(&self) -> usize {
        self.d_l
    }

    pub fn dim(&self) -> usize {
        self.d_h + self.d_l
    }

    fn check_joint(&self, p: usize) -> Result<()> {
        if p != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p,
            });
        }
        Ok(())
    }
}

/// Parameters of the conditional distribution of the HR block.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGgd {
    pub mu_hat: DVector<f64>,
    /// Positive semi-definite; may be singular when the LR block is a
    /// deterministic function of the HR block.
    pub sigma_hat: DMatrix<f64>,
    pub beta_hat: f64,
}

/// Precomputed conditioning for one joint component: the regression gain
/// `S_HL S_L^{-1}`, the Schur complement, and the LR-block density used for
/// component selection.
#[derive(Debug, Clone)]
pub struct BlockRegressor {
    part: BlockPartition,
    mu_h: DVector<f64>,
    mu_l: DVector<f64>,
    gain: DMatrix<f64>,
    schur: DMatrix<f64>,
    lr_density: GgdParams,
}

impl BlockRegressor {
    pub fn new(joint: &GgdParams, part: BlockPartition) -> Result<Self> {
        part.check_joint(joint.dim())?;
        let (dh, dl) = (part.d_h, part.d_l);
        let mu = joint.mu();
        let sigma = joint.sigma();
        let mu_h = mu.rows(0, dh).clone_owned();
        let mu_l = mu.rows(dh, dl).clone_owned();
        let s_h = sigma.view((0, 0), (dh, dh));
        let s_hl = sigma.view((0, dh), (dh, dl)).clone_owned();
        let s_l = sigma.view((dh, dh), (dl, dl)).clone_owned();
        let lr_density = GgdParams::new(mu_l.clone(), s_l, joint.beta())?;
        // gain^T = S_L^{-1} S_HL^T, solved through the LR Cholesky factor
        let l = lr_density.chol_factor();
        let mut gt = s_hl.transpose();
        if !l.solve_lower_triangular_mut(&mut gt) || !l.tr_solve_lower_triangular_mut(&mut gt) {
            return Err(Error::Numerical("singular LR block".into()));
        }
        let gain = gt.transpose();
        let mut schur = s_h - &gain * s_hl.transpose();
        symmetrize(&mut schur);
        Ok(Self {
            part,
            mu_h,
            mu_l,
            gain,
            schur,
            lr_density,
        })
    }

    pub fn partition(&self) -> BlockPartition {
        self.part
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    /// Density of the LR sub-block parameters `(mu_L, S_L, beta)`.
    pub fn lr_density(&self) -> &GgdParams {
        &self.lr_density
    }

    fn check_lr(&self, x_l: &DVector<f64>) -> Result<()> {
        if x_l.len() != self.part.d_l {
            return Err(Error::DimensionMismatch {
                expected: self.part.d_l,
                got: x_l.len(),
            });
        }
        Ok(())
    }

    pub fn estimate(&self, x_l: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_lr(x_l)?;
        Ok(&self.mu_h + &self.gain * (x_l - &self.mu_l))
    }

    pub fn conditional(&self, x_l: &DVector<f64>) -> Result<ConditionalGgd> {
        Ok(ConditionalGgd {
            mu_hat: self.estimate(x_l)?,
            sigma_hat: self.schur.clone(),
            beta_hat: self.lr_density.beta(),
        })
    }
}

/// Conditional parameters of the HR block given an observed LR block.
pub fn conditional_params(
    joint: &GgdParams,
    part: BlockPartition,
    x_l: &DVector<f64>,
) -> Result<ConditionalGgd> {
    BlockRegressor::new(joint, part)?.conditional(x_l)
}

/// MMSE estimate of the HR block: the conditional mean.
pub fn mmse_estimate(
    joint: &GgdParams,
    part: BlockPartition,
    x_l: &DVector<f64>,
) -> Result<DVector<f64>> {
    BlockRegressor::new(joint, part)?.estimate(x_l)
}

/// Per-component regressors for a joint mixture, with hard component selection.
#[derive(Debug, Clone)]
pub struct MixtureRegressor {
    log_weights: Vec<f64>,
    regressors: Vec<BlockRegressor>,
}

impl MixtureRegressor {
    pub fn new(model: &Ggmm, part: BlockPartition) -> Result<Self> {
        part.check_joint(model.dim())?;
        Ok(Self {
            log_weights: model.weights().iter().map(|w| w.ln()).collect(),
            regressors: model
                .components()
                .iter()
                .map(|c| BlockRegressor::new(c, part))
                .collect::<Result<_>>()?,
        })
    }

    pub fn regressors(&self) -> &[BlockRegressor] {
        &self.regressors
    }

    /// `argmax_k log w_k + log f(x_L | mu_L^k, S_L^k, beta^k)`, lowest index on ties.
    pub fn select(&self, x_l: &DVector<f64>) -> Result<usize> {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, (r, lw)) in self.regressors.iter().zip(&self.log_weights).enumerate() {
            r.check_lr(x_l)?;
            let score = lw + r.lr_density.log_pdf(x_l)?;
            if score > best.1 {
                best = (k, score);
            }
        }
        Ok(best.0)
    }

    /// Selected component and its MMSE estimate.
    pub fn estimate(&self, x_l: &DVector<f64>) -> Result<(usize, DVector<f64>)> {
        let k = self.select(x_l)?;
        Ok((k, self.regressors[k].estimate(x_l)?))
    }
}

/// Index of the component that best explains `x_l`.
pub fn select_component(model: &Ggmm, part: BlockPartition, x_l: &DVector<f64>) -> Result<usize> {
    MixtureRegressor::new(model, part)?.select(x_l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn joint(mu: &[f64], sigma: &[f64], beta: f64) -> GgdParams {
        let p = mu.len();
        GgdParams::new(DVector::from_row_slice(mu), DMatrix::from_row_slice(p, p, sigma), beta)
            .unwrap()
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn independent_blocks() {
        let j = joint(&[1.0, 2.0, 3.0], &[2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 4.0], 0.7);
        let part = BlockPartition::new(2, 1).unwrap();
        for x in [-5.0, 0.0, 9.0] {
            let c = conditional_params(&j, part, &v(&[x])).unwrap();
            assert_eq!(c.mu_hat, v(&[1.0, 2.0]));
            assert!((c.sigma_hat.clone() - j.sigma().view((0, 0), (2, 2))).amax() < 1e-15);
            assert_eq!(c.beta_hat, 0.7);
        }
    }

    #[test]
    fn centred_observation_returns_hr_mean() {
        let j = joint(&[1.0, -2.0, 0.5], &[2.0, 0.3, 0.4, 0.3, 1.5, 0.2, 0.4, 0.2, 1.0], 1.3);
        let part = BlockPartition::new(1, 2).unwrap();
        let est = mmse_estimate(&j, part, &v(&[-2.0, 0.5])).unwrap();
        assert_abs_diff_eq!(est[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hand_example() {
        let j = joint(&[0.0, 0.0], &[2.0, 1.0, 1.0, 1.0], 1.0);
        let part = BlockPartition::new(1, 1).unwrap();
        let c = conditional_params(&j, part, &v(&[2.0])).unwrap();
        assert_abs_diff_eq!(c.mu_hat[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.sigma_hat[(0, 0)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn dimension_errors() {
        let j = joint(&[0.0, 0.0], &[2.0, 1.0, 1.0, 1.0], 1.0);
        assert!(BlockPartition::new(0, 2).is_err());
        assert!(conditional_params(&j, BlockPartition::new(1, 2).unwrap(), &v(&[1.0, 1.0])).is_err());
        assert!(conditional_params(&j, BlockPartition::new(1, 1).unwrap(), &v(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn selection_examples() {
        let part = BlockPartition::new(1, 1).unwrap();
        let c = joint(&[0.0, 0.0], &[1.0, 0.5, 0.5, 1.0], 0.8);
        let single = Ggmm::new(vec![1.0], vec![c.clone()]).unwrap();
        assert_eq!(select_component(&single, part, &v(&[3.0])).unwrap(), 0);

        let dup = Ggmm::new(vec![0.9, 0.1], vec![c.clone(), c.clone()]).unwrap();
        for x in [-4.0, 0.0, 2.5] {
            assert_eq!(select_component(&dup, part, &v(&[x])).unwrap(), 0);
        }
        let tie = Ggmm::new(vec![0.5, 0.5], vec![c.clone(), c]).unwrap();
        assert_eq!(select_component(&tie, part, &v(&[1.0])).unwrap(), 0);

        let a = joint(&[0.0, -10.0], &[1.0, 0.2, 0.2, 1.0], 1.5);
        let b = joint(&[0.0, 10.0], &[1.0, 0.2, 0.2, 1.0], 0.6);
        let m = Ggmm::new(vec![0.5, 0.5], vec![a, b]).unwrap();
        let r = MixtureRegressor::new(&m, part).unwrap();
        let lr = |k: usize, x: f64| {
            m.weights()[k].ln() + r.regressors()[k].lr_density().log_pdf(&v(&[x])).unwrap()
        };
        assert!(lr(0, -10.0) > lr(1, -10.0) && lr(1, 10.0) > lr(0, 10.0));
        assert_eq!(select_component(&m, part, &v(&[-10.0])).unwrap(), 0);
        assert_eq!(select_component(&m, part, &v(&[10.0])).unwrap(), 1);
    }

    fn spd(p: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-1.0f64..1.0, p * p).prop_map(move |v| {
            let a = DMatrix::from_vec(p, p, v);
            &a * a.transpose() + DMatrix::identity(p, p) * 0.1
        })
    }

    proptest! {
        #[test]
        fn estimate_is_affine(
            sigma in spd(4),
            x in prop::collection::vec(-3.0f64..3.0, 2),
            y in prop::collection::vec(-3.0f64..3.0, 2),
            a in -2.0f64..2.0,
        ) {
            let j = GgdParams::new(DVector::from_vec(vec![0.3, -0.1, 0.5, 1.0]), sigma, 0.9).unwrap();
            let r = BlockRegressor::new(&j, BlockPartition::new(2, 2).unwrap()).unwrap();
            let (x, y) = (DVector::from_vec(x), DVector::from_vec(y));
            let lhs = r.estimate(&(&x * a + &y * (1.0 - a))).unwrap();
            let rhs = r.estimate(&x).unwrap() * a + r.estimate(&y).unwrap() * (1.0 - a);
            prop_assert!((lhs - rhs).amax() < 1e-10);
        }

        #[test]
        fn schur_complement_is_psd(sigma in spd(5), dh in 1usize..5) {
            let j = GgdParams::new(DVector::zeros(5), sigma, 2.0).unwrap();
            let c = conditional_params(&j, BlockPartition::new(dh, 5 - dh).unwrap(), &DVector::zeros(5 - dh)).unwrap();
            let eig = c.sigma_hat.symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|&e| e >= -1e-10));
            prop_assert_eq!(c.beta_hat, 2.0);
        }

        #[test]
        fn selection_invariant_to_weight_scaling(w in 0.05f64..0.95, scale in 0.1f64..10.0, x in -5.0f64..5.0) {
            let a = joint(&[0.0, -1.0], &[1.0, 0.2, 0.2, 1.0], 1.5);
            let b = joint(&[0.0, 1.0], &[1.0, 0.2, 0.2, 2.0], 0.6);
            let part = BlockPartition::new(1, 1).unwrap();
            let m1 = Ggmm::new(vec![w, 1.0 - w], vec![a.clone(), b.clone()]).unwrap();
            let (s0, s1) = (w * scale, (1.0 - w) * scale);
            let m2 = Ggmm::new(vec![s0 / (s0 + s1), s1 / (s0 + s1)], vec![a, b]).unwrap();
            prop_assert_eq!(
                select_component(&m1, part, &v(&[x])).unwrap(),
                select_component(&m2, part, &v(&[x])).unwrap()
            );
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ggd::{BETA_MAX, BETA_MIN};

/// How the mixture is initialized before the first E-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitMethod {
    /// Random row-stochastic responsibilities followed by one Gaussian M-step.
    RandomResponsibility,
    /// k-means++ seeding, Lloyd refinement, hard-assignment covariances.
    #[default]
    KmeansAssign,
}

impl std::str::FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-responsibility" => Ok(Self::RandomResponsibility),
            "kmeans-assign" => Ok(Self::KmeansAssign),
            other => Err(Error::InvalidConfig(format!("unknown init method `{other}`"))),
        }
    }
}

/// Controls for the EM / fixed-point learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    /// Number of mixture components K.
    pub components: usize,
    pub max_outer_iters: usize,
    /// Fixed-point rounds (mean, covariance, shape) per component per M-step.
    pub fp_inner_iters: usize,
    pub newton_iters: usize,
    /// Outer loop stops once the relative NLL decrease drops below this.
    pub rel_tol: f64,
    /// Ridge added to every covariance update. `None` means
    /// `1e-6 * mean data variance`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cov_reg: Option<f64>,
    /// Lower clamp on Mahalanobis forms before raising to `beta - 1`.
    pub delta_floor: f64,
    pub beta_bounds: (f64, f64),
    /// Holds every shape parameter at this value (1 gives a Gaussian mixture).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fix_beta: Option<f64>,
    pub init: InitMethod,
    pub seed: u64,
    /// Use the covariance fixed point without the leading `beta` factor.
    pub paper_literal_cov: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            components: 10,
            max_outer_iters: 200,
            fp_inner_iters: 3,
            newton_iters: 30,
            rel_tol: 1e-5,
            cov_reg: None,
            delta_floor: 1e-10,
            beta_bounds: (BETA_MIN, BETA_MAX),
            fix_beta: None,
            init: InitMethod::default(),
            seed: 0,
            paper_literal_cov: false,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.components == 0 {
            return bad("components must be >= 1".into());
        }
        if self.max_outer_iters == 0 || self.fp_inner_iters == 0 || self.newton_iters == 0 {
            return bad("iteration counts must be >= 1".into());
        }
        if !(self.rel_tol > 0.0) {
            return bad(format!("rel_tol must be > 0, got {}", self.rel_tol));
        }
        if let Some(r) = self.cov_reg {
            if !(r >= 0.0) || !r.is_finite() {
                return bad(format!("cov_reg must be >= 0, got {r}"));
            }
        }
        if !(self.delta_floor > 0.0) {
            return bad(format!("delta_floor must be > 0, got {}", self.delta_floor));
        }
        let (lo, hi) = self.beta_bounds;
        if !(BETA_MIN..=BETA_MAX).contains(&lo) || !(BETA_MIN..=BETA_MAX).contains(&hi) || lo > hi
        {
            return bad(format!(
                "beta_bounds ({lo}, {hi}) must be ordered and within [{BETA_MIN}, {BETA_MAX}]"
            ));
        }
        if let Some(b) = self.fix_beta {
            if !(lo..=hi).contains(&b) {
                return bad(format!("fix_beta {b} outside beta_bounds ({lo}, {hi})"));
            }
        }
        Ok(())
    }

    pub(crate) fn clamp_beta(&self, beta: f64) -> f64 {
        beta.clamp(self.beta_bounds.0, self.beta_bounds.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        EmConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_invalid() {
        let cases = [
            EmConfig { components: 0, ..Default::default() },
            EmConfig { fp_inner_iters: 0, ..Default::default() },
            EmConfig { rel_tol: 0.0, ..Default::default() },
            EmConfig { cov_reg: Some(-1.0), ..Default::default() },
            EmConfig { beta_bounds: (0.05, 2.0), ..Default::default() },
            EmConfig { beta_bounds: (2.0, 1.0), ..Default::default() },
            EmConfig { fix_beta: Some(7.0), ..Default::default() },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn init_method_parses() {
        assert_eq!("kmeans-assign".parse::<InitMethod>().unwrap(), InitMethod::KmeansAssign);
        assert!("nope".parse::<InitMethod>().is_err());
    }
}

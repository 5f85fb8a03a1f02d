use serde::{Deserialize, Serialize};

use crate::conditional::BlockPartition;
use crate::error::{Error, Result};

/// Patch sizes, strides and blending decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchGeometry {
    /// LR patch side in pixels; HR patches have side `q * tau`.
    pub tau: usize,
    /// Magnification factor.
    pub q: usize,
    /// LR-pixel stride between training patches.
    pub stride_train: usize,
    /// LR-pixel stride between reconstruction patches.
    pub stride_recon: usize,
    /// Decay of the blending window, per squared HR pixel.
    pub gamma: f64,
}

impl Default for PatchGeometry {
    fn default() -> Self {
        Self {
            tau: 4,
            q: 2,
            stride_train: 2,
            stride_recon: 1,
            gamma: 0.1,
        }
    }
}

impl PatchGeometry {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.tau < 2 {
            return bad(format!("tau must be >= 2, got {}", self.tau));
        }
        if self.q < 2 {
            return bad(format!("q must be >= 2, got {}", self.q));
        }
        for (name, s) in [("stride_train", self.stride_train), ("stride_recon", self.stride_recon)] {
            if s == 0 || s > self.tau {
                return bad(format!("{name} must be in [1, tau = {}], got {s}", self.tau));
            }
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be >= 0, got {}", self.gamma));
        }
        Ok(())
    }

    pub fn hr_side(&self) -> usize {
        self.q * self.tau
    }

    pub fn lr_dim(&self) -> usize {
        self.tau * self.tau
    }

    pub fn hr_dim(&self) -> usize {
        self.hr_side() * self.hr_side()
    }

    /// `(q² + 1) τ²`.
    pub fn joint_dim(&self) -> usize {
        self.hr_dim() + self.lr_dim()
    }

    pub fn partition(&self) -> BlockPartition {
        BlockPartition::new(self.hr_dim(), self.lr_dim()).expect("tau, q >= 1")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_dimension() {
        let g = PatchGeometry { tau: 2, ..Default::default() };
        assert_eq!(g.joint_dim(), 20);
        let g = PatchGeometry::default();
        assert_eq!(g.joint_dim(), 80);
        assert_eq!(g.partition().d_h(), 64);
        for tau in 2..6 {
            for q in 2..4 {
                let g = PatchGeometry { tau, q, ..Default::default() };
                assert_eq!(g.joint_dim(), (q * q + 1) * tau * tau);
            }
        }
    }

    #[test]
    fn validation() {
        PatchGeometry::default().validate().unwrap();
        for g in [
            PatchGeometry { tau: 1, stride_train: 1, ..Default::default() },
            PatchGeometry { q: 1, ..Default::default() },
            PatchGeometry { stride_recon: 0, ..Default::default() },
            PatchGeometry { stride_train: 5, ..Default::default() },
            PatchGeometry { gamma: -0.1, ..Default::default() },
        ] {
            assert!(g.validate().is_err(), "{g:?}");
        }
    }
}

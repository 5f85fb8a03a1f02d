use std::path::Path;

use serde::{Deserialize, Serialize};

use super::args::ConfigFlags;
use crate::error::{Error, Result};
use crate::mixture::EmConfig;
use crate::pipeline::PatchGeometry;

/// Everything a `train` or `eval` run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: PatchGeometry,
    pub em: EmConfig,
    /// Noise added by the synthetic degradation in `eval`.
    pub noise_sigma: f64,
    /// Train on the full pair instead of the upper-left quarter.
    pub full_image: bool,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: PatchGeometry::default(),
            em: EmConfig::default(),
            noise_sigma: 0.0,
            full_image: false,
            workers: 1,
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&s).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Config file (if any) with flags layered on top.
    pub fn resolve(flags: &ConfigFlags) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(p) => Self::from_toml_file(p)?,
            None => Self::default(),
        };
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, f: &ConfigFlags) {
        let g = &mut self.geometry;
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(g.tau, f.tau);
        set!(g.q, f.q);
        set!(g.stride_train, f.stride_train);
        set!(g.stride_recon, f.stride_recon);
        set!(g.gamma, f.gamma);
        let e = &mut self.em;
        set!(e.components, f.components);
        set!(e.max_outer_iters, f.max_outer_iters);
        set!(e.fp_inner_iters, f.fp_inner_iters);
        set!(e.newton_iters, f.newton_iters);
        set!(e.rel_tol, f.rel_tol);
        set!(e.delta_floor, f.delta_floor);
        set!(e.beta_bounds.0, f.beta_min);
        set!(e.beta_bounds.1, f.beta_max);
        set!(e.init, f.init);
        set!(e.seed, f.seed);
        if f.cov_reg.is_some() {
            e.cov_reg = f.cov_reg;
        }
        if f.fix_beta.is_some() {
            e.fix_beta = f.fix_beta;
        }
        if f.paper_literal_cov {
            e.paper_literal_cov = true;
        }
        if f.full_image {
            self.full_image = true;
        }
        set!(self.noise_sigma, f.noise_sigma);
        set!(self.workers, f.workers);
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.em.validate()?;
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "workers = 2\n[geometry]\ntau = 3\ngamma = 0.5\n[em]\ncomponents = 4\nseed = 11\n",
        )
        .unwrap();
        let flags = ConfigFlags {
            config: Some(path),
            gamma: Some(0.0),
            components: Some(6),
            fix_beta: Some(1.0),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&flags).unwrap();
        assert_eq!(cfg.geometry.tau, 3);
        assert_eq!(cfg.geometry.gamma, 0.0);
        assert_eq!(cfg.em.components, 6);
        assert_eq!(cfg.em.seed, 11);
        assert_eq!(cfg.em.fix_beta, Some(1.0));
        assert_eq!(cfg.workers, 2);
        assert_eq!(cfg.geometry.q, 2);
    }

    #[test]
    fn toml_round_trip_and_rejections() {
        let cfg = RunConfig::default();
        let back: RunConfig = toml::from_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "[em]\nbogus = 1\n").unwrap();
        let flags = ConfigFlags { config: Some(path), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&flags), Err(Error::InvalidConfig(_))));
        let flags = ConfigFlags { tau: Some(1), ..Default::default() };
        assert!(RunConfig::resolve(&flags).is_err());
    }
}

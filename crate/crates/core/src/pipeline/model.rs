use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, aggregation_weights};
use super::geometry::PatchGeometry;
use super::patches::{build_joint_samples, check_pair, extract_patches};
use crate::conditional::MixtureRegressor;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::mixture::{fit, EmConfig, FitReport, Ggmm, GgmmDocument};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Affine pixel normalization `(v - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub offset: f64,
    pub scale: f64,
}

impl Normalization {
    pub fn identity() -> Self {
        Self {
            offset: 0.0,
            scale: 1.0,
        }
    }

    /// Mean and standard deviation of all pixels in `images`.
    pub fn from_images(images: &[&GrayImage]) -> Self {
        let n: usize = images.iter().map(|i| i.pixels().len()).sum();
        let mean = images.iter().flat_map(|i| i.pixels()).sum::<f64>() / n as f64;
        let var = images
            .iter()
            .flat_map(|i| i.pixels())
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n as f64;
        let sd = var.sqrt();
        Self {
            offset: mean,
            scale: if sd > 0.0 { sd } else { 1.0 },
        }
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.offset) / self.scale
    }

    #[inline]
    pub fn invert(&self, v: f64) -> f64 {
        v * self.scale + self.offset
    }

    fn validate(&self) -> Result<()> {
        if !self.offset.is_finite() || !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::Model(format!("invalid normalization {self:?}")));
        }
        Ok(())
    }
}

/// A trained joint mixture together with the patch geometry and pixel
/// normalization it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    ggmm: Ggmm,
    geometry: PatchGeometry,
    normalization: Normalization,
}

impl JointModel {
    pub fn new(ggmm: Ggmm, geometry: PatchGeometry, normalization: Normalization) -> Result<Self> {
        geometry.validate()?;
        normalization.validate()?;
        if ggmm.dim() != geometry.joint_dim() {
            return Err(Error::Model(format!(
                "mixture dimension {} does not match geometry ({})",
                ggmm.dim(),
                geometry.joint_dim()
            )));
        }
        Ok(Self {
            ggmm,
            geometry,
            normalization,
        })
    }

    pub fn ggmm(&self) -> &Ggmm {
        &self.ggmm
    }

    pub fn geometry(&self) -> &PatchGeometry {
        &self.geometry
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&JointModelDocument::from(self))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: JointModelDocument =
            serde_json::from_str(s).map_err(|e| Error::Model(e.to_string()))?;
        JointModel::try_from(&doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&s)
    }
}

/// On-disk form of a [`JointModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointModelDocument {
    pub format_version: u32,
    pub geometry: PatchGeometry,
    pub normalization: Normalization,
    pub ggmm: GgmmDocument,
}

impl From<&JointModel> for JointModelDocument {
    fn from(m: &JointModel) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            geometry: m.geometry,
            normalization: m.normalization,
            ggmm: GgmmDocument::from(&m.ggmm),
        }
    }
}

impl TryFrom<&JointModelDocument> for JointModel {
    type Error = Error;

    fn try_from(doc: &JointModelDocument) -> Result<Self> {
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format_version {}",
                doc.format_version
            )));
        }
        let ggmm = Ggmm::try_from(&doc.ggmm)?;
        JointModel::new(ggmm, doc.geometry, doc.normalization)
            .map_err(|e| Error::Model(e.to_string()))
    }
}

/// Learns the joint mixture from a reference HR/LR pair.
pub fn train(
    hr: &GrayImage,
    lr: &GrayImage,
    geom: &PatchGeometry,
    em: &EmConfig,
) -> Result<(JointModel, FitReport)> {
    geom.validate()?;
    em.validate()?;
    check_pair(hr, lr, geom.q)?;
    let norm = Normalization::from_images(&[hr, lr]);
    let data = build_joint_samples(hr, lr, geom, &norm)?;
    if data.ncols() <= em.components {
        return Err(Error::InsufficientData(format!(
            "{} training patches for {} components",
            data.ncols(),
            em.components
        )));
    }
    let (ggmm, report) = fit(&data, em)?;
    Ok((JointModel::new(ggmm, *geom, norm)?, report))
}

fn check_input(lr: &GrayImage, geom: &PatchGeometry) -> Result<()> {
    if lr.width() < geom.tau || lr.height() < geom.tau {
        return Err(Error::Image(format!(
            "{}x{} input is smaller than the model's {}x{} LR patch",
            lr.width(),
            lr.height(),
            geom.tau,
            geom.tau
        )));
    }
    Ok(())
}

/// MMSE estimate of every HR patch on the reconstruction grid, de-normalized,
/// with its HR top-left position.
pub fn estimate_hr_patches(
    lr: &GrayImage,
    model: &JointModel,
) -> Result<Vec<(Vec<f64>, usize, usize)>> {
    let geom = model.geometry;
    check_input(lr, &geom)?;
    let norm = model.normalization;
    let regressor = MixtureRegressor::new(&model.ggmm, geom.partition())?;
    let patches = extract_patches(lr, geom.tau, geom.stride_recon)?;
    patches
        .par_iter()
        .map(|p| {
            let x: DVector<f64> = p.values.map(|v| norm.apply(v));
            let (_, est) = regressor.estimate(&x)?;
            Ok((
                est.iter().map(|&v| norm.invert(v)).collect(),
                geom.q * p.row,
                geom.q * p.col,
            ))
        })
        .collect()
}

/// Full reconstruction: patch estimates blended with the Gaussian window and
/// clipped to `[0, 1]`.
pub fn super_resolve(lr: &GrayImage, model: &JointModel) -> Result<GrayImage> {
    let geom = model.geometry;
    let patches = estimate_hr_patches(lr, model)?;
    let mask = aggregation_weights(geom.q, geom.tau, geom.gamma)?;
    let out = aggregate(&patches, &mask, geom.q * lr.height(), geom.q * lr.width())?;
    Ok(out.clipped(0.0, 1.0))
}

use serde::{Deserialize, Serialize};

use super::Ggmm;
use crate::error::{Error, Result};
use crate::ggd::{GgdParams, GgdRecord};

pub const GGMM_FORMAT_VERSION: u32 = 1;

/// Serialized mixture. Deserialization goes through [`Ggmm::try_from`], which
/// re-validates every invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GgmmDocument {
    pub format_version: u32,
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub weights: Vec<f64>,
    pub components: Vec<GgdRecord>,
}

impl From<&Ggmm> for GgmmDocument {
    fn from(m: &Ggmm) -> Self {
        Self {
            format_version: GGMM_FORMAT_VERSION,
            p: m.dim(),
            k: m.len(),
            weights: m.weights().to_vec(),
            components: m.components().iter().map(GgdRecord::from).collect(),
        }
    }
}

impl TryFrom<&GgmmDocument> for Ggmm {
    type Error = Error;

    fn try_from(doc: &GgmmDocument) -> Result<Self> {
        if doc.format_version != GGMM_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format_version {}",
                doc.format_version
            )));
        }
        if doc.weights.len() != doc.k || doc.components.len() != doc.k {
            return Err(Error::Model(format!(
                "K = {} but {} weights and {} components",
                doc.k,
                doc.weights.len(),
                doc.components.len()
            )));
        }
        let components = doc
            .components
            .iter()
            .enumerate()
            .map(|(i, r)| {
                if r.mu.len() != doc.p {
                    return Err(Error::Model(format!(
                        "component {i} has dimension {}, expected {}",
                        r.mu.len(),
                        doc.p
                    )));
                }
                GgdParams::try_from(r).map_err(|e| Error::Model(format!("component {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ggmm::new(doc.weights.clone(), components).map_err(|e| Error::Model(e.to_string()))
    }
}

impl Ggmm {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GgmmDocument::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: GgmmDocument =
            serde_json::from_str(s).map_err(|e| Error::Model(e.to_string()))?;
        Ggmm::try_from(&doc)
    }
}

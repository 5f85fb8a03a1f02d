//! Single-image super-resolution with a joint generalized Gaussian mixture
//! model over concatenated high/low resolution patches.
//!
//! The mixture is learned by EM whose M-step solves the weighted maximum
//! likelihood problem for each component by fixed-point iteration on the
//! mean and scatter matrix plus a safeguarded Newton solve for the shape.
//! High-resolution patches are estimated from low-resolution ones by the
//! conditional mean of the best-matching component and blended with a
//! Gaussian window.

pub mod cli;
pub mod conditional;
pub mod error;
pub mod ggd;
pub mod imaging;
pub mod mixture;
pub mod pipeline;
pub mod special;

pub use error::{Error, Result};
pub use ggd::GgdParams;
pub use imaging::GrayImage;
pub use mixture::{EmConfig, Ggmm};
pub use pipeline::{JointModel, PatchGeometry};

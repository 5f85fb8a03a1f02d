//! Super-resolution from a joint HR‖LR patch mixture: learn the mixture on a
//! reference pair, estimate each HR patch from its LR patch, blend the
//! overlapping estimates.

mod aggregate;
mod geometry;
mod model;
mod patches;

pub use aggregate::{aggregate, aggregation_weights, WeightMask};
pub use geometry::PatchGeometry;
pub use model::{
    estimate_hr_patches, super_resolve, train, JointModel, JointModelDocument, Normalization,
    MODEL_FORMAT_VERSION,
};
pub use patches::{build_joint_samples, extract_patches, grid_positions, Patch};

//! Desk-scale digital-twin engine: Gaussian splat rendering and fitting,
//! Poisson surface reconstruction, image-quality metrics, an editable hybrid
//! scene graph, and a hierarchical prompt-to-edit orchestrator.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod image;
pub mod metrics;
pub mod optim;
pub mod orchestrator;
pub mod ply;
pub mod recon;
pub mod scene;
pub mod splat;

pub use image::{ImageBuffer, ImageError};
pub use splat::{PinholeCamera, RigidTransform, SplatGaussian, SplatSet};

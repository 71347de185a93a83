//! 3D Gaussian splats: types, rigid transforms, SH color, projection and
//! rasterization.

mod camera;
mod gaussian;
mod io;
mod project;
mod render;
pub mod sh;
mod transform;

use thiserror::Error;

pub use camera::{CameraPose, CameraSpec, Intrinsics, PinholeCamera, DEFAULT_FAR, DEFAULT_NEAR};
pub use gaussian::{
    quat_to_matrix, sh_basis_count, sh_coeff_count, SplatGaussian, SplatSet, MAX_SH_DEGREE,
};
pub use io::{load_splats, logit, read_splats, save_splats, sigmoid, write_splats};
pub use project::{
    perspective_jacobian, project_splat, ProjectedSplat, ALPHA_MIN, COV_DILATION,
};
pub use render::{
    project_sorted, render_reference, render_samples, render_tiled, PixelSample, SurfaceLayer,
    DEFAULT_TILE,
};
pub use sh::eval_color;
pub use transform::{transform_set, transform_set_scaled, RigidTransform};

#[derive(Debug, Error)]
pub enum SplatError {
    #[error("invalid splat data: {0}")]
    Invariant(String),
    #[error(transparent)]
    Ply(#[from] crate::ply::PlyError),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

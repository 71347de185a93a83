//! Poisson surface reconstruction on a regular grid: normal estimation,
//! vector-field splatting, a conjugate-gradient Poisson solve and
//! marching-cubes extraction.

mod cloud;
mod grid;
pub mod io;
mod mc;
mod mesh;
mod normals;
mod pipeline;
mod poisson;
mod tables;

pub use cloud::OrientedPointCloud;
pub use grid::{divergence, splat_vector_field, GridSpec, ScalarGrid, VectorGrid, DEFAULT_PAD};
pub use mc::marching_cubes;
pub use mesh::{EdgeReport, TriangleMesh};
pub use normals::{estimate_normals, NormalEstimate};
pub use pipeline::{reconstruct, reconstruct_in_box, reconstruct_with, ReconConfig, Reconstruction};
pub use poisson::{solve_poisson, PoissonSolution};

#[derive(Debug, thiserror::Error)]
pub enum ReconError {
    #[error("invalid point cloud: {0}")]
    Cloud(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("need at least {needed} points for k = {k}, got {got}")]
    TooFewPoints { needed: usize, got: usize, k: usize },
    #[error("conjugate gradient broke down at iteration {iteration}")]
    Breakdown { iteration: usize },
    #[error("invalid solver tolerance {0}")]
    Tolerance(f64),
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("{0}")]
    Parse(String),
    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

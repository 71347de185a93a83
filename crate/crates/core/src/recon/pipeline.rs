use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::grid::deposit;
use super::{
    divergence, marching_cubes, solve_poisson, splat_vector_field, OrientedPointCloud, ReconError,
    TriangleMesh, DEFAULT_PAD,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconConfig {
    pub res: [usize; 3],
    pub tol: f64,
    pub max_iter: usize,
    pub pad: f64,
    /// Components with fewer triangles are discarded as noise.
    pub min_component: usize,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            res: [64, 64, 64],
            tol: 1e-6,
            max_iter: 2000,
            pad: DEFAULT_PAD,
            min_component: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub mesh: TriangleMesh,
    pub isovalue: f64,
    pub cg_iterations: usize,
    pub converged: bool,
    pub removed_components: usize,
}

/// Poisson reconstruction with default padding, iteration cap and noise
/// filter.
pub fn reconstruct(cloud: &OrientedPointCloud, res: [usize; 3], tol: f64) -> Result<TriangleMesh, ReconError> {
    let cfg = ReconConfig {
        res,
        tol,
        ..ReconConfig::default()
    };
    Ok(reconstruct_with(cloud, &cfg)?.mesh)
}

pub fn reconstruct_with(cloud: &OrientedPointCloud, cfg: &ReconConfig) -> Result<Reconstruction, ReconError> {
    let field = splat_vector_field(cloud, cfg.res, cfg.pad)?;
    run(cloud, field, cfg)
}

fn run(cloud: &OrientedPointCloud, field: super::VectorGrid, cfg: &ReconConfig) -> Result<Reconstruction, ReconError> {
    let rhs = divergence(&field);
    let sol = solve_poisson(&rhs, cfg.tol, cfg.max_iter)?;
    if !sol.converged {
        log::warn!(
            "Poisson solve stopped after {} iterations at relative residual {:.3e}",
            sol.iterations,
            sol.residuals.last().copied().unwrap_or(f64::NAN)
        );
    }
    let chi = &sol.solution;
    let isovalue = cloud.points().iter().map(|p| chi.sample(p)).sum::<f64>() / cloud.len() as f64;
    let mut mesh = marching_cubes(chi, isovalue);
    let removed_components = mesh.remove_small_components(cfg.min_component);
    Ok(Reconstruction {
        mesh,
        isovalue,
        cg_iterations: sol.iterations,
        converged: sol.converged,
        removed_components,
    })
}

/// Same pipeline on a caller-chosen grid box.
pub fn reconstruct_in_box(
    cloud: &OrientedPointCloud,
    min: Vector3<f64>,
    max: Vector3<f64>,
    cfg: &ReconConfig,
) -> Result<Reconstruction, ReconError> {
    if cloud.is_empty() {
        return Err(ReconError::Cloud("point cloud is empty".into()));
    }
    let spec = super::GridSpec::new(cfg.res, min, max)?;
    run(cloud, deposit(cloud, spec), cfg)
}

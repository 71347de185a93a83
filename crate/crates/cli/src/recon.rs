use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use twinsim_core::metrics::{psnr, ssim, MetricReport, SsimParams};
use twinsim_core::recon::io::load_points;
use twinsim_core::recon::{estimate_normals, reconstruct_with, OrientedPointCloud, ReconConfig};
use twinsim_core::ImageBuffer;

use crate::exit::{usage, CmdResult, Classify};
use crate::render::write_json;

#[derive(Args, Debug)]
pub struct ReconArgs {
    /// Point cloud: PLY (x y z [nx ny nz]) or whitespace XYZ text
    pub input: PathBuf,
    /// Mesh output, OBJ or PLY by extension
    #[arg(short, long)]
    pub output: PathBuf,
    /// Grid resolution: one value for a cube, or x,y,z
    #[arg(long, default_value = "64")]
    pub res: String,
    /// Relative residual tolerance of the Poisson solve
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Neighbors for normal estimation
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    /// Estimate normals even when the file carries them
    #[arg(long)]
    pub estimate_normals: bool,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct ReconReport {
    points: usize,
    estimated_normals: bool,
    vertices: usize,
    triangles: usize,
    watertight: bool,
    boundary_edges: usize,
    non_manifold_edges: usize,
    surface_area: f64,
    volume: f64,
    isovalue: f64,
    cg_iterations: usize,
    converged: bool,
    removed_components: usize,
}

fn parse_res(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad resolution \"{s}\"")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [n] => Ok([*n; 3]),
        [x, y, z] => Ok([*x, *y, *z]),
        _ => Err(format!("resolution \"{s}\" needs 1 or 3 values")),
    }
}

pub fn recon(a: ReconArgs) -> CmdResult {
    let res = parse_res(&a.res).map_err(usage)?;
    if a.k < 3 {
        return Err(usage("--k must be at least 3"));
    }
    let data = load_points(&a.input).data()?;
    let n = data.points.len();
    let (cloud, estimated) = match data.normals {
        Some(normals) if !a.estimate_normals => (OrientedPointCloud::normalized(data.points, normals).data()?, false),
        _ => (estimate_normals(&data.points, a.k).data()?.into_cloud().data()?, true),
    };
    let cfg = ReconConfig {
        res,
        tol: a.tol,
        max_iter: a.max_iter,
        ..ReconConfig::default()
    };
    let r = reconstruct_with(&cloud, &cfg).data()?;
    if !r.converged {
        log::warn!("Poisson solve stopped after {} iterations without reaching tol {}", r.cg_iterations, a.tol);
    }
    r.mesh.save(&a.output).data()?;
    let edges = r.mesh.edge_report();
    let report = ReconReport {
        points: n,
        estimated_normals: estimated,
        vertices: r.mesh.vertices().len(),
        triangles: r.mesh.triangles().len(),
        watertight: edges.is_watertight(),
        boundary_edges: edges.boundary,
        non_manifold_edges: edges.non_manifold,
        surface_area: r.mesh.surface_area(),
        volume: r.mesh.signed_volume(),
        isovalue: r.isovalue,
        cg_iterations: r.cg_iterations,
        converged: r.converged,
        removed_components: r.removed_components,
    };
    println!(
        "vertices {} | triangles {} | watertight {} | area {:.2} | volume {:.2} | CG iterations {}",
        report.vertices,
        report.triangles,
        report.watertight,
        report.surface_area,
        report.volume,
        report.cg_iterations
    );
    if let Some(p) = &a.report {
        write_json(p, &report)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Rendered image
    pub image: PathBuf,
    /// Reference image
    pub reference: PathBuf,
    /// Attach a measured frame rate to the report
    #[arg(long)]
    pub fps: Option<f64>,
}

pub fn metrics(a: MetricsArgs) -> CmdResult {
    let x = ImageBuffer::load_png(&a.image).data()?;
    let y = ImageBuffer::load_png(&a.reference).data()?;
    // Pixel values are normalized to [0, 1] on load.
    let report = MetricReport {
        psnr: psnr(&x, &y, 1.0).data()?,
        ssim: ssim(&x, &y, &SsimParams::for_max(1.0)).data()?,
        fps: a.fps,
        width: x.width(),
        height: x.height(),
        channels: x.channels(),
    };
    eprintln!("{}", report.table_line());
    println!("{}", serde_json::to_string_pretty(&report).data()?);
    Ok(())
}

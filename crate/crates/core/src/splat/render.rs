//! Front-to-back alpha compositing of depth-sorted splats, with a
//! straightforward per-pixel reference path and a tile-binned path that
//! produces identical pixels.

use rayon::prelude::*;

use super::project::{project_splat, ProjectedSplat};
use super::{PinholeCamera, SplatSet};
use crate::image::ImageBuffer;

pub const DEFAULT_TILE: u32 = 16;

/// Projects and depth-sorts a set. Ties in depth keep insertion order.
pub fn project_sorted(cam: &PinholeCamera, set: &SplatSet) -> Vec<ProjectedSplat> {
    let degree = set.sh_degree();
    let mut projected: Vec<ProjectedSplat> = set
        .iter()
        .enumerate()
        .filter_map(|(i, g)| project_splat(cam, g, degree, i))
        .collect();
    projected.sort_by(|a, b| {
        a.depth
            .total_cmp(&b.depth)
            .then(a.source_index.cmp(&b.source_index))
    });
    projected
}

/// Opaque surface behind (or between) splats, e.g. rasterized meshes.
#[derive(Debug, Clone)]
pub struct SurfaceLayer {
    pub width: u32,
    pub height: u32,
    /// Camera-frame depth per pixel, `f64::INFINITY` where empty.
    pub depth: Vec<f64>,
    pub color: Vec<[f64; 3]>,
}

impl SurfaceLayer {
    pub fn empty(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            depth: vec![f64::INFINITY; n],
            color: vec![[0.0; 3]; n],
        }
    }
}

/// Per-pixel compositing result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelSample {
    pub color: [f64; 3],
    /// Fraction of the pixel covered by splats or surface.
    pub coverage: f64,
    /// Coverage-weighted mean depth, `f64::INFINITY` when nothing covers it.
    pub depth: f64,
}

#[inline]
fn shade_pixel<'a, I>(splats: I, px: f64, py: f64, surface: Option<(f64, [f64; 3])>) -> PixelSample
where
    I: Iterator<Item = &'a ProjectedSplat>,
{
    let mut color = [0.0f64; 3];
    let mut transmittance = 1.0f64;
    let mut weighted_depth = 0.0f64;
    let surface_depth = surface.map_or(f64::INFINITY, |(d, _)| d);
    for s in splats {
        if s.depth >= surface_depth {
            break;
        }
        let Some(alpha) = s.alpha_at(px, py) else {
            continue;
        };
        let w = alpha * transmittance;
        color[0] += s.color[0] * w;
        color[1] += s.color[1] * w;
        color[2] += s.color[2] * w;
        weighted_depth += s.depth * w;
        transmittance *= 1.0 - alpha;
    }
    if let Some((d, c)) = surface {
        if d.is_finite() {
            for (acc, v) in color.iter_mut().zip(c) {
                *acc += v * transmittance;
            }
            weighted_depth += d * transmittance;
            transmittance = 0.0;
        }
    }
    let coverage = 1.0 - transmittance;
    PixelSample {
        color: color.map(|v| v.clamp(0.0, 1.0)),
        coverage,
        depth: if coverage > 0.0 {
            weighted_depth / coverage
        } else {
            f64::INFINITY
        },
    }
}

#[inline]
fn pixel_center(x: u32, y: u32) -> (f64, f64) {
    (x as f64 + 0.5, y as f64 + 0.5)
}

/// Reference renderer: every pixel walks the full depth-sorted list.
pub fn render_reference(cam: &PinholeCamera, set: &SplatSet) -> ImageBuffer {
    let projected = project_sorted(cam, set);
    let mut img = ImageBuffer::black(cam.width, cam.height, 3);
    for y in 0..cam.height {
        for x in 0..cam.width {
            let (px, py) = pixel_center(x, y);
            let s = shade_pixel(projected.iter(), px, py, None);
            img.set_rgb(x, y, s.color);
        }
    }
    img
}

/// Tile-binned renderer. Splats are sorted globally, then each is appended to
/// every tile its contributing region overlaps, so per-tile lists inherit the
/// global order. Tiles are shaded independently.
pub fn render_tiled(cam: &PinholeCamera, set: &SplatSet, tile: u32) -> ImageBuffer {
    let samples = render_samples(cam, set, tile, None);
    let mut img = ImageBuffer::black(cam.width, cam.height, 3);
    for (i, s) in samples.iter().enumerate() {
        let x = (i % cam.width as usize) as u32;
        let y = (i / cam.width as usize) as u32;
        img.set_rgb(x, y, s.color);
    }
    img
}

/// Tiled compositing returning per-pixel samples (row-major), optionally
/// occluded by an opaque surface layer.
pub fn render_samples(
    cam: &PinholeCamera,
    set: &SplatSet,
    tile: u32,
    surface: Option<&SurfaceLayer>,
) -> Vec<PixelSample> {
    let tile = tile.max(1);
    let projected = project_sorted(cam, set);
    let bins = bin_to_tiles(&projected, cam.width, cam.height, tile);
    let tiles_x = cam.width.div_ceil(tile);

    let shaded: Vec<Vec<PixelSample>> = bins
        .par_iter()
        .enumerate()
        .map(|(t, list)| {
            let tx = t as u32 % tiles_x;
            let ty = t as u32 / tiles_x;
            let (x0, y0) = (tx * tile, ty * tile);
            let (x1, y1) = ((x0 + tile).min(cam.width), (y0 + tile).min(cam.height));
            let mut out = Vec::with_capacity(((x1 - x0) * (y1 - y0)) as usize);
            for y in y0..y1 {
                for x in x0..x1 {
                    let (px, py) = pixel_center(x, y);
                    let surf = surface.map(|s| {
                        let i = (y * s.width + x) as usize;
                        (s.depth[i], s.color[i])
                    });
                    out.push(shade_pixel(list.iter().map(|&k| &projected[k]), px, py, surf));
                }
            }
            out
        })
        .collect();

    let mut samples = vec![
        PixelSample {
            color: [0.0; 3],
            coverage: 0.0,
            depth: f64::INFINITY,
        };
        cam.pixel_count()
    ];
    for (t, tile_samples) in shaded.into_iter().enumerate() {
        let tx = t as u32 % tiles_x;
        let ty = t as u32 / tiles_x;
        let (x0, y0) = (tx * tile, ty * tile);
        let x1 = (x0 + tile).min(cam.width);
        let row = (x1 - x0) as usize;
        for (k, s) in tile_samples.into_iter().enumerate() {
            let x = x0 as usize + k % row;
            let y = y0 as usize + k / row;
            samples[y * cam.width as usize + x] = s;
        }
    }
    samples
}

/// Index lists per tile (row-major tiles), each in global depth order.
fn bin_to_tiles(projected: &[ProjectedSplat], width: u32, height: u32, tile: u32) -> Vec<Vec<usize>> {
    let tiles_x = width.div_ceil(tile) as i64;
    let tiles_y = height.div_ceil(tile) as i64;
    let mut bins = vec![Vec::new(); (tiles_x * tiles_y) as usize];
    let t = tile as f64;
    for (k, s) in projected.iter().enumerate() {
        let [x0, y0, x1, y1] = s.bounds();
        // Pixel centers sit at i + 0.5; a tile spans centers [x0 + 0.5, x0 + tile - 0.5].
        let tx0 = (((x0 - 0.5) / t).floor() as i64).clamp(0, tiles_x - 1);
        let tx1 = (((x1 - 0.5) / t).floor() as i64).clamp(0, tiles_x - 1);
        let ty0 = (((y0 - 0.5) / t).floor() as i64).clamp(0, tiles_y - 1);
        let ty1 = (((y1 - 0.5) / t).floor() as i64).clamp(0, tiles_y - 1);
        for ty in ty0..=ty1 {
            for tx in tx0..=tx1 {
                bins[(ty * tiles_x + tx) as usize].push(k);
            }
        }
    }
    bins
}

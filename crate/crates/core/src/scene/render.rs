//! Hybrid frame rendering: meshes are z-buffered into an opaque surface
//! layer, splats are composited in front of it, and the environment is
//! applied as a post-process.

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::store::{AssetStore, LoadedAsset};
use super::{behavior_pose, EnvironmentState, SceneError, SceneGraph, Weather, BEHAVIOR_RATE_HZ};
use crate::image::ImageBuffer;
use crate::recon::TriangleMesh;
use crate::splat::{render_samples, transform_set_scaled, PinholeCamera, SplatSet, SurfaceLayer, DEFAULT_TILE};

const DEFAULT_MESH_COLOR: [f64; 3] = [0.6, 0.6, 0.6];
const SKY: [f64; 3] = [0.55, 0.7, 0.9];
const FOG_GRAY: [f64; 3] = [0.72, 0.73, 0.75];
/// Fog extinction per meter at full intensity.
pub const FOG_DENSITY: f64 = 0.15;
/// Overlay particles per pixel at full intensity.
pub const PARTICLE_DENSITY: f64 = 1.0 / 250.0;

#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    /// Scene time in seconds, drives behaviors and particle seeds.
    pub time: f64,
    pub tile: u32,
    pub particles: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            time: 0.0,
            tile: DEFAULT_TILE,
            particles: true,
        }
    }
}

/// Orbit camera looking at the scene center from the south-west, 30° up,
/// far enough to frame every asset position.
pub fn default_camera(scene: &SceneGraph, width: u32, height: u32) -> Result<PinholeCamera, SceneError> {
    let target = scene.scene_center() + Vector3::new(0.0, 0.0, 0.5);
    let extent = scene
        .bounds()
        .map_or(0.0, |(lo, hi)| (hi - lo).norm() / 2.0)
        .max(6.0);
    let (az, el) = (225f64.to_radians(), 30f64.to_radians());
    let dist = extent * 1.8;
    let eye = target + Vector3::new(az.sin() * el.cos(), az.cos() * el.cos(), el.sin()) * dist;
    let pose = PinholeCamera::look_at_pose(eye, target, Vector3::z())?;
    let f = width as f64 * 0.9;
    Ok(PinholeCamera::centered(f, f, width, height, pose)?)
}

/// Unit vector toward the sun: azimuth clockwise from +y (north) toward +x.
fn sun_direction(env: &EnvironmentState) -> Vector3<f64> {
    let (az, el) = (env.sun_azimuth_deg().to_radians(), env.sun_elevation_deg().to_radians());
    Vector3::new(az.sin() * el.cos(), az.cos() * el.cos(), el.sin())
}

/// Z-buffers world-space meshes with two-sided Lambert shading. Triangles
/// crossing the near plane are clipped.
pub fn rasterize_meshes(
    cam: &PinholeCamera,
    meshes: &[(TriangleMesh, [f64; 3])],
    sun: Vector3<f64>,
) -> SurfaceLayer {
    let mut layer = SurfaceLayer::empty(cam.width, cam.height);
    let eye = cam.center();
    for (mesh, color) in meshes {
        let v = mesh.vertices();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let mut n = mesh.face_normal(t);
            if n.norm() == 0.0 {
                continue;
            }
            let w = tri.map(|i| v[i as usize]);
            if n.dot(&(eye - w[0])) < 0.0 {
                n = -n;
            }
            let shade = 0.35 + 0.65 * n.dot(&sun).max(0.0);
            let c = color.map(|x| (x * shade).clamp(0.0, 1.0));
            let cam_pts = w.map(|p| cam.world_to_camera.apply_point(&p));
            let poly = clip_near(&cam_pts, cam.near);
            for k in 1..poly.len().saturating_sub(1) {
                fill_triangle(cam, &mut layer, [poly[0], poly[k], poly[k + 1]], c);
            }
        }
    }
    layer
}

/// Sutherland-Hodgman against z = near.
fn clip_near(p: &[Vector3<f64>; 3], near: f64) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let (a, b) = (p[i], p[(i + 1) % 3]);
        let (ina, inb) = (a.z >= near, b.z >= near);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let s = (near - a.z) / (b.z - a.z);
            out.push(a + (b - a) * s);
        }
    }
    out
}

fn fill_triangle(cam: &PinholeCamera, layer: &mut SurfaceLayer, p: [Vector3<f64>; 3], color: [f64; 3]) {
    let s = p.map(|q| Vector2::new(cam.fx * q.x / q.z + cam.cx, cam.fy * q.y / q.z + cam.cy));
    let area = edge(&s[0], &s[1], &s[2]);
    if area.abs() < 1e-12 {
        return;
    }
    let min = s[0].inf(&s[1]).inf(&s[2]);
    let max = s[0].sup(&s[1]).sup(&s[2]);
    let x0 = (min.x - 0.5).ceil().max(0.0) as i64;
    let y0 = (min.y - 0.5).ceil().max(0.0) as i64;
    let x1 = ((max.x - 0.5).floor() as i64).min(cam.width as i64 - 1);
    let y1 = ((max.y - 0.5).floor() as i64).min(cam.height as i64 - 1);
    let inv_z = p.map(|q| 1.0 / q.z);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let c = Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
            let b = [edge(&s[1], &s[2], &c) / area, edge(&s[2], &s[0], &c) / area, edge(&s[0], &s[1], &c) / area];
            if b.iter().any(|&w| w < 0.0) {
                continue;
            }
            let depth = 1.0 / (b[0] * inv_z[0] + b[1] * inv_z[1] + b[2] * inv_z[2]);
            if !(depth > cam.near && depth < cam.far) {
                continue;
            }
            let i = y as usize * cam.width as usize + x as usize;
            if depth < layer.depth[i] {
                layer.depth[i] = depth;
                layer.color[i] = color;
            }
        }
    }
}

#[inline]
fn edge(a: &Vector2<f64>, b: &Vector2<f64>, c: &Vector2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Renders a read-only snapshot of the scene.
pub fn render_scene(
    scene: &SceneGraph,
    store: &AssetStore,
    cam: &PinholeCamera,
    opts: &RenderOptions,
) -> Result<ImageBuffer, SceneError> {
    let mut splats = SplatSet::new(0)?;
    let mut meshes = Vec::new();
    for a in scene.assets() {
        let pose = behavior_pose(a, opts.time);
        match &*store.get(&a.representation)? {
            LoadedAsset::Splats(s) => splats.extend_from(&transform_set_scaled(&pose, a.uniform_scale, s)),
            LoadedAsset::Mesh(m) => {
                let scaled = TriangleMesh::new(
                    m.vertices().iter().map(|v| pose.apply_point(&(v * a.uniform_scale))).collect(),
                    m.triangles().to_vec(),
                )?;
                let color = scene
                    .catalog()
                    .get(&a.class_name)
                    .and_then(|e| e.color)
                    .unwrap_or(DEFAULT_MESH_COLOR);
                meshes.push((scaled, color));
            }
        }
    }
    let env = scene.environment();
    let surface = rasterize_meshes(cam, &meshes, sun_direction(env));
    let samples = render_samples(cam, &splats, opts.tile, Some(&surface));

    let light = env.illumination();
    let fog = (env.weather() == Weather::Fog).then_some(FOG_DENSITY * env.intensity());
    let mut img = ImageBuffer::black(cam.width, cam.height, 3);
    for (i, s) in samples.iter().enumerate() {
        let t = 1.0 - s.coverage;
        let mut c: [f64; 3] = std::array::from_fn(|k| (s.color[k] + t * SKY[k]) * light);
        if let Some(k) = fog {
            // Sky counts as infinitely far.
            let f = if k == 0.0 {
                1.0
            } else if s.coverage > 0.0 {
                (-k * s.depth).exp() * s.coverage
            } else {
                0.0
            };
            for (ch, g) in c.iter_mut().zip(FOG_GRAY) {
                *ch = f * *ch + (1.0 - f) * g * light;
            }
        }
        let x = (i % cam.width as usize) as u32;
        let y = (i / cam.width as usize) as u32;
        img.set_rgb(x, y, c.map(|v| v.clamp(0.0, 1.0)));
    }
    if opts.particles && matches!(env.weather(), Weather::Rain | Weather::Snow) {
        overlay_particles(&mut img, env, opts.time);
    }
    Ok(img)
}

/// Particle count for a frame of `pixels` pixels.
pub fn particle_count(env: &EnvironmentState, pixels: usize) -> usize {
    match env.weather() {
        Weather::Rain | Weather::Snow => (env.intensity() * PARTICLE_DENSITY * pixels as f64).round() as usize,
        _ => 0,
    }
}

fn overlay_particles(img: &mut ImageBuffer, env: &EnvironmentState, time: f64) {
    let (w, h) = (img.width(), img.height());
    let n = particle_count(env, w as usize * h as usize);
    let frame = (time.max(0.0) * BEHAVIOR_RATE_HZ).floor() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ frame);
    let snow = env.weather() == Weather::Snow;
    let light = env.illumination().max(0.4);
    for _ in 0..n {
        let x0 = rng.random_range(0..w);
        let y0 = rng.random_range(0..h);
        let (len, tint, a) = if snow { (2, [1.0; 3], 0.85) } else { (6, [0.8, 0.85, 0.95], 0.45) };
        for d in 0..len {
            let (x, y) = if snow { (x0 + d % 2, y0 + d / 2) } else { (x0 + d / 3, y0 + d) };
            if x >= w || y >= h {
                continue;
            }
            let old = img.rgb(x, y);
            img.set_rgb(x, y, std::array::from_fn(|k| old[k] * (1.0 - a) + tint[k] * light * a));
        }
    }
}

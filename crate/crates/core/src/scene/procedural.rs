//! Built-in stand-in assets for the road catalog. Splat assets are shells of
//! small Gaussians; mesh assets are assembled from boxes. Frames are z-up
//! with the asset resting on z = 0 and facing +x.

use std::f64::consts::TAU;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::recon::TriangleMesh;
use crate::splat::{SplatGaussian, SplatSet};

pub const BUILTIN_SPLATS: [&str; 3] = ["traffic_cone", "passenger_car", "pedestrian_sign"];
pub const BUILTIN_MESHES: [&str; 5] = ["road_barrier", "cement_rubble", "pedestrian", "mobile_robot", "road_surface"];

pub fn is_builtin(source: &str) -> bool {
    source
        .strip_prefix("builtin:")
        .is_some_and(|n| BUILTIN_SPLATS.contains(&n) || BUILTIN_MESHES.contains(&n))
}

pub fn builtin_splats(source: &str) -> Option<SplatSet> {
    let splats = match source.strip_prefix("builtin:")? {
        "traffic_cone" => traffic_cone(),
        "passenger_car" => passenger_car(),
        "pedestrian_sign" => pedestrian_sign(),
        _ => return None,
    };
    SplatSet::from_splats(0, splats).ok()
}

pub fn builtin_mesh(source: &str) -> Option<TriangleMesh> {
    let mut b = MeshBuilder::default();
    match source.strip_prefix("builtin:")? {
        "road_barrier" => {
            b.cuboid([0.0, 0.0, 0.15], [1.0, 0.3, 0.15], 0.0);
            b.cuboid([0.0, 0.0, 0.5], [1.0, 0.12, 0.2], 0.0);
            b.cuboid([0.0, 0.0, 0.35], [1.0, 0.2, 0.05], 0.0);
        }
        "cement_rubble" => {
            let chunks = [
                ([0.0, 0.0, 0.2], [0.45, 0.35, 0.2], 0.3),
                ([0.5, 0.3, 0.12], [0.25, 0.3, 0.12], 1.1),
                ([-0.45, 0.35, 0.1], [0.3, 0.2, 0.1], 2.0),
                ([0.2, -0.5, 0.15], [0.3, 0.25, 0.15], 0.7),
                ([-0.3, -0.35, 0.45], [0.2, 0.18, 0.1], 1.6),
            ];
            for (c, h, yaw) in chunks {
                b.cuboid(c, h, yaw);
            }
        }
        "pedestrian" => {
            b.cuboid([0.0, 0.1, 0.42], [0.08, 0.07, 0.42], 0.0);
            b.cuboid([0.0, -0.1, 0.42], [0.08, 0.07, 0.42], 0.0);
            b.cuboid([0.0, 0.0, 1.15], [0.12, 0.22, 0.3], 0.0);
            b.cuboid([0.0, 0.0, 1.6], [0.1, 0.09, 0.12], 0.0);
        }
        "mobile_robot" => {
            b.cuboid([0.0, 0.0, 0.12], [0.27, 0.14, 0.06], 0.0);
            for (x, y) in [(0.17, 0.17), (0.17, -0.17), (-0.17, 0.17), (-0.17, -0.17)] {
                b.cuboid([x, y, 0.06], [0.06, 0.03, 0.06], 0.0);
            }
        }
        "road_surface" => {
            let h = 20.0;
            let base = b.vertices.len() as u32;
            for (x, y) in [(-h, -h), (h, -h), (h, h), (-h, h)] {
                b.vertices.push(Vector3::new(x, y, 0.0));
            }
            b.triangles.push([base, base + 1, base + 2]);
            b.triangles.push([base, base + 2, base + 3]);
        }
        _ => return None,
    }
    TriangleMesh::new(b.vertices, b.triangles).ok()
}

#[derive(Default)]
struct MeshBuilder {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[u32; 3]>,
}

impl MeshBuilder {
    /// Closed box with outward-facing triangles, rotated by `yaw` about z.
    fn cuboid(&mut self, center: [f64; 3], half: [f64; 3], yaw: f64) {
        let rot = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw);
        let c = Vector3::from(center);
        let base = self.vertices.len() as u32;
        for i in 0..8u32 {
            let s = |bit: u32| if i & bit != 0 { 1.0 } else { -1.0 };
            let local = Vector3::new(s(1) * half[0], s(2) * half[1], s(4) * half[2]);
            self.vertices.push(c + rot * local);
        }
        const QUADS: [[u32; 4]; 6] = [
            [0, 4, 6, 2],
            [1, 3, 7, 5],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 2, 3, 1],
            [4, 5, 7, 6],
        ];
        for [a, b, c, d] in QUADS {
            self.triangles.push([base + a, base + b, base + c]);
            self.triangles.push([base + a, base + c, base + d]);
        }
    }
}

fn blob(p: Vector3<f64>, s: f64, rgb: [f64; 3]) -> SplatGaussian {
    SplatGaussian::isotropic(p, s, 0.9, rgb)
}

/// Flattened splat lying in the plane with normal `n`.
fn disc(p: Vector3<f64>, n: Vector3<f64>, s: f64, rgb: [f64; 3]) -> SplatGaussian {
    let q = UnitQuaternion::rotation_between(&Vector3::z(), &n).unwrap_or_else(UnitQuaternion::identity);
    let q: Quaternion<f64> = *q.quaternion();
    SplatGaussian::with_color(p, Vector3::new(s, s, s * 0.15), q, 0.95, rgb)
}

fn traffic_cone() -> Vec<SplatGaussian> {
    let orange = [0.95, 0.4, 0.05];
    let white = [0.95, 0.95, 0.95];
    let mut out = Vec::new();
    for k in 0..14 {
        let z = 0.05 * k as f64;
        let r = 0.16 * (1.0 - z / 0.75) + 0.01;
        let color = if (6..=8).contains(&k) { white } else { orange };
        let n = ((TAU * r) / 0.035).ceil().max(3.0) as usize;
        for i in 0..n {
            let th = TAU * i as f64 / n as f64;
            out.push(blob(Vector3::new(r * th.cos(), r * th.sin(), z + 0.025), 0.025, color));
        }
    }
    for i in 0..16 {
        let th = TAU * i as f64 / 16.0;
        out.push(disc(Vector3::new(0.17 * th.cos(), 0.17 * th.sin(), 0.01), Vector3::z(), 0.06, [0.1, 0.1, 0.1]));
    }
    out
}

/// Gaussians spread over the faces of a box.
fn box_shell(out: &mut Vec<SplatGaussian>, lo: Vector3<f64>, hi: Vector3<f64>, step: f64, rgb: [f64; 3]) {
    let n = |a: f64, b: f64| ((b - a) / step).ceil().max(1.0) as usize;
    let (nx, ny, nz) = (n(lo.x, hi.x), n(lo.y, hi.y), n(lo.z, hi.z));
    let at = |i: usize, m: usize, a: f64, b: f64| a + (b - a) * (i as f64 + 0.5) / m as f64;
    let s = step * 0.6;
    for i in 0..nx {
        for j in 0..ny {
            let (x, y) = (at(i, nx, lo.x, hi.x), at(j, ny, lo.y, hi.y));
            out.push(disc(Vector3::new(x, y, hi.z), Vector3::z(), s, rgb));
            out.push(disc(Vector3::new(x, y, lo.z), Vector3::z(), s, rgb));
        }
        for k in 0..nz {
            let (x, z) = (at(i, nx, lo.x, hi.x), at(k, nz, lo.z, hi.z));
            out.push(disc(Vector3::new(x, hi.y, z), Vector3::y(), s, rgb));
            out.push(disc(Vector3::new(x, lo.y, z), Vector3::y(), s, rgb));
        }
    }
    for j in 0..ny {
        for k in 0..nz {
            let (y, z) = (at(j, ny, lo.y, hi.y), at(k, nz, lo.z, hi.z));
            out.push(disc(Vector3::new(hi.x, y, z), Vector3::x(), s, rgb));
            out.push(disc(Vector3::new(lo.x, y, z), Vector3::x(), s, rgb));
        }
    }
}

fn passenger_car() -> Vec<SplatGaussian> {
    let body = [0.7, 0.08, 0.1];
    let glass = [0.12, 0.16, 0.22];
    let tire = [0.05, 0.05, 0.05];
    let mut out = Vec::new();
    box_shell(&mut out, Vector3::new(-2.1, -0.9, 0.3), Vector3::new(2.1, 0.9, 0.95), 0.15, body);
    box_shell(&mut out, Vector3::new(-1.1, -0.8, 0.95), Vector3::new(0.9, 0.8, 1.45), 0.15, glass);
    for (x, y) in [(1.35, 0.9), (1.35, -0.9), (-1.35, 0.9), (-1.35, -0.9)] {
        for i in 0..10 {
            let th = TAU * i as f64 / 10.0;
            out.push(blob(Vector3::new(x + 0.3 * th.cos(), y, 0.32 + 0.3 * th.sin()), 0.09, tire));
        }
    }
    out
}

fn pedestrian_sign() -> Vec<SplatGaussian> {
    let mut out = Vec::new();
    for k in 0..20 {
        out.push(blob(Vector3::new(0.0, 0.0, 0.05 + 0.1 * k as f64), 0.03, [0.6, 0.6, 0.62]));
    }
    let yellow = [0.95, 0.85, 0.1];
    for i in 0..8 {
        for j in 0..8 {
            let c = if (2..6).contains(&i) && (1..7).contains(&j) && (i + j) % 3 == 0 { [0.05; 3] } else { yellow };
            let p = Vector3::new(0.03, -0.3 + 0.6 * (i as f64 + 0.5) / 8.0, 1.8 + 0.6 * (j as f64 + 0.5) / 8.0);
            out.push(disc(p, Vector3::x(), 0.045, c));
        }
    }
    out
}

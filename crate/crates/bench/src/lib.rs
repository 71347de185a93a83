//! Synthetic inputs shared by the benchmarks.

use std::f64::consts::TAU;

use nalgebra::{Quaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twinsim_core::recon::OrientedPointCloud;
use twinsim_core::{ImageBuffer, PinholeCamera, RigidTransform, SplatGaussian, SplatSet};

/// Camera at the origin looking down +z with a 60° horizontal field of view.
pub fn camera(width: u32, height: u32) -> PinholeCamera {
    let f = width as f64 / 2.0 / 30f64.to_radians().tan();
    PinholeCamera::centered(f, f, width, height, RigidTransform::identity()).expect("valid intrinsics")
}

/// `n` small degree-0 splats filling the view of [`camera`] between 4 and 20 m.
pub fn splat_field(n: usize, seed: u64) -> SplatSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let splats = (0..n)
        .map(|_| {
            let z = rng.random_range(4.0..20.0);
            let q = Quaternion::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let pos = Vector3::new(rng.random_range(-0.6..0.6) * z, rng.random_range(-0.35..0.35) * z, z);
            let scale = Vector3::from_fn(|_, _| rng.random_range(0.01..0.06));
            let rgb = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            SplatGaussian::with_color(pos, scale, q, rng.random_range(0.1..0.95), rgb)
        })
        .collect();
    SplatSet::from_splats(0, splats).expect("generated splats are valid")
}

pub fn noise_image(width: u32, height: u32, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..width * height * 3).map(|_| rng.random_range(0.0..1.0)).collect();
    ImageBuffer::from_raw(width, height, 3, data).expect("sized buffer")
}

/// Unit sphere samples with outward normals.
pub fn sphere_cloud(n: usize, seed: u64) -> OrientedPointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vector3<f64>> = (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..TAU);
            let r = (1.0 - z * z).sqrt();
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect();
    OrientedPointCloud::normalized(pts.clone(), pts).expect("matching lengths")
}

//! Self-supervised toy fitting scenario: a known splat scene rendered from a
//! ring of cameras, and a perturbed copy to start from.

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::ImageBuffer;
use crate::splat::sh::rgb_to_dc;
use crate::splat::{render_reference, PinholeCamera, SplatGaussian, SplatSet};

pub struct ToyScenario {
    pub truth: SplatSet,
    pub init: SplatSet,
    pub train: Vec<(PinholeCamera, ImageBuffer)>,
    pub held_out: (PinholeCamera, ImageBuffer),
}

/// Camera on a 3 m ring at height 0.8 m, looking at the origin.
pub fn ring_camera(angle: f64, size: u32) -> PinholeCamera {
    let eye = Vector3::new(3.0 * angle.cos(), 3.0 * angle.sin(), 0.8);
    let pose = PinholeCamera::look_at_pose(eye, Vector3::zeros(), Vector3::z())
        .expect("ring eye is never on the vertical axis");
    let f = 70.0 * size as f64 / 64.0;
    PinholeCamera::centered(f, f, size, size, pose).expect("positive intrinsics")
}

fn range3(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vector3<f64> {
    Vector3::new(rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi))
}

pub fn random_scene(rng: &mut ChaCha8Rng, count: usize) -> SplatSet {
    let mut splats = Vec::with_capacity(count);
    for _ in 0..count {
        let mut pos = range3(rng, -0.6, 0.6);
        pos.z *= 2.0 / 3.0;
        let scale = range3(rng, 0.08, 0.2);
        let e = range3(rng, -1.0, 1.0);
        let q = UnitQuaternion::from_euler_angles(e.x, e.y, e.z);
        let rgb = [
            rng.random_range(0.2..0.9),
            rng.random_range(0.2..0.9),
            rng.random_range(0.2..0.9),
        ];
        let opacity = rng.random_range(0.5..0.9);
        splats.push(SplatGaussian::with_color(pos, scale, *q.quaternion(), opacity, rgb));
    }
    SplatSet::from_splats(0, splats).expect("generated splats are valid")
}

/// Offsets every parameter group: position ±0.1, scale ×[0.8, 1.25],
/// rotation up to 0.2 rad per axis, opacity ±0.15, color ±0.25.
pub fn perturb(set: &SplatSet, rng: &mut ChaCha8Rng) -> SplatSet {
    let mut out = set.clone();
    for g in out.splats_mut() {
        g.position += range3(rng, -0.1, 0.1);
        for s in g.scale.iter_mut() {
            *s *= rng.random_range(0.8..1.25);
        }
        let e = range3(rng, -0.2, 0.2);
        let dq = UnitQuaternion::from_euler_angles(e.x, e.y, e.z);
        g.orientation = (*dq.quaternion() * g.orientation).normalize();
        g.opacity = (g.opacity + rng.random_range(-0.15..0.15)).clamp(0.2, 0.95);
        for c in 0..3 {
            g.sh[c] += rgb_to_dc(0.5 + rng.random_range(-0.25..0.25));
        }
    }
    out
}

/// Ten splats, four training views at quarter turns and a held-out view
/// halfway between the first two.
pub fn toy_scenario(seed: u64) -> ToyScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = random_scene(&mut rng, 10);
    let init = perturb(&truth, &mut rng);
    let render = |angle: f64| {
        let cam = ring_camera(angle, 64);
        let img = render_reference(&cam, &truth);
        (cam, img)
    };
    let quarter = std::f64::consts::FRAC_PI_2;
    let train = (0..4).map(|i| render(i as f64 * quarter)).collect();
    let held_out = render(quarter / 2.0);
    ToyScenario {
        truth,
        init,
        train,
        held_out,
    }
}

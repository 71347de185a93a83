use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};

use super::sh::eval_color;
use super::{PinholeCamera, SplatGaussian};

/// Isotropic dilation added to every projected covariance, in px².
pub const COV_DILATION: f64 = 0.3;

/// Contributions with alpha below this value are skipped.
pub const ALPHA_MIN: f64 = 1.0 / 255.0;

/// A splat projected into one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSplat {
    pub mean2d: Vector2<f64>,
    pub cov2d: Matrix2<f64>,
    /// Inverse covariance entries (a, b, c) of `[[a, b], [b, c]]`.
    pub conic: [f64; 3],
    /// Camera-frame z of the mean.
    pub depth: f64,
    pub opacity: f64,
    pub color: [f64; 3],
    pub source_index: usize,
    /// Pixel-space half extents of the region where alpha can reach
    /// [`ALPHA_MIN`].
    pub half_extent: [f64; 2],
}

impl ProjectedSplat {
    /// Axis-aligned pixel bounds `(x0, y0, x1, y1)` of the contributing region.
    pub fn bounds(&self) -> [f64; 4] {
        [
            self.mean2d.x - self.half_extent[0],
            self.mean2d.y - self.half_extent[1],
            self.mean2d.x + self.half_extent[0],
            self.mean2d.y + self.half_extent[1],
        ]
    }

    #[inline]
    pub fn covers(&self, px: f64, py: f64) -> bool {
        (px - self.mean2d.x).abs() <= self.half_extent[0]
            && (py - self.mean2d.y).abs() <= self.half_extent[1]
    }

    /// Gaussian exponent `-½ dᵀ Σ⁻¹ d` at pixel position (px, py).
    #[inline]
    pub fn power(&self, px: f64, py: f64) -> f64 {
        let dx = px - self.mean2d.x;
        let dy = py - self.mean2d.y;
        let [a, b, c] = self.conic;
        -0.5 * (a * dx * dx + c * dy * dy) - b * dx * dy
    }

    /// Alpha at a pixel, or `None` when the contribution is below the cutoff.
    #[inline]
    pub fn alpha_at(&self, px: f64, py: f64) -> Option<f64> {
        if !self.covers(px, py) {
            return None;
        }
        let alpha = self.opacity * self.power(px, py).exp();
        (alpha >= ALPHA_MIN).then_some(alpha)
    }
}

/// Perspective Jacobian of the pixel projection at camera-frame point `p`.
pub fn perspective_jacobian(cam: &PinholeCamera, p: &Vector3<f64>) -> Matrix2x3<f64> {
    let inv_z = 1.0 / p.z;
    let inv_z2 = inv_z * inv_z;
    Matrix2x3::new(
        cam.fx * inv_z,
        0.0,
        -cam.fx * p.x * inv_z2,
        0.0,
        cam.fy * inv_z,
        -cam.fy * p.y * inv_z2,
    )
}

/// Projects one splat. Returns `None` when the splat is culled: outside the
/// clip range, too transparent to ever pass the alpha cutoff, or with its
/// contributing region entirely off the viewport.
pub fn project_splat(
    cam: &PinholeCamera,
    g: &SplatGaussian,
    sh_degree: u8,
    source_index: usize,
) -> Option<ProjectedSplat> {
    let w = cam.world_to_camera.rotation();
    let p = cam.world_to_camera.apply_point(&g.position);
    if !(p.z > cam.near && p.z < cam.far) {
        return None;
    }
    if g.opacity < ALPHA_MIN {
        return None;
    }
    let j = perspective_jacobian(cam, &p);
    let t = j * w;
    let cov = t * g.covariance() * t.transpose() + Matrix2::identity() * COV_DILATION;
    let cov = (cov + cov.transpose()) * 0.5;
    let det = cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(0, 1)];
    if !(det > 0.0) {
        return None;
    }
    let conic = [cov[(1, 1)] / det, -cov[(0, 1)] / det, cov[(0, 0)] / det];
    let mean2d = Vector2::new(cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy);

    // Mahalanobis radius² at which o·exp(-r²/2) drops to the cutoff; the
    // ellipse's bounding box then has half widths sqrt(r² Σ_xx), sqrt(r² Σ_yy).
    let r2 = 2.0 * (g.opacity / ALPHA_MIN).ln();
    let margin = 1e-6;
    let half_extent = [
        (r2 * cov[(0, 0)]).sqrt() + margin,
        (r2 * cov[(1, 1)]).sqrt() + margin,
    ];
    let (x0, x1) = (mean2d.x - half_extent[0], mean2d.x + half_extent[0]);
    let (y0, y1) = (mean2d.y - half_extent[1], mean2d.y + half_extent[1]);
    if x1 < 0.5 || y1 < 0.5 || x0 > cam.width as f64 - 0.5 || y0 > cam.height as f64 - 0.5 {
        return None;
    }

    let view = g.position - cam.center();
    let view_dir = if view.norm() > 0.0 { view.normalize() } else { Vector3::z() };
    let color = eval_color(g, sh_degree, &view_dir);

    Some(ProjectedSplat {
        mean2d,
        cov2d: cov,
        conic,
        depth: p.z,
        opacity: g.opacity,
        color,
        source_index,
        half_extent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::RigidTransform;
    use nalgebra::{Quaternion, UnitQuaternion};

    fn cam() -> PinholeCamera {
        PinholeCamera::centered(80.0, 60.0, 64, 48, RigidTransform::identity()).unwrap()
    }

    #[test]
    fn isotropic_on_axis_closed_form() {
        let (sigma, d) = (0.05, 2.0);
        let g = SplatGaussian::isotropic(Vector3::new(0.0, 0.0, d), sigma, 0.5, [1.0, 0.0, 0.0]);
        let c = cam();
        let p = project_splat(&c, &g, 0, 0).unwrap();
        assert!((p.mean2d - Vector2::new(c.cx, c.cy)).norm() < 1e-12);
        let sx = (c.fx * sigma / d).powi(2) + COV_DILATION;
        let sy = (c.fy * sigma / d).powi(2) + COV_DILATION;
        assert!((p.cov2d[(0, 0)] - sx).abs() < 1e-12);
        assert!((p.cov2d[(1, 1)] - sy).abs() < 1e-12);
        assert!(p.cov2d[(0, 1)].abs() < 1e-12);
        assert_eq!(p.depth, d);
    }

    #[test]
    fn behind_camera_is_culled() {
        let g = SplatGaussian::isotropic(Vector3::new(0.0, 0.0, -1.0), 0.1, 0.5, [1.0; 3]);
        assert!(project_splat(&cam(), &g, 0, 0).is_none());
    }

    #[test]
    fn off_screen_is_culled() {
        let g = SplatGaussian::isotropic(Vector3::new(50.0, 0.0, 1.0), 0.01, 0.5, [1.0; 3]);
        assert!(project_splat(&cam(), &g, 0, 0).is_none());
    }

    #[test]
    fn rotating_isotropic_splat_leaves_covariance_unchanged() {
        let mut g = SplatGaussian::isotropic(Vector3::new(0.3, -0.2, 3.0), 0.1, 0.5, [1.0; 3]);
        let base = project_splat(&cam(), &g, 0, 0).unwrap();
        let q = UnitQuaternion::from_euler_angles(0.3, 1.1, -0.7);
        g.orientation = *q.quaternion();
        let rotated = project_splat(&cam(), &g, 0, 0).unwrap();
        assert!((base.cov2d - rotated.cov2d).abs().max() < 1e-9);
        g.orientation = Quaternion::new(0.0, 0.0, 1.0, 0.0);
        let flipped = project_splat(&cam(), &g, 0, 0).unwrap();
        assert!((base.cov2d - flipped.cov2d).abs().max() < 1e-9);
    }

    #[test]
    fn covariance_eigenvalues_respect_dilation() {
        let g = SplatGaussian::with_color(
            Vector3::new(0.0, 0.1, 1.5),
            Vector3::new(1e-4, 0.2, 1e-4),
            *UnitQuaternion::from_euler_angles(0.2, 0.4, 0.6).quaternion(),
            0.9,
            [0.5; 3],
        );
        let p = project_splat(&cam(), &g, 0, 0).unwrap();
        let eig = p.cov2d.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e >= COV_DILATION - 1e-12));
    }

    #[test]
    fn alpha_at_mean_equals_opacity() {
        let g = SplatGaussian::isotropic(Vector3::new(0.0, 0.0, 2.0), 0.05, 0.37, [1.0; 3]);
        let c = cam();
        let p = project_splat(&c, &g, 0, 0).unwrap();
        assert_eq!(p.alpha_at(c.cx, c.cy), Some(0.37));
    }
}

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::gaussian::SplatSet;
use super::SplatError;

/// Element of SE(3): `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RigidTransformRepr", into = "RigidTransformRepr")]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

const ORTHO_TOL: f64 = 1e-9;

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, SplatError> {
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        if gram.abs().max() > ORTHO_TOL {
            return Err(SplatError::Invariant("rotation is not orthonormal".into()));
        }
        if (rotation.determinant() - 1.0).abs() > ORTHO_TOL {
            return Err(SplatError::Invariant("rotation determinant is not 1".into()));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(SplatError::Invariant("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_quaternion(q: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: *q.to_rotation_matrix().matrix(),
            translation,
        }
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Self {
            rotation: *rot.matrix(),
            translation,
        }
    }

    /// Rotation about +z (yaw), the usual heading for ground-plane assets.
    pub fn from_yaw(yaw: f64, translation: Vector3<f64>) -> Self {
        Self::from_axis_angle(Vector3::z(), yaw, translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn with_translation(mut self, translation: Vector3<f64>) -> Self {
        self.translation = translation;
        self
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.rotation))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn approx_eq(&self, other: &RigidTransform, tol: f64) -> bool {
        (self.rotation - other.rotation).abs().max() <= tol
            && (self.translation - other.translation).abs().max() <= tol
    }
}

#[derive(Serialize, Deserialize)]
struct RigidTransformRepr {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl TryFrom<RigidTransformRepr> for RigidTransform {
    type Error = SplatError;

    fn try_from(r: RigidTransformRepr) -> Result<Self, Self::Error> {
        let m = Matrix3::from_fn(|i, j| r.rotation[i][j]);
        RigidTransform::new(m, Vector3::from(r.translation))
    }
}

impl From<RigidTransform> for RigidTransformRepr {
    fn from(t: RigidTransform) -> Self {
        let m = t.rotation;
        RigidTransformRepr {
            rotation: [
                [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
                [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
                [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
            ],
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

/// Renormalizes only when the norm has drifted beyond round-off, so exact
/// unit inputs pass through bit for bit.
fn renormalize(q: Quaternion<f64>) -> Quaternion<f64> {
    let n = q.norm();
    if (n - 1.0).abs() > 4.0 * f64::EPSILON {
        q / n
    } else {
        q
    }
}

/// Applies `T` to every splat: positions are mapped by `R μ + t` and
/// orientations are pre-multiplied by the quaternion of `R`. Opacity, scale
/// and SH coefficients are copied unchanged.
pub fn transform_set(t: &RigidTransform, set: &SplatSet) -> SplatSet {
    let qr = *t.quaternion().quaternion();
    let mut out = set.clone();
    for g in out.splats_mut() {
        g.position = t.apply_point(&g.position);
        g.orientation = renormalize(qr * g.orientation);
    }
    out
}

/// Same as [`transform_set`] with an additional uniform scale applied about the
/// origin before the rigid motion (asset instancing).
pub fn transform_set_scaled(t: &RigidTransform, scale: f64, set: &SplatSet) -> SplatSet {
    if scale == 1.0 {
        return transform_set(t, set);
    }
    let mut scaled = set.clone();
    for g in scaled.splats_mut() {
        g.position *= scale;
        g.scale *= scale;
    }
    transform_set(t, &scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::SplatGaussian;

    fn sample_set() -> SplatSet {
        let g = SplatGaussian {
            opacity: 0.3,
            position: Vector3::new(0.5, -1.0, 2.0),
            orientation: Quaternion::new(0.5, 0.5, -0.5, 0.5),
            scale: Vector3::new(0.1, 0.2, 0.3),
            sh: vec![0.1, 0.2, 0.3],
        };
        SplatSet::from_splats(0, vec![g]).unwrap()
    }

    #[test]
    fn identity_is_exact() {
        let set = sample_set();
        assert_eq!(transform_set(&RigidTransform::identity(), &set), set);
    }

    #[test]
    fn pure_translation_shifts_positions() {
        let set = sample_set();
        let t = RigidTransform::from_translation(Vector3::new(1.0, 2.0, 3.0));
        let out = transform_set(&t, &set);
        let (a, b) = (&set.splats()[0], &out.splats()[0]);
        assert_eq!(b.position, a.position + Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(b.orientation, a.orientation);
        assert_eq!(b.scale, a.scale);
        assert_eq!(b.sh, a.sh);
    }

    #[test]
    fn rejects_non_orthonormal() {
        let m = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(RigidTransform::new(m, Vector3::zeros()).is_err());
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(RigidTransform::new(reflect, Vector3::zeros()).is_err());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let t = RigidTransform::from_axis_angle(Vector3::new(1.0, 2.0, 3.0), 0.7, Vector3::new(4.0, 5.0, 6.0));
        assert!(t.compose(&t.inverse()).approx_eq(&RigidTransform::identity(), 1e-12));
    }

    #[test]
    fn serde_round_trip() {
        let t = RigidTransform::from_yaw(0.4, Vector3::new(1.0, 0.0, 0.0));
        let s = serde_json::to_string(&t).unwrap();
        let back: RigidTransform = serde_json::from_str(&s).unwrap();
        assert!(back.approx_eq(&t, 1e-15));
    }
}

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::{RigidTransform, SplatError};

/// Pinhole camera. Camera frame: +x right, +y down, +z forward.
#[derive(Debug, Clone, PartialEq)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub world_to_camera: RigidTransform,
    pub near: f64,
    pub far: f64,
}

pub const DEFAULT_NEAR: f64 = 0.01;
pub const DEFAULT_FAR: f64 = 1000.0;

impl PinholeCamera {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        world_to_camera: RigidTransform,
        near: f64,
        far: f64,
    ) -> Result<Self, SplatError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(SplatError::Invariant("focal lengths must be positive".into()));
        }
        if !(near > 0.0 && near < far) {
            return Err(SplatError::Invariant(format!(
                "clip range must satisfy 0 < near < far (near {near}, far {far})"
            )));
        }
        if width == 0 || height == 0 {
            return Err(SplatError::Invariant("image size must be at least 1x1".into()));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            world_to_camera,
            near,
            far,
        })
    }

    /// Camera with the principal point at the image center.
    pub fn centered(
        fx: f64,
        fy: f64,
        width: u32,
        height: u32,
        world_to_camera: RigidTransform,
    ) -> Result<Self, SplatError> {
        Self::new(
            fx,
            fy,
            width as f64 / 2.0,
            height as f64 / 2.0,
            width,
            height,
            world_to_camera,
            DEFAULT_NEAR,
            DEFAULT_FAR,
        )
    }

    /// World-to-camera transform for an eye looking at `target`.
    pub fn look_at_pose(
        eye: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
    ) -> Result<RigidTransform, SplatError> {
        let forward = target - eye;
        if forward.norm() < 1e-12 {
            return Err(SplatError::Invariant("eye and target coincide".into()));
        }
        let forward = forward.normalize();
        let right = forward.cross(&up);
        if right.norm() < 1e-9 {
            return Err(SplatError::Invariant("up vector is parallel to the view direction".into()));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let cam_to_world = Matrix3::from_columns(&[right, down, forward]);
        let rotation = cam_to_world.transpose();
        RigidTransform::new(rotation, -(rotation * eye))
    }

    /// Camera-to-world pose given as position plus orientation quaternion.
    pub fn from_pose(
        position: Vector3<f64>,
        orientation: UnitQuaternion<f64>,
        intrinsics: Intrinsics,
    ) -> Result<Self, SplatError> {
        let cam_to_world = RigidTransform::from_quaternion(orientation, position);
        intrinsics.into_camera(cam_to_world.inverse())
    }

    pub fn center(&self) -> Vector3<f64> {
        let r = self.world_to_camera.rotation();
        -(r.transpose() * self.world_to_camera.translation())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Same intrinsics, world shifted by `t`: the camera that sees `T ⊗ scene`
    /// exactly as `self` sees `scene`.
    pub fn transformed(&self, t: &RigidTransform) -> PinholeCamera {
        PinholeCamera {
            world_to_camera: self.world_to_camera.compose(&t.inverse()),
            ..self.clone()
        }
    }
}

/// Intrinsics block of a camera spec file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    #[serde(default)]
    pub cx: Option<f64>,
    #[serde(default)]
    pub cy: Option<f64>,
    pub width: u32,
    pub height: u32,
    #[serde(default = "default_near")]
    pub near: f64,
    #[serde(default = "default_far")]
    pub far: f64,
}

fn default_near() -> f64 {
    DEFAULT_NEAR
}
fn default_far() -> f64 {
    DEFAULT_FAR
}

impl Intrinsics {
    pub fn into_camera(self, world_to_camera: RigidTransform) -> Result<PinholeCamera, SplatError> {
        PinholeCamera::new(
            self.fx,
            self.fy,
            self.cx.unwrap_or(self.width as f64 / 2.0),
            self.cy.unwrap_or(self.height as f64 / 2.0),
            self.width,
            self.height,
            world_to_camera,
            self.near,
            self.far,
        )
    }
}

/// Camera pose in a spec file: camera-to-world position and orientation
/// (w, x, y, z), or an eye/target pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CameraPose {
    Orientation {
        position: [f64; 3],
        orientation: [f64; 4],
    },
    LookAt {
        eye: [f64; 3],
        target: [f64; 3],
        #[serde(default = "default_up")]
        up: [f64; 3],
    },
}

fn default_up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// JSON camera spec: `{"intrinsics": {...}, "pose": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub intrinsics: Intrinsics,
    pub pose: CameraPose,
}

impl CameraSpec {
    pub fn to_camera(&self) -> Result<PinholeCamera, SplatError> {
        let w2c = match &self.pose {
            CameraPose::Orientation {
                position,
                orientation,
            } => {
                let [w, x, y, z] = *orientation;
                let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z));
                RigidTransform::from_quaternion(q, Vector3::from(*position)).inverse()
            }
            CameraPose::LookAt { eye, target, up } => PinholeCamera::look_at_pose(
                Vector3::from(*eye),
                Vector3::from(*target),
                Vector3::from(*up),
            )?,
        };
        self.intrinsics.into_camera(w2c)
    }
}

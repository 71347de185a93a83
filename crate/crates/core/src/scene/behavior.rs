//! Kinematic stand-ins for animated behavior tags. Positions advance on a
//! fixed-rate clock; there are no dynamics.

use std::f64::consts::TAU;

use nalgebra::Vector3;

use super::{PropertyValue, SceneAsset};
use crate::splat::RigidTransform;

/// Update rate of the kinematic clock.
pub const BEHAVIOR_RATE_HZ: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Behavior {
    /// Constant-speed circle around the asset's rest position.
    Skidpad { radius: f64, speed: f64 },
    /// Back-and-forth straight crossing along the asset's local +y.
    Jaywalking { distance: f64, speed: f64 },
}

impl Behavior {
    /// Reads the `behavior` property and its optional parameters.
    pub fn from_asset(asset: &SceneAsset) -> Option<Behavior> {
        let num = |k: &str, d: f64| {
            asset
                .properties
                .get(k)
                .and_then(PropertyValue::as_number)
                .filter(|v| v.is_finite() && *v > 0.0)
                .unwrap_or(d)
        };
        match asset.properties.get("behavior")?.as_text()? {
            "skidpad" => Some(Behavior::Skidpad {
                radius: num("radius", 2.0),
                speed: num("speed", 1.0),
            }),
            "jaywalking" => Some(Behavior::Jaywalking {
                distance: num("distance", 8.0),
                speed: num("speed", 1.4),
            }),
            _ => None,
        }
    }
}

/// Pose of an asset at time `t` seconds, quantized to the behavior clock.
/// Assets without a recognized behavior keep their stored pose.
pub fn behavior_pose(asset: &SceneAsset, t: f64) -> RigidTransform {
    let Some(b) = Behavior::from_asset(asset) else {
        return asset.pose;
    };
    let t = (t.max(0.0) * BEHAVIOR_RATE_HZ).floor() / BEHAVIOR_RATE_HZ;
    let rest = asset.pose;
    match b {
        Behavior::Skidpad { radius, speed } => {
            // Circle tangent to the heading at t = 0, turning left.
            let phase = speed * t / radius;
            let local = Vector3::new(radius * phase.sin(), radius * (1.0 - phase.cos()), 0.0);
            let turn = RigidTransform::from_yaw(phase.rem_euclid(TAU), local);
            rest.compose(&turn)
        }
        Behavior::Jaywalking { distance, speed } => {
            let period = 2.0 * distance / speed;
            let s = (t % period) * speed;
            let offset = if s <= distance { s } else { 2.0 * distance - s };
            rest.compose(&RigidTransform::from_translation(Vector3::new(0.0, offset, 0.0)))
        }
    }
}

//! Small road scene with named landmarks, used by the service, the CLI and
//! end-to-end tests.

use nalgebra::Vector3;

use super::{AssetOverrides, SceneGraph};
use crate::splat::RigidTransform;

pub const LANDMARKS: [(&str, [f64; 3]); 3] = [
    ("jtekt_entrance", [18.0, 12.0, 0.0]),
    ("ego_vehicle", [0.0, -4.0, 0.0]),
    ("parking_lot", [-14.0, 10.0, 0.0]),
];

/// Road surface, the ego car and a crossing sign, at clear noon.
pub fn demo_scene() -> SceneGraph {
    let mut g = SceneGraph::default();
    for (name, p) in LANDMARKS {
        g.set_landmark(name, Vector3::from(p)).expect("finite landmark");
    }
    let place = |g: &mut SceneGraph, class: &str, yaw: f64, p: [f64; 3], role: Option<&str>| {
        let mut o = AssetOverrides::default();
        if let Some(r) = role {
            o.properties.insert("role".into(), r.into());
        }
        g.add_asset(class, RigidTransform::from_yaw(yaw, Vector3::from(p)), o)
            .expect("builtin class");
    };
    place(&mut g, "road_surface", 0.0, [0.0, 0.0, 0.0], None);
    place(&mut g, "passenger_car", 0.0, [0.0, -4.0, 0.0], Some("ego"));
    place(&mut g, "pedestrian_sign", std::f64::consts::PI, [6.0, 4.0, 0.0], None);
    g
}

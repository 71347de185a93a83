use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use twinsim_core::orchestrator::DEFAULT_WEATHER_INTENSITY;
use twinsim_core::scene::{AssetOverrides, PropertyValue, SceneDiff, SceneError, SceneGraph, Weather};
use twinsim_core::RigidTransform;

/// One primitive edit on the direct (non-prompt) path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum EditRequest {
    Add {
        class_name: String,
        position: [f64; 3],
        #[serde(default)]
        yaw_deg: f64,
        #[serde(default)]
        scale: Option<f64>,
        #[serde(default)]
        properties: BTreeMap<String, PropertyValue>,
    },
    Remove {
        id: String,
    },
    SetPose {
        id: String,
        position: [f64; 3],
        #[serde(default)]
        yaw_deg: f64,
    },
    /// `value: null` deletes the property.
    SetProperty {
        id: String,
        key: String,
        value: Option<PropertyValue>,
    },
    SetEnvironment {
        #[serde(default)]
        time_of_day: Option<f64>,
        #[serde(default)]
        weather: Option<String>,
        #[serde(default)]
        intensity: Option<f64>,
    },
    /// Reverts the last applied diff.
    Undo,
}

fn pose(position: [f64; 3], yaw_deg: f64) -> Result<RigidTransform, SceneError> {
    if !position.iter().chain([&yaw_deg]).all(|v| v.is_finite()) {
        return Err(SceneError::Invalid("pose values must be finite".into()));
    }
    Ok(RigidTransform::from_yaw(yaw_deg.to_radians(), Vector3::from(position)))
}

impl EditRequest {
    /// The diff this edit makes on `scene`, computed on a scratch copy.
    /// `Undo` has no diff of its own and returns `None`.
    pub fn to_diff(&self, scene: &SceneGraph) -> Result<Option<SceneDiff>, SceneError> {
        let mut g = scene.clone();
        Ok(Some(match self {
            EditRequest::Add {
                class_name,
                position,
                yaw_deg,
                scale,
                properties,
            } => {
                if scale.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
                    return Err(SceneError::Invalid("scale must be positive".into()));
                }
                let o = AssetOverrides {
                    uniform_scale: *scale,
                    properties: properties.clone(),
                    ..AssetOverrides::default()
                };
                g.add_asset(class_name, pose(*position, *yaw_deg)?, o)?.1
            }
            EditRequest::Remove { id } => g.remove_asset(id)?,
            EditRequest::SetPose { id, position, yaw_deg } => g.set_pose(id, pose(*position, *yaw_deg)?)?,
            EditRequest::SetProperty { id, key, value } => g.set_property(id, key, value.clone())?,
            EditRequest::SetEnvironment {
                time_of_day,
                weather,
                intensity,
            } => {
                let mut env = *g.environment();
                if let Some(h) = time_of_day {
                    env = env.with_time(*h)?;
                }
                if weather.is_some() || intensity.is_some() {
                    let w = match weather {
                        Some(w) => Weather::parse(w).ok_or_else(|| SceneError::Invalid(format!("unknown weather \"{w}\"")))?,
                        None => env.weather(),
                    };
                    let i = intensity.unwrap_or(if w == env.weather() { env.intensity() } else { DEFAULT_WEATHER_INTENSITY });
                    env = env.with_weather(w, i)?;
                }
                g.set_environment(env)?
            }
            EditRequest::Undo => return Ok(None),
        }))
    }
}

//! Rule-based workers: each task becomes scene-graph edits on a scratch copy.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::schema::{Intent, Placement, Selector, Task};
use crate::scene::{
    arrange_positions, AssetOverrides, Creator, EnvironmentState, Origin, Pattern, SceneDiff, SceneError, SceneGraph,
    Weather,
};
use crate::splat::RigidTransform;

/// Gap between assets when a multi-asset add or placement gives none.
pub const DEFAULT_SPACING: f64 = 1.5;
/// Intensity for a weather change that names no intensity.
pub const DEFAULT_WEATHER_INTENSITY: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub task_index: usize,
    pub kind: Intent,
    pub ok: bool,
    /// Ids returned by a search task.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub found: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edits: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Ids picked by a selector, in sorted order. Explicit ids must exist; an
/// empty selection is an error.
pub fn select(scene: &SceneGraph, sel: &Selector) -> Result<Vec<String>, SceneError> {
    let ids = if sel.ids.is_empty() {
        scene.search(&sel.query)?
    } else {
        let mut ids = sel.ids.clone();
        for id in &ids {
            scene.require(id)?;
        }
        ids.sort();
        ids.dedup();
        let allowed = scene.search(&sel.query)?;
        ids.retain(|id| allowed.contains(id));
        ids
    };
    if ids.is_empty() {
        return Err(SceneError::Invalid("selector matches no assets".into()));
    }
    Ok(ids)
}

pub fn resolve_placement(scene: &SceneGraph, p: &Placement) -> Result<Vector3<f64>, SceneError> {
    match p {
        Placement::Anchor(a) => scene.resolve_origin(&Origin::Anchor(a.clone())),
        Placement::Point(v) => Ok(Vector3::from(*v)),
        Placement::Relative { selector, offset } => {
            let ids = select(scene, selector)?;
            let sum: Vector3<f64> = ids.iter().map(|id| scene.require(id).map(|a| a.position())).sum::<Result<_, _>>()?;
            Ok(sum / ids.len() as f64 + Vector3::from(*offset))
        }
    }
}

pub fn parse_pattern(s: &str) -> Result<Pattern, SceneError> {
    Pattern::parse(s).ok_or_else(|| SceneError::Invalid(format!("unknown pattern \"{s}\"")))
}

pub fn parse_weather(s: &str) -> Result<Weather, SceneError> {
    Weather::parse(s).ok_or_else(|| SceneError::Invalid(format!("unknown weather \"{s}\"")))
}

/// Environment requested by an appearance task, starting from `cur`.
pub fn appearance_target(
    cur: &EnvironmentState,
    time_of_day: Option<f64>,
    weather: Option<&str>,
    intensity: Option<f64>,
) -> Result<EnvironmentState, SceneError> {
    if time_of_day.is_none() && weather.is_none() && intensity.is_none() {
        return Err(SceneError::Invalid("appearance task changes nothing".into()));
    }
    let w = match weather {
        Some(s) => parse_weather(s)?,
        None => cur.weather(),
    };
    let i = intensity.unwrap_or(if w == cur.weather() && cur.intensity() > 0.0 {
        cur.intensity()
    } else {
        DEFAULT_WEATHER_INTENSITY
    });
    EnvironmentState::new(time_of_day.unwrap_or(cur.time_of_day()), w, i)
}

fn place_all(scene: &mut SceneGraph, ids: &[String], target: Vector3<f64>) -> Result<SceneDiff, SceneError> {
    let t = Origin::from(target);
    scene.arrange(ids, Pattern::Line, DEFAULT_SPACING, &t)
}

/// Runs one task against `scene`, returning the applied diff and any
/// search results.
pub fn execute_task(scene: &mut SceneGraph, task: &Task) -> Result<(SceneDiff, Vec<String>), SceneError> {
    match task {
        Task::Search { query } => Ok((SceneDiff::default(), scene.search(query)?)),
        Task::Add {
            class_name,
            count,
            placement,
            pattern,
            spacing,
            yaw_deg,
            scale,
            properties,
        } => {
            let n = usize::try_from(*count).map_err(|_| SceneError::Invalid(format!("count {count}")))?;
            let origin = resolve_placement(scene, placement)?;
            let pattern = pattern.as_deref().map(parse_pattern).transpose()?.unwrap_or(Pattern::Line);
            let yaw = yaw_deg.unwrap_or(0.0).to_radians();
            let mut diff = SceneDiff::default();
            for p in arrange_positions(pattern, n, spacing.unwrap_or(DEFAULT_SPACING), origin) {
                let o = AssetOverrides {
                    uniform_scale: *scale,
                    properties: properties.clone(),
                    created_by: Creator::Agent,
                };
                diff.extend(scene.add_asset(class_name, RigidTransform::from_yaw(yaw, p), o)?.1);
            }
            Ok((diff, Vec::new()))
        }
        Task::Remove { selector } => {
            let mut diff = SceneDiff::default();
            for id in select(scene, selector)? {
                diff.extend(scene.remove_asset(&id)?);
            }
            Ok((diff, Vec::new()))
        }
        Task::Position { selector, target } => {
            let ids = select(scene, selector)?;
            let t = resolve_placement(scene, target)?;
            Ok((place_all(scene, &ids, t)?, Vec::new()))
        }
        Task::Move { selector, delta, target } => {
            let ids = select(scene, selector)?;
            match (delta, target) {
                (Some(d), None) => {
                    let d = Vector3::from(*d);
                    let mut diff = SceneDiff::default();
                    for id in ids {
                        let pose = scene.require(&id)?.pose;
                        let moved = pose.with_translation(pose.translation() + d);
                        diff.extend(scene.set_pose(&id, moved)?);
                    }
                    Ok((diff, Vec::new()))
                }
                (None, Some(t)) => {
                    let t = resolve_placement(scene, t)?;
                    Ok((place_all(scene, &ids, t)?, Vec::new()))
                }
                _ => Err(SceneError::Invalid("move needs exactly one of delta or target".into())),
            }
        }
        Task::Arrange {
            selector,
            pattern,
            spacing,
            origin,
        } => {
            let ids = select(scene, selector)?;
            let pattern = parse_pattern(pattern)?;
            let o = match origin {
                Some(p) => resolve_placement(scene, p)?,
                None => resolve_placement(
                    scene,
                    &Placement::Relative {
                        selector: Selector {
                            ids: ids.clone(),
                            ..Selector::default()
                        },
                        offset: [0.0; 3],
                    },
                )?,
            };
            Ok((scene.arrange(&ids, pattern, *spacing, &Origin::from(o))?, Vec::new()))
        }
        Task::Appearance {
            time_of_day,
            weather,
            intensity,
        } => {
            let env = appearance_target(scene.environment(), *time_of_day, weather.as_deref(), *intensity)?;
            Ok((scene.set_environment(env)?, Vec::new()))
        }
    }
}

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{
    arrange_positions, AssetCatalog, Creator, Edit, EnvironmentState, Origin, Pattern, PropertyValue, SceneAsset,
    SceneDiff, SceneError, BUILTIN_CATALOG,
};
use crate::splat::RigidTransform;

/// Name of the derived anchor at the centroid of the asset bounding box.
pub const SCENE_CENTER: &str = "scene_center";

/// Radius used by `near_anchor` searches that give none.
pub const DEFAULT_SEARCH_RADIUS: f64 = 5.0;

/// Tolerance when checking an edit's recorded prior state against the scene.
const PRIOR_TOL: f64 = 1e-9;

/// Conjunctive asset filter. Unset fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchQuery {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub near_anchor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl SearchQuery {
    pub fn class(c: impl Into<String>) -> Self {
        Self {
            class: Some(c.into()),
            ..Self::default()
        }
    }
}

/// Construction-time options for [`SceneGraph::add_asset`].
#[derive(Debug, Clone, Default)]
pub struct AssetOverrides {
    pub uniform_scale: Option<f64>,
    pub properties: BTreeMap<String, PropertyValue>,
    pub created_by: Creator,
}

/// Hybrid scene state. Every mutation goes through a [`SceneDiff`], applied
/// atomically: on error the scene is left untouched.
#[derive(Debug, Clone)]
pub struct SceneGraph {
    pub(super) assets: BTreeMap<String, SceneAsset>,
    pub(super) environment: EnvironmentState,
    pub(super) landmarks: BTreeMap<String, Vector3<f64>>,
    pub(super) catalog_ref: String,
    pub(super) id_counters: BTreeMap<String, u64>,
    pub(super) catalog: Arc<AssetCatalog>,
}

/// Structural equality with numeric tolerance. Id counters are session
/// bookkeeping and do not take part.
impl PartialEq for SceneGraph {
    fn eq(&self, o: &Self) -> bool {
        self.assets == o.assets
            && self.environment == o.environment
            && self.catalog_ref == o.catalog_ref
            && self.landmarks.len() == o.landmarks.len()
            && self
                .landmarks
                .iter()
                .zip(&o.landmarks)
                .all(|((a, p), (b, q))| a == b && (p - q).abs().max() <= super::SCENE_TOLERANCE)
    }
}

impl Default for SceneGraph {
    fn default() -> Self {
        Self::new(Arc::new(AssetCatalog::builtin()), BUILTIN_CATALOG)
    }
}

impl SceneGraph {
    pub fn new(catalog: Arc<AssetCatalog>, catalog_ref: impl Into<String>) -> Self {
        Self {
            assets: BTreeMap::new(),
            environment: EnvironmentState::default(),
            landmarks: BTreeMap::new(),
            catalog_ref: catalog_ref.into(),
            id_counters: BTreeMap::new(),
            catalog,
        }
    }

    pub fn catalog(&self) -> &AssetCatalog {
        &self.catalog
    }

    pub fn catalog_arc(&self) -> Arc<AssetCatalog> {
        Arc::clone(&self.catalog)
    }

    pub fn catalog_ref(&self) -> &str {
        &self.catalog_ref
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn assets(&self) -> impl Iterator<Item = &SceneAsset> {
        self.assets.values()
    }

    pub fn asset(&self, id: &str) -> Option<&SceneAsset> {
        self.assets.get(id)
    }

    pub fn require(&self, id: &str) -> Result<&SceneAsset, SceneError> {
        self.assets.get(id).ok_or_else(|| SceneError::UnknownAsset(id.to_string()))
    }

    pub fn environment(&self) -> &EnvironmentState {
        &self.environment
    }

    pub fn landmarks(&self) -> &BTreeMap<String, Vector3<f64>> {
        &self.landmarks
    }

    pub fn id_counters(&self) -> &BTreeMap<String, u64> {
        &self.id_counters
    }

    /// Adds or moves a named landmark. Landmarks are scene-file data, not
    /// edits, and cannot shadow `scene_center`.
    pub fn set_landmark(&mut self, name: impl Into<String>, position: Vector3<f64>) -> Result<(), SceneError> {
        let name = name.into();
        if name == SCENE_CENTER {
            return Err(SceneError::Invalid(format!("\"{SCENE_CENTER}\" is derived and cannot be set")));
        }
        if !position.iter().all(|v| v.is_finite()) {
            return Err(SceneError::Invalid(format!("landmark {name} has a non-finite position")));
        }
        self.landmarks.insert(name, position);
        Ok(())
    }

    /// Axis-aligned bounds of asset positions.
    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let mut it = self.assets.values().map(SceneAsset::position);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| (lo.inf(&p), hi.sup(&p))))
    }

    /// Centroid of the asset bounding box, or the origin for an empty scene.
    pub fn scene_center(&self) -> Vector3<f64> {
        self.bounds().map_or_else(Vector3::zeros, |(lo, hi)| (lo + hi) / 2.0)
    }

    /// Landmarks plus `scene_center`.
    pub fn anchors(&self) -> BTreeMap<String, Vector3<f64>> {
        let mut a = self.landmarks.clone();
        a.insert(SCENE_CENTER.to_string(), self.scene_center());
        a
    }

    pub fn anchor(&self, name: &str) -> Result<Vector3<f64>, SceneError> {
        if name == SCENE_CENTER {
            return Ok(self.scene_center());
        }
        self.landmarks
            .get(name)
            .copied()
            .ok_or_else(|| SceneError::UnknownAnchor(name.to_string()))
    }

    pub fn resolve_origin(&self, origin: &Origin) -> Result<Vector3<f64>, SceneError> {
        match origin {
            Origin::Anchor(a) => self.anchor(a),
            Origin::Point(p) => Ok(Vector3::from(*p)),
        }
    }

    /// Ids of assets matching every set filter, sorted.
    pub fn search(&self, q: &SearchQuery) -> Result<Vec<String>, SceneError> {
        let near = match &q.near_anchor {
            Some(a) => {
                let r = q.radius.unwrap_or(DEFAULT_SEARCH_RADIUS);
                if !(r >= 0.0) {
                    return Err(SceneError::Invalid(format!("search radius {r} must be non-negative")));
                }
                Some((self.anchor(a)?, r))
            }
            None => None,
        };
        let tag = q.tag.as_ref().map(|t| t.trim().to_lowercase());
        Ok(self
            .assets
            .values()
            .filter(|a| q.class.as_ref().is_none_or(|c| &a.class_name == c))
            .filter(|a| tag.as_ref().is_none_or(|t| self.matches_tag(a, t)))
            .filter(|a| near.is_none_or(|(c, r)| (a.position() - c).norm() <= r))
            .map(|a| a.id.clone())
            .collect())
    }

    fn matches_tag(&self, a: &SceneAsset, tag: &str) -> bool {
        a.class_name.to_lowercase() == tag
            || self
                .catalog
                .get(&a.class_name)
                .is_some_and(|e| e.tags.iter().any(|t| t.to_lowercase() == tag))
            || a
                .properties
                .values()
                .any(|v| v.as_text().is_some_and(|s| s.to_lowercase() == tag))
    }

    /// Id that the next asset of `class` would receive.
    pub fn next_id(&self, class: &str) -> String {
        format!("{class}_{}", self.id_counters.get(class).copied().unwrap_or(0) + 1)
    }

    pub fn add_asset(
        &mut self,
        class: &str,
        pose: RigidTransform,
        overrides: AssetOverrides,
    ) -> Result<(String, SceneDiff), SceneError> {
        let entry = self.catalog.require(class)?;
        let asset = SceneAsset {
            id: self.next_id(class),
            class_name: class.to_string(),
            representation: self.catalog.representation(class)?,
            pose,
            uniform_scale: overrides.uniform_scale.unwrap_or(entry.default_scale),
            properties: overrides.properties,
            created_by: overrides.created_by,
        };
        let id = asset.id.clone();
        let diff = SceneDiff::direct(vec![Edit::Add { asset }]);
        self.apply(&diff)?;
        Ok((id, diff))
    }

    pub fn remove_asset(&mut self, id: &str) -> Result<SceneDiff, SceneError> {
        let asset = self.require(id)?.clone();
        let diff = SceneDiff::direct(vec![Edit::Remove { asset }]);
        self.apply(&diff)?;
        Ok(diff)
    }

    pub fn set_pose(&mut self, id: &str, pose: RigidTransform) -> Result<SceneDiff, SceneError> {
        let before = self.require(id)?.pose;
        let diff = SceneDiff::direct(vec![Edit::SetPose {
            id: id.to_string(),
            before,
            after: pose,
        }]);
        self.apply(&diff)?;
        Ok(diff)
    }

    /// Sets (`Some`) or clears (`None`) one property.
    pub fn set_property(
        &mut self,
        id: &str,
        key: &str,
        value: Option<PropertyValue>,
    ) -> Result<SceneDiff, SceneError> {
        let before = self.require(id)?.properties.get(key).cloned();
        let diff = SceneDiff::direct(vec![Edit::SetProperty {
            id: id.to_string(),
            key: key.to_string(),
            before,
            after: value,
        }]);
        self.apply(&diff)?;
        Ok(diff)
    }

    pub fn set_environment(&mut self, env: EnvironmentState) -> Result<SceneDiff, SceneError> {
        let diff = SceneDiff::direct(vec![Edit::SetEnvironment {
            before: self.environment,
            after: env,
        }]);
        self.apply(&diff)?;
        Ok(diff)
    }

    /// Edits that place `ids` (in the given order) on a pattern, keeping each
    /// asset's orientation. Nothing is applied.
    pub fn plan_arrange(
        &self,
        ids: &[String],
        pattern: Pattern,
        spacing: f64,
        origin: &Origin,
    ) -> Result<Vec<Edit>, SceneError> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(SceneError::Invalid(format!("spacing {spacing} must be positive")));
        }
        let o = self.resolve_origin(origin)?;
        let targets = arrange_positions(pattern, ids.len(), spacing, o);
        ids.iter()
            .zip(targets)
            .map(|(id, p)| {
                let before = self.require(id)?.pose;
                Ok(Edit::SetPose {
                    id: id.clone(),
                    before,
                    after: before.with_translation(p),
                })
            })
            .collect()
    }

    pub fn arrange(
        &mut self,
        ids: &[String],
        pattern: Pattern,
        spacing: f64,
        origin: &Origin,
    ) -> Result<SceneDiff, SceneError> {
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(SceneError::Invalid(format!("asset {dup} listed twice")));
        }
        let diff = SceneDiff::direct(self.plan_arrange(ids, pattern, spacing, origin)?);
        self.apply(&diff)?;
        Ok(diff)
    }

    /// Applies every edit or none.
    pub fn apply(&mut self, diff: &SceneDiff) -> Result<(), SceneError> {
        let mut next = self.clone();
        for e in &diff.edits {
            next.apply_edit(e)?;
        }
        *self = next;
        Ok(())
    }

    /// Undoes a previously applied diff, all or nothing.
    pub fn revert(&mut self, diff: &SceneDiff) -> Result<(), SceneError> {
        self.apply(&diff.inverse())
    }

    /// Result of applying `diff` to a copy; `self` is untouched.
    pub fn preview(&self, diff: &SceneDiff) -> Result<SceneGraph, SceneError> {
        let mut s = self.clone();
        s.apply(diff)?;
        Ok(s)
    }

    fn apply_edit(&mut self, e: &Edit) -> Result<(), SceneError> {
        match e {
            Edit::Add { asset } => {
                if self.assets.contains_key(&asset.id) {
                    return Err(SceneError::DuplicateId(asset.id.clone()));
                }
                self.catalog.require(&asset.class_name)?;
                if !(asset.uniform_scale > 0.0 && asset.uniform_scale.is_finite()) {
                    return Err(SceneError::Invalid(format!(
                        "asset {} scale {} must be positive",
                        asset.id, asset.uniform_scale
                    )));
                }
                if !asset.position().iter().all(|v| v.is_finite()) {
                    return Err(SceneError::Invalid(format!("asset {} has a non-finite position", asset.id)));
                }
                self.bump_counter(&asset.class_name, &asset.id);
                self.assets.insert(asset.id.clone(), asset.clone());
            }
            Edit::Remove { asset } => {
                let cur = self.require(&asset.id)?;
                if cur != asset {
                    return Err(SceneError::Conflict(format!("asset {} changed since the edit was made", asset.id)));
                }
                self.assets.remove(&asset.id);
            }
            Edit::SetPose { id, before, after } => {
                if !after.translation().iter().all(|v| v.is_finite()) {
                    return Err(SceneError::Invalid(format!("pose for {id} is not finite")));
                }
                let a = self
                    .assets
                    .get_mut(id)
                    .ok_or_else(|| SceneError::UnknownAsset(id.clone()))?;
                if !a.pose.approx_eq(before, PRIOR_TOL) {
                    return Err(SceneError::Conflict(format!("pose of {id} changed since the edit was made")));
                }
                a.pose = *after;
            }
            Edit::SetProperty { id, key, before, after } => {
                let a = self
                    .assets
                    .get_mut(id)
                    .ok_or_else(|| SceneError::UnknownAsset(id.clone()))?;
                if a.properties.get(key) != before.as_ref() {
                    return Err(SceneError::Conflict(format!("property {id}.{key} changed since the edit was made")));
                }
                match after {
                    Some(v) => a.properties.insert(key.clone(), v.clone()),
                    None => a.properties.remove(key),
                };
            }
            Edit::SetEnvironment { before, after } => {
                if &self.environment != before {
                    return Err(SceneError::Conflict("environment changed since the edit was made".into()));
                }
                self.environment = *after;
            }
        }
        Ok(())
    }

    /// Keeps counters ahead of any id seen, so ids are never handed out twice.
    fn bump_counter(&mut self, class: &str, id: &str) {
        let n = id
            .strip_prefix(class)
            .and_then(|s| s.strip_prefix('_'))
            .and_then(|s| s.parse::<u64>().ok());
        if let Some(n) = n {
            let c = self.id_counters.entry(class.to_string()).or_insert(0);
            *c = (*c).max(n);
        }
    }
}

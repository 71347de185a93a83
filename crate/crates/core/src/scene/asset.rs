use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SCENE_TOLERANCE;
use crate::splat::RigidTransform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationKind {
    Splat,
    Mesh,
}

/// Where an asset's geometry comes from: a PLY/OBJ path or `builtin:<name>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Representation {
    pub kind: RepresentationKind,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Creator {
    #[default]
    User,
    Agent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropertyValue {
    Number(f64),
    Text(String),
}

impl PropertyValue {
    pub fn approx_eq(&self, other: &PropertyValue) -> bool {
        match (self, other) {
            (Self::Number(a), Self::Number(b)) => (a - b).abs() <= SCENE_TOLERANCE || a == b,
            (Self::Text(a), Self::Text(b)) => a == b,
            _ => false,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Self::Number(v) => Some(*v),
            Self::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Self::Text(s) => Some(s),
            Self::Number(_) => None,
        }
    }
}

impl PartialEq for PropertyValue {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

impl From<f64> for PropertyValue {
    fn from(v: f64) -> Self {
        Self::Number(v)
    }
}

impl From<&str> for PropertyValue {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneAsset {
    pub id: String,
    pub class_name: String,
    pub representation: Representation,
    pub pose: RigidTransform,
    pub uniform_scale: f64,
    #[serde(default)]
    pub properties: BTreeMap<String, PropertyValue>,
    #[serde(default)]
    pub created_by: Creator,
}

impl SceneAsset {
    pub fn position(&self) -> nalgebra::Vector3<f64> {
        *self.pose.translation()
    }
}

/// Field-wise comparison with [`SCENE_TOLERANCE`] on numbers.
impl PartialEq for SceneAsset {
    fn eq(&self, o: &Self) -> bool {
        self.id == o.id
            && self.class_name == o.class_name
            && self.representation == o.representation
            && self.pose.approx_eq(&o.pose, SCENE_TOLERANCE)
            && (self.uniform_scale - o.uniform_scale).abs() <= SCENE_TOLERANCE
            && self.properties == o.properties
            && self.created_by == o.created_by
    }
}

use serde::{Deserialize, Serialize};

use super::{EnvironmentState, PropertyValue, SceneAsset};
use crate::splat::RigidTransform;

/// Provenance tag for edits issued directly rather than from a prompt.
pub const DIRECT_PROVENANCE: &str = "direct";

/// One primitive edit carrying the prior state needed to undo it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    Add {
        asset: SceneAsset,
    },
    Remove {
        asset: SceneAsset,
    },
    SetPose {
        id: String,
        before: RigidTransform,
        after: RigidTransform,
    },
    SetProperty {
        id: String,
        key: String,
        before: Option<PropertyValue>,
        after: Option<PropertyValue>,
    },
    SetEnvironment {
        before: EnvironmentState,
        after: EnvironmentState,
    },
}

impl Edit {
    /// The edit that undoes this one.
    pub fn inverse(&self) -> Edit {
        match self.clone() {
            Edit::Add { asset } => Edit::Remove { asset },
            Edit::Remove { asset } => Edit::Add { asset },
            Edit::SetPose { id, before, after } => Edit::SetPose {
                id,
                before: after,
                after: before,
            },
            Edit::SetProperty { id, key, before, after } => Edit::SetProperty {
                id,
                key,
                before: after,
                after: before,
            },
            Edit::SetEnvironment { before, after } => Edit::SetEnvironment {
                before: after,
                after: before,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Edit::Add { .. } => "add",
            Edit::Remove { .. } => "remove",
            Edit::SetPose { .. } => "set_pose",
            Edit::SetProperty { .. } => "set_property",
            Edit::SetEnvironment { .. } => "set_environment",
        }
    }

    pub fn summary(&self) -> String {
        match self {
            Edit::Add { asset } => {
                let p = asset.position();
                format!("add {} at ({:.2}, {:.2}, {:.2})", asset.id, p.x, p.y, p.z)
            }
            Edit::Remove { asset } => format!("remove {}", asset.id),
            Edit::SetPose { id, after, .. } => {
                let p = after.translation();
                format!("move {id} to ({:.2}, {:.2}, {:.2})", p.x, p.y, p.z)
            }
            Edit::SetProperty { id, key, after, .. } => match after {
                Some(PropertyValue::Number(v)) => format!("set {id}.{key} = {v}"),
                Some(PropertyValue::Text(v)) => format!("set {id}.{key} = \"{v}\""),
                None => format!("unset {id}.{key}"),
            },
            Edit::SetEnvironment { after, .. } => format!(
                "environment {} intensity {:.2} at {:.2} h",
                after.weather().as_str(),
                after.intensity(),
                after.time_of_day()
            ),
        }
    }
}

/// Ordered list of edits applied as a unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneDiff {
    pub edits: Vec<Edit>,
    /// Prompt id or [`DIRECT_PROVENANCE`]. Ignored by equality.
    pub provenance: String,
}

impl PartialEq for SceneDiff {
    fn eq(&self, other: &Self) -> bool {
        self.edits == other.edits
    }
}

impl Default for SceneDiff {
    fn default() -> Self {
        Self::direct(Vec::new())
    }
}

impl SceneDiff {
    pub fn new(edits: Vec<Edit>, provenance: impl Into<String>) -> Self {
        Self {
            edits,
            provenance: provenance.into(),
        }
    }

    pub fn direct(edits: Vec<Edit>) -> Self {
        Self::new(edits, DIRECT_PROVENANCE)
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn len(&self) -> usize {
        self.edits.len()
    }

    /// Appends the edits of `other` after this diff's.
    pub fn extend(&mut self, other: SceneDiff) {
        self.edits.extend(other.edits);
    }

    /// The diff that undoes this one: inverses in reverse order.
    pub fn inverse(&self) -> SceneDiff {
        SceneDiff::new(self.edits.iter().rev().map(Edit::inverse).collect(), self.provenance.clone())
    }

    pub fn with_provenance(mut self, p: impl Into<String>) -> Self {
        self.provenance = p.into();
        self
    }

    /// One line per edit.
    pub fn summary(&self) -> Vec<String> {
        self.edits.iter().map(Edit::summary).collect()
    }
}

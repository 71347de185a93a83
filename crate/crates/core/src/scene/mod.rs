//! Editable hybrid scene: splat and mesh assets with poses, an environment,
//! named anchors, and exactly invertible diffs.

mod arrange;
mod asset;
mod behavior;
mod catalog;
pub mod demo;
mod diff;
mod environment;
mod file;
mod graph;
pub mod procedural;
mod render;
mod store;

pub use arrange::{arrange_positions, Origin, Pattern};
pub use asset::{Creator, PropertyValue, Representation, RepresentationKind, SceneAsset};
pub use behavior::{behavior_pose, Behavior, BEHAVIOR_RATE_HZ};
pub use catalog::{edit_distance, AssetCatalog, CatalogEntry, BUILTIN_CATALOG};
pub use diff::{Edit, SceneDiff, DIRECT_PROVENANCE};
pub use environment::{EnvironmentState, Weather};
pub use file::SceneDocument;
pub use graph::{AssetOverrides, SceneGraph, SearchQuery, DEFAULT_SEARCH_RADIUS, SCENE_CENTER};
pub use render::{default_camera, particle_count, rasterize_meshes, render_scene, RenderOptions, FOG_DENSITY, PARTICLE_DENSITY};
pub use store::{AssetStore, LoadedAsset};

use crate::recon::ReconError;
use crate::splat::SplatError;

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("unknown class \"{name}\"{}", suggestion_text(.suggestions))]
    UnknownClass { name: String, suggestions: Vec<String> },
    #[error("unknown asset \"{0}\"")]
    UnknownAsset(String),
    #[error("unknown anchor \"{0}\"")]
    UnknownAnchor(String),
    #[error("duplicate asset id \"{0}\"")]
    DuplicateId(String),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("diff does not match the current scene: {0}")]
    Conflict(String),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Splat(#[from] SplatError),
    #[error(transparent)]
    Recon(#[from] ReconError),
}

fn suggestion_text(s: &[String]) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!(" (did you mean {}?)", s.iter().map(|x| format!("\"{x}\"")).collect::<Vec<_>>().join(", "))
    }
}

/// Absolute tolerance for structural scene comparison.
pub const SCENE_TOLERANCE: f64 = 1e-12;

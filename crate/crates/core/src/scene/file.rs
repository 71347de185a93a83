use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{AssetCatalog, Edit, EnvironmentState, SceneAsset, SceneDiff, SceneError, SceneGraph, SCENE_CENTER};

/// On-disk scene. `anchors` holds the landmarks; `scene_center` is written
/// for readers but recomputed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub assets: Vec<SceneAsset>,
    pub environment: EnvironmentState,
    #[serde(default)]
    pub anchors: BTreeMap<String, [f64; 3]>,
    pub catalog_ref: String,
    #[serde(default)]
    pub id_counters: BTreeMap<String, u64>,
}

impl SceneGraph {
    pub fn to_document(&self) -> SceneDocument {
        SceneDocument {
            assets: self.assets.values().cloned().collect(),
            environment: self.environment,
            anchors: self.anchors().into_iter().map(|(k, v)| (k, [v.x, v.y, v.z])).collect(),
            catalog_ref: self.catalog_ref.clone(),
            id_counters: self.id_counters.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scene serializes")
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_document()).expect("scene serializes")
    }

    /// Builds a scene from a document, checking every asset against the
    /// catalog. Relative asset sources are resolved against `base_dir`.
    pub fn from_document(
        doc: SceneDocument,
        catalog: Arc<AssetCatalog>,
        base_dir: Option<&Path>,
    ) -> Result<SceneGraph, SceneError> {
        let mut g = SceneGraph::new(catalog, doc.catalog_ref);
        for (name, p) in doc.anchors {
            if name != SCENE_CENTER {
                g.set_landmark(name, Vector3::from(p))?;
            }
        }
        let edits = doc
            .assets
            .into_iter()
            .map(|mut asset| {
                if let Some(base) = base_dir {
                    let src = Path::new(&asset.representation.source);
                    if !asset.representation.source.starts_with("builtin:") && src.is_relative() {
                        asset.representation.source = base.join(src).display().to_string();
                    }
                }
                Edit::Add { asset }
            })
            .collect();
        g.apply(&SceneDiff::direct(edits))?;
        g.environment = doc.environment;
        for (class, n) in doc.id_counters {
            let c = g.id_counters.entry(class).or_insert(0);
            *c = (*c).max(n);
        }
        Ok(g)
    }

    pub fn from_json(text: &str, catalog: Arc<AssetCatalog>) -> Result<SceneGraph, SceneError> {
        let doc: SceneDocument = serde_json::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
        Self::from_document(doc, catalog, None)
    }

    /// Loads a scene file and the catalog it references.
    pub fn load(path: &Path) -> Result<SceneGraph, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let doc: SceneDocument =
            serde_json::from_str(&text).map_err(|e| SceneError::Parse(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let catalog = Arc::new(AssetCatalog::resolve(&doc.catalog_ref, base)?);
        Self::from_document(doc, catalog, Some(base))
    }

    pub fn save(&self, path: &Path) -> Result<(), SceneError> {
        std::fs::write(path, self.to_json()).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

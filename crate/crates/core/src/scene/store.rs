use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use super::procedural::{builtin_mesh, builtin_splats};
use super::{Representation, RepresentationKind, SceneError};
use crate::recon::{io::load_mesh, TriangleMesh};
use crate::splat::{load_splats, SplatSet};

#[derive(Debug)]
pub enum LoadedAsset {
    Splats(SplatSet),
    Mesh(TriangleMesh),
}

/// Shared cache of asset geometry keyed by representation.
#[derive(Debug, Default)]
pub struct AssetStore {
    cache: Mutex<HashMap<Representation, Arc<LoadedAsset>>>,
}

impl AssetStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, rep: &Representation) -> Result<Arc<LoadedAsset>, SceneError> {
        if let Some(a) = self.cache.lock().expect("asset cache poisoned").get(rep) {
            return Ok(Arc::clone(a));
        }
        let loaded = Arc::new(load(rep)?);
        self.cache
            .lock()
            .expect("asset cache poisoned")
            .insert(rep.clone(), Arc::clone(&loaded));
        Ok(loaded)
    }

    pub fn len(&self) -> usize {
        self.cache.lock().expect("asset cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn load(rep: &Representation) -> Result<LoadedAsset, SceneError> {
    if rep.source.starts_with("builtin:") {
        let missing = || SceneError::Catalog(format!("unknown builtin asset {}", rep.source));
        return match rep.kind {
            RepresentationKind::Splat => builtin_splats(&rep.source).map(LoadedAsset::Splats).ok_or_else(missing),
            RepresentationKind::Mesh => builtin_mesh(&rep.source).map(LoadedAsset::Mesh).ok_or_else(missing),
        };
    }
    let path = Path::new(&rep.source);
    Ok(match rep.kind {
        RepresentationKind::Splat => LoadedAsset::Splats(load_splats(path)?),
        RepresentationKind::Mesh => LoadedAsset::Mesh(load_mesh(path)?),
    })
}

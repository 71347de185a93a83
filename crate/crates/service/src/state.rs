use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard, RwLockWriteGuard};
use std::time::{Duration, Instant, SystemTime};

use twinsim_core::orchestrator::{ChatBackend, PipelineConfig, SessionContext};
use twinsim_core::scene::demo::demo_scene;
use twinsim_core::scene::{AssetCatalog, AssetStore, SceneDocument, SceneError, SceneGraph};

use crate::{ServiceConfig, ServiceError};

/// A session plus its bookkeeping. The context lock is held only for short
/// reads and writes, never across a pipeline run.
pub struct SessionRecord {
    pub id: String,
    pub created: SystemTime,
    ctx: RwLock<SessionContext>,
    last_active: Mutex<Instant>,
    busy: AtomicBool,
}

impl SessionRecord {
    fn new(id: String, scene: SceneGraph) -> Self {
        Self {
            ctx: RwLock::new(SessionContext::new(id.clone(), scene)),
            id,
            created: SystemTime::now(),
            last_active: Mutex::new(Instant::now()),
            busy: AtomicBool::new(false),
        }
    }

    pub fn read(&self) -> RwLockReadGuard<'_, SessionContext> {
        self.ctx.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn write(&self) -> RwLockWriteGuard<'_, SessionContext> {
        self.ctx.write().unwrap_or_else(|e| e.into_inner())
    }

    fn touch(&self) {
        *self.last_active.lock().unwrap_or_else(|e| e.into_inner()) = Instant::now();
    }

    pub fn idle(&self) -> Duration {
        self.last_active.lock().unwrap_or_else(|e| e.into_inner()).elapsed()
    }

    /// Claims the session's single pipeline slot.
    pub fn try_begin_prompt(&self) -> Option<PromptSlot<'_>> {
        self.busy
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .ok()
            .map(|_| PromptSlot(self))
    }
}

/// Releases the pipeline slot on drop.
pub struct PromptSlot<'a>(&'a SessionRecord);

impl Drop for PromptSlot<'_> {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::Release);
    }
}

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<SessionRecord>>>,
    backend: Arc<dyn ChatBackend>,
    pipeline: PipelineConfig,
    template: SceneGraph,
    store: Arc<AssetStore>,
    ttl: Duration,
    seq: AtomicU64,
}

impl AppState {
    pub fn new(template: SceneGraph, backend: Arc<dyn ChatBackend>, pipeline: PipelineConfig, ttl: Duration) -> Self {
        Self {
            sessions: RwLock::new(HashMap::new()),
            backend,
            pipeline,
            template,
            store: Arc::new(AssetStore::new()),
            ttl,
            seq: AtomicU64::new(0),
        }
    }

    pub fn from_config(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        let backend: Arc<dyn ChatBackend> = Arc::from(cfg.backend.build()?);
        let pipeline = PipelineConfig {
            two_level: !cfg.bypass_level2,
            ..PipelineConfig::default()
        };
        Ok(Self::new(template_scene(cfg)?, backend, pipeline, cfg.ttl()))
    }

    pub fn backend(&self) -> &dyn ChatBackend {
        self.backend.as_ref()
    }

    pub fn backend_arc(&self) -> Arc<dyn ChatBackend> {
        self.backend.clone()
    }

    pub fn pipeline(&self) -> PipelineConfig {
        self.pipeline
    }

    pub fn template(&self) -> &SceneGraph {
        &self.template
    }

    pub fn store(&self) -> Arc<AssetStore> {
        self.store.clone()
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn create_session(&self, scene: Option<SceneGraph>) -> Arc<SessionRecord> {
        let n = self.seq.fetch_add(1, Ordering::Relaxed) + 1;
        let id = format!("s{n:04}");
        let rec = Arc::new(SessionRecord::new(id.clone(), scene.unwrap_or_else(|| self.template.clone())));
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, rec.clone());
        rec
    }

    /// Live session by id; an expired one is dropped and reported missing.
    pub fn session(&self, id: &str) -> Option<Arc<SessionRecord>> {
        let rec = self.sessions.read().unwrap_or_else(|e| e.into_inner()).get(id).cloned()?;
        if rec.idle() > self.ttl {
            self.sessions.write().unwrap_or_else(|e| e.into_inner()).remove(id);
            return None;
        }
        rec.touch();
        Some(rec)
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn evict_expired(&self) -> usize {
        let mut map = self.sessions.write().unwrap_or_else(|e| e.into_inner());
        let before = map.len();
        map.retain(|_, r| r.idle() <= self.ttl);
        before - map.len()
    }
}

fn template_scene(cfg: &ServiceConfig) -> Result<SceneGraph, ServiceError> {
    let Some(cat_path) = &cfg.catalog else {
        return Ok(match &cfg.scene {
            Some(p) => SceneGraph::load(p)?,
            None => demo_scene(),
        });
    };
    let catalog = Arc::new(AssetCatalog::load(cat_path)?);
    let (mut doc, base) = match &cfg.scene {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| SceneError::Io {
                path: p.display().to_string(),
                source,
            })?;
            let doc: SceneDocument = serde_json::from_str(&text).map_err(|e| SceneError::Parse(e.to_string()))?;
            (doc, p.parent().map(Path::to_path_buf))
        }
        None => (demo_scene().to_document(), None),
    };
    doc.catalog_ref = cat_path.display().to_string();
    Ok(SceneGraph::from_document(doc, catalog, base.as_deref())?)
}

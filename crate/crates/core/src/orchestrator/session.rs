use serde::{Deserialize, Serialize};

use super::backend::ChatBackend;
use super::pipeline::{run_pipeline, AgentTrace, PipelineConfig};
use super::prompt::{Exchange, ExchangeStatus};
use super::OrchestratorError;
use crate::scene::{SceneDiff, SceneGraph};

/// A staged diff awaiting accept or reject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingDiff {
    pub prompt_id: String,
    pub prompt: String,
    pub diff: SceneDiff,
    /// Scene revision the diff was computed against.
    pub base_revision: u64,
}

/// One user's editing session: the scene, conversation history, at most one
/// pending diff and the undo stack of applied diffs.
#[derive(Debug, Clone)]
pub struct SessionContext {
    id: String,
    scene: SceneGraph,
    history: Vec<Exchange>,
    pending: Option<PendingDiff>,
    undo: Vec<SceneDiff>,
    prompt_seq: u64,
    revision: u64,
}

impl SessionContext {
    pub fn new(id: impl Into<String>, scene: SceneGraph) -> Self {
        Self {
            id: id.into(),
            scene,
            history: Vec::new(),
            pending: None,
            undo: Vec::new(),
            prompt_seq: 0,
            revision: 0,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn scene(&self) -> &SceneGraph {
        &self.scene
    }

    pub fn history(&self) -> &[Exchange] {
        &self.history
    }

    pub fn pending(&self) -> Option<&PendingDiff> {
        self.pending.as_ref()
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    /// Bumped on every change to the accepted scene.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn next_prompt_id(&self) -> String {
        format!("{}-p{}", self.id, self.prompt_seq + 1)
    }

    /// Stages a diff produced for `prompt`. Fails if one is already pending.
    pub fn stage(&mut self, prompt: &str, diff: SceneDiff) -> Result<&PendingDiff, OrchestratorError> {
        if self.pending.is_some() {
            return Err(OrchestratorError::PendingExists);
        }
        self.prompt_seq += 1;
        let prompt_id = diff.provenance.clone();
        self.history.push(Exchange {
            prompt_id: prompt_id.clone(),
            prompt: prompt.trim().to_string(),
            status: ExchangeStatus::Staged,
            summary: diff.summary(),
        });
        Ok(self.pending.insert(PendingDiff {
            prompt_id,
            prompt: prompt.to_string(),
            diff,
            base_revision: self.revision,
        }))
    }

    /// Runs the pipeline and stages its diff. The scene is not touched.
    pub fn prompt(
        &mut self,
        raw: &str,
        backend: &dyn ChatBackend,
        cfg: &PipelineConfig,
    ) -> Result<(SceneDiff, AgentTrace), OrchestratorError> {
        if self.pending.is_some() {
            return Err(OrchestratorError::PendingExists);
        }
        let (diff, trace) = run_pipeline(raw, self, backend, cfg)?;
        self.stage(raw, diff.clone())?;
        Ok((diff, trace))
    }

    fn set_status(&mut self, prompt_id: &str, status: ExchangeStatus) {
        if let Some(e) = self.history.iter_mut().rev().find(|e| e.prompt_id == prompt_id) {
            e.status = status;
        }
    }

    /// Applies the pending diff atomically and pushes it for undo.
    pub fn accept(&mut self) -> Result<SceneDiff, OrchestratorError> {
        let p = self.pending.take().ok_or(OrchestratorError::NoPending)?;
        if let Err(e) = self.scene.apply(&p.diff) {
            self.pending = Some(p);
            return Err(e.into());
        }
        self.set_status(&p.prompt_id, ExchangeStatus::Accepted);
        self.undo.push(p.diff.clone());
        self.revision += 1;
        Ok(p.diff)
    }

    /// Discards the pending diff; the scene is unchanged.
    pub fn reject(&mut self) -> Result<SceneDiff, OrchestratorError> {
        let p = self.pending.take().ok_or(OrchestratorError::NoPending)?;
        self.set_status(&p.prompt_id, ExchangeStatus::Rejected);
        Ok(p.diff)
    }

    /// Reverts the most recently applied diff.
    pub fn undo(&mut self) -> Result<SceneDiff, OrchestratorError> {
        if self.pending.is_some() {
            return Err(OrchestratorError::PendingExists);
        }
        let d = self.undo.last().ok_or(OrchestratorError::NothingToUndo)?;
        self.scene.revert(d)?;
        self.revision += 1;
        Ok(self.undo.pop().expect("checked above"))
    }

    /// Applies a direct (non-prompt) edit and pushes it for undo.
    pub fn apply_direct(&mut self, diff: SceneDiff) -> Result<u64, OrchestratorError> {
        self.scene.apply(&diff)?;
        self.undo.push(diff);
        self.revision += 1;
        Ok(self.revision)
    }
}

//! Prompt-to-edit pipeline: a level-1 agent extracts requirements, level-2
//! agents emit typed tasks, and rule-based workers turn validated tasks into
//! one staged scene diff.

mod backend;
pub mod bench;
mod pipeline;
mod prompt;
mod schema;
mod session;
mod validate;
mod workers;

pub use backend::{
    normalize, BackendConfig, BackendError, BackendKind, ChatBackend, ChatMessage, LiveBackend, MockBackend,
    MockReply, MockRule, MockTable, DEFAULT_MOCK_TABLE, ENV_API_KEY, ENV_BACKEND, ENV_MODEL, ENV_URL,
};
pub use pipeline::{run_pipeline, AgentTrace, PipelineConfig, StageStatus, StageTrace, PARSE_RETRIES};
pub use prompt::{
    engineer_prompt, scene_summary, EngineeredPrompt, Exchange, ExchangeStatus, PromptStage, Stage, HISTORY_LIMIT,
};
pub use schema::{
    extract_json, parse_level1, parse_level2, Intent, Level1Response, Level2Response, Placement, Requirement,
    Selector, Task,
};
pub use session::{PendingDiff, SessionContext};
pub use validate::{validate_tasks, PlacementBounds, Violation, ViolationCode, MAX_COUNT, MAX_SCALE, MAX_SPACING};
pub use workers::{execute_task, resolve_placement, select, TaskOutcome, DEFAULT_SPACING, DEFAULT_WEATHER_INTENSITY};

use crate::scene::SceneError;

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("{stage}: {source}")]
    Backend {
        stage: String,
        #[source]
        source: BackendError,
        trace: Box<AgentTrace>,
    },
    #[error("{stage}: unusable completion after {attempts} attempt(s): {message}")]
    Parse {
        stage: String,
        attempts: usize,
        message: String,
        trace: Box<AgentTrace>,
    },
    #[error("{} task violation(s): {}", .violations.len(), join(.violations))]
    Validation {
        violations: Vec<Violation>,
        trace: Box<AgentTrace>,
    },
    #[error("task {}: {source}", .index + 1)]
    Worker {
        index: usize,
        #[source]
        source: SceneError,
        trace: Box<AgentTrace>,
    },
    #[error("a diff is already pending")]
    PendingExists,
    #[error("no diff is pending")]
    NoPending,
    #[error("nothing to undo")]
    NothingToUndo,
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("benchmark suite: {0}")]
    Suite(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl OrchestratorError {
    pub fn trace(&self) -> Option<&AgentTrace> {
        match self {
            Self::Backend { trace, .. }
            | Self::Parse { trace, .. }
            | Self::Validation { trace, .. }
            | Self::Worker { trace, .. } => Some(trace),
            _ => None,
        }
    }

    pub(crate) fn trace_mut(&mut self) -> Option<&mut AgentTrace> {
        match self {
            Self::Backend { trace, .. }
            | Self::Parse { trace, .. }
            | Self::Validation { trace, .. }
            | Self::Worker { trace, .. } => Some(trace),
            _ => None,
        }
    }
}

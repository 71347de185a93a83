//! Level-1 agent → level-2 agents → validation → workers.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::backend::{BackendError, ChatBackend, ChatMessage};
use super::prompt::{engineer_prompt, EngineeredPrompt, PromptStage};
use super::schema::{parse_level1, parse_level2, Requirement, Task};
use super::session::SessionContext;
use super::validate::{validate_tasks, Violation};
use super::workers::{execute_task, TaskOutcome};
use super::OrchestratorError;
use crate::scene::SceneDiff;

/// Parse retries per completion, each with a corrective follow-up.
pub const PARSE_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    /// Two agent levels; `false` asks the level-1 agent for tasks directly.
    pub two_level: bool,
    pub parse_retries: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            two_level: true,
            parse_retries: PARSE_RETRIES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
    Bypassed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub name: String,
    pub status: StageStatus,
    pub seconds: f64,
    /// Every completion received, in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub responses: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl StageTrace {
    fn new(name: impl Into<String>, status: StageStatus) -> Self {
        Self {
            name: name.into(),
            status,
            seconds: 0.0,
            responses: Vec::new(),
            error: None,
        }
    }
}

/// Full record of one pipeline run, successful or not. Stages are the
/// level-1 agent, one level-2 agent per requirement, then the workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrace {
    pub prompt_id: String,
    pub raw_prompt: String,
    pub engineered_prompt: Option<EngineeredPrompt>,
    pub level2_prompts: Vec<EngineeredPrompt>,
    pub requirements: Vec<Requirement>,
    pub tasks: Vec<Task>,
    pub violations: Vec<Violation>,
    pub outcomes: Vec<TaskOutcome>,
    pub stages: Vec<StageTrace>,
    pub total_seconds: f64,
    pub error: Option<String>,
}

enum Failure {
    Backend(BackendError),
    Parse { attempts: usize, message: String },
}

/// Sends the prompt, retrying with a corrective message while the reply
/// does not parse.
fn converse<T>(
    backend: &dyn ChatBackend,
    prompt: &EngineeredPrompt,
    retries: usize,
    stage: &mut StageTrace,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<T, Failure> {
    let mut messages = prompt.messages();
    let mut last = String::new();
    for attempt in 0..=retries {
        let reply = backend.complete(&messages).map_err(Failure::Backend)?;
        stage.responses.push(reply.clone());
        match parse(&reply) {
            Ok(v) => return Ok(v),
            Err(e) => {
                log::debug!("{} attempt {} unparseable: {e}", stage.name, attempt + 1);
                messages.push(ChatMessage::assistant(reply));
                messages.push(ChatMessage::user(format!(
                    "Your previous reply could not be used: {e}. Reply again with exactly one fenced ```json block that follows the response format."
                )));
                last = e;
            }
        }
    }
    Err(Failure::Parse {
        attempts: retries + 1,
        message: last,
    })
}

struct Run<'a> {
    trace: AgentTrace,
    started: Instant,
    backend: &'a dyn ChatBackend,
    cfg: PipelineConfig,
}

impl Run<'_> {
    /// Pads the trace with skipped stages so its shape does not depend on
    /// where the run stopped, then builds the error.
    fn fail(mut self, stage: &str, f: Failure) -> OrchestratorError {
        let n = self.trace.requirements.len();
        let have_l2 = self.trace.stages.iter().filter(|s| s.name.starts_with("level2")).count();
        for i in have_l2..n {
            self.trace.stages.push(StageTrace::new(format!("level2[{}]", i + 1), StageStatus::Skipped));
        }
        if !self.trace.stages.iter().any(|s| s.name == "workers") {
            self.trace.stages.push(StageTrace::new("workers", StageStatus::Skipped));
        }
        let err = match f {
            Failure::Backend(source) => OrchestratorError::Backend {
                stage: stage.to_string(),
                source,
                trace: Box::new(AgentTrace::default()),
            },
            Failure::Parse { attempts, message } => OrchestratorError::Parse {
                stage: stage.to_string(),
                attempts,
                message,
                trace: Box::new(AgentTrace::default()),
            },
        };
        self.finish_err(err)
    }

    fn finish_err(mut self, mut err: OrchestratorError) -> OrchestratorError {
        self.trace.total_seconds = self.started.elapsed().as_secs_f64();
        self.trace.error = Some(err.to_string());
        if let Some(t) = err.trace_mut() {
            *t = self.trace;
        }
        err
    }
}

impl Default for AgentTrace {
    fn default() -> Self {
        Self {
            prompt_id: String::new(),
            raw_prompt: String::new(),
            engineered_prompt: None,
            level2_prompts: Vec::new(),
            requirements: Vec::new(),
            tasks: Vec::new(),
            violations: Vec::new(),
            outcomes: Vec::new(),
            stages: Vec::new(),
            total_seconds: 0.0,
            error: None,
        }
    }
}

/// Runs the prompt against a read-only session and returns the composite
/// diff it would make. Nothing is applied or staged.
pub fn run_pipeline(
    raw: &str,
    ctx: &SessionContext,
    backend: &dyn ChatBackend,
    cfg: &PipelineConfig,
) -> Result<(SceneDiff, AgentTrace), OrchestratorError> {
    if raw.trim().is_empty() {
        return Err(OrchestratorError::EmptyPrompt);
    }
    let mut run = Run {
        trace: AgentTrace {
            prompt_id: ctx.next_prompt_id(),
            raw_prompt: raw.to_string(),
            ..AgentTrace::default()
        },
        started: Instant::now(),
        backend,
        cfg: *cfg,
    };

    // Level 1.
    let t0 = Instant::now();
    let stage1 = if run.cfg.two_level {
        PromptStage::Level1
    } else {
        PromptStage::Level2 {
            intent: None,
            original: raw.to_string(),
        }
    };
    let p1 = engineer_prompt(raw, ctx, &stage1)?;
    run.trace.engineered_prompt = Some(p1.clone());
    let mut st = StageTrace::new("level1", StageStatus::Ok);
    let level1 = if run.cfg.two_level {
        converse(run.backend, &p1, run.cfg.parse_retries, &mut st, parse_level1).map(|r| (r, Vec::new()))
    } else {
        converse(run.backend, &p1, run.cfg.parse_retries, &mut st, |s| parse_level2(s, None)).map(|tasks| {
            let intent = tasks[0].intent();
            (
                vec![Requirement {
                    intent,
                    detail: raw.trim().to_string(),
                }],
                tasks,
            )
        })
    };
    st.seconds = t0.elapsed().as_secs_f64();
    let (requirements, direct_tasks) = match level1 {
        Ok(v) => v,
        Err(f) => {
            st.status = StageStatus::Failed;
            st.error = Some(failure_text(&f));
            run.trace.stages.push(st);
            return Err(run.fail("level1", f));
        }
    };
    run.trace.stages.push(st);
    run.trace.requirements = requirements.clone();

    // Level 2.
    if run.cfg.two_level {
        for (i, req) in requirements.iter().enumerate() {
            let name = format!("level2[{}]", i + 1);
            let t0 = Instant::now();
            let p2 = engineer_prompt(
                &req.text(),
                ctx,
                &PromptStage::Level2 {
                    intent: Some(req.intent),
                    original: raw.to_string(),
                },
            )?;
            run.trace.level2_prompts.push(p2.clone());
            let mut st = StageTrace::new(name.clone(), StageStatus::Ok);
            let r = converse(run.backend, &p2, run.cfg.parse_retries, &mut st, |s| parse_level2(s, Some(req.intent)));
            st.seconds = t0.elapsed().as_secs_f64();
            match r {
                Ok(tasks) => {
                    run.trace.stages.push(st);
                    run.trace.tasks.extend(tasks);
                }
                Err(f) => {
                    st.status = StageStatus::Failed;
                    st.error = Some(failure_text(&f));
                    run.trace.stages.push(st);
                    return Err(run.fail(&name, f));
                }
            }
        }
    } else {
        run.trace.stages.push(StageTrace::new("level2[1]", StageStatus::Bypassed));
        run.trace.tasks = direct_tasks;
    }

    // Workers.
    let t0 = Instant::now();
    let scene = ctx.scene();
    let violations = validate_tasks(&run.trace.tasks, scene, scene.catalog());
    if !violations.is_empty() {
        let mut st = StageTrace::new("workers", StageStatus::Failed);
        st.seconds = t0.elapsed().as_secs_f64();
        st.error = Some(format!("{} violation(s)", violations.len()));
        run.trace.stages.push(st);
        run.trace.violations = violations.clone();
        return Err(run.finish_err(OrchestratorError::Validation {
            violations,
            trace: Box::default(),
        }));
    }
    let mut scratch = scene.clone();
    let mut diff = SceneDiff::new(Vec::new(), run.trace.prompt_id.clone());
    for (i, task) in run.trace.tasks.clone().iter().enumerate() {
        match execute_task(&mut scratch, task) {
            Ok((d, found)) => {
                run.trace.outcomes.push(TaskOutcome {
                    task_index: i,
                    kind: task.intent(),
                    ok: true,
                    found,
                    edits: d.summary(),
                    error: None,
                });
                diff.extend(d);
            }
            Err(e) => {
                run.trace.outcomes.push(TaskOutcome {
                    task_index: i,
                    kind: task.intent(),
                    ok: false,
                    found: Vec::new(),
                    edits: Vec::new(),
                    error: Some(e.to_string()),
                });
                let mut st = StageTrace::new("workers", StageStatus::Failed);
                st.seconds = t0.elapsed().as_secs_f64();
                st.error = Some(e.to_string());
                run.trace.stages.push(st);
                return Err(run.finish_err(OrchestratorError::Worker {
                    index: i,
                    source: e,
                    trace: Box::default(),
                }));
            }
        }
    }
    let mut st = StageTrace::new("workers", StageStatus::Ok);
    st.seconds = t0.elapsed().as_secs_f64();
    run.trace.stages.push(st);
    run.trace.total_seconds = run.started.elapsed().as_secs_f64();
    Ok((diff, run.trace))
}

fn failure_text(f: &Failure) -> String {
    match f {
        Failure::Backend(e) => e.to_string(),
        Failure::Parse { message, .. } => message.clone(),
    }
}

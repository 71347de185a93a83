//! Prompt engineering: wraps raw text with scene context, history and the
//! response schema for one stage.

use serde::{Deserialize, Serialize};

use super::backend::ChatMessage;
use super::schema::Intent;
use super::session::SessionContext;
use super::OrchestratorError;
use crate::scene::SceneGraph;

/// Number of prior exchanges kept in a prompt.
pub const HISTORY_LIMIT: usize = 10;
/// At most this many assets are listed in the scene summary.
const SCENE_LISTING_LIMIT: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Level1,
    Level2,
}

impl Stage {
    pub fn marker(self) -> &'static str {
        match self {
            Stage::Level1 => "stage: level1",
            Stage::Level2 => "stage: level2",
        }
    }

    /// Stage named by a system message.
    pub fn detect(system: &str) -> Option<Stage> {
        system.lines().find_map(|l| match l.trim() {
            "stage: level1" => Some(Stage::Level1),
            "stage: level2" => Some(Stage::Level2),
            _ => None,
        })
    }
}

/// What a prompt is being engineered for.
#[derive(Debug, Clone, PartialEq)]
pub enum PromptStage {
    Level1,
    /// One requirement of `intent` (any kind when `None`); `original` is
    /// the user's prompt.
    Level2 { intent: Option<Intent>, original: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExchangeStatus {
    Staged,
    Accepted,
    Rejected,
}

/// A prior prompt and what it did to the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub prompt_id: String,
    pub prompt: String,
    pub status: ExchangeStatus,
    pub summary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineeredPrompt {
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<Intent>,
    pub preamble: String,
    pub schema: String,
    pub history: Vec<Exchange>,
    pub user: String,
}

impl EngineeredPrompt {
    pub fn history_block(&self) -> Option<String> {
        if self.history.is_empty() {
            return None;
        }
        let mut s = String::from("## Conversation so far\n");
        for (i, e) in self.history.iter().enumerate() {
            let status = match e.status {
                ExchangeStatus::Staged => "pending",
                ExchangeStatus::Accepted => "accepted",
                ExchangeStatus::Rejected => "rejected",
            };
            s.push_str(&format!("{}. user: \"{}\" ({status})\n", i + 1, e.prompt.trim()));
            if e.summary.is_empty() {
                s.push_str("   - no scene change\n");
            }
            for line in &e.summary {
                s.push_str(&format!("   - {line}\n"));
            }
        }
        Some(s.trim_end().to_string())
    }

    pub fn system_text(&self) -> String {
        let mut parts = vec![self.preamble.clone()];
        if let Some(h) = self.history_block() {
            parts.push(h);
        }
        parts.push(self.schema.clone());
        parts.join("\n\n")
    }

    pub fn messages(&self) -> Vec<ChatMessage> {
        vec![ChatMessage::system(self.system_text()), ChatMessage::user(self.user.clone())]
    }

    /// Whole prompt as one string, for traces.
    pub fn render(&self) -> String {
        format!("{}\n\n## User\n{}", self.system_text(), self.user)
    }
}

pub fn scene_summary(scene: &SceneGraph) -> String {
    let env = scene.environment();
    let mut s = format!(
        "## Scene\nenvironment: time {:.2} h, weather {}, intensity {:.2}\nassets ({}):\n",
        env.time_of_day(),
        env.weather().as_str(),
        env.intensity(),
        scene.len()
    );
    for a in scene.assets().take(SCENE_LISTING_LIMIT) {
        let p = a.position();
        s.push_str(&format!("- {} [{}] at ({:.2}, {:.2}, {:.2})", a.id, a.class_name, p.x, p.y, p.z));
        if !a.properties.is_empty() {
            let props: Vec<String> = a
                .properties
                .iter()
                .map(|(k, v)| format!("{k}={}", serde_json::to_string(v).expect("property serializes")))
                .collect();
            s.push_str(&format!(" {{{}}}", props.join(", ")));
        }
        s.push('\n');
    }
    if scene.len() > SCENE_LISTING_LIMIT {
        s.push_str(&format!("- ... and {} more\n", scene.len() - SCENE_LISTING_LIMIT));
    }
    s.trim_end().to_string()
}

fn context_sections(scene: &SceneGraph) -> String {
    let anchors: Vec<String> = scene
        .anchors()
        .iter()
        .map(|(k, p)| format!("- {k} at ({:.2}, {:.2}, {:.2})", p.x, p.y, p.z))
        .collect();
    format!(
        "## Asset catalog\n{}\n\n## Anchors\n{}\n\n{}",
        scene.catalog().summary(),
        anchors.join("\n"),
        scene_summary(scene)
    )
}

const LEVEL1_SCHEMA: &str = r#"## Response format
Reply with exactly one fenced ```json block and nothing else:
{"requirements": [{"intent": "<kind>", "detail": "<one sentence>"}]}
<kind> is one of: search, add, remove, position, move, arrange, appearance.
Write one requirement per kind of change, in the order they should happen.
In "detail" use exact class names, asset ids and anchor names from the lists above."#;

const SELECTOR_HELP: &str = r#"<selector> is {"ids": [...]} or any of {"class": c, "tag": t, "near_anchor": a, "radius": m}."#;
const PLACEMENT_HELP: &str = r#"<placement> is {"anchor": name}, {"point": [x, y, z]} or {"relative": {"selector": <selector>, "offset": [dx, dy, dz]}}."#;

fn task_shape(intent: Intent) -> &'static str {
    match intent {
        Intent::Search => r#"{"task": "search", "query": {"class": c, "tag": t, "near_anchor": a, "radius": m}}"#,
        Intent::Add => {
            r#"{"task": "add", "class_name": c, "count": n, "placement": <placement>, "pattern": "line|circle|grid", "spacing": m, "yaw_deg": d, "scale": s, "properties": {...}}"#
        }
        Intent::Remove => r#"{"task": "remove", "selector": <selector>}"#,
        Intent::Position => r#"{"task": "position", "selector": <selector>, "target": <placement>}"#,
        Intent::Move => r#"{"task": "move", "selector": <selector>, "delta": [dx, dy, dz]} or {"task": "move", "selector": <selector>, "target": <placement>}"#,
        Intent::Arrange => {
            r#"{"task": "arrange", "selector": <selector>, "pattern": "line|circle|grid", "spacing": m, "origin": <placement>}"#
        }
        Intent::Appearance => r#"{"task": "appearance", "time_of_day": hours, "weather": "clear|fog|rain|snow", "intensity": 0..1}"#,
    }
}

fn level2_schema(intent: Option<Intent>) -> String {
    let (rule, shapes) = match intent {
        Some(i) => (format!("Every <task> must be a \"{}\" task:", i.as_str()), task_shape(i).to_string()),
        None => (
            "Each <task> is one of:".to_string(),
            Intent::ALL.iter().map(|i| task_shape(*i)).collect::<Vec<_>>().join("\n"),
        ),
    };
    format!(
        "## Response format\nReply with exactly one fenced ```json block and nothing else:\n{{\"tasks\": [<task>, ...]}}\n{rule}\n{shapes}\n{SELECTOR_HELP}\n{PLACEMENT_HELP}\nOptional fields may be omitted. Distances are meters in a z-up frame."
    )
}

/// Deterministic prompt assembly for one stage.
pub fn engineer_prompt(raw: &str, ctx: &SessionContext, stage: &PromptStage) -> Result<EngineeredPrompt, OrchestratorError> {
    let user = raw.trim();
    if user.is_empty() {
        return Err(OrchestratorError::EmptyPrompt);
    }
    let scene = ctx.scene();
    let hist = ctx.history();
    let history = hist[hist.len().saturating_sub(HISTORY_LIMIT)..].to_vec();
    Ok(match stage {
        PromptStage::Level1 => EngineeredPrompt {
            stage: Stage::Level1,
            intent: None,
            preamble: format!(
                "You are the senior manager of a driving-scenario digital twin. Break the user's request into requirements for junior managers.\n{}\n\n{}",
                Stage::Level1.marker(),
                context_sections(scene)
            ),
            schema: LEVEL1_SCHEMA.to_string(),
            history,
            user: user.to_string(),
        },
        PromptStage::Level2 { intent, original } => EngineeredPrompt {
            stage: Stage::Level2,
            intent: *intent,
            preamble: format!(
                "You are a junior manager of a driving-scenario digital twin. Turn {} into typed tasks for rule-based workers.\n{}\n\n{}\n\n## Original request\n{}",
                intent.map_or("the request".to_string(), |i| format!("one \"{}\" requirement", i.as_str())),
                Stage::Level2.marker(),
                context_sections(scene),
                original.trim()
            ),
            schema: level2_schema(*intent),
            history,
            user: user.to_string(),
        },
    })
}

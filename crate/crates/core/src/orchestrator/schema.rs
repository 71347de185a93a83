//! Typed level-1 and level-2 agent outputs and the completion parser.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scene::{PropertyValue, SearchQuery};

/// The seven task kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    Search,
    Add,
    Remove,
    Position,
    Move,
    Arrange,
    #[serde(alias = "appearance_env")]
    Appearance,
}

impl Intent {
    pub const ALL: [Intent; 7] = [
        Intent::Search,
        Intent::Add,
        Intent::Remove,
        Intent::Position,
        Intent::Move,
        Intent::Arrange,
        Intent::Appearance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::Search => "search",
            Intent::Add => "add",
            Intent::Remove => "remove",
            Intent::Position => "position",
            Intent::Move => "move",
            Intent::Arrange => "arrange",
            Intent::Appearance => "appearance",
        }
    }

    /// Row label used in satisfaction tables.
    pub fn label(self) -> &'static str {
        match self {
            Intent::Search => "Search",
            Intent::Add => "Addition",
            Intent::Remove => "Removal",
            Intent::Position => "Positioning",
            Intent::Move => "Moving",
            Intent::Arrange => "Arrangement",
            Intent::Appearance => "Appearance",
        }
    }
}

/// One level-1 requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub intent: Intent,
    #[serde(default)]
    pub detail: String,
}

impl Requirement {
    /// Text handed to the level-2 agent.
    pub fn text(&self) -> String {
        format!("[{}] {}", self.intent.as_str(), self.detail.trim())
    }
}

/// Which assets a task acts on: explicit ids, or a search query.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ids: Vec<String>,
    #[serde(flatten)]
    pub query: SearchQuery,
}

/// Where something goes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Anchor(String),
    Point([f64; 3]),
    /// Centroid of the selected assets plus an offset.
    Relative {
        #[serde(default)]
        selector: Selector,
        #[serde(default)]
        offset: [f64; 3],
    },
}

/// A level-2 task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Task {
    Search {
        #[serde(default)]
        query: SearchQuery,
    },
    Add {
        class_name: String,
        #[serde(default = "one")]
        count: i64,
        placement: Placement,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pattern: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spacing: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        yaw_deg: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        properties: BTreeMap<String, PropertyValue>,
    },
    Remove {
        selector: Selector,
    },
    Position {
        selector: Selector,
        target: Placement,
    },
    Move {
        selector: Selector,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<Placement>,
    },
    Arrange {
        selector: Selector,
        pattern: String,
        spacing: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<Placement>,
    },
    Appearance {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        time_of_day: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weather: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intensity: Option<f64>,
    },
}

fn one() -> i64 {
    1
}

impl Task {
    pub fn intent(&self) -> Intent {
        match self {
            Task::Search { .. } => Intent::Search,
            Task::Add { .. } => Intent::Add,
            Task::Remove { .. } => Intent::Remove,
            Task::Position { .. } => Intent::Position,
            Task::Move { .. } => Intent::Move,
            Task::Arrange { .. } => Intent::Arrange,
            Task::Appearance { .. } => Intent::Appearance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level1Response {
    pub requirements: Vec<Requirement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level2Response {
    pub tasks: Vec<Task>,
}

/// Body of the first fenced code block (```json or bare ```), or the whole
/// reply when it is itself a JSON object.
pub fn extract_json(reply: &str) -> Option<&str> {
    let mut rest = reply;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let body_start = after.find('\n').map(|i| i + 1)?;
        let tag = after[..body_start].trim();
        let body = &after[body_start..];
        let end = body.find("```")?;
        if tag.is_empty() || tag.eq_ignore_ascii_case("json") {
            return Some(body[..end].trim());
        }
        rest = &body[end + 3..];
    }
    let t = reply.trim();
    (t.starts_with('{') && t.ends_with('}')).then_some(t)
}

fn parse_block<T: for<'de> Deserialize<'de>>(reply: &str) -> Result<T, String> {
    let body = extract_json(reply).ok_or("no fenced JSON block found")?;
    serde_json::from_str(body).map_err(|e| format!("JSON does not match the schema: {e}"))
}

pub fn parse_level1(reply: &str) -> Result<Vec<Requirement>, String> {
    let r: Level1Response = parse_block(reply)?;
    if r.requirements.is_empty() {
        return Err("requirements array is empty".into());
    }
    Ok(r.requirements)
}

/// Parses a level-2 reply. With an intent, every task must be of that kind.
pub fn parse_level2(reply: &str, intent: Option<Intent>) -> Result<Vec<Task>, String> {
    let r: Level2Response = parse_block(reply)?;
    if r.tasks.is_empty() {
        return Err("tasks array is empty".into());
    }
    let Some(intent) = intent else {
        return Ok(r.tasks);
    };
    if let Some(t) = r.tasks.iter().find(|t| t.intent() != intent) {
        return Err(format!(
            "task of kind \"{}\" given for a \"{}\" requirement",
            t.intent().as_str(),
            intent.as_str()
        ));
    }
    Ok(r.tasks)
}

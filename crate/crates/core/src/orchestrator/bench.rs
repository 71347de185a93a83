//! Agent benchmark: repeatability over direct prompts, generalizability over
//! all four prompt gradations, per-kind satisfaction matrix.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::time::Instant;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::backend::ChatBackend;
use super::pipeline::{AgentTrace, PipelineConfig};
use super::schema::Intent;
use super::session::SessionContext;
use super::OrchestratorError;
use crate::scene::{demo, AssetOverrides, Edit, Origin, PropertyValue, SceneDiff, SceneGraph, Weather};
use crate::splat::RigidTransform;

/// The built-in suite over the demo scene.
pub const DEFAULT_SUITE: &str = include_str!("../../data/agent_suite.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gradation {
    Direct,
    Indirect,
    Vague,
    Erroneous,
}

impl Gradation {
    pub const ALL: [Gradation; 4] = [Gradation::Direct, Gradation::Indirect, Gradation::Vague, Gradation::Erroneous];

    pub fn label(self) -> &'static str {
        match self {
            Gradation::Direct => "Direct",
            Gradation::Indirect => "Indirect",
            Gradation::Vague => "Vague",
            Gradation::Erroneous => "Erroneous",
        }
    }
}

/// Rule-based satisfaction predicate over the staged diff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Checker {
    /// Exactly `count` assets of `class` exist after the diff (within
    /// `radius` of `near` when given).
    AssetCount {
        class: String,
        count: usize,
        #[serde(default)]
        near: Option<Origin>,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// The diff adds exactly `count` assets of `class`, all within `radius`
    /// of `near` when given.
    Added {
        class: String,
        count: usize,
        #[serde(default)]
        near: Option<Origin>,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// The diff removes exactly these ids, or `count` assets of `class`.
    Removed {
        #[serde(default)]
        ids: Vec<String>,
        #[serde(default)]
        class: Option<String>,
        #[serde(default)]
        count: Option<usize>,
    },
    /// Every id ends up within `radius` of `to`, or shifted by `delta`.
    Displaced {
        ids: Vec<String>,
        #[serde(default)]
        to: Option<Origin>,
        #[serde(default)]
        delta: Option<[f64; 3]>,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// Every asset of `class` is moved onto the pattern.
    Arranged {
        class: String,
        pattern: String,
        spacing: f64,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Environment {
        #[serde(default)]
        time_of_day: Option<f64>,
        #[serde(default)]
        weather: Option<String>,
        #[serde(default)]
        intensity: Option<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    /// A search task returned exactly these ids (any order).
    SearchResult { ids: Vec<String> },
    All { checks: Vec<Checker> },
}

fn default_radius() -> f64 {
    0.5
}

fn default_tol() -> f64 {
    0.05
}

/// What a checker sees: the scene before, the staged diff and the trace.
pub struct Outcome<'a> {
    pub before: &'a SceneGraph,
    pub diff: &'a SceneDiff,
    pub trace: &'a AgentTrace,
}

impl Checker {
    pub fn check(&self, o: &Outcome) -> Result<bool, OrchestratorError> {
        let after = o.before.preview(o.diff)?;
        let resolve = |g: &SceneGraph, n: &Option<Origin>| n.as_ref().map(|n| g.resolve_origin(n)).transpose();
        Ok(match self {
            Checker::AssetCount { class, count, near, radius } => {
                let c = resolve(&after, near)?;
                after
                    .assets()
                    .filter(|a| &a.class_name == class && c.is_none_or(|c| (a.position() - c).norm() <= *radius))
                    .count()
                    == *count
            }
            Checker::Added { class, count, near, radius } => {
                let c = resolve(&after, near)?;
                let added: Vec<_> = o
                    .diff
                    .edits
                    .iter()
                    .filter_map(|e| match e {
                        Edit::Add { asset } if &asset.class_name == class => Some(asset),
                        _ => None,
                    })
                    .collect();
                added.len() == *count
                    && added
                        .iter()
                        .all(|a| c.is_none_or(|c| (a.position() - c).norm() <= *radius))
            }
            Checker::Removed { ids, class, count } => {
                let removed: Vec<_> = o
                    .diff
                    .edits
                    .iter()
                    .filter_map(|e| match e {
                        Edit::Remove { asset } => Some(asset),
                        _ => None,
                    })
                    .collect();
                let mut got: Vec<&str> = removed.iter().map(|a| a.id.as_str()).collect();
                got.sort_unstable();
                let mut want: Vec<&str> = ids.iter().map(String::as_str).collect();
                want.sort_unstable();
                let ids_ok = ids.is_empty() || got == want;
                let class_ok = class.as_ref().is_none_or(|c| removed.iter().all(|a| &a.class_name == c));
                let count_ok = count.is_none_or(|n| removed.len() == n);
                !removed.is_empty() && ids_ok && class_ok && count_ok
            }
            Checker::Displaced { ids, to, delta, radius } => {
                let target = resolve(&after, to)?;
                ids.iter().all(|id| {
                    let (Some(a0), Some(a1)) = (o.before.asset(id), after.asset(id)) else {
                        return false;
                    };
                    let (p0, p1) = (a0.position(), a1.position());
                    let to_ok = target.is_none_or(|t| (p1 - t).norm() <= *radius);
                    let delta_ok = delta.is_none_or(|d| (p1 - p0 - Vector3::from(d)).norm() <= *radius);
                    (p1 - p0).norm() > 0.0 && to_ok && delta_ok
                })
            }
            Checker::Arranged { class, pattern, spacing, tol } => {
                let moved: Vec<Vector3<f64>> = o
                    .diff
                    .edits
                    .iter()
                    .filter_map(|e| match e {
                        Edit::SetPose { id, after: pose, .. }
                            if o.before.asset(id).is_some_and(|a| &a.class_name == class) =>
                        {
                            Some(*pose.translation())
                        }
                        _ => None,
                    })
                    .collect();
                let total = o.before.assets().filter(|a| &a.class_name == class).count();
                moved.len() == total && total > 0 && on_pattern(&moved, pattern, *spacing, *tol)
            }
            Checker::Environment {
                time_of_day,
                weather,
                intensity,
                tol,
            } => {
                let env = after.environment();
                let circ = |a: f64, b: f64| {
                    let d = (a - b).rem_euclid(24.0);
                    d.min(24.0 - d)
                };
                time_of_day.is_none_or(|t| circ(env.time_of_day(), t) <= *tol)
                    && weather
                        .as_deref()
                        .is_none_or(|w| Weather::parse(w) == Some(env.weather()))
                    && intensity.is_none_or(|i| (env.intensity() - i).abs() <= *tol)
            }
            Checker::SearchResult { ids } => {
                let mut found: Vec<&str> = o
                    .trace
                    .outcomes
                    .iter()
                    .filter(|t| t.kind == Intent::Search)
                    .flat_map(|t| t.found.iter().map(String::as_str))
                    .collect();
                found.sort_unstable();
                found.dedup();
                let mut want: Vec<&str> = ids.iter().map(String::as_str).collect();
                want.sort_unstable();
                found == want
            }
            Checker::All { checks } => {
                for c in checks {
                    if !c.check(o)? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }
}

/// Line: consecutive points `spacing` apart on one straight line.
/// Circle: equidistant from the centroid, neighbours `spacing` apart.
/// Grid: every point has a neighbour at `spacing`.
fn on_pattern(p: &[Vector3<f64>], pattern: &str, spacing: f64, tol: f64) -> bool {
    if p.len() < 2 {
        return true;
    }
    match pattern {
        "line" | "row" => {
            let dir = (p[1] - p[0]).normalize();
            p.windows(2).all(|w| {
                let d = w[1] - w[0];
                (d.norm() - spacing).abs() <= tol && (d - dir * d.dot(&dir)).norm() <= tol
            })
        }
        "circle" | "ring" => {
            let c = p.iter().sum::<Vector3<f64>>() / p.len() as f64;
            let r = (p[0] - c).norm();
            let chord = 2.0 * r * (std::f64::consts::PI / p.len() as f64).sin();
            p.iter().all(|q| ((q - c).norm() - r).abs() <= tol) && (chord - spacing).abs() <= tol
        }
        "grid" => p.iter().enumerate().all(|(i, a)| {
            let nearest = p
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| (a - b).norm())
                .fold(f64::INFINITY, f64::min);
            (nearest - spacing).abs() <= tol
        }),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCase {
    pub task_kind: Intent,
    pub gradation: Gradation,
    pub prompt: String,
    pub checker: Checker,
}

/// An asset added to the demo scene before every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetupAsset {
    pub class_name: String,
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default)]
    pub properties: BTreeMap<String, PropertyValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub setup: Vec<SetupAsset>,
    pub cases: Vec<SuiteCase>,
}

impl Suite {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_SUITE).expect("built-in suite parses")
    }

    pub fn parse(text: &str) -> Result<Self, OrchestratorError> {
        let s: Suite = serde_json::from_str(text).map_err(|e| OrchestratorError::Suite(e.to_string()))?;
        if s.cases.is_empty() {
            return Err(OrchestratorError::Suite("suite has no cases".into()));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| OrchestratorError::Suite(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Demo scene plus the setup assets.
    pub fn scene(&self) -> Result<SceneGraph, OrchestratorError> {
        let mut g = demo::demo_scene();
        for a in &self.setup {
            let pose = RigidTransform::from_yaw(a.yaw_deg.to_radians(), Vector3::from(a.position));
            let overrides = AssetOverrides {
                properties: a.properties.clone(),
                ..AssetOverrides::default()
            };
            g.add_asset(&a.class_name, pose, overrides)?;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub task_kind: Intent,
    pub gradation: Gradation,
    pub prompt: String,
    pub trials: usize,
    pub satisfied: usize,
    /// Trials whose outcome equals the most common one.
    pub modal: usize,
    pub mean_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub suite: String,
    pub backend: String,
    pub trials: usize,
    pub runs: usize,
    /// Percent.
    pub repeatability: f64,
    /// Percent.
    pub generalizability: f64,
    pub mean_time_s: f64,
    /// Satisfaction percent per task kind and gradation, `None` where the
    /// suite has no case.
    pub matrix: BTreeMap<Intent, [Option<f64>; 4]>,
    /// Runs that changed the scene before accept; must be zero.
    pub scene_mutations: usize,
    pub cases: Vec<CaseResult>,
}

impl BenchmarkReport {
    /// "Gen / Rep / Time" in the usual two-decimal form.
    pub fn summary_row(&self) -> String {
        format!(
            "{:.2} / {:.2} / {:.2}",
            self.generalizability, self.repeatability, self.mean_time_s
        )
    }

    pub fn matrix_csv(&self) -> String {
        let mut s = String::from("task,direct,indirect,vague,erroneous\n");
        for (kind, row) in &self.matrix {
            let cells: Vec<String> = row.iter().map(|c| c.map_or(String::new(), |v| format!("{v:.2}"))).collect();
            s.push_str(&format!("{},{}\n", kind.label(), cells.join(",")));
        }
        s
    }

    pub fn cases_csv(&self) -> String {
        let mut s = String::from("task,gradation,trials,satisfied,modal,mean_seconds,prompt\n");
        for c in &self.cases {
            s.push_str(&format!(
                "{},{},{},{},{},{:.6},\"{}\"\n",
                c.task_kind.as_str(),
                c.gradation.label().to_lowercase(),
                c.trials,
                c.satisfied,
                c.modal,
                c.mean_seconds,
                c.prompt.replace('"', "\"\"")
            ));
        }
        s
    }

    /// Plain-text report: summary row, then the satisfaction matrix.
    pub fn render_text(&self) -> String {
        let mut s = format!(
            "backend {} | suite {} | {} trial(s), {} run(s)\nGen. (%) / Rep. (%) / Time (s)\n{}\n\n",
            self.backend,
            self.suite,
            self.trials,
            self.runs,
            self.summary_row()
        );
        s.push_str(&format!("{:<12}", "Task"));
        for g in Gradation::ALL {
            s.push_str(&format!("{:>11}", g.label()));
        }
        s.push('\n');
        for (kind, row) in &self.matrix {
            s.push_str(&format!("{:<12}", kind.label()));
            for c in row {
                s.push_str(&format!("{:>11}", c.map_or("-".to_string(), |v| format!("{v:.2}"))));
            }
            s.push('\n');
        }
        if self.scene_mutations > 0 {
            s.push_str(&format!("WARNING: {} run(s) mutated the scene before accept\n", self.scene_mutations));
        }
        s
    }
}

/// Outcome identity for repeatability: the edits plus any search hits, or
/// the error message.
fn outcome_key(r: &Result<(SceneDiff, AgentTrace), OrchestratorError>) -> String {
    match r {
        Ok((diff, trace)) => {
            let found: Vec<&Vec<String>> = trace.outcomes.iter().map(|o| &o.found).collect();
            serde_json::to_string(&(&diff.edits, found)).expect("diff serializes")
        }
        Err(e) => format!("error: {e}"),
    }
}

/// Runs every case `trials` times on a fresh session each time.
pub fn benchmark(
    suite: &Suite,
    backend: &dyn ChatBackend,
    trials: usize,
    cfg: &PipelineConfig,
) -> Result<BenchmarkReport, OrchestratorError> {
    if trials == 0 {
        return Err(OrchestratorError::Suite("trials must be at least 1".into()));
    }
    let base = suite.scene()?;
    let base_json = base.to_json();
    let mut cases = Vec::with_capacity(suite.cases.len());
    let mut mutations = 0;
    let mut seconds = 0.0;
    for case in &suite.cases {
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut satisfied = 0;
        let mut case_seconds = 0.0;
        let mut first_error = None;
        for trial in 0..trials {
            let mut ctx = SessionContext::new(format!("bench{trial}"), base.clone());
            let t0 = Instant::now();
            let r = ctx.prompt(&case.prompt, backend, cfg);
            case_seconds += t0.elapsed().as_secs_f64();
            if ctx.scene().to_json() != base_json {
                mutations += 1;
            }
            *counts.entry(outcome_key(&r)).or_default() += 1;
            match &r {
                Ok((diff, trace)) => {
                    let ok = case.checker.check(&Outcome {
                        before: &base,
                        diff,
                        trace,
                    });
                    match ok {
                        Ok(true) => satisfied += 1,
                        Ok(false) => {}
                        Err(e) => {
                            first_error.get_or_insert_with(|| e.to_string());
                        }
                    }
                }
                Err(e) => {
                    first_error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        seconds += case_seconds;
        cases.push(CaseResult {
            task_kind: case.task_kind,
            gradation: case.gradation,
            prompt: case.prompt.clone(),
            trials,
            satisfied,
            modal: counts.values().copied().max().unwrap_or(0),
            mean_seconds: case_seconds / trials as f64,
            first_error,
        });
    }

    let pct = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
    let direct: Vec<&CaseResult> = cases.iter().filter(|c| c.gradation == Gradation::Direct).collect();
    let repeatability = pct(
        direct.iter().map(|c| c.modal).sum(),
        direct.iter().map(|c| c.trials).sum(),
    );
    let runs = cases.len() * trials;
    let generalizability = pct(cases.iter().map(|c| c.satisfied).sum(), runs);

    let mut matrix: BTreeMap<Intent, [Option<f64>; 4]> = Intent::ALL.iter().map(|k| (*k, [None; 4])).collect();
    let mut acc: BTreeMap<(Intent, Gradation), (usize, usize)> = BTreeMap::new();
    for c in &cases {
        let e = acc.entry((c.task_kind, c.gradation)).or_default();
        e.0 += c.satisfied;
        e.1 += c.trials;
    }
    for ((k, g), (s, n)) in acc {
        let gi = Gradation::ALL.iter().position(|x| *x == g).expect("known gradation");
        matrix.get_mut(&k).expect("all kinds present")[gi] = Some(pct(s, n));
    }

    Ok(BenchmarkReport {
        suite: suite.name.clone(),
        backend: backend.name(),
        trials,
        runs,
        repeatability,
        generalizability,
        mean_time_s: seconds / runs as f64,
        matrix,
        scene_mutations: mutations,
        cases,
    })
}

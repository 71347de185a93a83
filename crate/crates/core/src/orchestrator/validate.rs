//! Rule-based bounds checked before any worker runs.

use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::schema::{Placement, Selector, Task};
use super::workers::{execute_task, parse_pattern, parse_weather};
use crate::scene::{AssetCatalog, Edit, SceneError, SceneGraph, SearchQuery};

pub const MAX_COUNT: i64 = 100;
pub const MAX_SPACING: f64 = 1000.0;
pub const MAX_SCALE: f64 = 100.0;
/// Smallest half-extent of the placement box, meters.
pub const MIN_HALF_EXTENT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    UnknownClass,
    UnknownAnchor,
    UnknownAsset,
    UnknownPattern,
    UnknownWeather,
    CountBound,
    SpacingBound,
    ScaleBound,
    OutOfBounds,
    EmptySelection,
    InvalidValue,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::UnknownClass => "unknown class",
            Self::UnknownAnchor => "unknown anchor",
            Self::UnknownAsset => "unknown asset",
            Self::UnknownPattern => "unknown pattern",
            Self::UnknownWeather => "unknown weather",
            Self::CountBound => "count bound",
            Self::SpacingBound => "spacing bound",
            Self::ScaleBound => "scale bound",
            Self::OutOfBounds => "out of bounds",
            Self::EmptySelection => "empty selection",
            Self::InvalidValue => "invalid value",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub task_index: usize,
    pub task: String,
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "task {} ({}): {}: {}",
            self.task_index + 1,
            self.task,
            self.code.as_str(),
            self.message
        )
    }
}

/// Axis-aligned box placements must stay inside: the extent of assets and
/// landmarks, doubled about its center, at least ±10 m per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementBounds {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl PlacementBounds {
    pub fn of(scene: &SceneGraph) -> Self {
        let pts: Vec<Vector3<f64>> = scene
            .assets()
            .map(|a| a.position())
            .chain(scene.landmarks().values().copied())
            .collect();
        let (lo, hi) = match pts.split_first() {
            Some((first, rest)) => rest.iter().fold((*first, *first), |(lo, hi), p| (lo.inf(p), hi.sup(p))),
            None => (Vector3::zeros(), Vector3::zeros()),
        };
        let c = (lo + hi) / 2.0;
        let h = ((hi - lo) / 2.0 * 2.0).map(|v| v.max(MIN_HALF_EXTENT));
        Self { min: c - h, max: c + h }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

struct Checker<'a> {
    catalog: &'a AssetCatalog,
    scene: &'a SceneGraph,
    bounds: PlacementBounds,
    index: usize,
    kind: &'static str,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn push(&mut self, code: ViolationCode, message: impl Into<String>) {
        self.out.push(Violation {
            task_index: self.index,
            task: self.kind.to_string(),
            code,
            message: message.into(),
        });
    }

    fn class(&mut self, class: &str) {
        if let Err(e) = self.catalog.require(class) {
            self.push(ViolationCode::UnknownClass, e.to_string());
        }
    }

    fn anchor(&mut self, name: &str) {
        if self.scene.anchor(name).is_err() {
            self.push(ViolationCode::UnknownAnchor, format!("anchor \"{name}\" does not exist"));
        }
    }

    fn query(&mut self, q: &SearchQuery) {
        if let Some(c) = &q.class {
            self.class(c);
        }
        if let Some(a) = &q.near_anchor {
            self.anchor(a);
        }
        if let Some(r) = q.radius {
            if !(0.0..=2.0 * MAX_SPACING).contains(&r) {
                self.push(ViolationCode::InvalidValue, format!("search radius {r} outside [0, {}]", 2.0 * MAX_SPACING));
            }
        }
    }

    fn selector(&mut self, s: &Selector) {
        self.query(&s.query);
    }

    fn point(&mut self, p: &[f64; 3], what: &str) {
        let v = Vector3::from(*p);
        if !v.iter().all(|x| x.is_finite()) || !self.bounds.contains(&v) {
            self.push(
                ViolationCode::OutOfBounds,
                format!("{what} ({:.2}, {:.2}, {:.2}) is outside the placement bounds", p[0], p[1], p[2]),
            );
        }
    }

    fn placement(&mut self, p: &Placement) {
        match p {
            Placement::Anchor(a) => self.anchor(a),
            Placement::Point(v) => self.point(v, "point"),
            Placement::Relative { selector, offset } => {
                self.selector(selector);
                let d = Vector3::from(*offset);
                let span = self.bounds.max - self.bounds.min;
                if !d.iter().all(|x| x.is_finite()) || (0..3).any(|k| d[k].abs() > span[k]) {
                    self.push(ViolationCode::OutOfBounds, format!("offset {offset:?} exceeds the placement bounds"));
                }
            }
        }
    }

    fn spacing(&mut self, s: f64) {
        if !(s > 0.0 && s <= MAX_SPACING) {
            self.push(ViolationCode::SpacingBound, format!("spacing {s} m outside (0, {MAX_SPACING}]"));
        }
    }

    fn pattern(&mut self, p: &str) {
        if parse_pattern(p).is_err() {
            self.push(ViolationCode::UnknownPattern, format!("pattern \"{p}\" is not line, circle or grid"));
        }
    }

    fn task(&mut self, t: &Task) {
        match t {
            Task::Search { query } => self.query(query),
            Task::Add {
                class_name,
                count,
                placement,
                pattern,
                spacing,
                yaw_deg,
                scale,
                ..
            } => {
                self.class(class_name);
                if !(1..=MAX_COUNT).contains(count) {
                    self.push(ViolationCode::CountBound, format!("count {count} outside [1, {MAX_COUNT}]"));
                }
                self.placement(placement);
                if let Some(p) = pattern {
                    self.pattern(p);
                }
                if let Some(s) = spacing {
                    self.spacing(*s);
                }
                if let Some(s) = scale {
                    if !(*s > 0.0 && *s <= MAX_SCALE) {
                        self.push(ViolationCode::ScaleBound, format!("scale {s} outside (0, {MAX_SCALE}]"));
                    }
                }
                if yaw_deg.is_some_and(|y| !y.is_finite()) {
                    self.push(ViolationCode::InvalidValue, "yaw is not finite");
                }
            }
            Task::Remove { selector } => self.selector(selector),
            Task::Position { selector, target } => {
                self.selector(selector);
                self.placement(target);
            }
            Task::Move { selector, delta, target } => {
                self.selector(selector);
                match (delta, target) {
                    (Some(d), None) => {
                        let span = self.bounds.max - self.bounds.min;
                        if !d.iter().all(|x| x.is_finite()) || (0..3).any(|k| d[k].abs() > span[k]) {
                            self.push(ViolationCode::OutOfBounds, format!("delta {d:?} exceeds the placement bounds"));
                        }
                    }
                    (None, Some(t)) => self.placement(t),
                    _ => self.push(ViolationCode::InvalidValue, "move needs exactly one of delta or target"),
                }
            }
            Task::Arrange {
                selector,
                pattern,
                spacing,
                origin,
            } => {
                self.selector(selector);
                self.pattern(pattern);
                self.spacing(*spacing);
                if let Some(o) = origin {
                    self.placement(o);
                }
            }
            Task::Appearance {
                time_of_day,
                weather,
                intensity,
            } => {
                if let Some(w) = weather {
                    if parse_weather(w).is_err() {
                        self.push(ViolationCode::UnknownWeather, format!("weather \"{w}\" is not clear, fog, rain or snow"));
                    }
                }
                if let Some(h) = time_of_day {
                    if !(0.0..24.0).contains(h) {
                        self.push(ViolationCode::InvalidValue, format!("time of day {h} outside [0, 24)"));
                    }
                }
                if let Some(i) = intensity {
                    if !(0.0..=1.0).contains(i) {
                        self.push(ViolationCode::InvalidValue, format!("intensity {i} outside [0, 1]"));
                    }
                }
                if time_of_day.is_none() && weather.is_none() && intensity.is_none() {
                    self.push(ViolationCode::InvalidValue, "appearance task changes nothing");
                }
            }
        }
    }
}

fn code_for(e: &SceneError) -> ViolationCode {
    match e {
        SceneError::UnknownClass { .. } => ViolationCode::UnknownClass,
        SceneError::UnknownAnchor(_) => ViolationCode::UnknownAnchor,
        SceneError::UnknownAsset(_) => ViolationCode::UnknownAsset,
        SceneError::Invalid(m) if m.contains("matches no assets") => ViolationCode::EmptySelection,
        _ => ViolationCode::InvalidValue,
    }
}

/// Every violation in the task list. Static checks run per task; tasks that
/// pass them are then dry-run in order on a scratch copy so that computed
/// placements (patterns, relative targets, deltas) are bounds-checked too.
pub fn validate_tasks(tasks: &[Task], scene: &SceneGraph, catalog: &AssetCatalog) -> Vec<Violation> {
    let bounds = PlacementBounds::of(scene);
    let mut scratch = scene.clone();
    let mut all = Vec::new();
    for (index, t) in tasks.iter().enumerate() {
        let mut c = Checker {
            catalog,
            scene: &scratch,
            bounds,
            index,
            kind: t.intent().as_str(),
            out: Vec::new(),
        };
        c.task(t);
        let mut found = c.out;
        if found.is_empty() {
            let mut trial = scratch.clone();
            match execute_task(&mut trial, t) {
                Ok((diff, _)) => {
                    let outside = diff
                        .edits
                        .iter()
                        .filter_map(|e| match e {
                            Edit::Add { asset } => Some((asset.id.clone(), asset.position())),
                            Edit::SetPose { id, after, .. } => Some((id.clone(), *after.translation())),
                            _ => None,
                        })
                        .filter(|(_, p)| !bounds.contains(p))
                        .collect::<Vec<_>>();
                    if let Some((id, p)) = outside.first() {
                        found.push(Violation {
                            task_index: index,
                            task: t.intent().as_str().to_string(),
                            code: ViolationCode::OutOfBounds,
                            message: format!(
                                "{} placement(s) outside the bounds, first {id} at ({:.2}, {:.2}, {:.2})",
                                outside.len(),
                                p.x,
                                p.y,
                                p.z
                            ),
                        });
                    } else {
                        scratch = trial;
                    }
                }
                Err(e) => found.push(Violation {
                    task_index: index,
                    task: t.intent().as_str().to_string(),
                    code: code_for(&e),
                    message: e.to_string(),
                }),
            }
        }
        all.extend(found);
    }
    all
}

use std::f64::consts::TAU;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Line,
    Circle,
    Grid,
}

impl Pattern {
    pub fn parse(s: &str) -> Option<Pattern> {
        match s.trim().to_lowercase().as_str() {
            "line" | "row" => Some(Self::Line),
            "circle" | "ring" => Some(Self::Circle),
            "grid" => Some(Self::Grid),
            _ => None,
        }
    }
}

/// Target positions for `n` assets. Lines run along +x from `origin`;
/// circles are centered on `origin` with radius `spacing·n/(2π)` so adjacent
/// arcs have length `spacing`; grids fill ⌈√n⌉ columns along +x, rows along
/// +y. A single asset always lands on `origin`.
pub fn arrange_positions(pattern: Pattern, n: usize, spacing: f64, origin: Vector3<f64>) -> Vec<Vector3<f64>> {
    if n <= 1 {
        return vec![origin; n];
    }
    match pattern {
        Pattern::Line => (0..n).map(|i| origin + Vector3::x() * (i as f64 * spacing)).collect(),
        Pattern::Circle => {
            let r = spacing * n as f64 / TAU;
            (0..n)
                .map(|i| {
                    let th = TAU * i as f64 / n as f64;
                    origin + Vector3::new(r * th.cos(), r * th.sin(), 0.0)
                })
                .collect()
        }
        Pattern::Grid => {
            let cols = (n as f64).sqrt().ceil() as usize;
            (0..n)
                .map(|i| {
                    let (row, col) = (i / cols, i % cols);
                    origin + Vector3::new(col as f64 * spacing, row as f64 * spacing, 0.0)
                })
                .collect()
        }
    }
}

/// Reference point for placement: a named anchor or explicit coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Origin {
    Anchor(String),
    Point([f64; 3]),
}

impl From<Vector3<f64>> for Origin {
    fn from(v: Vector3<f64>) -> Self {
        Origin::Point([v.x, v.y, v.z])
    }
}

impl From<&str> for Origin {
    fn from(s: &str) -> Self {
        Origin::Anchor(s.to_string())
    }
}

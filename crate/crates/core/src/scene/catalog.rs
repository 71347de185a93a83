use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Representation, RepresentationKind, SceneError};

/// Reference naming the built-in road-scene catalog.
pub const BUILTIN_CATALOG: &str = "builtin:road";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub kind: RepresentationKind,
    /// Path (relative to the catalog file) or `builtin:<name>`.
    pub source: String,
    #[serde(default = "one")]
    pub default_scale: f64,
    /// Synonyms used by fuzzy search.
    #[serde(default)]
    pub tags: Vec<String>,
    /// Base color for mesh shading.
    #[serde(default)]
    pub color: Option<[f64; 3]>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetCatalog {
    pub name: String,
    pub classes: BTreeMap<String, CatalogEntry>,
}

/// Levenshtein distance over characters.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != *cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

impl AssetCatalog {
    pub fn new(name: impl Into<String>, classes: BTreeMap<String, CatalogEntry>) -> Result<Self, SceneError> {
        let cat = Self {
            name: name.into(),
            classes,
        };
        cat.validate()?;
        Ok(cat)
    }

    fn validate(&self) -> Result<(), SceneError> {
        if self.classes.is_empty() {
            return Err(SceneError::Catalog("catalog has no classes".into()));
        }
        for (k, e) in &self.classes {
            if !(e.default_scale > 0.0 && e.default_scale.is_finite()) {
                return Err(SceneError::Catalog(format!("class {k}: default scale must be positive")));
            }
        }
        Ok(())
    }

    /// The built-in road catalog with procedural assets.
    pub fn builtin() -> Self {
        let entry = |kind, name: &str, tags: &[&str], color: Option<[f64; 3]>| CatalogEntry {
            kind,
            source: format!("builtin:{name}"),
            default_scale: 1.0,
            tags: tags.iter().map(|s| s.to_string()).collect(),
            color,
        };
        use RepresentationKind::{Mesh, Splat};
        let classes = [
            ("traffic_cone", entry(Splat, "traffic_cone", &["cone", "pylon", "safety cone"], None)),
            ("passenger_car", entry(Splat, "passenger_car", &["car", "vehicle", "sedan"], None)),
            ("pedestrian_sign", entry(Splat, "pedestrian_sign", &["sign", "crosswalk sign"], None)),
            ("road_barrier", entry(Mesh, "road_barrier", &["barrier", "jersey barrier", "fence"], Some([0.85, 0.35, 0.1]))),
            ("cement_rubble", entry(Mesh, "cement_rubble", &["rubble", "debris", "concrete"], Some([0.55, 0.53, 0.5]))),
            ("pedestrian", entry(Mesh, "pedestrian", &["person", "walker", "human"], Some([0.2, 0.3, 0.7]))),
            ("mobile_robot", entry(Mesh, "mobile_robot", &["robot", "rover", "ackermann robot"], Some([0.15, 0.15, 0.15]))),
            ("road_surface", entry(Mesh, "road_surface", &["road", "ground", "parking lot"], Some([0.32, 0.32, 0.34]))),
        ];
        Self {
            name: BUILTIN_CATALOG.to_string(),
            classes: classes.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    /// Loads a catalog JSON file, resolving relative sources against its
    /// directory and checking that every file exists.
    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cat: AssetCatalog =
            serde_json::from_str(&text).map_err(|e| SceneError::Parse(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for (k, e) in cat.classes.iter_mut() {
            if e.source.starts_with("builtin:") {
                if !super::procedural::is_builtin(&e.source) {
                    return Err(SceneError::Catalog(format!("class {k}: unknown builtin {}", e.source)));
                }
                continue;
            }
            let p = PathBuf::from(&e.source);
            let resolved = if p.is_absolute() { p } else { base.join(p) };
            if !resolved.is_file() {
                return Err(SceneError::Catalog(format!(
                    "class {k}: source {} not found",
                    resolved.display()
                )));
            }
            e.source = resolved.display().to_string();
        }
        cat.validate()?;
        Ok(cat)
    }

    /// Resolves a scene file's `catalog_ref`.
    pub fn resolve(reference: &str, base_dir: &Path) -> Result<Self, SceneError> {
        if reference == BUILTIN_CATALOG {
            return Ok(Self::builtin());
        }
        let p = PathBuf::from(reference);
        Self::load(&if p.is_absolute() { p } else { base_dir.join(p) })
    }

    pub fn get(&self, class: &str) -> Option<&CatalogEntry> {
        self.classes.get(class)
    }

    pub fn contains(&self, class: &str) -> bool {
        self.classes.contains_key(class)
    }

    /// Entry for `class`, or an error listing near matches.
    pub fn require(&self, class: &str) -> Result<&CatalogEntry, SceneError> {
        self.get(class).ok_or_else(|| SceneError::UnknownClass {
            name: class.to_string(),
            suggestions: self.suggest(class),
        })
    }

    /// Classes within edit distance 2 of `name`, or whose tags match it,
    /// nearest first.
    pub fn suggest(&self, name: &str) -> Vec<String> {
        let q = name.trim().to_lowercase();
        let mut scored: Vec<(usize, &String)> = self
            .classes
            .iter()
            .filter_map(|(k, e)| {
                let d = std::iter::once(k.as_str())
                    .chain(e.tags.iter().map(String::as_str))
                    .map(|c| edit_distance(&q, &c.to_lowercase()))
                    .min()
                    .unwrap_or(usize::MAX);
                (d <= 2).then_some((d, k))
            })
            .collect();
        scored.sort();
        scored.into_iter().map(|(_, k)| k.clone()).collect()
    }

    /// Classes whose name or tags contain `term`.
    pub fn search_tags(&self, term: &str) -> Vec<String> {
        let q = term.to_lowercase();
        self.classes
            .iter()
            .filter(|(k, e)| k.contains(&q) || e.tags.iter().any(|t| t.to_lowercase() == q))
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn representation(&self, class: &str) -> Result<Representation, SceneError> {
        let e = self.require(class)?;
        Ok(Representation {
            kind: e.kind,
            source: e.source.clone(),
        })
    }

    /// One line per class, for prompts.
    pub fn summary(&self) -> String {
        self.classes
            .iter()
            .map(|(k, e)| {
                let kind = match e.kind {
                    RepresentationKind::Splat => "splat",
                    RepresentationKind::Mesh => "mesh",
                };
                if e.tags.is_empty() {
                    format!("- {k} ({kind})")
                } else {
                    format!("- {k} ({kind}; aka {})", e.tags.join(", "))
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edit_distances() {
        assert_eq!(edit_distance("trafic_cone", "traffic_cone"), 1);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
    }

    #[test]
    fn misspelled_class_gets_a_suggestion() {
        let cat = AssetCatalog::builtin();
        match cat.require("trafic_cone") {
            Err(SceneError::UnknownClass { suggestions, .. }) => {
                assert_eq!(suggestions.first().map(String::as_str), Some("traffic_cone"))
            }
            other => panic!("{other:?}"),
        }
        assert!(cat.suggest("dragon").is_empty());
        assert_eq!(cat.search_tags("cone"), vec!["traffic_cone".to_string()]);
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("box.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        let json = r#"{"name":"t","classes":{"crate":{"kind":"mesh","source":"box.obj","tags":["box"]},
            "cone":{"kind":"splat","source":"builtin:traffic_cone"}}}"#;
        let path = dir.path().join("cat.json");
        std::fs::write(&path, json).unwrap();
        let cat = AssetCatalog::load(&path).unwrap();
        assert!(cat.get("crate").unwrap().source.ends_with("box.obj"));
        assert_eq!(cat.get("crate").unwrap().default_scale, 1.0);
        std::fs::write(&path, json.replace("box.obj", "missing.obj")).unwrap();
        assert!(matches!(AssetCatalog::load(&path), Err(SceneError::Catalog(_))));
    }
}

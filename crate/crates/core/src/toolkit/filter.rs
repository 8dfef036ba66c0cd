//! Deterministic semantic target filter: normalized string match plus a
//! shipped synonym/hypernym table, so the primary suite needs no model.

use std::collections::{BTreeMap, BTreeSet};

const BUILTIN_TABLE: &str = include_str!("../../assets/synonyms.txt");

/// Lowercases, collapses punctuation runs to single spaces, and singularizes
/// plain plurals (trailing `s` on words longer than three characters, not
/// ending in a double `s`).
pub fn normalize_label(raw: &str) -> String {
    let mut words: Vec<String> = Vec::new();
    let mut current = String::new();
    for ch in raw.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    for word in &mut words {
        if word.len() > 3 && word.ends_with('s') && !word.ends_with("ss") {
            word.pop();
        }
    }
    words.join(" ")
}

/// Directional target-to-labels table, keyed by normalized strings.
#[derive(Debug, Clone, Default)]
pub struct SynonymTable {
    map: BTreeMap<String, BTreeSet<String>>,
}

impl SynonymTable {
    /// The table shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_text(BUILTIN_TABLE)
    }

    /// Parses `target = label, label, ...` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Self {
        let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((target, labels)) = line.split_once('=') else {
                continue;
            };
            let entry = map.entry(normalize_label(target)).or_default();
            for label in labels.split(',') {
                let norm = normalize_label(label);
                if !norm.is_empty() {
                    entry.insert(norm);
                }
            }
        }
        Self { map }
    }

    pub fn from_file(path: &std::path::Path) -> std::io::Result<Self> {
        Ok(Self::from_text(&std::fs::read_to_string(path)?))
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Whether a query for `target` should accept `label` (both normalized).
    pub fn matches(&self, target: &str, label: &str) -> bool {
        if target == label {
            return true;
        }
        self.map.get(target).map_or(false, |set| set.contains(label))
    }
}

/// Subset of `labels` that a query for `target` matches, preserving the
/// callers' label spelling.
pub fn semantic_target_filter<'a>(
    target: &str,
    labels: impl IntoIterator<Item = &'a str>,
    table: &SynonymTable,
) -> Vec<&'a str> {
    let target_norm = normalize_label(target);
    labels
        .into_iter()
        .filter(|label| table.matches(&target_norm, &normalize_label(label)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_plural_matches() {
        let table = SynonymTable::builtin();
        assert_eq!(
            semantic_target_filter("ship", ["ship", "car"], &table),
            vec!["ship"]
        );
        assert_eq!(
            semantic_target_filter("ships", ["ship"], &table),
            vec!["ship"]
        );
        assert_eq!(
            semantic_target_filter("Ship", ["SHIP"], &table),
            vec!["SHIP"]
        );
    }

    #[test]
    fn hypernym_matches_members_only() {
        let table = SynonymTable::builtin();
        assert_eq!(
            semantic_target_filter("vehicle", ["car", "ship"], &table),
            vec!["car"]
        );
        // directional: querying a member does not match the hypernym
        assert!(semantic_target_filter("car", ["vehicle"], &table).is_empty());
    }

    #[test]
    fn unknown_target_matches_nothing() {
        let table = SynonymTable::builtin();
        assert!(semantic_target_filter("xyzzy", ["car", "ship"], &table).is_empty());
    }

    #[test]
    fn normalization_collapses_punctuation() {
        assert_eq!(normalize_label("Oil-Tanks"), "oil tank");
        assert_eq!(normalize_label("  Storage   tank "), "storage tank");
        assert_eq!(normalize_label("bus"), "bus");
        assert_eq!(normalize_label("class"), "class");
    }

    #[test]
    fn custom_table_text() {
        let table = SynonymTable::from_text("widget = gizmo, doohickey # note\n");
        assert!(table.matches("widget", "gizmo"));
        assert!(!table.matches("gizmo", "widget"));
    }
}

//! Known ground-state energies keyed by instance id.
//!
//! Text format, one entry per line: `gs <instance-id> <E0>`. Blank lines and
//! lines starting with `#` are skipped.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Two entries for the same id agree if they differ by no more than this.
const AGREE: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundStateRegistry {
    entries: BTreeMap<String, f64>,
}

impl GroundStateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry. Re-adding the same id is fine if the energies agree.
    pub fn insert(&mut self, id: impl Into<String>, e0: f64) -> Result<()> {
        let id = id.into();
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(Error::param(format!("invalid instance id '{id}'")));
        }
        if !e0.is_finite() {
            return Err(Error::param(format!("non-finite ground energy for '{id}'")));
        }
        match self.entries.get(&id) {
            Some(&old) if (old - e0).abs() > AGREE => Err(Error::InvalidInstance(format!(
                "conflicting ground energies for '{id}': {old} and {e0}"
            ))),
            Some(_) => Ok(()),
            None => {
                self.entries.insert(id, e0);
                Ok(())
            }
        }
    }

    pub fn get(&self, id: &str) -> Result<f64> {
        self.entries
            .get(id)
            .copied()
            .ok_or_else(|| Error::NoGroundTruth(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Merges another registry, with the same conflict rule as [`insert`](Self::insert).
    pub fn merge(&mut self, other: &GroundStateRegistry) -> Result<()> {
        for (id, e0) in other.iter() {
            self.insert(id, e0)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut reg = Self::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: k + 1, msg };
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 3 || tok[0] != "gs" {
                return Err(err(format!("expected 'gs <id> <E0>', got '{line}'")));
            }
            let e0: f64 = tok[2]
                .parse()
                .map_err(|_| err(format!("cannot parse energy '{}'", tok[2])))?;
            reg.insert(tok[1], e0).map_err(|e| err(e.to_string()))?;
        }
        Ok(reg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, e0) in &self.entries {
            let _ = writeln!(out, "gs {id} {e0:?}");
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Reads a registry file.
pub fn import_ground_states(path: impl AsRef<Path>) -> Result<GroundStateRegistry> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GroundStateRegistry::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_missing() {
        let reg = GroundStateRegistry::parse("# header\ngs a -12.5\n\ngs b -3.25\n").unwrap();
        assert_eq!(reg.get("a").unwrap(), -12.5);
        assert_eq!(reg.len(), 2);
        assert!(matches!(reg.get("zzz"), Err(Error::NoGroundTruth(id)) if id == "zzz"));
    }

    #[test]
    fn conflicting_duplicate_is_rejected() {
        assert!(matches!(
            GroundStateRegistry::parse("gs a -1.0\ngs a -2.0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        // an exact repeat is harmless
        assert_eq!(GroundStateRegistry::parse("gs a -1.0\ngs a -1.0\n").unwrap().len(), 1);
    }

    #[test]
    fn malformed_lines() {
        assert!(GroundStateRegistry::parse("gs a\n").is_err());
        assert!(GroundStateRegistry::parse("gs a x\n").is_err());
        assert!(GroundStateRegistry::parse("e a 1.0\n").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gs.txt");
        let mut reg = GroundStateRegistry::new();
        reg.insert("sg_4x4x4_open_s1_i0", -0.1 - 0.2).unwrap();
        reg.insert("fm", -12.5).unwrap();
        reg.save(&path).unwrap();
        assert_eq!(import_ground_states(&path).unwrap(), reg);
        assert!(matches!(
            import_ground_states(dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }
}

//! Run manifests: flat `key=value` files recording how artifacts were made.
//!
//! The command line is stored as `arg.0`, `arg.1`, ... with any defaulted
//! seed made explicit, so a manifest can be replayed to reproduce its outputs.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(subcommand: &str, args: &[String]) -> Self {
        let mut m = Manifest::default();
        m.set("tool", "sbm");
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set("subcommand", subcommand);
        for (i, a) in args.iter().enumerate() {
            m.set(&format!("arg.{i}"), a);
        }
        m
    }

    /// Sets a key, replacing any earlier value.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Recorded command-line arguments, in order.
    pub fn args(&self) -> Vec<String> {
        let mut args = Vec::new();
        while let Some(a) = self.get(&format!("arg.{}", args.len())) {
            args.push(a.to_string());
        }
        args
    }

    /// Records the wall-clock seconds since `start` under `time.<phase>_s`.
    pub fn time(&mut self, phase: &str, start: Instant) {
        self.set(&format!("time.{phase}_s"), format!("{:.3}", start.elapsed().as_secs_f64()));
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::default();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t.split_once('=').with_context(|| format!("manifest line {}: expected key=value", i + 1))?;
            m.entries.push((k.to_string(), v.to_string()));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = Manifest::new("sample", &["sample".into(), "--seed".into(), "3".into()]);
        m.set("hp.alpha", 1.5);
        m.set("hp.alpha", 2);
        let back = Manifest::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get("hp.alpha"), Some("2"));
        assert_eq!(back.args(), vec!["sample", "--seed", "3"]);
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(Manifest::parse("tool=sbm\nbroken\n").is_err());
    }
}

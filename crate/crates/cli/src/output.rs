//! Deterministic CSV artifacts with a `#`-prefixed metadata header.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::config::ScenarioConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A file produced by a subcommand, held in memory until written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.bytes).expect("artifacts are UTF-8")
    }

    pub fn write_to(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join(&self.name);
        fs::write(&path, &self.bytes)?;
        Ok(path)
    }
}

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct Header {
    lines: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str, config: &ScenarioConfig) -> Self {
        let fiber = &config.fiber;
        let mut h = Self { lines: Vec::new() };
        h.push("tool", format!("otdr {VERSION}"));
        h.push("command", command);
        h.push(
            "fiber",
            format!(
                "L={} energy={} eta={}",
                fiber.blocks(),
                num(fiber.energy()),
                num(otdr_core::fiber::forward_loss(fiber))
            ),
        );
        let attacks: Vec<String> = config
            .all_attacks()
            .iter()
            .enumerate()
            .map(|(i, a)| format!("{i}:(position={} tau={} theta={})", a.position, num(a.tau), num(a.theta)))
            .collect();
        h.push("attacks", attacks.join(" "));
        h
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.lines.push((key.to_owned(), value.into()));
        self
    }

    /// The header lines alone, as a `key: value` sidecar file.
    pub fn metadata_artifact(&self, name: &str) -> Artifact {
        let bytes = self.lines.iter().flat_map(|(k, v)| format!("{k}: {v}\n").into_bytes()).collect();
        Artifact { name: name.to_owned(), bytes }
    }

    fn render(&self, out: &mut Vec<u8>) {
        for (k, v) in &self.lines {
            out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        }
    }
}

pub fn csv_artifact<I>(name: &str, header: &Header, columns: &[&str], rows: I) -> csv::Result<Artifact>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut bytes = Vec::new();
    header.render(&mut bytes);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(bytes);
    w.write_record(columns)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(Artifact { name: name.to_owned(), bytes })
}

//! CSV tables with a `#` manifest header.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::Failure;

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct Manifest {
    config: String,
    subcommand: String,
    overrides: Vec<(String, String)>,
    out: String,
    sha256: String,
}

impl Manifest {
    pub fn new(config: &Path, subcommand: &str, overrides: Vec<(String, String)>, out: &Path, bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        let mut sha256 = String::with_capacity(64);
        for b in digest {
            let _ = write!(sha256, "{b:02x}");
        }
        Manifest {
            config: config.display().to_string(),
            subcommand: subcommand.to_string(),
            overrides,
            out: out.display().to_string(),
            sha256,
        }
    }

    fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tool: stargraph {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# subcommand: {}", self.subcommand);
        let _ = writeln!(s, "# config: {}", self.config);
        let _ = writeln!(s, "# config_sha256: {}", self.sha256);
        let ov: Vec<String> = self.overrides.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "# overrides: {}", ov.join(" "));
        let _ = writeln!(s, "# out: {}", self.out);
        s
    }
}

pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn write(&self, dir: &Path, name: &str, manifest: &Manifest) -> Result<(), Failure> {
        let mut s = manifest.header();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(name);
        std::fs::write(&path, s).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
    }
}

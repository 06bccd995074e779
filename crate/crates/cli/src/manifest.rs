use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::{DateTime, Utc};
use serde::Serialize;

/// Audit record written as `manifest.json` in every run directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub tool_version: String,
    pub seed: u64,
    pub workers: Option<usize>,
    /// Exact configuration text the run used, loadable with `--config`.
    pub config: String,
    pub started: String,
    pub finished: Option<String>,
    /// File names relative to the run directory.
    pub outputs: Vec<String>,
    pub assertions: BTreeMap<String, bool>,
}

pub struct RunDir {
    path: PathBuf,
    manifest: RunManifest,
}

impl RunDir {
    /// Create `<base>/<command>-<timestamp>-seed<seed>`, adding a counter if that name is taken.
    pub fn create(
        base: &Path,
        command: &str,
        started: DateTime<Utc>,
        seed: u64,
        workers: Option<usize>,
        config: String,
    ) -> anyhow::Result<Self> {
        let stem = format!("{command}-{}-seed{seed}", started.format("%Y%m%dT%H%M%SZ"));
        fs::create_dir_all(base).with_context(|| format!("creating {}", base.display()))?;
        let mut path = base.join(&stem);
        let mut n = 1;
        while path.exists() {
            path = base.join(format!("{stem}-{n}"));
            n += 1;
        }
        fs::create_dir(&path).with_context(|| format!("creating {}", path.display()))?;
        let manifest = RunManifest {
            command: command.to_string(),
            args: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            workers,
            config,
            started: started.to_rfc3339(),
            finished: None,
            outputs: Vec::new(),
            assertions: BTreeMap::new(),
        };
        let dir = Self { path, manifest };
        dir.write_text("config.txt", &dir.manifest.config.clone())?;
        Ok(dir)
    }

    /// Path for an output file, recorded in the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
        self.path.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> anyhow::Result<()> {
        let p = self.path.join(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }

    pub fn assertion(&mut self, name: &str, passed: bool) {
        self.manifest.assertions.insert(name.to_string(), passed);
    }

    pub fn all_passed(&self) -> bool {
        self.manifest.assertions.values().all(|&ok| ok)
    }

    pub fn finish(mut self) -> anyhow::Result<PathBuf> {
        self.manifest.finished = Some(Utc::now().to_rfc3339());
        if !self.manifest.outputs.iter().any(|o| o == "config.txt") {
            self.manifest.outputs.insert(0, "config.txt".into());
        }
        let text = serde_json::to_string_pretty(&self.manifest)?;
        self.write_text("manifest.json", &text)?;
        Ok(self.path)
    }
}

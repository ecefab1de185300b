//! Run report and atomic artifact output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeProbability {
    pub outcome: usize,
    pub label: String,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Accuracies {
    pub mean: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Default, Serialize)]
pub struct RunReport {
    pub scheme_id: String,
    pub command: String,
    pub seed: u64,
    /// Derived seeds by sub-task, for replay.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub seeds: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub probabilities: Vec<OutcomeProbability>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub kernel_paths: Vec<String>,
    /// Per-state fidelities against the reference model of the command.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fidelities: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracies: Option<Accuracies>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    /// Artifact names, relative to the output directory.
    pub files: Vec<String>,
    /// Wall-clock milliseconds per stage; printed, never written to disk.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub timings_ms: BTreeMap<String, f64>,
}

/// Records stage durations.
pub struct Stopwatch {
    last: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            last: Instant::now(),
        }
    }

    pub fn lap(&mut self, report: &mut RunReport, stage: &str) {
        let now = Instant::now();
        report
            .timings_ms
            .insert(stage.to_string(), (now - self.last).as_secs_f64() * 1e3);
        self.last = now;
    }
}

/// Files produced by a command, held in memory until the run succeeds.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file as `<name>.tmp` and renames it into place.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, contents)?;
            fs::rename(&tmp, &target)?;
            written.push(target);
        }
        Ok(written)
    }
}

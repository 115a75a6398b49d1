//! Experiment registry, report persistence and replay behind the command
//! line tool.

mod experiments;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::nse_solver::{load_trajectory, save_trajectory, sha256_hex, FileEntry, Trajectory, MANIFEST_NAME};

pub use experiments::{registry, stability_checks};

pub const REPORT_NAME: &str = "report.json";
pub const OUT_ENV: &str = "BESOVLAB_OUT";

/// How a measured value is judged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Bound {
    Below { limit: f64 },
    AtMost { limit: f64 },
    AtLeast { limit: f64 },
    Above { limit: f64 },
    Within { low: f64, high: f64 },
    /// Boolean property, recorded as 1 or 0.
    True,
}

impl Bound {
    pub fn admits(&self, v: f64) -> bool {
        match *self {
            Bound::Below { limit } => v < limit,
            Bound::AtMost { limit } => v <= limit,
            Bound::AtLeast { limit } => v >= limit,
            Bound::Above { limit } => v > limit,
            Bound::Within { low, high } => v >= low && v <= high,
            Bound::True => v == 1.0,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Bound::Below { limit } => format!("< {limit:e}"),
            Bound::AtMost { limit } => format!("<= {limit:e}"),
            Bound::AtLeast { limit } => format!(">= {limit:e}"),
            Bound::Above { limit } => format!("> {limit:e}"),
            Bound::Within { low, high } => format!("in [{low:e}, {high:e}]"),
            Bound::True => "holds".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, bound: Bound) -> Check {
        Check {
            name: name.into(),
            passed: bound.admits(value),
            value,
            bound,
        }
    }

    pub fn flag(name: impl Into<String>, holds: bool) -> Check {
        Check::new(name, if holds { 1.0 } else { 0.0 }, Bound::True)
    }
}

/// A CSV table written next to the report.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Table {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// What an experiment hands back before persistence.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub data: Value,
    pub tables: Vec<Table>,
    pub trajectories: Vec<(String, Trajectory)>,
}

/// Command-line overrides applied on top of an experiment's config.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub n: Option<usize>,
    pub seed: Option<u64>,
}

pub type RunFn = fn(&Value, &Overrides) -> Result<Outcome>;

pub struct ExperimentSpec {
    pub name: &'static str,
    pub criterion: u32,
    pub summary: &'static str,
    pub run: RunFn,
}

pub fn find(name: &str) -> Option<&'static ExperimentSpec> {
    registry().iter().find(|e| e.name == name)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub experiment: String,
    /// Raw config; `null` selects the defaults.
    pub config: Value,
    pub overrides: Overrides,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub criterion: u32,
    pub descriptor: Descriptor,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub data: Value,
    pub artifacts: Vec<FileEntry>,
}

/// Failure classes, each with its process exit code.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Config(m) | RunError::Numerical(m) => m,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> RunError {
        match e {
            Error::NonFinite(_) | Error::Unstable(_) => RunError::Numerical(e.to_string()),
            _ => RunError::Config(e.to_string()),
        }
    }
}

/// Deserializes an experiment config, treating `null` as "all defaults".
pub fn parse_config<C: for<'de> Deserialize<'de> + Default>(raw: &Value) -> Result<C> {
    if raw.is_null() {
        return Ok(C::default());
    }
    Ok(serde_json::from_value(raw.clone())?)
}

pub fn read_config(path: &Path) -> Result<Value> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, bytes)?;
    Ok(FileEntry {
        name: name.into(),
        sha256: sha256_hex(bytes),
    })
}

/// Runs an experiment and writes `report.json`, its CSV tables and snapshot
/// directories under `out/<experiment>/`.
pub fn run(descriptor: &Descriptor, out: &Path) -> Result<(Report, PathBuf), RunError> {
    let spec = find(&descriptor.experiment)
        .ok_or_else(|| RunError::Config(format!("unknown experiment '{}'", descriptor.experiment)))?;
    if descriptor.threads == 0 {
        return Err(RunError::Config("thread count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(descriptor.threads)
        .build()
        .map_err(|e| RunError::Config(e.to_string()))?;
    let outcome = pool.install(|| (spec.run)(&descriptor.config, &descriptor.overrides))?;
    let dir = out.join(spec.name);
    fs::create_dir_all(&dir).map_err(Error::from)?;
    let mut artifacts = Vec::new();
    for t in &outcome.tables {
        artifacts.push(write_file(&dir, &format!("{}.csv", t.name), t.to_csv().as_bytes())?);
    }
    for (label, traj) in &outcome.trajectories {
        let rel = format!("snapshots/{label}");
        save_trajectory(traj, &dir.join(&rel))?;
        let manifest = fs::read(dir.join(&rel).join(MANIFEST_NAME)).map_err(Error::from)?;
        artifacts.push(FileEntry {
            name: format!("{rel}/{MANIFEST_NAME}"),
            sha256: sha256_hex(&manifest),
        });
    }
    let report = Report {
        experiment: spec.name.into(),
        criterion: spec.criterion,
        descriptor: descriptor.clone(),
        passed: outcome.checks.iter().all(|c| c.passed),
        checks: outcome.checks,
        data: outcome.data,
        artifacts,
    };
    let bytes = serde_json::to_vec_pretty(&report).map_err(Error::from)?;
    fs::write(dir.join(REPORT_NAME), bytes).map_err(Error::from)?;
    Ok((report, dir))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayOutcome {
    pub report: PathBuf,
    pub artifacts_checked: usize,
    /// Set when the experiment was rerun: whether the fresh report is
    /// byte-identical to the stored one.
    pub rerun_identical: Option<bool>,
}

/// Verifies every artifact checksum of a stored report (snapshot manifests
/// also verify their snapshot files) and, unless `verify_only`, reruns the
/// stored descriptor and compares the report bytes.
pub fn replay(path: &Path, verify_only: bool) -> Result<ReplayOutcome> {
    let report_path = if path.is_dir() { path.join(REPORT_NAME) } else { path.to_path_buf() };
    let dir = report_path
        .parent()
        .ok_or_else(|| invalid("report path has no parent directory"))?
        .to_path_buf();
    let stored = fs::read(&report_path)?;
    let report: Report = serde_json::from_slice(&stored)?;
    for a in &report.artifacts {
        let bytes = fs::read(dir.join(&a.name))?;
        if sha256_hex(&bytes) != a.sha256 {
            return Err(Error::Format(format!("checksum mismatch for {}", a.name)));
        }
        if a.name.ends_with(MANIFEST_NAME) {
            load_trajectory(dir.join(&a.name).parent().unwrap())?;
        }
    }
    let rerun_identical = if verify_only {
        None
    } else {
        let scratch = std::env::temp_dir().join(format!("besovlab-replay-{}", std::process::id()));
        let fresh = run(&report.descriptor, &scratch).map_err(|e| Error::Format(e.message().to_string()));
        let same = match fresh {
            Ok((_, d)) => fs::read(d.join(REPORT_NAME))? == stored,
            Err(e) => {
                let _ = fs::remove_dir_all(&scratch);
                return Err(e);
            }
        };
        let _ = fs::remove_dir_all(&scratch);
        Some(same)
    };
    Ok(ReplayOutcome {
        report: report_path,
        artifacts_checked: report.artifacts.len(),
        rerun_identical,
    })
}

//! Manifests, commands and artifact writing behind the `irrtorus` binary.
//!
//! A manifest is a TOML document:
//!
//! ```toml
//! name = "irrational-confinement"
//! command = "verify-theorem"   # resonances | normalform | simulate | verify-theorem | cascade-demo | family
//! output_dir = "runs/confinement"
//!
//! [parameters]
//! weights = [1.0, 1.4142135623730951]
//! rationality = "irrational"
//! m = 1
//! n = 4
//! l = 8
//! epsilon = 0.05
//! ```
//!
//! Parameters are validated against the command's schema (see [`params`])
//! before any computation. Every run writes its artifacts into
//! `<output_dir>.partial` and renames it to `output_dir` on success, so a
//! failed run leaves no partial output. Each directory holds `report.json`
//! and `manifest.echo.json`; the latter records the resolved parameters, the
//! engine version and the wall-clock time.
//!
//! Exit status: 0 when the command's check passes, 1 when it fails or a
//! computation breaks down, 2 for invalid input.

mod commands;
mod output;
pub mod params;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
pub use output::{format_float, StagedDir};

/// Environment variable limiting concurrent sweep children.
pub const JOBS_ENV: &str = "IRRTORUS_JOBS";

/// Engine version recorded in every echo.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Resonances,
    #[serde(rename = "normalform")]
    NormalForm,
    Simulate,
    VerifyTheorem,
    CascadeDemo,
    Family,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Resonances => "resonances",
            CommandKind::NormalForm => "normalform",
            CommandKind::Simulate => "simulate",
            CommandKind::VerifyTheorem => "verify-theorem",
            CommandKind::CascadeDemo => "cascade-demo",
            CommandKind::Family => "family",
        }
    }
}

/// One run: a command, its parameters and where to put the artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub name: String,
    pub command: CommandKind,
    #[serde(default)]
    pub parameters: toml::Table,
    pub output_dir: PathBuf,
}

impl ExperimentManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))
    }

    /// Reads a manifest; a relative `output_dir` is kept relative to the working directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read manifest {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Process exit status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Pass,
    CheckFailed,
    InputError,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::CheckFailed => 1,
            ExitStatus::InputError => 2,
        }
    }

    /// Input errors map to 2; numerical breakdowns and search failures to 1.
    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::StepSizeUnderflow { .. } | Error::TooManySteps(_) | Error::SearchFailed(_) => {
                ExitStatus::CheckFailed
            }
            _ => ExitStatus::InputError,
        }
    }
}

/// What a finished run reports back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub name: String,
    pub command: CommandKind,
    pub output_dir: PathBuf,
    pub status: ExitStatus,
    /// Contents of `report.json`, or `{"error": …}` when the run failed.
    pub report: Value,
}

/// Deserializes `table` into `T`, rejecting keys `T` does not know.
pub fn parse_parameters<T>(table: &toml::Table) -> Result<T>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let parsed: T = table
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(format!("parameters: {}", e.message())))?;
    let known: BTreeSet<String> = match serde_json::to_value(&parsed) {
        Ok(Value::Object(map)) => map.keys().cloned().collect(),
        _ => BTreeSet::new(),
    };
    if let Some(key) = table.keys().find(|k| !known.contains(*k)) {
        return Err(Error::Parse(format!("parameters: unknown field `{key}`")));
    }
    Ok(parsed)
}

/// Runs one manifest: validates, computes, writes artifacts atomically.
///
/// Errors are folded into the outcome; nothing is written on failure.
pub fn run_manifest(manifest: &ExperimentManifest) -> RunOutcome {
    let started = Instant::now();
    let result = commands::execute(manifest).and_then(|art| {
        let echo = serde_json::json!({
            "name": manifest.name,
            "command": manifest.command.as_str(),
            "output_dir": manifest.output_dir,
            "parameters": art.resolved,
            "engine_version": ENGINE_VERSION,
            "wall_clock_seconds": started.elapsed().as_secs_f64(),
        });
        let staged = StagedDir::create(&manifest.output_dir)?;
        for (file, text) in &art.files {
            staged.write_text(file, text)?;
        }
        staged.write_json("report.json", &art.report)?;
        staged.write_json("manifest.echo.json", &echo)?;
        staged.commit()?;
        Ok((art.report, art.pass))
    });
    let (status, report) = match result {
        Ok((report, pass)) => (
            if pass {
                ExitStatus::Pass
            } else {
                ExitStatus::CheckFailed
            },
            report,
        ),
        Err(e) => (ExitStatus::for_error(&e), serde_json::json!({ "error": e.to_string() })),
    };
    RunOutcome {
        name: manifest.name.clone(),
        command: manifest.command,
        output_dir: manifest.output_dir.clone(),
        status,
        report,
    }
}

/// Merged result of [`sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub status: ExitStatus,
    pub runs: Vec<RunOutcome>,
}

/// Job limit from [`JOBS_ENV`], else the available parallelism.
pub fn job_limit() -> usize {
    std::env::var(JOBS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every manifest with at most `jobs` at a time and writes the merged
/// `sweep_report.json` and `sweep_summary.csv` into `out_dir`.
///
/// Output directories must be pairwise distinct; otherwise nothing runs.
/// Any failing child makes the sweep status 1, but all children complete.
pub fn sweep(manifests: &[ExperimentManifest], out_dir: &Path, jobs: usize) -> Result<SweepOutcome> {
    let mut seen = BTreeSet::new();
    for m in manifests {
        if !seen.insert(m.output_dir.clone()) {
            return Err(Error::InvalidConfig(format!(
                "output_dir {} is used by more than one manifest",
                m.output_dir.display()
            )));
        }
    }
    let mut names = BTreeSet::new();
    for m in manifests {
        if !names.insert(m.name.clone()) {
            return Err(Error::InvalidConfig(format!(
                "manifest name `{}` is not unique",
                m.name
            )));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<RunOutcome> = pool.install(|| manifests.par_iter().map(run_manifest).collect());
    let status = if runs.iter().all(|r| r.status == ExitStatus::Pass) {
        ExitStatus::Pass
    } else {
        ExitStatus::CheckFailed
    };
    let staged = StagedDir::create(out_dir)?;
    let merged: serde_json::Map<String, Value> = runs
        .iter()
        .map(|r| {
            (
                r.name.clone(),
                serde_json::json!({
                    "command": r.command.as_str(),
                    "output_dir": r.output_dir,
                    "exit_code": r.status.code(),
                    "report": r.report,
                }),
            )
        })
        .collect();
    staged.write_json("sweep_report.json", &Value::Object(merged))?;
    staged.write_text("sweep_summary.csv", &summary_csv(&runs))?;
    staged.commit()?;
    Ok(SweepOutcome { status, runs })
}

const SUMMARY_COLUMNS: [&str; 7] = [
    "epsilon",
    "gamma",
    "sup_outside",
    "threshold",
    "duhamel_gap",
    "gap_ratio",
    "margin",
];

fn summary_csv(runs: &[RunOutcome]) -> String {
    let mut out = format!("name,command,exit_code,pass,{}\n", SUMMARY_COLUMNS.join(","));
    let mut sorted: Vec<&RunOutcome> = runs.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    for r in sorted {
        let pass = r
            .report
            .get("pass")
            .and_then(Value::as_bool)
            .map_or(String::new(), |p| p.to_string());
        let cells: Vec<String> = SUMMARY_COLUMNS
            .iter()
            .map(|c| {
                r.report
                    .get(*c)
                    .and_then(Value::as_f64)
                    .map_or(String::new(), format_float)
            })
            .collect();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.name,
            r.command.as_str(),
            r.status.code(),
            pass,
            cells.join(",")
        ));
    }
    out
}

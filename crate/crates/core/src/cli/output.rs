use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Files marking a directory as a previous run's output, which may be replaced.
const MARKERS: [&str; 2] = ["manifest.echo.json", "sweep_report.json"];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A `<dir>.partial` staging directory renamed onto `<dir>` by [`StagedDir::commit`]
/// and removed if dropped uncommitted.
#[derive(Debug)]
pub struct StagedDir {
    target: PathBuf,
    partial: PathBuf,
}

impl StagedDir {
    pub fn create(target: &Path) -> Result<Self> {
        let mut name = target
            .file_name()
            .ok_or_else(|| Error::InvalidConfig(format!("output_dir {} has no final component", target.display())))?
            .to_os_string();
        name.push(".partial");
        let partial = target.with_file_name(name);
        if partial.exists() {
            fs::remove_dir_all(&partial)?;
        }
        fs::create_dir_all(&partial)?;
        Ok(Self {
            target: target.to_path_buf(),
            partial,
        })
    }

    pub fn path(&self) -> &Path {
        &self.partial
    }

    pub fn write_text(&self, file: &str, text: &str) -> Result<()> {
        fs::write(self.partial.join(file), text)?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, file: &str, value: &T) -> Result<()> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Error::Parse(format!("cannot serialize {file}: {e}")))?;
        text.push('\n');
        self.write_text(file, &text)
    }

    /// Replaces the target, which must be absent or an earlier run's output.
    pub fn commit(self) -> Result<PathBuf> {
        if self.target.exists() {
            let earlier_run = MARKERS.iter().any(|m| self.target.join(m).is_file());
            if !earlier_run {
                return Err(Error::InvalidConfig(format!(
                    "output_dir {} exists and does not hold an earlier run; refusing to replace it",
                    self.target.display()
                )));
            }
            fs::remove_dir_all(&self.target)?;
        }
        fs::rename(&self.partial, &self.target)?;
        Ok(self.target.clone())
    }
}

impl Drop for StagedDir {
    fn drop(&mut self) {
        if self.partial.exists() {
            let _ = fs::remove_dir_all(&self.partial);
        }
    }
}

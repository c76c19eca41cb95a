use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub const SUCCESS_MARKER: &str = "_SUCCESS";

/// An output directory that is marked complete only after every artifact
/// has been written.
pub struct OutputDir {
    pub path: PathBuf,
}

impl OutputDir {
    pub fn begin(path: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&path)?;
        let marker = path.join(SUCCESS_MARKER);
        if marker.exists() {
            fs::remove_file(marker)?;
        }
        Ok(OutputDir { path })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.file(name), text)?;
        Ok(())
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.file(name), text)?;
        Ok(())
    }

    pub fn finish(self) -> Result<PathBuf, CliError> {
        fs::write(self.path.join(SUCCESS_MARKER), b"")?;
        Ok(self.path)
    }
}

pub fn is_complete(dir: &Path) -> bool {
    dir.join(SUCCESS_MARKER).exists()
}

/// Fails with a data error unless `dir` holds a finished run.
pub fn require_complete(dir: &Path, what: &str) -> Result<(), CliError> {
    if is_complete(dir) {
        Ok(())
    } else {
        Err(CliError::Core(bookrating_core::Error::Data(format!(
            "{what} not found at {} (run the producing command first)",
            dir.display()
        ))))
    }
}

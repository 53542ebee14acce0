//! The run directory: every stage reads its inputs from and writes its
//! artifacts to one directory, and records what it wrote.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub struct RunDir {
    root: PathBuf,
    written: BTreeSet<String>,
}

impl RunDir {
    /// Creates the directory if needed.
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: BTreeSet::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative paths are taken inside the run directory.
    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn exists(&self, path: &str) -> bool {
        self.resolve(path).is_file()
    }

    /// Missing or unreadable inputs are configuration errors.
    pub fn read(&self, path: &str) -> CliResult<String> {
        let full = self.resolve(path);
        fs::read_to_string(&full).map_err(|e| CliError::Input(format!("cannot read {}: {e}", full.display())))
    }

    pub fn read_json<T: DeserializeOwned>(&self, path: &str) -> CliResult<T> {
        let text = self.read(path)?;
        igame_core::io::from_json(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))
    }

    pub fn read_trajectory(&self, path: &str) -> CliResult<igame_core::dynamics::Trajectory> {
        let text = self.read(path)?;
        igame_core::io::trajectory_from_csv(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))
    }

    pub fn write(&mut self, rel: &str, content: &str) -> CliResult<()> {
        let full = self.root.join(rel);
        if let Some(parent) = full.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&full, content).map_err(|e| CliError::io(&full, e))?;
        self.written.insert(rel.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> CliResult<()> {
        let text = igame_core::io::to_json(value)?;
        self.write(rel, &text)
    }

    /// Sorted relative paths written so far.
    pub fn manifest(&self) -> Vec<String> {
        self.written.iter().cloned().collect()
    }
}

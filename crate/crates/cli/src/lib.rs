//! Command-line front end: dataset files, run configuration and the
//! `simulate`, `synth`, `convert`, `train`, `eval`, `benchmark` and
//! `gradcheck` commands.
//!
//! Exit codes: 0 on success, 1 on runtime or data errors, 2 on usage or
//! configuration errors.

use std::fmt;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset;

pub use cli::Cli;
pub use commands::run;

/// Bad flags, configuration or parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<nepdf_core::Error>() {
            return if e.is_usage() { 2 } else { 1 };
        }
    }
    1
}

pub const LOCK_FILE: &str = ".nepdf.lock";

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).map_err(|e| anyhow::anyhow!("creating {}: {e}", dir.display()))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(OutputLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                anyhow::bail!("output directory {} is in use by another run ({} exists)", dir.display(), path.display())
            }
            Err(e) => anyhow::bail!("{}: {e}", path.display()),
        }
    }

    /// Locks the directory that will contain `file`.
    pub fn for_file(file: &Path) -> anyhow::Result<Self> {
        let dir = match file.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        Self::acquire(dir)
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let a = OutputLock::acquire(dir.path()).unwrap();
        assert!(OutputLock::acquire(dir.path()).is_err());
        drop(a);
        assert!(!dir.path().join(LOCK_FILE).exists());
        let _b = OutputLock::for_file(&dir.path().join("sub/x.csv")).unwrap();
        assert!(dir.path().join("sub").join(LOCK_FILE).exists());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&anyhow::Error::new(UsageError("x".into()))), 2);
        assert_eq!(exit_code(&anyhow::Error::new(nepdf_core::Error::InvalidParams("a".into()))), 2);
        assert_eq!(exit_code(&anyhow::Error::new(nepdf_core::Error::EmptyDataset)), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 1);
        let wrapped = anyhow::Error::new(UsageError("x".into())).context("while loading");
        assert_eq!(exit_code(&wrapped), 2);
    }
}

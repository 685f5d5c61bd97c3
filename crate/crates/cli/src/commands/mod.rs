pub mod eval;
pub mod explain;
pub mod gen_synthetic;
pub mod ingest;
pub mod train;

use crate::error::{CliError, Result};
use std::path::Path;

pub fn existing_dir(path: &Path, what: &str) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{what} {} is not a directory",
            path.display()
        )))
    }
}

pub fn existing_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

/// The directory a new file at `path` would land in must already exist.
pub fn writable_target(path: &Path) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if path.is_dir() {
        return Err(CliError::usage(format!(
            "{} is a directory",
            path.display()
        )));
    }
    existing_dir(parent, "output directory")
}

/// A directory the command will create; it may exist only if empty.
pub fn fresh_dir(path: &Path) -> Result<()> {
    if path.exists() {
        let empty = path.is_dir() && std::fs::read_dir(path)?.next().is_none();
        if !empty {
            return Err(CliError::usage(format!(
                "{} already exists and is not empty",
                path.display()
            )));
        }
    }
    writable_target_dir(path)
}

fn writable_target_dir(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => existing_dir(p, "parent directory"),
        _ => Ok(()),
    }
}

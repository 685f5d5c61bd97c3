//! Write-then-rename helpers so failed runs leave no partial output.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use tempfile::{NamedTempFile, TempDir};

fn parent_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = parent_of(path);
    std::fs::create_dir_all(&dir)?;
    let mut tmp = NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// A directory populated under a temporary name next to its destination.
/// Dropping it without [`StagedDir::publish`] removes everything.
pub struct StagedDir {
    tmp: TempDir,
    target: PathBuf,
}

impl StagedDir {
    pub fn new(target: &Path) -> io::Result<Self> {
        let dir = parent_of(target);
        std::fs::create_dir_all(&dir)?;
        let tmp = tempfile::Builder::new()
            .prefix(".spamlens-stage-")
            .tempdir_in(&dir)?;
        Ok(Self {
            tmp,
            target: target.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        self.tmp.path()
    }

    /// Moves the staged tree to the destination. An existing empty
    /// destination directory is replaced; a non-empty one is an error.
    pub fn publish(self) -> io::Result<()> {
        if self.target.exists() {
            let empty = self.target.is_dir() && std::fs::read_dir(&self.target)?.next().is_none();
            if !empty {
                return Err(io::Error::new(
                    io::ErrorKind::AlreadyExists,
                    format!("{} already exists", self.target.display()),
                ));
            }
            std::fs::remove_dir(&self.target)?;
        }
        let staged = self.tmp.keep();
        std::fs::rename(&staged, &self.target).inspect_err(|_| {
            let _ = std::fs::remove_dir_all(&staged);
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staged_dir_publishes_and_refuses_overwrite() {
        let root = tempfile::tempdir().unwrap();
        let target = root.path().join("out");
        let s = StagedDir::new(&target).unwrap();
        std::fs::write(s.path().join("a.txt"), b"x").unwrap();
        s.publish().unwrap();
        assert_eq!(std::fs::read(target.join("a.txt")).unwrap(), b"x");

        let s = StagedDir::new(&target).unwrap();
        let err = s.publish().unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::AlreadyExists);
        // the failed stage is cleaned up
        let leftovers: Vec<_> = std::fs::read_dir(root.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn dropped_stage_leaves_nothing() {
        let root = tempfile::tempdir().unwrap();
        {
            let s = StagedDir::new(&root.path().join("out")).unwrap();
            std::fs::write(s.path().join("a.txt"), b"x").unwrap();
        }
        assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 0);
    }

    #[test]
    fn atomic_file_write() {
        let root = tempfile::tempdir().unwrap();
        let p = root.path().join("f.bin");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 1);
    }
}

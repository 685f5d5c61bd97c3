use super::{content_hash, decode_file, io_err, DatasetError, Label, LabeledSample, Result};
use crate::io::StagedDir;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeptCounts {
    pub spam: usize,
    pub normal: usize,
}

/// Summary of one ingest run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub decoded: usize,
    pub corrupt: usize,
    pub duplicates_removed: usize,
    pub kept: KeptCounts,
}

impl IngestReport {
    pub fn total_kept(&self) -> usize {
        self.kept.spam + self.kept.normal
    }
}

const DEFAULT_LABELS: [(&str, Label); 2] = [("spam", Label::Spam), ("normal", Label::Normal)];

/// Ingests `<root>/spam/*` and `<root>/normal/*`.
pub fn ingest(root: &Path) -> Result<(Vec<LabeledSample>, IngestReport)> {
    ingest_with_labels(root, &DEFAULT_LABELS)
}

fn list_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    if !dir.is_dir() {
        return Ok(files);
    }
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Decodes every file under each `(subdirectory, label)` pair, skipping
/// undecodable files and collapsing pixel-identical duplicates. Files are
/// visited in sorted order, so the first copy of a duplicate is kept.
pub fn ingest_with_labels(
    root: &Path,
    labels: &[(&str, Label)],
) -> Result<(Vec<LabeledSample>, IngestReport)> {
    if !root.is_dir() {
        return Err(DatasetError::MissingRoot(root.to_path_buf()));
    }
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    for &(sub, label) in labels {
        let dir = root.join(sub);
        let files = list_files(&dir)?;
        let decoded: Vec<_> = files
            .par_iter()
            .map(|p| decode_file(p).map(|img| (content_hash(&img), img)))
            .collect();
        let mut kept_here = 0;
        let mut decoded_here = 0;
        for (path, res) in files.iter().zip(decoded) {
            let Ok((hash, image)) = res else {
                report.corrupt += 1;
                continue;
            };
            report.decoded += 1;
            decoded_here += 1;
            if !seen.insert(hash) {
                report.duplicates_removed += 1;
                continue;
            }
            kept_here += 1;
            let name = path
                .file_name()
                .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            samples.push(LabeledSample {
                image,
                label,
                source_id: format!("{sub}/{name}"),
                content_hash: hash,
            });
        }
        if decoded_here == 0 {
            return Err(DatasetError::EmptyLabel(dir));
        }
        match label {
            Label::Spam => report.kept.spam += kept_here,
            Label::Normal => report.kept.normal += kept_here,
        }
    }
    Ok((samples, report))
}

/// Writes samples as lossless PNGs under `<out>/<label>/<hash>.png`. The
/// directory is staged and published only once every file is written.
pub fn write_normalized(samples: &[LabeledSample], out: &Path) -> Result<()> {
    let staged = StagedDir::new(out).map_err(io_err(out))?;
    for label in [Label::Spam, Label::Normal] {
        let dir = staged.path().join(label.name());
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    }
    samples.par_iter().try_for_each(|s| -> Result<()> {
        let path = staged
            .path()
            .join(s.label.name())
            .join(format!("{}.png", &s.hash_hex()[..20]));
        s.image.to_rgb8().save(&path)?;
        Ok(())
    })?;
    staged.publish().map_err(|e| match e.kind() {
        std::io::ErrorKind::AlreadyExists => DatasetError::OutputExists(out.to_path_buf()),
        _ => DatasetError::Io {
            path: out.to_path_buf(),
            source: e,
        },
    })
}

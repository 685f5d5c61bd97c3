//! Helpers shared by the CLI test targets: running the binary, the JSON
//! schemas every `--json` output must satisfy, and small fixtures.

#![allow(dead_code)]

use image::{Rgb, RgbImage};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn spamlens() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spamlens"))
}

pub fn run(args: &[&str]) -> Output {
    spamlens().args(args).output().expect("spawn spamlens")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runs a command that must succeed and parses its single-line JSON output.
pub fn run_json<T: DeserializeOwned>(args: &[&str]) -> T {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?} failed: {}",
        stderr(&out)
    );
    let text = stdout(&out);
    assert_eq!(
        text.trim_end().lines().count(),
        1,
        "expected one JSON line, got {text:?}"
    );
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{args:?}: {e}: {text}"))
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenJson {
    pub out: PathBuf,
    pub n_per_class: usize,
    pub files: usize,
    pub seed: u64,
}

#[derive(Debug, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct KeptJson {
    pub spam: usize,
    pub normal: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestJson {
    pub decoded: usize,
    pub corrupt: usize,
    pub duplicates_removed: usize,
    pub kept: KeptJson,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainJson {
    pub checkpoint: PathBuf,
    pub history: PathBuf,
    pub train_samples: usize,
    pub test_samples: usize,
    pub epochs: usize,
    pub final_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryJson {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsJson {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainJson {
    pub method: String,
    pub explained: String,
    pub probability: f64,
    pub label: String,
    pub json: PathBuf,
    pub overlay: PathBuf,
    pub segments: Option<PathBuf>,
}

#[derive(Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LimeDoc {
    pub method: String,
    pub num_segments: usize,
    pub kept: usize,
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub fidelity_r2: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapDoc {
    pub method: String,
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub fx: f64,
    pub mode: String,
    pub n_coalitions: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapDoc {
    pub method: String,
    pub patch: usize,
    pub stride: usize,
    pub baseline: f64,
    pub grid: Vec<Vec<f64>>,
}

pub fn read_doc<T: DeserializeOwned>(path: &Path) -> T {
    let text = fs::read_to_string(path).unwrap();
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn pattern(seed: u32, w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| {
        let v = seed.wrapping_mul(2654435761).wrapping_add(x * 31 + y * 17);
        Rgb([
            (v % 251) as u8,
            (v / 7 % 241) as u8,
            (x * 255 / w.max(1)) as u8,
        ])
    })
}

/// Raw corpus with `duplicates` byte-identical copies planted among four
/// images per class, plus one truncated JPEG.
pub fn planted_corpus(root: &Path, duplicates: usize) {
    for label in ["spam", "normal"] {
        fs::create_dir_all(root.join(label)).unwrap();
    }
    for i in 0..4 {
        pattern(i, 40 + i, 30)
            .save(root.join(format!("spam/s{i}.png")))
            .unwrap();
        pattern(100 + i, 64, 64)
            .save(root.join(format!("normal/n{i}.png")))
            .unwrap();
    }
    for d in 0..duplicates {
        let (label, name) = if d % 2 == 0 {
            ("spam", "s")
        } else {
            ("normal", "n")
        };
        fs::copy(
            root.join(format!("{label}/{name}{d}.png")),
            root.join(format!("{label}/{name}{d}_copy.png")),
        )
        .unwrap();
    }
    let mut jpeg = Vec::new();
    image::DynamicImage::ImageRgb8(pattern(7, 64, 64))
        .write_to(
            &mut std::io::Cursor::new(&mut jpeg),
            image::ImageFormat::Jpeg,
        )
        .unwrap();
    fs::write(root.join("spam/broken.jpg"), &jpeg[..jpeg.len() / 2]).unwrap();
}

/// Synthetic corpus plus a one-epoch checkpoint, built through the CLI.
pub struct Trained {
    pub dir: tempfile::TempDir,
    pub corpus: PathBuf,
    pub checkpoint: PathBuf,
    pub summary: TrainJson,
}

pub fn quick_model(n_per_class: usize, epochs: usize) -> Trained {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let checkpoint = dir.path().join("model.ckpt");
    let n = n_per_class.to_string();
    let e = epochs.to_string();
    let _: GenJson = run_json(&[
        "gen-synthetic",
        "--json",
        "--seed",
        "5",
        "--out",
        path_str(&corpus),
        "--n",
        &n,
    ]);
    let summary: TrainJson = run_json(&[
        "train",
        "--json",
        "--seed",
        "5",
        "--data",
        path_str(&corpus),
        "--out",
        path_str(&checkpoint),
        "--epochs",
        &e,
        "--batch-size",
        "4",
    ]);
    Trained {
        dir,
        corpus,
        checkpoint,
        summary,
    }
}

/// One spam image from a synthetic corpus.
pub fn first_spam(corpus: &Path) -> PathBuf {
    let mut files: Vec<PathBuf> = fs::read_dir(corpus.join("spam"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files.remove(0)
}

use super::{existing_dir, existing_file};
use crate::args::{EvalArgs, SplitSel};
use crate::error::{CliError, Result};
use crate::{output, Context};
use rayon::prelude::*;
use spamlens_core::dataset::{ingest, split};
use spamlens_core::metrics::confusion;
use spamlens_core::model::{load_checkpoint, DEFAULT_THRESHOLD};
use spamlens_core::Label;
use std::path::{Path, PathBuf};

/// Reads `label,prediction` lines; blank lines and `#` comments are skipped.
fn read_predictions(path: &Path) -> Result<(Vec<Label>, Vec<Label>)> {
    let text = std::fs::read_to_string(path)?;
    let (mut labels, mut preds) = (Vec::new(), Vec::new());
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse = |s: Option<&str>| -> Result<Label> {
            s.ok_or("missing field".to_string())
                .and_then(str::parse)
                .map_err(|e| CliError::usage(format!("{}:{}: {e}", path.display(), n + 1)))
        };
        let mut fields = line.split(',');
        labels.push(parse(fields.next())?);
        preds.push(parse(fields.next())?);
        if fields.next().is_some() {
            return Err(CliError::usage(format!(
                "{}:{}: expected two fields",
                path.display(),
                n + 1
            )));
        }
    }
    Ok((labels, preds))
}

pub fn run(ctx: &Context, args: EvalArgs) -> Result<()> {
    let cfg = &ctx.config;
    let (labels, preds) = match cfg.pick(args.predictions, "predictions")? {
        Some(path) => {
            existing_file(&path, "predictions file")?;
            read_predictions(&path)?
        }
        None => {
            let ckpt: PathBuf = cfg.require(args.checkpoint, "checkpoint")?;
            let data: PathBuf = cfg.require(args.data, "data")?;
            let which = cfg.pick_or(args.split, "split", SplitSel::Test)?;
            let threshold = cfg.pick_or(args.threshold, "threshold", DEFAULT_THRESHOLD)?;
            if !(0.0..=1.0).contains(&threshold) {
                return Err(CliError::usage(format!(
                    "--threshold must lie in [0, 1], got {threshold}"
                )));
            }
            existing_file(&ckpt, "checkpoint")?;
            existing_dir(&data, "data")?;
            let model = load_checkpoint(&ckpt)?;
            let (samples, _) = ingest(&data)?;
            let samples = match which {
                SplitSel::All => samples,
                SplitSel::Test => split(samples, ctx.seed)?.test,
                SplitSel::Train => split(samples, ctx.seed)?.train,
            };
            let preds = samples
                .par_iter()
                .map(|s| {
                    model
                        .predict(s.image.as_tensor(), threshold)
                        .map(|p| p.label)
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            (samples.iter().map(|s| s.label).collect(), preds)
        }
    };
    let report = confusion(&preds, &labels)?.report();
    if ctx.json {
        output::json(&report)?;
    } else {
        println!("{report}");
    }
    Ok(())
}

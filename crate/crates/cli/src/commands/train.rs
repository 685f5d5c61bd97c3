use super::{existing_dir, writable_target};
use crate::args::TrainArgs;
use crate::error::{CliError, Result};
use crate::{output, Context};
use serde::Serialize;
use spamlens_core::dataset::{ingest, split};
use spamlens_core::io::write_atomic;
use spamlens_core::model::{accuracy_on, train_with, write_checkpoint, CnnModel, TrainConfig};
use std::path::PathBuf;

#[derive(Serialize)]
struct Summary {
    checkpoint: PathBuf,
    history: PathBuf,
    train_samples: usize,
    test_samples: usize,
    epochs: usize,
    final_loss: f64,
    train_accuracy: f64,
    test_accuracy: f64,
    seed: u64,
}

pub fn run(ctx: &Context, args: TrainArgs) -> Result<()> {
    let cfg = &ctx.config;
    let data: PathBuf = cfg.require(args.data, "data")?;
    let out: PathBuf = cfg.require(args.out, "out")?;
    let history_path = cfg
        .pick(args.history, "history")?
        .unwrap_or_else(|| out.with_extension("history.jsonl"));
    let d = TrainConfig::default();
    let config = TrainConfig {
        learning_rate: cfg.pick_or(args.learning_rate, "learning_rate", d.learning_rate)?,
        epochs: cfg.pick_or(args.epochs, "epochs", d.epochs)?,
        batch_size: cfg.pick_or(args.batch_size, "batch_size", d.batch_size)?,
        rho: cfg.pick_or(args.rho, "rho", d.rho)?,
        epsilon: cfg.pick_or(args.epsilon, "epsilon", d.epsilon)?,
        seed: ctx.seed,
        evaluate_test: false,
    };
    config
        .validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    existing_dir(&data, "data")?;
    writable_target(&out)?;
    writable_target(&history_path)?;

    let (samples, _) = ingest(&data)?;
    let split = split(samples, ctx.seed)?;
    let json = ctx.json;
    let epochs = config.epochs;
    let (model, history) = train_with(CnnModel::build(ctx.seed), &split, &config, |r| {
        if !json {
            eprintln!(
                "epoch {:>3}/{epochs}  loss {:.4}  train accuracy {:.2}%",
                r.epoch,
                r.loss,
                r.train_accuracy * 100.0
            );
        }
    })?;
    let test_accuracy = accuracy_on(&model, &split.test)?;

    let mut lines = String::new();
    for record in &history {
        lines.push_str(&serde_json::to_string(record)?);
        lines.push('\n');
    }
    write_atomic(&out, &write_checkpoint(&model))?;
    write_atomic(&history_path, lines.as_bytes())?;

    let last = history.last().expect("at least one epoch");
    let summary = Summary {
        checkpoint: out,
        history: history_path,
        train_samples: split.train.len(),
        test_samples: split.test.len(),
        epochs,
        final_loss: last.loss,
        train_accuracy: last.train_accuracy,
        test_accuracy,
        seed: ctx.seed,
    };
    if json {
        output::json(&summary)?;
    } else {
        println!(
            "trained on {} images, test accuracy {:.2}% on {} held-out images",
            summary.train_samples,
            test_accuracy * 100.0,
            summary.test_samples
        );
        println!("checkpoint  {}", summary.checkpoint.display());
        println!("history     {}", summary.history.display());
    }
    Ok(())
}

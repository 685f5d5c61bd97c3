use super::fresh_dir;
use crate::args::GenArgs;
use crate::error::{CliError, Result};
use crate::{output, Context};
use serde::Serialize;
use spamlens_core::dataset::gen_synthetic;
use std::path::PathBuf;

#[derive(Serialize)]
struct Summary {
    out: PathBuf,
    n_per_class: usize,
    files: usize,
    seed: u64,
}

pub fn run(ctx: &Context, args: GenArgs) -> Result<()> {
    let out: PathBuf = ctx.config.require(args.out, "out")?;
    let n: usize = ctx.config.require(args.n, "n")?;
    if n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    fresh_dir(&out)?;
    let files = gen_synthetic(n, ctx.seed, &out)?;
    let summary = Summary {
        out,
        n_per_class: n,
        files,
        seed: ctx.seed,
    };
    if ctx.json {
        output::json(&summary)?;
    } else {
        println!(
            "wrote {} images ({} per class) to {}",
            summary.files,
            n,
            summary.out.display()
        );
    }
    Ok(())
}

use super::{existing_dir, fresh_dir};
use crate::args::IngestArgs;
use crate::error::{CliError, Result};
use crate::{output, Context};
use spamlens_core::dataset::{ingest, write_normalized};
use std::path::PathBuf;

pub fn run(ctx: &Context, args: IngestArgs) -> Result<()> {
    let src: PathBuf = ctx.config.require(args.src, "src")?;
    let out: PathBuf = ctx.config.require(args.out, "out")?;
    existing_dir(&src, "source")?;
    fresh_dir(&out)?;

    let (samples, report) = ingest(&src)?;
    if samples.is_empty() {
        return Err(CliError::Runtime(format!(
            "no usable images under {}",
            src.display()
        )));
    }
    write_normalized(&samples, &out)?;
    if ctx.json {
        output::json(&report)?;
    } else {
        println!("decoded             {}", report.decoded);
        println!("corrupt             {}", report.corrupt);
        println!("duplicates removed  {}", report.duplicates_removed);
        println!("kept spam           {}", report.kept.spam);
        println!("kept normal         {}", report.kept.normal);
        println!("written to          {}", out.display());
    }
    Ok(())
}

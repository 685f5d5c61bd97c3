use super::{existing_file, writable_target};
use crate::args::{ExplainArgs, Method};
use crate::error::{CliError, Result};
use crate::{output, Context};
use serde::Serialize;
use spamlens_core::dataset::decode_file;
use spamlens_core::heatmap::{occlusion_map, Fill, HeatmapConfig};
use spamlens_core::io::write_atomic;
use spamlens_core::lime::{explain_with_segmentation, segment, LimeConfig};
use spamlens_core::model::{load_checkpoint, ModelError, DEFAULT_THRESHOLD};
use spamlens_core::overlay::{
    encode_png, heatmap_attribution, render_overlay, segment_attribution,
};
use spamlens_core::shap::{kernel_shap, ShapConfig};
use spamlens_core::ImageTensor;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
struct Summary {
    method: &'static str,
    explained: &'static str,
    probability: f64,
    label: spamlens_core::Label,
    json: PathBuf,
    overlay: PathBuf,
    segments: Option<PathBuf>,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn run(ctx: &Context, args: ExplainArgs) -> Result<()> {
    let cfg = &ctx.config;
    let ckpt: PathBuf = cfg.require(args.checkpoint, "checkpoint")?;
    let image_path: PathBuf = cfg.require(args.image, "image")?;
    let method: Method = cfg.require(args.method, "method")?;
    let prefix: PathBuf = cfg.require(args.out, "out")?;
    existing_file(&ckpt, "checkpoint")?;
    existing_file(&image_path, "image")?;
    let json_path = with_suffix(&prefix, ".json");
    let png_path = with_suffix(&prefix, ".png");
    let seg_path = with_suffix(&prefix, ".segments.png");
    writable_target(&json_path)?;

    let lime_d = LimeConfig::default();
    let shap_d = ShapConfig::default();
    let heat_d = HeatmapConfig::default();
    let segments = cfg.pick(args.segments, "segments")?;
    let samples = cfg.pick(args.samples, "samples")?;
    let ridge = cfg.pick(args.ridge, "ridge")?;
    let lime_config = LimeConfig {
        num_samples: samples.unwrap_or(lime_d.num_samples),
        kernel_width: cfg.pick_or(args.kernel_width, "kernel_width", lime_d.kernel_width)?,
        ridge: ridge.unwrap_or(lime_d.ridge),
        num_features: cfg.pick_or(args.features, "features", lime_d.num_features)?,
        num_segments: segments.unwrap_or(lime_d.num_segments),
        seed: ctx.seed,
    };
    let shap_config = ShapConfig {
        num_samples: samples.unwrap_or(shap_d.num_samples),
        exact_threshold: cfg.pick_or(
            args.exact_threshold,
            "exact_threshold",
            shap_d.exact_threshold,
        )?,
        num_segments: segments.unwrap_or(shap_d.num_segments),
        ridge: ridge.unwrap_or(shap_d.ridge),
        seed: ctx.seed,
    };
    let heat_config = HeatmapConfig {
        patch: cfg.pick_or(args.patch, "patch", heat_d.patch)?,
        stride: cfg.pick_or(args.stride, "stride", heat_d.stride)?,
        fill: Fill::GlobalMean,
    };
    if lime_config.num_segments < 2 || shap_config.exact_threshold == 0 {
        return Err(CliError::usage(
            "--segments must be at least 2 and --exact-threshold at least 1",
        ));
    }
    if heat_config.patch == 0 || heat_config.stride == 0 {
        return Err(CliError::usage("--patch and --stride must be positive"));
    }

    let use_logit = args.logit || cfg.pick(None, "logit")?.unwrap_or(false);

    let model = load_checkpoint(&ckpt)?;
    let image = decode_file(&image_path)?;
    let score = |img: &ImageTensor| -> std::result::Result<f64, ModelError> {
        if use_logit {
            model.logit(img.as_tensor()).map(f64::from)
        } else {
            model.probability(img.as_tensor())
        }
    };
    let probability = model.probability(image.as_tensor())?;

    let (explanation, attribution, seg_png) = match method {
        Method::Lime => {
            let seg = segment(&image, lime_config.num_segments)?;
            let e = explain_with_segmentation(&image, &seg, score, &lime_config)?;
            let attr = segment_attribution(&seg, &e.segment_weights)?;
            (e.to_json(), attr, Some(seg.to_png()?))
        }
        Method::Shap => {
            let seg = segment(&image, shap_config.num_segments)?;
            let e = kernel_shap(&image, &seg, score, &shap_config)?;
            let attr = segment_attribution(&seg, &e.phi)?;
            (e.to_json(), attr, Some(seg.to_png()?))
        }
        Method::Heatmap => {
            let map = occlusion_map(&image, score, &heat_config)?;
            let attr = heatmap_attribution(&map, image.height(), image.width());
            (map.to_json(), attr, None)
        }
    };
    let overlay = encode_png(&render_overlay(&image, &attribution)?)?;

    write_atomic(
        &json_path,
        serde_json::to_string_pretty(&explanation)?.as_bytes(),
    )?;
    write_atomic(&png_path, &overlay)?;
    if let Some(bytes) = &seg_png {
        write_atomic(&seg_path, bytes)?;
    }

    let summary = Summary {
        method: match method {
            Method::Lime => "lime",
            Method::Shap => "shap",
            Method::Heatmap => "heatmap",
        },
        explained: if use_logit { "logit" } else { "probability" },
        probability,
        label: spamlens_core::model::decide(probability, DEFAULT_THRESHOLD),
        json: json_path,
        overlay: png_path,
        segments: seg_png.map(|_| seg_path),
    };
    if ctx.json {
        output::json(&summary)?;
    } else {
        println!(
            "spam probability {:.4} ({})",
            summary.probability, summary.label
        );
        println!("explanation  {}", summary.json.display());
        println!("overlay      {}", summary.overlay.display());
        if let Some(p) = &summary.segments {
            println!("segments     {}", p.display());
        }
    }
    Ok(())
}

//! `bench prompts`: the standard prompted-vs-unprompted comparison, plus
//! the prompt-source ablation, as a markdown table.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use bevprompt_core::toytrain::{build_dataset, train_toy, PromptSource, TrainConfig};

use crate::errors::from_core;
use crate::formats::{BenchConfigJson, NoiseConfig2DJson, SceneConfigJson, TrainConfigJson};
use crate::manifest::{effective_seed, RunManifest};

/// The repo's fixed synthetic benchmark.
pub const STANDARD_BENCHMARK: &str = include_str!("../../../../benchmarks/standard.json");

#[derive(Debug, serde::Serialize)]
struct BenchRun {
    seed: u64,
    prompt_source: String,
    depth_mae_m: f64,
    yaw_mae_rad: f64,
    size_mae_m: f64,
    baseline_depth_mae_m: f64,
}

pub fn load_config(config: Option<&Path>) -> Result<BenchConfigJson> {
    match config {
        Some(p) => crate::formats::read_config(Some(p)),
        None => Ok(serde_json::from_str(STANDARD_BENCHMARK)?),
    }
}

pub fn run_prompts(config: Option<&Path>, out: Option<&Path>, threads: usize) -> Result<()> {
    let cfg = load_config(config)?;
    let scene = cfg.scene.clone().unwrap_or_default().resolve();
    let train_base = cfg.train.clone().unwrap_or_default().resolve()?;
    let noise = cfg.noise2d.clone().unwrap_or_default().resolve();
    let seeds = cfg.seeds.clone().unwrap_or_else(|| vec![1, 2, 3]);

    let mut runs: Vec<BenchRun> = Vec::new();
    for &seed in &seeds {
        let seed = effective_seed(seed)?;
        for source in [PromptSource::Predicted, PromptSource::GroundTruth] {
            let train = TrainConfig {
                seed,
                prompt_source: source,
                ..train_base.clone()
            };
            let dataset = build_dataset(
                &scene,
                &noise,
                &train.model,
                source,
                train.score_filter,
                train.val_fraction,
                seed,
            )
            .map_err(from_core)?;
            let (report, _) = train_toy(&dataset, &train).map_err(from_core)?;
            runs.push(BenchRun {
                seed,
                prompt_source: source.as_str().to_string(),
                depth_mae_m: report.val_prompted.depth_mae,
                yaw_mae_rad: report.val_prompted.yaw_mae,
                size_mae_m: report.val_prompted.size_mae,
                baseline_depth_mae_m: report.val_baseline.depth_mae,
            });
        }
    }

    let mut table = String::new();
    writeln!(
        table,
        "| seed | prompts | depth MAE (m) | yaw MAE (rad) | size MAE (m) | unprompted depth MAE (m) |"
    )?;
    writeln!(table, "|---|---|---|---|---|---|")?;
    for r in &runs {
        writeln!(
            table,
            "| {} | {} | {:.3} | {:.3} | {:.3} | {:.3} |",
            r.seed, r.prompt_source, r.depth_mae_m, r.yaw_mae_rad, r.size_mae_m, r.baseline_depth_mae_m
        )?;
    }
    println!("{table}");

    if let Some(out) = out {
        super::ensure_dir(out)?;
        let doc = serde_json::json!({
            "schema_version": 1,
            "runs": runs,
        });
        std::fs::write(
            out.join("bench_report.json"),
            serde_json::to_string_pretty(&doc)?,
        )?;
        std::fs::write(out.join("bench_table.md"), table)?;
        let resolved = serde_json::json!({
            "scene": SceneConfigJson::resolved(&scene),
            "train": TrainConfigJson::resolved(&train_base),
            "noise2d": NoiseConfig2DJson::resolved(&noise),
            "seeds": seeds,
        });
        let inputs: Vec<&Path> = config.into_iter().collect();
        RunManifest::new("bench-prompts", resolved, &inputs, train_base.seed, threads)?
            .write(&out.join("manifest.json"))?;
    }
    Ok(())
}

//! Model checkpoints: a directory of named tensor containers plus a JSON
//! manifest. Tensor round trips are bitwise (the container stores raw IEEE
//! bytes).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use bevprompt_core::numerics::Tensor;
use bevprompt_core::prompt::{PromptConfig, PromptWeights};
use bevprompt_core::toytrain::{ModelConfig, ToyModel};
use serde::{Deserialize, Serialize};

use super::configs::{label_scale_name, ModelConfigJson};
use super::tensor_io::{read_tensor_auto, write_tensor_bptn, write_tensor_json};
use crate::errors::CliError;

/// Checkpoint directory manifest.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub schema_version: u32,
    pub model: ModelConfigJson,
    /// Prompt-encoder header: seed, d_model and label-scale mode.
    pub prompt_header: PromptHeader,
    /// Tensor name -> file name within the checkpoint directory.
    pub tensors: BTreeMap<String, String>,
    /// "bptn" or "json".
    pub format: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptHeader {
    pub seed: u64,
    pub d_model: usize,
    pub label_scale_mode: String,
}

/// Writes the model into `dir` (created if needed). `json_tensors` selects
/// the human-readable container.
pub fn save_checkpoint(dir: &Path, model: &ToyModel, json_tensors: bool) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let ext = if json_tensors { "json" } else { "bptn" };
    let mut tensors = BTreeMap::new();
    for (name, tensor) in model.named_tensors() {
        let file = format!("{}.{ext}", name.replace('.', "_"));
        let path = dir.join(&file);
        if json_tensors {
            write_tensor_json(&path, tensor)?;
        } else {
            write_tensor_bptn(&path, tensor)?;
        }
        tensors.insert(name, file);
    }
    let manifest = CheckpointManifest {
        schema_version: 1,
        model: ModelConfigJson::resolved(&model.cfg),
        prompt_header: PromptHeader {
            seed: model.prompt.seed,
            d_model: model.prompt.cfg.d_model,
            label_scale_mode: label_scale_name(model.prompt.cfg.label_scale).to_string(),
        },
        tensors,
        format: ext.to_string(),
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Loads a checkpoint directory back into a model, revalidating shapes.
pub fn load_checkpoint(dir: &Path) -> Result<ToyModel> {
    let manifest_path = dir.join("manifest.json");
    let raw = fs::read_to_string(&manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let manifest: CheckpointManifest =
        serde_json::from_str(&raw).with_context(|| format!("parsing {}", manifest_path.display()))?;
    if manifest.schema_version != 1 {
        bail!(CliError::schema(format!(
            "unsupported checkpoint schema version {}",
            manifest.schema_version
        )));
    }
    let model_cfg: ModelConfig = manifest.model.resolve()?;

    let read = |name: &str| -> Result<Tensor> {
        let file = manifest.tensors.get(name).ok_or_else(|| {
            anyhow::Error::from(CliError::schema(format!("checkpoint missing tensor {name:?}")))
        })?;
        read_tensor_auto(&dir.join(file))
    };

    // Rebuild on the init skeleton, then overwrite every tensor from disk.
    let mut model = ToyModel::init(manifest.prompt_header.seed, &model_cfg)
        .map_err(crate::errors::from_core)?;
    {
        let names: Vec<String> = model.named_tensors().iter().map(|(n, _)| n.clone()).collect();
        let mut loaded: Vec<Tensor> = Vec::with_capacity(names.len());
        for name in &names {
            loaded.push(read(name)?);
        }
        for ((name, slot), tensor) in model.named_tensors_mut().into_iter().zip(loaded) {
            if slot.shape() != tensor.shape() {
                bail!(CliError::schema(format!(
                    "checkpoint tensor {name:?} has shape {:?}, expected {:?}",
                    tensor.shape(),
                    slot.shape()
                )));
            }
            *slot = tensor;
        }
    }
    // The prompt weights re-derive B from the stored seed; the overwrite
    // above already restored the trained values, so just sanity-check the
    // header agreement.
    let expected = PromptWeights::init(
        manifest.prompt_header.seed,
        PromptConfig {
            d_model: model_cfg.d_model,
            kind: model_cfg.prompt_kind,
            label_scale: model_cfg.label_scale,
            num_classes: bevprompt_core::grouping::Vocabulary::roadside().len(),
            learnable_b: model_cfg.learnable_b,
        },
    );
    if !model_cfg.learnable_b && model.prompt.b() != expected.b() {
        bail!(CliError::schema(
            "checkpoint prompt projection does not match its seed header".to_string()
        ));
    }
    Ok(model)
}

//! On-disk formats: tensor containers, JSON-lines records, calibration,
//! grouping specs, configs, checkpoints and reports.
//!
//! JSON documents are parsed strictly (unknown fields rejected); schema
//! descriptions ship under `schemas/` in the repository root.

mod calib_io;
mod checkpoint;
mod configs;
mod groupspec;
mod records;
mod report_io;
mod tensor_io;

pub use calib_io::{read_calib, write_calib, CalibJson};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest};
pub use configs::{
    EvalConfigJson, ModelConfigJson, NoiseConfig2DJson, NoiseConfig3DJson, SceneConfigJson,
    SweepConfigJson, SynthConfigJson, TrainConfigJson, YawTuneConfigJson,
};
pub use groupspec::{grouping_from_spec, read_grouping_spec, resolve_grouping, GroupingSpecJson};
pub use configs::{read_config, BenchConfigJson};
pub use records::{
    frames_from_records2d, frames_from_records3d, read_jsonl, records2d_from_frames,
    records3d_from_frames, write_jsonl, Record2D, Record3D,
};
pub use report_io::{
    eval_report_json, sweep_report_json, train_report_json, tune_report_json, write_pr_csv,
    TunePairJson,
};
pub use tensor_io::{read_tensor_auto, read_tensor_bptn, read_tensor_json, write_tensor_bptn, write_tensor_json, TensorJson};

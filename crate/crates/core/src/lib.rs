//! Roadside monocular 3D detection via 2D-detection prompting, at desk scale.
//!
//! This crate implements the algorithmic substrate of a prompted monocular
//! 3D detection pipeline for fixed roadside cameras:
//!
//! * [`numerics`] - a minimal dense f64 tensor, the attention building
//!   blocks (matmul, row softmax, layer norm, scaled dot-product attention,
//!   point-wise MLP), and a reverse-mode gradient tape with exact analytic
//!   backward passes plus a finite-difference checker.
//! * [`geometry`] - pinhole projection, 3D cuboid math, axis-aligned and
//!   rotated-box IoU, and camera pitch/roll perturbation.
//! * [`prompt`] - encoding of a 2D detection `{x, y, width, height, label}`
//!   into a small matrix of feature tokens, plus the center-only and
//!   box-only ablation variants.
//! * [`fusion`] - the four-step attention module that fuses prompt tokens
//!   with image features, the concatenation baseline, and the per-detection
//!   regression head.
//! * [`yawtune`] - post-hoc yaw refinement of 3D detections against matched
//!   2D boxes.
//! * [`grouping`] - fine-class to superclass grouping strategies and
//!   multi-head routing.
//! * [`metrics`] - BEV average precision, average orientation similarity,
//!   COCO-style 2D mAP, a composite score, and occlusion/truncation/
//!   difficulty breakdowns.
//! * [`synth`] - a deterministic synthetic roadside-scene generator with
//!   simulated noisy 2D/3D detectors and a toy image-feature renderer.
//! * [`toytrain`] - an AdamW training loop that fits the prompt encoder,
//!   fusion module and regression head on synthetic data.
//!
//! Everything computes in 64-bit floats and is deterministic given a seed.
//! The crate is `no_std`-compatible (with `alloc`); enable the `libm`
//! feature when building without `std`.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("bevprompt-core requires either the `std` or the `libm` feature");

extern crate alloc;

mod fmath;

pub mod error;
pub mod fusion;
pub mod geometry;
pub mod grouping;
pub mod metrics;
pub mod prompt;
pub mod numerics;
pub mod rng;
pub mod synth;
pub mod toytrain;
pub mod yawtune;

pub use error::Error;

//! IO, file formats, run manifests and the CLI runners for the prompted
//! roadside monocular 3D detection toolkit.
//!
//! The algorithmic substrate lives in `bevprompt-core`; this crate owns
//! everything that touches the filesystem: the tensor container, JSON-lines
//! detection records, calibration and config files, checkpoints, evaluation
//! reports, and the `bevprompt` binary's subcommands.

pub mod errors;
pub mod formats;
pub mod manifest;
pub mod runner;
pub mod threads;

pub use errors::{CliError, ErrorKind};

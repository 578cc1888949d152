//! Shape-agnostic person-presence detection from 4-band multispectral frames.
//!
//! Every pixel is classified on its own spectrum by a tiny dense network, so
//! the detector cares about *what* is in view (clothing fabric) rather than
//! the silhouette it forms. The crate is organised along the data flow:
//!
//! - [`formats`]: on-disk frames, annotations, detections.
//! - [`radiometry`]: white-plate balancing and per-pixel spectrum extraction.
//! - [`mlp`]: the 4 → 16 → 8 → C classifier, its trainer and serialization.
//! - [`pipeline`]: clothing map, morphology, connected components, boxes.
//! - [`eval`]: IoU matching, precision/recall, AP and IoU sweeps.
//! - [`synth`]: material signatures, band integration and scene rendering.
//! - [`bench`](mod@bench): per-stage timing of the online path.
//! - [`cli`]: the `hitomi` command-line front end.
//!
//! The runnable programs under `examples/` walk through each capability.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod eval;
pub mod formats;
pub mod mlp;
pub mod pipeline;
pub mod radiometry;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use formats::{BBox, DetectionRecord, GroundTruthBox, LabelTable, MultibandFrame};
pub use mlp::{MlpModel, TrainConfig};
pub use pipeline::{detect, ClothingMap, DetectionSet, PipelineParams};
pub use radiometry::WbCoefficients;

/// Band centres of the prototype camera, in nanometres.
pub const DEFAULT_BAND_CENTERS_NM: [f32; 4] = [457.0, 565.0, 645.0, 735.0];
/// Full width at half maximum of each band filter, in nanometres.
pub const DEFAULT_BAND_FWHM_NM: [f32; 4] = [36.0, 25.0, 21.0, 29.0];
/// Working resolution of the prototype in binning mode.
pub const DEFAULT_WIDTH: usize = 253;
pub const DEFAULT_HEIGHT: usize = 190;

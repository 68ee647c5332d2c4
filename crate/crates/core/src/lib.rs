//! Supervoxel segmentation laboratory.
//!
//! * [`video`]: volume ingestion, resizing and smoothing.
//! * [`segment`]: batch and streaming hierarchical supervoxel segmentation.
//! * [`render`]: random-color and boundary renderings of a labeling.
//! * [`motion`]: dense optical flow and its per-frame center of mass.
//! * [`ssc`]: supervoxel shape context descriptors.
//! * [`recognition`]: codebooks, bag-of-words and leave-one-out evaluation.
//! * [`study`]: the forced-choice perception study backend.
//! * [`analysis`]: match rates, confusion tables and response-time densities.
//! * [`synth`]: synthetic clips for tests and demos.

pub mod analysis;
pub mod error;
pub mod labels;
pub mod motion;
pub mod recognition;
pub mod render;
pub mod segment;
pub mod study;
pub mod ssc;
pub mod synth;
pub mod video;

pub use error::{Error, Result};

//! Music feature detection with a Hebbian single-layer network.
//!
//! The crate covers the whole path from audio to classifier:
//!
//! - [`audio`]: WAV decoding and analysis framing
//! - [`dsp`]: zero-crossing rate, spectrum, centroid, MFCC, tempo, pitch
//! - [`encoding`]: per-track summaries and their 8-bit bipolar patterns
//! - [`hebbnet`]: the single-layer network and its Hebb-rule trainer
//! - [`eval`]: split validation, signed-binary error rows, accuracy, timing
//! - [`pipeline`]: training and evaluation over feature summaries
//! - [`reproduce`]: checks against the worked AND example and reference tables

pub mod audio;
pub mod dsp;
pub mod encoding;
pub mod eval;
pub mod hebbnet;
pub mod pipeline;
pub mod reproduce;

pub use audio::{frame_signal, load_wav, AudioBuffer, AudioError, FrameSpec, Window};
pub use encoding::{BinaryPattern, ClassCodes, Feature, FeatureSummary, PatternSet};
pub use hebbnet::{HebbNetwork, TrainConfig};

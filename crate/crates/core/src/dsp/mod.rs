//! Frame- and track-level audio features: zero-crossing rate, magnitude
//! spectrum, spectral centroid, mel filterbank, MFCC, tempo and pitch.

pub mod fft;
pub mod mel;
pub mod pitch;
pub mod spectral;
pub mod tempo;
mod track;

use thiserror::Error;

use crate::audio::AudioError;

pub use mel::{hz_to_mel, mel_to_hz, mfcc, MelFilterbank, MfccFrame};
pub use pitch::{estimate_pitch, Pitch, PitchConfig};
pub use spectral::{dft_magnitude, spectral_centroid, zero_crossing_rate, Spectrum};
pub use tempo::{estimate_tempo, TempoConfig, TempoEstimate};
pub use track::{analyze_track, FeatureConfig, TrackFeatures};

#[derive(Debug, Error)]
pub enum DspError {
    #[error("frame too short: {len} samples, need at least {needed}")]
    FrameTooShort { len: usize, needed: usize },
    #[error("signal too short: {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },
    #[error("transform length {0} is not a power of two")]
    NonPowerOfTwoLength(usize),
    #[error("silent frame: all magnitudes are zero")]
    SilentFrame,
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

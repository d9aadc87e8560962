use crate::audio::{frame_signal, AudioBuffer, FrameSpec};

use super::mel::{mfcc, MelFilterbank};
use super::pitch::{estimate_pitch, Pitch, PitchConfig};
use super::spectral::{dft_magnitude, spectral_centroid, zero_crossing_rate};
use super::tempo::{check_tempo_length, spectral_flux, tempo_from_onsets};
use super::tempo::{TempoConfig, TempoEstimate};
use super::DspError;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub frame: FrameSpec,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub f_min: f64,
    /// Upper filterbank edge; `None` means Nyquist.
    pub f_max: Option<f64>,
    pub tempo: TempoConfig,
    pub pitch: PitchConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame: FrameSpec::default(),
            n_mels: 26,
            n_mfcc: 13,
            f_min: 0.0,
            f_max: None,
            tempo: TempoConfig::default(),
            pitch: PitchConfig::default(),
        }
    }
}

/// Per-frame features of one track plus its global tempo.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackFeatures {
    pub zcr: Vec<f64>,
    /// Centroid per non-silent frame; silent frames are skipped.
    pub centroid: Vec<f64>,
    /// `frames x n_mfcc`.
    pub mfcc: Vec<Vec<f64>>,
    pub pitch: Vec<Pitch>,
    pub tempo: TempoEstimate,
}

/// Runs every frame-level extractor over `buf` and estimates its tempo.
///
/// Tracks shorter than the tempo estimator's minimum still get frame
/// features; their tempo is the configured default with `defaulted` set.
pub fn analyze_track(buf: &AudioBuffer, cfg: &FeatureConfig) -> Result<TrackFeatures, DspError> {
    let rate = buf.sample_rate() as f64;
    let frames = frame_signal(buf.samples(), &cfg.frame)?;
    let bank = MelFilterbank::new(
        cfg.n_mels,
        cfg.frame.frame_len,
        rate,
        cfg.f_min,
        cfg.f_max.unwrap_or(rate / 2.0),
    )?;

    let mut out = TrackFeatures {
        zcr: Vec::with_capacity(frames.len()),
        centroid: Vec::with_capacity(frames.len()),
        mfcc: Vec::with_capacity(frames.len()),
        pitch: Vec::with_capacity(frames.len()),
        tempo: TempoEstimate {
            bpm: cfg.tempo.default_bpm,
            defaulted: true,
        },
    };
    let mut spectra = Vec::with_capacity(frames.len());
    for frame in &frames {
        let spec = dft_magnitude(frame, rate)?;
        out.zcr.push(zero_crossing_rate(frame)?);
        match spectral_centroid(&spec) {
            Ok(c) => out.centroid.push(c),
            Err(DspError::SilentFrame) => {}
            Err(e) => return Err(e),
        }
        out.mfcc.push(mfcc(&spec, &bank, cfg.n_mfcc)?.coeffs);
        out.pitch.push(estimate_pitch(frame, rate, &cfg.pitch)?);
        spectra.push(spec.magnitudes().to_vec());
    }

    if check_tempo_length(buf).is_ok() {
        out.tempo = tempo_from_onsets(
            &spectral_flux(&spectra),
            rate / cfg.frame.hop as f64,
            &cfg.tempo,
        );
    }
    Ok(out)
}

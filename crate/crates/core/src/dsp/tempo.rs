//! Global tempo from the autocorrelation of a spectral-flux onset envelope.

use crate::audio::{frame_signal, AudioBuffer, FrameSpec};

use super::spectral::dft_magnitude;
use super::DspError;

/// Shortest signal accepted by [`estimate_tempo`].
pub const MIN_TEMPO_SECS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempoConfig {
    pub min_bpm: f64,
    pub max_bpm: f64,
    /// Reported when the onset envelope has no usable periodicity.
    pub default_bpm: f64,
    /// Standard deviation, in frames, of the Gaussian applied to the onset
    /// envelope before autocorrelation. Zero disables smoothing.
    pub smoothing_frames: f64,
    /// Centre of the log-normal tempo preference applied to the
    /// autocorrelation.
    pub prior_bpm: f64,
    /// Width of that preference in octaves. Zero disables it.
    pub prior_octaves: f64,
}

impl Default for TempoConfig {
    fn default() -> Self {
        Self {
            min_bpm: 40.0,
            max_bpm: 200.0,
            default_bpm: 120.0,
            smoothing_frames: 1.0,
            prior_bpm: 120.0,
            prior_octaves: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempoEstimate {
    pub bpm: f64,
    /// Set when no periodicity was found and `bpm` is the configured default.
    pub defaulted: bool,
}

/// Half-wave rectified spectral flux of consecutive magnitude spectra. The
/// first frame has no predecessor and scores zero.
pub fn spectral_flux(spectra: &[Vec<f64>]) -> Vec<f64> {
    let mut flux = Vec::with_capacity(spectra.len());
    if spectra.is_empty() {
        return flux;
    }
    flux.push(0.0);
    for pair in spectra.windows(2) {
        flux.push(
            pair[1]
                .iter()
                .zip(&pair[0])
                .map(|(now, before)| (now - before).max(0.0))
                .sum(),
        );
    }
    flux
}

fn gaussian_smooth(x: &[f64], sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return x.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let n = x.len() as isize;
    (0..n)
        .map(|t| {
            kernel
                .iter()
                .zip(-radius..=radius)
                .filter_map(|(k, off)| {
                    let i = t + off;
                    (0..n).contains(&i).then(|| k * x[i as usize])
                })
                .sum()
        })
        .collect()
}

/// Tempo in BPM of an onset envelope sampled at `frame_rate` Hz.
pub fn tempo_from_onsets(onsets: &[f64], frame_rate: f64, cfg: &TempoConfig) -> TempoEstimate {
    let fallback = TempoEstimate {
        bpm: cfg.default_bpm,
        defaulted: true,
    };
    let (lo, hi) = onsets
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if onsets.is_empty() || hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return fallback;
    }

    let envelope = gaussian_smooth(onsets, cfg.smoothing_frames);
    let mean = envelope.iter().sum::<f64>() / envelope.len() as f64;
    let centred: Vec<f64> = envelope.iter().map(|v| v - mean).collect();

    let lag_of = |bpm: f64| 60.0 * frame_rate / bpm;
    // one extra lag on each side so peaks at the range limits are found;
    // the result is clamped back into [min_bpm, max_bpm]
    let lag_min = (lag_of(cfg.max_bpm).floor() as usize).max(2);
    let lag_max = (lag_of(cfg.min_bpm).ceil() as usize).min(centred.len().saturating_sub(2));
    if lag_min >= lag_max {
        return fallback;
    }

    let prior = |lag: f64| {
        if cfg.prior_octaves <= 0.0 {
            1.0
        } else {
            let octaves = (lag_of(lag) / cfg.prior_bpm).log2();
            (-0.5 * (octaves / cfg.prior_octaves).powi(2)).exp()
        }
    };
    // score[i] belongs to lag lag_min - 1 + i so every candidate has neighbours
    let score: Vec<f64> = (lag_min - 1..=lag_max + 1)
        .map(|lag| {
            let acf: f64 = centred[..centred.len() - lag]
                .iter()
                .zip(&centred[lag..])
                .map(|(a, b)| a * b)
                .sum();
            acf * prior(lag as f64)
        })
        .collect();

    let best = (1..score.len() - 1)
        .filter(|&i| score[i] > score[i - 1] && score[i] >= score[i + 1])
        .max_by(|&a, &b| score[a].total_cmp(&score[b]));
    let Some(i) = best.filter(|&i| score[i] > 0.0) else {
        return fallback;
    };

    let (a, b, c) = (score[i - 1], score[i], score[i + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom.abs() > 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let lag = (lag_min - 1 + i) as f64 + offset;
    TempoEstimate {
        bpm: (60.0 * frame_rate / lag).clamp(cfg.min_bpm, cfg.max_bpm),
        defaulted: false,
    }
}

/// Estimates the global tempo of `buf`. Flat onset envelopes (silence,
/// stationary tones) produce the configured default with `defaulted` set.
pub fn estimate_tempo(
    buf: &AudioBuffer,
    spec: &FrameSpec,
    cfg: &TempoConfig,
) -> Result<TempoEstimate, DspError> {
    check_tempo_length(buf)?;
    let frames = frame_signal(buf.samples(), spec)?;
    let rate = buf.sample_rate() as f64;
    let spectra = frames
        .iter()
        .map(|f| dft_magnitude(f, rate).map(|s| s.magnitudes().to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(tempo_from_onsets(
        &spectral_flux(&spectra),
        rate / spec.hop as f64,
        cfg,
    ))
}

pub(crate) fn check_tempo_length(buf: &AudioBuffer) -> Result<(), DspError> {
    let needed = (MIN_TEMPO_SECS * buf.sample_rate() as f64).ceil() as usize;
    if buf.len() < needed {
        return Err(DspError::SignalTooShort {
            len: buf.len(),
            needed,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_is_rectified() {
        let flux = spectral_flux(&[vec![1.0, 1.0], vec![2.0, 0.0], vec![0.0, 3.0]]);
        assert_eq!(flux, vec![0.0, 1.0, 3.0]);
    }

    #[test]
    fn flat_envelope_defaults() {
        let est = tempo_from_onsets(&[0.5; 400], 43.0, &TempoConfig::default());
        assert!(est.defaulted);
        assert_eq!(est.bpm, 120.0);
    }

    #[test]
    fn periodic_envelope() {
        // impulses every 25 frames at 50 frames/s -> 120 BPM
        let mut env = vec![0.0; 500];
        for t in (0..500).step_by(25) {
            env[t] = 1.0;
        }
        let est = tempo_from_onsets(&env, 50.0, &TempoConfig::default());
        assert!(!est.defaulted);
        assert!((est.bpm - 120.0).abs() < 0.5, "{}", est.bpm);
    }

    #[test]
    fn short_signal_rejected() {
        let buf = AudioBuffer::new(vec![0.0; 8000 * 4], 8000).unwrap();
        assert!(matches!(
            estimate_tempo(&buf, &FrameSpec::default(), &TempoConfig::default()),
            Err(DspError::SignalTooShort { .. })
        ));
    }
}

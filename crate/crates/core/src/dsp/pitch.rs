//! Fundamental frequency by normalized autocorrelation.

use num_complex::Complex64;

use super::fft::{fft_in_place, ifft_in_place};
use super::DspError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchConfig {
    pub f_low: f64,
    pub f_high: f64,
    /// Minimum normalized autocorrelation for a frame to count as voiced.
    pub voicing_threshold: f64,
    /// The first local peak reaching this fraction of the strongest peak is
    /// taken as the period, so multiples of the period do not win.
    pub peak_fraction: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f_low: 50.0,
            f_high: 2000.0,
            voicing_threshold: 0.3,
            peak_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pitch {
    Voiced(f64),
    Unvoiced,
}

impl Pitch {
    pub fn hz(self) -> Option<f64> {
        match self {
            Pitch::Voiced(f) => Some(f),
            Pitch::Unvoiced => None,
        }
    }
}

/// `r(lag) = sum x_t x_{t+lag} / sqrt(E_head * E_tail)` for `lag` in
/// `0..=max_lag`, where the energies cover the two overlapping segments.
pub fn normalized_autocorrelation(frame: &[f64], max_lag: usize) -> Vec<f64> {
    let n = frame.len();
    let size = (2 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (b, &x) in buf.iter_mut().zip(frame) {
        b.re = x;
    }
    fft_in_place(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    ifft_in_place(&mut buf);

    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &x in frame {
        prefix.push(prefix.last().unwrap() + x * x);
    }
    let total = prefix[n];
    (0..=max_lag.min(n - 1))
        .map(|lag| {
            let head = prefix[n - lag];
            let tail = total - prefix[lag];
            let denom = (head * tail).sqrt();
            if denom <= f64::MIN_POSITIVE {
                0.0
            } else {
                (buf[lag].re / denom).clamp(-1.0, 1.0)
            }
        })
        .collect()
}

pub fn estimate_pitch(
    frame: &[f64],
    sample_rate: f64,
    cfg: &PitchConfig,
) -> Result<Pitch, DspError> {
    let needed = (2.0 * sample_rate / cfg.f_low).ceil() as usize;
    if frame.len() < needed {
        return Err(DspError::FrameTooShort {
            len: frame.len(),
            needed,
        });
    }
    let lag_min = ((sample_rate / cfg.f_high).ceil() as usize).max(1);
    let lag_max = (sample_rate / cfg.f_low).floor() as usize;
    let r = normalized_autocorrelation(frame, lag_max + 1);

    let is_peak = |lag: usize| r[lag] > r[lag - 1] && r[lag] >= r[lag + 1];
    let Some(strongest) = (lag_min..=lag_max)
        .filter(|&l| is_peak(l))
        .max_by(|&a, &b| r[a].total_cmp(&r[b]).then(b.cmp(&a)))
    else {
        return Ok(Pitch::Unvoiced);
    };
    if r[strongest] < cfg.voicing_threshold {
        return Ok(Pitch::Unvoiced);
    }
    let chosen = (lag_min..strongest)
        .find(|&l| {
            is_peak(l) && r[l] >= cfg.peak_fraction * r[strongest] && r[l] >= cfg.voicing_threshold
        })
        .unwrap_or(strongest);
    Ok(Pitch::Voiced(sample_rate / chosen as f64))
}

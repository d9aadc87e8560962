//! Mel filterbank and cepstral coefficients.

use std::f64::consts::PI;

use super::spectral::Spectrum;
use super::DspError;

/// Floor added to mel energies before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with peaks equally spaced on the mel scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    n_filters: usize,
    n_bins: usize,
    f_min: f64,
    f_max: f64,
    /// Row-major `n_filters x n_bins`.
    weights: Vec<f64>,
    peaks_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(
        n_filters: usize,
        frame_len: usize,
        sample_rate: f64,
        f_min: f64,
        f_max: f64,
    ) -> Result<Self, DspError> {
        if n_filters < 2 {
            return Err(DspError::InvalidBand(format!(
                "need at least 2 filters, got {n_filters}"
            )));
        }
        if !(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0) {
            return Err(DspError::InvalidBand(format!(
                "band [{f_min}, {f_max}] Hz invalid for sample rate {sample_rate}"
            )));
        }
        if frame_len < 2 || !frame_len.is_power_of_two() {
            return Err(DspError::NonPowerOfTwoLength(frame_len));
        }

        let n_bins = frame_len / 2 + 1;
        let bin_hz = sample_rate / frame_len as f64;
        let mel_lo = hz_to_mel(f_min);
        let mel_hi = hz_to_mel(f_max);
        // n_filters peaks plus the two band edges
        let edges: Vec<f64> = (0..n_filters + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_filters + 1) as f64))
            .collect();

        let mut weights = vec![0.0; n_filters * n_bins];
        for m in 0..n_filters {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            let row = &mut weights[m * n_bins..(m + 1) * n_bins];
            for (k, w) in row.iter_mut().enumerate() {
                let f = k as f64 * bin_hz;
                *w = if f > left && f <= center {
                    (f - left) / (center - left)
                } else if f > center && f < right {
                    (right - f) / (right - center)
                } else {
                    0.0
                };
            }
        }

        Ok(Self {
            n_filters,
            n_bins,
            f_min,
            f_max,
            weights,
            peaks_hz: edges[1..=n_filters].to_vec(),
        })
    }

    pub fn n_filters(&self) -> usize {
        self.n_filters
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn band(&self) -> (f64, f64) {
        (self.f_min, self.f_max)
    }

    pub fn row(&self, filter: usize) -> &[f64] {
        &self.weights[filter * self.n_bins..(filter + 1) * self.n_bins]
    }

    pub fn peaks_hz(&self) -> &[f64] {
        &self.peaks_hz
    }

    /// Filterbank applied to the magnitude spectrum.
    pub fn energies(&self, spec: &Spectrum) -> Result<Vec<f64>, DspError> {
        let mags = spec.magnitudes();
        if mags.len() != self.n_bins {
            return Err(DspError::DimensionMismatch(format!(
                "spectrum has {} bins, filterbank expects {}",
                mags.len(),
                self.n_bins
            )));
        }
        Ok((0..self.n_filters)
            .map(|m| self.row(m).iter().zip(mags).map(|(w, x)| w * x).sum())
            .collect())
    }
}

/// Cepstral coefficients of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccFrame {
    pub coeffs: Vec<f64>,
}

/// First `n_out` terms of the orthonormal DCT-II of `x`.
pub fn dct2_orthonormal(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                    .sum::<f64>()
        })
        .collect()
}

pub fn mfcc(spec: &Spectrum, bank: &MelFilterbank, n_mfcc: usize) -> Result<MfccFrame, DspError> {
    if n_mfcc == 0 || n_mfcc > bank.n_filters() {
        return Err(DspError::DimensionMismatch(format!(
            "n_mfcc {n_mfcc} must lie in 1..={}",
            bank.n_filters()
        )));
    }
    let log_energies: Vec<f64> = bank
        .energies(spec)?
        .into_iter()
        .map(|e| (e + LOG_FLOOR).ln())
        .collect();
    Ok(MfccFrame {
        coeffs: dct2_orthonormal(&log_energies, n_mfcc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_scale_points() {
        assert_eq!(hz_to_mel(0.0), 0.0);
        assert!((hz_to_mel(700.0) - 781.17).abs() < 0.01);
        assert!((mel_to_hz(hz_to_mel(4321.0)) - 4321.0).abs() < 1e-9);
    }

    #[test]
    fn gtzan_sized_bank() {
        let bank = MelFilterbank::new(26, 2048, 22050.0, 0.0, 11025.0).unwrap();
        assert_eq!((bank.n_filters(), bank.n_bins()), (26, 1025));
        for m in 0..26 {
            let row = bank.row(m);
            assert!(row.iter().sum::<f64>() > 0.0);
            assert!(row.iter().all(|&w| (0.0..=1.0).contains(&w)));
            // unimodal: rises then falls
            let peak = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert!(row[..=peak].windows(2).all(|w| w[0] <= w[1]));
            assert!(row[peak..].windows(2).all(|w| w[0] >= w[1]));
        }
        let bin_hz = 22050.0 / 2048.0;
        let first = (bank.peaks_hz()[0] / bin_hz).ceil() as usize;
        let last = (bank.peaks_hz()[25] / bin_hz).floor() as usize;
        for k in first..=last {
            let total: f64 = (0..26).map(|m| bank.row(m)[k]).sum();
            assert!(total > 0.0, "bin {k} uncovered");
        }
    }

    #[test]
    fn invalid_bands() {
        assert!(MelFilterbank::new(1, 512, 8000.0, 0.0, 4000.0).is_err());
        assert!(MelFilterbank::new(10, 512, 8000.0, 500.0, 400.0).is_err());
        assert!(MelFilterbank::new(10, 512, 8000.0, 0.0, 4001.0).is_err());
    }

    #[test]
    fn dct_of_constant() {
        let c = dct2_orthonormal(&[2.0; 8], 8);
        assert!((c[0] - 2.0 * 8f64.sqrt()).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn mfcc_dimension_checks() {
        let bank = MelFilterbank::new(10, 64, 8000.0, 0.0, 4000.0).unwrap();
        let spec = Spectrum::from_magnitudes(vec![1.0; 33], 125.0).unwrap();
        assert_eq!(mfcc(&spec, &bank, 5).unwrap().coeffs.len(), 5);
        assert!(mfcc(&spec, &bank, 11).is_err());
        let wrong = Spectrum::from_magnitudes(vec![1.0; 17], 250.0).unwrap();
        assert!(matches!(
            mfcc(&wrong, &bank, 5),
            Err(DspError::DimensionMismatch(_))
        ));
    }
}

use super::fft::fft_real;
use super::DspError;

/// Fraction of adjacent sample pairs whose signs differ. Zero counts as
/// nonnegative.
pub fn zero_crossing_rate(frame: &[f64]) -> Result<f64, DspError> {
    if frame.len() < 2 {
        return Err(DspError::FrameTooShort {
            len: frame.len(),
            needed: 2,
        });
    }
    let crossings = frame
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    Ok(crossings as f64 / (frame.len() - 1) as f64)
}

/// One-sided magnitude spectrum of a real frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    magnitudes: Vec<f64>,
    bin_hz: f64,
}

impl Spectrum {
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    /// Length of the frame the spectrum was computed from.
    pub fn frame_len(&self) -> usize {
        (self.magnitudes.len() - 1) * 2
    }

    /// Returns a copy with every magnitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Spectrum {
        Spectrum {
            magnitudes: self.magnitudes.iter().map(|m| m * factor).collect(),
            bin_hz: self.bin_hz,
        }
    }

    /// `(1/N) * sum |X_k|^2` over the full two-sided transform, reconstructed
    /// from the one-sided half using conjugate symmetry.
    pub fn parseval_energy(&self) -> f64 {
        let n = self.frame_len();
        let m = &self.magnitudes;
        let last = m.len() - 1;
        let mut total = m[0] * m[0];
        if last > 0 {
            total += m[last] * m[last];
            total += 2.0 * m[1..last].iter().map(|v| v * v).sum::<f64>();
        }
        total / n as f64
    }

    /// Spectrum with explicit magnitudes, for tests and synthetic inputs.
    pub fn from_magnitudes(magnitudes: Vec<f64>, bin_hz: f64) -> Result<Spectrum, DspError> {
        let n = magnitudes.len().saturating_sub(1) * 2;
        if magnitudes.len() < 2 || !n.is_power_of_two() {
            return Err(DspError::NonPowerOfTwoLength(n));
        }
        if magnitudes
            .iter()
            .any(|m| m.is_nan() || *m < 0.0 || !m.is_finite())
        {
            return Err(DspError::InvalidParameter(
                "magnitudes must be finite and nonnegative".into(),
            ));
        }
        Ok(Spectrum { magnitudes, bin_hz })
    }
}

/// Magnitudes of the one-sided DFT: `frame.len() / 2 + 1` bins spaced
/// `sample_rate / frame.len()` Hz apart.
pub fn dft_magnitude(frame: &[f64], sample_rate: f64) -> Result<Spectrum, DspError> {
    let n = frame.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(DspError::NonPowerOfTwoLength(n));
    }
    let full = fft_real(frame);
    Ok(Spectrum {
        magnitudes: full[..=n / 2].iter().map(|c| c.norm()).collect(),
        bin_hz: sample_rate / n as f64,
    })
}

/// Magnitude-weighted mean frequency in Hz.
pub fn spectral_centroid(spec: &Spectrum) -> Result<f64, DspError> {
    let total: f64 = spec.magnitudes.iter().sum();
    if total <= 0.0 {
        return Err(DspError::SilentFrame);
    }
    let weighted: f64 = spec
        .magnitudes
        .iter()
        .enumerate()
        .map(|(k, m)| k as f64 * spec.bin_hz * m)
        .sum();
    Ok(weighted / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zcr_basics() {
        assert_eq!(zero_crossing_rate(&[0.3, 0.3, 0.3, 0.3]).unwrap(), 0.0);
        assert_eq!(zero_crossing_rate(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 1.0);
        // zero is nonnegative: 0 -> -1 crosses, -1 -> 0 crosses
        assert_eq!(zero_crossing_rate(&[0.0, -1.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            zero_crossing_rate(&[1.0]),
            Err(DspError::FrameTooShort { .. })
        ));
    }

    #[test]
    fn impulse_and_zero_spectra() {
        let zero = dft_magnitude(&[0.0; 16], 16.0).unwrap();
        assert!(zero.magnitudes().iter().all(|&m| m == 0.0));
        let mut imp = vec![0.0; 16];
        imp[0] = 1.0;
        let s = dft_magnitude(&imp, 16.0).unwrap();
        assert_eq!(s.magnitudes().len(), 9);
        assert!(s.magnitudes().iter().all(|&m| (m - 1.0).abs() < 1e-15));
        assert!(matches!(
            dft_magnitude(&[0.0; 12], 16.0),
            Err(DspError::NonPowerOfTwoLength(12))
        ));
    }

    #[test]
    fn cosine_lands_in_one_bin() {
        let n = 64;
        let k = 5;
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * PI * k as f64 * t as f64 / n as f64).cos())
            .collect();
        let s = dft_magnitude(&x, 64.0).unwrap();
        for (i, &m) in s.magnitudes().iter().enumerate() {
            if i == k {
                assert!((m - n as f64 / 2.0).abs() < 1e-9);
            } else {
                assert!(m < 1e-9, "bin {i} = {m}");
            }
        }
    }

    #[test]
    fn centroid_point_masses() {
        let mut m = vec![0.0; 9];
        m[3] = 2.0;
        let s = Spectrum::from_magnitudes(m.clone(), 10.0).unwrap();
        assert_eq!(spectral_centroid(&s).unwrap(), 30.0);
        m[7] = 2.0;
        let s = Spectrum::from_magnitudes(m, 10.0).unwrap();
        assert_eq!(spectral_centroid(&s).unwrap(), 50.0);
        let silent = Spectrum::from_magnitudes(vec![0.0; 9], 10.0).unwrap();
        assert!(matches!(
            spectral_centroid(&silent),
            Err(DspError::SilentFrame)
        ));
    }
}

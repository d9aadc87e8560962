//! WAV decoding and analysis framing.
//!
//! Supports RIFF/WAVE files holding 8/16/24-bit integer PCM or 32-bit IEEE
//! float samples with one or two channels. Integer samples are scaled into
//! `[-1, 1]` by the magnitude of the type's most negative value, and stereo is
//! averaged down to mono.

use std::f64::consts::PI;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("signal too short: {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },
    #[error("invalid frame spec: {0}")]
    InvalidFrameSpec(String),
}

/// Mono PCM samples normalized to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Builds a buffer, clamping every sample into `[-1, 1]`.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::UnsupportedFormat("sample rate is zero".into()));
        }
        let samples = samples
            .into_iter()
            .map(|s| if s.is_nan() { 0.0 } else { s.clamp(-1.0, 1.0) })
            .collect();
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    Hamming,
    /// Periodic Hann; its sidelobes fall off fast enough for a
    /// magnitude-weighted centroid to sit on a pure tone.
    Hann,
}

impl Window {
    /// Window coefficients of length `len`.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hamming if len == 1 => vec![1.0],
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
            Window::Hamming => (0..len)
                .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
                .collect(),
        }
    }
}

impl std::str::FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rectangular" | "rect" => Ok(Window::Rectangular),
            "hamming" => Ok(Window::Hamming),
            "hann" | "hanning" => Ok(Window::Hann),
            other => Err(format!("unknown window `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            frame_len: 2048,
            hop: 512,
            window: Window::Hamming,
        }
    }
}

impl FrameSpec {
    pub fn validate(&self) -> Result<(), AudioError> {
        if !self.frame_len.is_power_of_two() {
            return Err(AudioError::InvalidFrameSpec(format!(
                "frame_len {} is not a power of two",
                self.frame_len
            )));
        }
        if self.hop == 0 || self.hop > self.frame_len {
            return Err(AudioError::InvalidFrameSpec(format!(
                "hop {} must lie in 1..={}",
                self.hop, self.frame_len
            )));
        }
        Ok(())
    }

    /// Number of full frames that fit in `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }
}

/// Reads and decodes a WAV file.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => AudioError::NotFound(path.display().to_string()),
        _ => AudioError::Io(e),
    })?;
    decode_wav(&bytes)
}

struct Fmt {
    format: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits: u16,
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<Fmt, AudioError> {
    if body.len() < 16 {
        return Err(AudioError::CorruptHeader(format!(
            "fmt chunk is {} bytes, expected at least 16",
            body.len()
        )));
    }
    let mut format = read_u16(body, 0);
    if format == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the sub-format GUID.
        if body.len() < 26 {
            return Err(AudioError::CorruptHeader(
                "extensible fmt chunk missing sub-format".into(),
            ));
        }
        format = read_u16(body, 24);
    }
    Ok(Fmt {
        format,
        channels: read_u16(body, 2),
        sample_rate: read_u32(body, 4),
        block_align: read_u16(body, 12),
        bits: read_u16(body, 14),
    })
}

/// Decodes an in-memory RIFF/WAVE image.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::UnsupportedFormat("not a RIFF/WAVE file".into()));
    }
    let riff_len = read_u32(bytes, 4) as usize;
    if riff_len < 4 || riff_len > bytes.len() - 8 {
        return Err(AudioError::CorruptHeader(format!(
            "RIFF size {riff_len} inconsistent with file length {}",
            bytes.len()
        )));
    }
    let end = 8 + riff_len;

    let mut fmt = None;
    let mut data = None;
    let mut pos = 12;
    while pos + 8 <= end {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= end)
            .ok_or_else(|| {
                AudioError::CorruptHeader(format!(
                    "chunk `{}` of {size} bytes overruns the file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        match id {
            b"fmt " => fmt = Some(parse_fmt(&bytes[body_start..body_end])?),
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        // chunks are padded to even length
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| AudioError::CorruptHeader("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::CorruptHeader("missing data chunk".into()))?;

    if fmt.format != FORMAT_PCM && fmt.format != FORMAT_IEEE_FLOAT {
        return Err(AudioError::UnsupportedFormat(format!(
            "compression code {}",
            fmt.format
        )));
    }
    if !(1..=2).contains(&fmt.channels) {
        return Err(AudioError::UnsupportedFormat(format!(
            "{} channels",
            fmt.channels
        )));
    }
    match (fmt.format, fmt.bits) {
        (FORMAT_PCM, 8 | 16 | 24) | (FORMAT_IEEE_FLOAT, 32) => {}
        (f, b) => {
            return Err(AudioError::UnsupportedFormat(format!(
                "{b}-bit samples with compression code {f}"
            )))
        }
    }
    if fmt.sample_rate == 0 {
        return Err(AudioError::CorruptHeader("sample rate is zero".into()));
    }
    let bytes_per_sample = fmt.bits as usize / 8;
    let block = bytes_per_sample * fmt.channels as usize;
    if fmt.block_align as usize != block {
        return Err(AudioError::CorruptHeader(format!(
            "block align {} does not match {} channels of {} bits",
            fmt.block_align, fmt.channels, fmt.bits
        )));
    }
    if data.len() % block != 0 {
        return Err(AudioError::CorruptHeader(format!(
            "data size {} is not a multiple of block size {block}",
            data.len()
        )));
    }

    let decode_one = |s: &[u8]| -> f64 {
        match (fmt.format, fmt.bits) {
            (FORMAT_PCM, 8) => (s[0] as f64 - 128.0) / 128.0,
            (FORMAT_PCM, 16) => i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0,
            (FORMAT_PCM, 24) => {
                // sign-extend through the top byte of an i32
                let v = i32::from_le_bytes([0, s[0], s[1], s[2]]) >> 8;
                v as f64 / 8_388_608.0
            }
            _ => f32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64,
        }
    };

    let samples = data
        .chunks_exact(block)
        .map(|frame| {
            let sum: f64 = frame.chunks_exact(bytes_per_sample).map(decode_one).sum();
            sum / fmt.channels as f64
        })
        .collect();
    AudioBuffer::new(samples, fmt.sample_rate)
}

/// Encodes samples as a 16-bit PCM WAV image. `channels` holds interleaved
/// sample sequences of equal length, one per channel.
pub fn encode_wav_pcm16(channels: &[&[f64]], sample_rate: u32) -> Vec<u8> {
    let n_ch = channels.len().max(1);
    let frames = channels.first().map_or(0, |c| c.len());
    let data_len = frames * n_ch * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&(n_ch as u16).to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * n_ch as u32 * 2).to_le_bytes());
    out.extend_from_slice(&((n_ch * 2) as u16).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for i in 0..frames {
        for ch in channels {
            let v = (ch[i].clamp(-1.0, 1.0) * 32768.0)
                .round()
                .clamp(-32768.0, 32767.0) as i16;
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Writes a mono buffer as 16-bit PCM.
pub fn write_wav_pcm16(path: impl AsRef<Path>, buf: &AudioBuffer) -> Result<(), AudioError> {
    let bytes = encode_wav_pcm16(&[buf.samples()], buf.sample_rate());
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Slices a signal into windowed frames. A trailing remainder shorter than
/// `frame_len` is dropped.
pub fn frame_signal(samples: &[f64], spec: &FrameSpec) -> Result<Vec<Vec<f64>>, AudioError> {
    spec.validate()?;
    if samples.len() < spec.frame_len {
        return Err(AudioError::SignalTooShort {
            len: samples.len(),
            needed: spec.frame_len,
        });
    }
    let window = spec.window.coefficients(spec.frame_len);
    Ok((0..spec.frame_count(samples.len()))
        .map(|i| {
            let start = i * spec.hop;
            samples[start..start + spec.frame_len]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcm16_mono(samples: &[i16], rate: u32) -> Vec<u8> {
        let f: Vec<f64> = samples.iter().map(|&s| s as f64 / 32768.0).collect();
        encode_wav_pcm16(&[&f], rate)
    }

    fn raw_wav(format: u16, channels: u16, bits: u16, data: &[u8]) -> Vec<u8> {
        let block = channels * bits / 8;
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        out.extend_from_slice(b"WAVEfmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&format.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&8000u32.to_le_bytes());
        out.extend_from_slice(&(8000 * block as u32).to_le_bytes());
        out.extend_from_slice(&block.to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(data);
        out
    }

    #[test]
    fn pcm16_scaling() {
        let buf = decode_wav(&pcm16_mono(&[0, 16384, -32768], 22050)).unwrap();
        assert_eq!(buf.samples(), &[0.0, 0.5, -1.0]);
        assert_eq!(buf.sample_rate(), 22050);
    }

    #[test]
    fn stereo_mixdown() {
        let l = [0.5];
        let r = [-0.5];
        let buf = decode_wav(&encode_wav_pcm16(&[&l, &r], 8000)).unwrap();
        assert_eq!(buf.samples(), &[0.0]);
    }

    #[test]
    fn eight_and_twenty_four_bit() {
        let buf = decode_wav(&raw_wav(1, 1, 8, &[128, 0, 192])).unwrap();
        assert_eq!(buf.samples(), &[0.0, -1.0, 0.5]);
        // -8388608 and 4194304 little-endian
        let buf = decode_wav(&raw_wav(1, 1, 24, &[0, 0, 0x80, 0, 0, 0x40])).unwrap();
        assert_eq!(buf.samples(), &[-1.0, 0.5]);
    }

    #[test]
    fn float32() {
        let mut data = Vec::new();
        for v in [0.25f32, -0.75] {
            data.extend_from_slice(&v.to_le_bytes());
        }
        let buf = decode_wav(&raw_wav(3, 1, 32, &data)).unwrap();
        assert_eq!(buf.samples(), &[0.25, -0.75]);
    }

    #[test]
    fn gtzan_clip_length() {
        let n = 22050 * 30;
        let bytes = pcm16_mono(&vec![0; n], 22050);
        assert_eq!(decode_wav(&bytes).unwrap().len(), 661_500);
    }

    #[test]
    fn rejects_compressed_and_corrupt() {
        let adpcm = raw_wav(2, 1, 16, &[0, 0]);
        assert!(matches!(
            decode_wav(&adpcm),
            Err(AudioError::UnsupportedFormat(_))
        ));
        let mut bad = pcm16_mono(&[1, 2, 3], 8000);
        // data chunk claims more bytes than present
        let at = bad.len() - 6 - 4;
        bad[at..at + 4].copy_from_slice(&1000u32.to_le_bytes());
        assert!(matches!(
            decode_wav(&bad),
            Err(AudioError::CorruptHeader(_))
        ));
        assert!(matches!(
            decode_wav(b"not a wav file at all"),
            Err(AudioError::UnsupportedFormat(_))
        ));
        let odd = raw_wav(1, 1, 16, &[0, 0, 0]);
        assert!(decode_wav(&odd).is_err());
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_wav("/nonexistent/definitely/missing.wav"),
            Err(AudioError::NotFound(_))
        ));
    }

    #[test]
    fn frame_counts() {
        let spec = FrameSpec::default();
        assert_eq!(frame_signal(&vec![0.1; 2048], &spec).unwrap().len(), 1);
        assert_eq!(frame_signal(&vec![0.1; 4096], &spec).unwrap().len(), 5);
        assert!(matches!(
            frame_signal(&vec![0.1; 2047], &spec),
            Err(AudioError::SignalTooShort { .. })
        ));
    }

    #[test]
    fn rectangular_frames_partition_prefix() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let spec = FrameSpec {
            frame_len: 128,
            hop: 128,
            window: Window::Rectangular,
        };
        let frames = frame_signal(&x, &spec).unwrap();
        assert_eq!(frames[0], x[..128].to_vec());
        let joined: Vec<f64> = frames.concat();
        assert_eq!(joined, x[..frames.len() * 128].to_vec());
    }

    #[test]
    fn frame_spec_validation() {
        let bad = FrameSpec {
            frame_len: 1000,
            hop: 10,
            window: Window::Hamming,
        };
        assert!(bad.validate().is_err());
        let bad_hop = FrameSpec {
            frame_len: 1024,
            hop: 2048,
            window: Window::Hamming,
        };
        assert!(bad_hop.validate().is_err());
    }
}

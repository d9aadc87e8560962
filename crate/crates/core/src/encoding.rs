//! Per-track feature summaries and their 8-bit binary/bipolar encodings.
//!
//! A track's scalar features are each quantized to one byte, rendered MSB
//! first, and concatenated into the network's input pattern. Class labels map
//! to fixed-width binary codes that serve as training targets.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{Pitch, TrackFeatures};

/// Width of one quantized feature and of the default class codes.
pub const BYTE_WIDTH: usize = 8;

/// Longest pattern that still decodes into a `u64`.
pub const MAX_PATTERN_WIDTH: usize = 64;

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("track `{0}` has no frames for at least one feature")]
    EmptyTrack(String),
    #[error("track `{0}` needs at least two MFCC coefficients")]
    MissingCoefficient(String),
    #[error("invalid quantization range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("value {0} is not finite")]
    NonFiniteValue(f64),
    #[error("{value} does not fit in {width} bits")]
    OutOfRange { value: i64, width: usize },
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("no class code for label `{0}`")]
    UnknownLabel(String),
    #[error("labels `{0}` and `{1}` share a class code")]
    DuplicateClassCode(String, String),
    #[error("too many labels for {width}-bit codes: {count}")]
    TooManyLabels { count: usize, width: usize },
    #[error("no quantization range for feature {0}")]
    MissingRange(Feature),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Scalar features a track can contribute to its input pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Beat,
    Fft,
    Mfcc,
    Pitch,
    Zcr,
}

/// Beat, FFT, MFCC and pitch, in pattern order.
pub const CANONICAL_FEATURES: [Feature; 4] =
    [Feature::Beat, Feature::Fft, Feature::Mfcc, Feature::Pitch];

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Feature::Beat => "beat",
            Feature::Fft => "fft",
            Feature::Mfcc => "mfcc",
            Feature::Pitch => "pitch",
            Feature::Zcr => "zcr",
        })
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "beat" | "tempo" => Ok(Feature::Beat),
            "fft" | "centroid" => Ok(Feature::Fft),
            "mfcc" => Ok(Feature::Mfcc),
            "pitch" => Ok(Feature::Pitch),
            "zcr" => Ok(Feature::Zcr),
            other => Err(format!("unknown feature `{other}`")),
        }
    }
}

/// One scalar per feature for a single track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub track_id: String,
    pub label: String,
    /// Tempo in BPM.
    pub beat: f64,
    /// Mean spectral centroid in Hz.
    pub fft_stat: f64,
    /// Mean of MFCC coefficient 1.
    pub mfcc_stat: f64,
    /// Median pitch of voiced frames in Hz, 0 when none are voiced.
    pub pitch: f64,
    pub zcr_mean: f64,
    #[serde(skip)]
    pub tempo_defaulted: bool,
    #[serde(skip)]
    pub unvoiced: bool,
    #[serde(skip)]
    pub frames: Option<TrackFeatures>,
}

impl FeatureSummary {
    pub fn value(&self, feature: Feature) -> f64 {
        match feature {
            Feature::Beat => self.beat,
            Feature::Fft => self.fft_stat,
            Feature::Mfcc => self.mfcc_stat,
            Feature::Pitch => self.pitch,
            Feature::Zcr => self.zcr_mean,
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        (xs[mid - 1] + xs[mid]) / 2.0
    } else {
        xs[mid]
    }
}

/// Collapses per-frame features into one [`FeatureSummary`].
pub fn summarize_track(
    track_id: &str,
    label: &str,
    features: &TrackFeatures,
    keep_frames: bool,
) -> Result<FeatureSummary, EncodingError> {
    if features.zcr.is_empty()
        || features.centroid.is_empty()
        || features.mfcc.is_empty()
        || features.pitch.is_empty()
    {
        return Err(EncodingError::EmptyTrack(track_id.to_string()));
    }
    let second: Vec<f64> = features
        .mfcc
        .iter()
        .map(|row| row.get(1).copied())
        .collect::<Option<_>>()
        .ok_or_else(|| EncodingError::MissingCoefficient(track_id.to_string()))?;
    let voiced: Vec<f64> = features.pitch.iter().filter_map(|p| p.hz()).collect();
    let unvoiced = voiced.is_empty();

    Ok(FeatureSummary {
        track_id: track_id.to_string(),
        label: label.to_string(),
        beat: features.tempo.bpm,
        fft_stat: mean(&features.centroid),
        mfcc_stat: mean(&second),
        pitch: if unvoiced { 0.0 } else { median(voiced) },
        zcr_mean: mean(&features.zcr),
        tempo_defaulted: features.tempo.defaulted,
        unvoiced,
        frames: keep_frames.then(|| features.clone()),
    })
}

/// `floor((value - lo) / (hi - lo) * 255)` clamped to `[0, 255]`. With
/// `lo = 0, hi = 255` this is `floor(value)` for in-range values.
pub fn quantize_to_byte(value: f64, lo: f64, hi: f64) -> Result<u8, EncodingError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(EncodingError::InvalidRange { lo, hi });
    }
    if value.is_nan() {
        return Err(EncodingError::NonFiniteValue(value));
    }
    // multiply before dividing so integer values survive the raw range exactly
    let scaled = ((value - lo) * 255.0 / (hi - lo)).floor();
    Ok(scaled.clamp(0.0, 255.0) as u8)
}

/// Fixed-width binary word, most significant bit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BinaryPattern {
    bits: Vec<bool>,
}

impl BinaryPattern {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self, EncodingError> {
        if bits.is_empty() || bits.len() > MAX_PATTERN_WIDTH {
            return Err(EncodingError::InvalidPattern(format!(
                "width {} outside 1..={MAX_PATTERN_WIDTH}",
                bits.len()
            )));
        }
        Ok(Self { bits })
    }

    /// MSB-first rendering of `value` in `width` bits.
    pub fn from_value(value: u64, width: usize) -> Result<Self, EncodingError> {
        if width == 0 || width > MAX_PATTERN_WIDTH || (width < 64 && value >> width != 0) {
            return Err(EncodingError::OutOfRange {
                value: value as i64,
                width,
            });
        }
        Ok(Self {
            bits: (0..width).rev().map(|i| (value >> i) & 1 == 1).collect(),
        })
    }

    pub fn from_byte(byte: u8) -> Self {
        Self::from_value(byte as u64, BYTE_WIDTH).expect("a byte fits in 8 bits")
    }

    /// Maps `+1 -> 1` and everything else to `0`.
    pub fn from_bipolar(values: &[f64]) -> Result<Self, EncodingError> {
        Self::from_bits(values.iter().map(|&v| v > 0.0).collect())
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn decode(&self) -> u64 {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    /// `1 -> +1`, `0 -> -1`.
    pub fn to_bipolar(&self) -> Vec<f64> {
        self.bits
            .iter()
            .map(|&b| if b { 1.0 } else { -1.0 })
            .collect()
    }

    pub fn hamming(&self, other: &BinaryPattern) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
            + self.width().abs_diff(other.width())
    }

    pub fn concat(parts: &[BinaryPattern]) -> Result<Self, EncodingError> {
        Self::from_bits(parts.iter().flat_map(|p| p.bits.iter().copied()).collect())
    }
}

impl fmt::Display for BinaryPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BinaryPattern {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(EncodingError::InvalidPattern(format!(
                    "unexpected character `{other}` in `{s}`"
                ))),
            })
            .collect::<Result<_, _>>()?;
        Self::from_bits(bits)
    }
}

impl TryFrom<String> for BinaryPattern {
    type Error = EncodingError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BinaryPattern> for String {
    fn from(p: BinaryPattern) -> String {
        p.to_string()
    }
}

/// 8-bit MSB-first pattern of `n`.
pub fn to_binary_pattern(n: i64) -> Result<BinaryPattern, EncodingError> {
    u8::try_from(n)
        .map(BinaryPattern::from_byte)
        .map_err(|_| EncodingError::OutOfRange {
            value: n,
            width: BYTE_WIDTH,
        })
}

pub fn to_bipolar(p: &BinaryPattern) -> Vec<f64> {
    p.to_bipolar()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantRange {
    pub lo: f64,
    pub hi: f64,
}

impl QuantRange {
    /// The identity range, under which quantization floors the raw value.
    pub const RAW: QuantRange = QuantRange { lo: 0.0, hi: 255.0 };
}

/// Frozen quantization range per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantRanges(pub BTreeMap<Feature, QuantRange>);

impl QuantRanges {
    pub fn raw(features: &[Feature]) -> Self {
        Self(features.iter().map(|&f| (f, QuantRange::RAW)).collect())
    }

    /// Min/max of each feature over `summaries`. A feature with a single
    /// distinct value gets a unit-wide range starting at that value.
    pub fn fit(summaries: &[FeatureSummary], features: &[Feature]) -> Self {
        Self(
            features
                .iter()
                .map(|&f| {
                    let (lo, hi) = summaries
                        .iter()
                        .map(|s| s.value(f))
                        .filter(|v| v.is_finite())
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                            (lo.min(v), hi.max(v))
                        });
                    let range = if !lo.is_finite() {
                        QuantRange::RAW
                    } else if hi > lo {
                        QuantRange { lo, hi }
                    } else {
                        QuantRange { lo, hi: lo + 1.0 }
                    };
                    (f, range)
                })
                .collect(),
        )
    }

    pub fn get(&self, feature: Feature) -> Result<QuantRange, EncodingError> {
        self.0
            .get(&feature)
            .copied()
            .ok_or(EncodingError::MissingRange(feature))
    }
}

/// Concatenated byte patterns of the selected features.
pub fn encode_summary(
    summary: &FeatureSummary,
    ranges: &QuantRanges,
    features: &[Feature],
) -> Result<BinaryPattern, EncodingError> {
    let parts = features
        .iter()
        .map(|&f| {
            let r = ranges.get(f)?;
            quantize_to_byte(summary.value(f), r.lo, r.hi).map(BinaryPattern::from_byte)
        })
        .collect::<Result<Vec<_>, _>>()?;
    BinaryPattern::concat(&parts)
}

/// Label to target-pattern map with distinct, equal-width codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "BTreeMap<String, BinaryPattern>",
    into = "BTreeMap<String, BinaryPattern>"
)]
pub struct ClassCodes(BTreeMap<String, BinaryPattern>);

impl ClassCodes {
    pub fn new(codes: BTreeMap<String, BinaryPattern>) -> Result<Self, EncodingError> {
        let mut seen: BTreeMap<&BinaryPattern, &String> = BTreeMap::new();
        let width = codes.values().next().map(BinaryPattern::width);
        for (label, code) in &codes {
            if Some(code.width()) != width {
                return Err(EncodingError::InvalidPattern(format!(
                    "class code for `{label}` has width {}, expected {}",
                    code.width(),
                    width.unwrap_or(0)
                )));
            }
            if let Some(prev) = seen.insert(code, label) {
                return Err(EncodingError::DuplicateClassCode(
                    prev.clone(),
                    label.clone(),
                ));
            }
        }
        Ok(Self(codes))
    }

    /// Sorted distinct labels get codes 1, 2, 3, ... in 8 bits.
    pub fn from_labels<'a>(
        labels: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self, EncodingError> {
        let sorted: std::collections::BTreeSet<&str> = labels.into_iter().collect();
        if sorted.len() > 255 {
            return Err(EncodingError::TooManyLabels {
                count: sorted.len(),
                width: BYTE_WIDTH,
            });
        }
        Self::new(
            sorted
                .into_iter()
                .enumerate()
                .map(|(i, l)| (l.to_string(), BinaryPattern::from_byte(i as u8 + 1)))
                .collect(),
        )
    }

    pub fn get(&self, label: &str) -> Result<&BinaryPattern, EncodingError> {
        self.0
            .get(label)
            .ok_or_else(|| EncodingError::UnknownLabel(label.to_string()))
    }

    pub fn width(&self) -> usize {
        self.0.values().next().map_or(0, BinaryPattern::width)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BinaryPattern)> {
        self.0.iter()
    }

    /// Label whose code is nearest in Hamming distance; ties go to the
    /// lowest code value.
    pub fn nearest(&self, pattern: &BinaryPattern) -> Option<&str> {
        self.0
            .iter()
            .min_by_key(|(_, code)| (code.hamming(pattern), code.decode()))
            .map(|(label, _)| label.as_str())
    }
}

impl TryFrom<BTreeMap<String, BinaryPattern>> for ClassCodes {
    type Error = EncodingError;

    fn try_from(map: BTreeMap<String, BinaryPattern>) -> Result<Self, Self::Error> {
        Self::new(map)
    }
}

impl From<ClassCodes> for BTreeMap<String, BinaryPattern> {
    fn from(c: ClassCodes) -> Self {
        c.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternEntry {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub label: String,
}

/// Bipolar training pairs with uniform input and target widths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatternSet {
    entries: Vec<PatternEntry>,
}

fn is_bipolar(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 1.0 || x == -1.0)
}

impl PatternSet {
    pub fn new(entries: Vec<PatternEntry>) -> Result<Self, EncodingError> {
        if let Some(first) = entries.first() {
            let (wi, wt) = (first.input.len(), first.target.len());
            for e in &entries {
                if e.input.len() != wi || e.target.len() != wt {
                    return Err(EncodingError::InvalidPattern(format!(
                        "entry `{}` has widths {}/{}, expected {wi}/{wt}",
                        e.label,
                        e.input.len(),
                        e.target.len()
                    )));
                }
                if !is_bipolar(&e.input) || !is_bipolar(&e.target) {
                    return Err(EncodingError::InvalidPattern(format!(
                        "entry `{}` has non-bipolar components",
                        e.label
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[PatternEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn input_width(&self) -> usize {
        self.entries.first().map_or(0, |e| e.input.len())
    }

    pub fn target_width(&self) -> usize {
        self.entries.first().map_or(0, |e| e.target.len())
    }

    /// Patterns file: JSON list of `{input, target, label}` with 0/1 strings.
    pub fn to_json(&self) -> Result<String, EncodingError> {
        let records = self
            .entries
            .iter()
            .map(|e| {
                Ok(PatternRecord {
                    input: BinaryPattern::from_bipolar(&e.input)?,
                    target: BinaryPattern::from_bipolar(&e.target)?,
                    label: e.label.clone(),
                })
            })
            .collect::<Result<Vec<_>, EncodingError>>()?;
        Ok(serde_json::to_string_pretty(&records)?)
    }

    pub fn from_json(text: &str) -> Result<Self, EncodingError> {
        let records: Vec<PatternRecord> = serde_json::from_str(text)?;
        Self::new(
            records
                .into_iter()
                .map(|r| PatternEntry {
                    input: r.input.to_bipolar(),
                    target: r.target.to_bipolar(),
                    label: r.label,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PatternRecord {
    input: BinaryPattern,
    target: BinaryPattern,
    label: String,
}

/// One `(input, target)` pair per summary: input is the concatenated bipolar
/// encoding of `features`, target the bipolar class code of its label.
pub fn build_pattern_set(
    summaries: &[FeatureSummary],
    codes: &ClassCodes,
    ranges: &QuantRanges,
    features: &[Feature],
) -> Result<PatternSet, EncodingError> {
    let entries = summaries
        .iter()
        .map(|s| {
            let target = codes.get(&s.label)?.to_bipolar();
            let input = encode_summary(s, ranges, features)?.to_bipolar();
            Ok(PatternEntry {
                input,
                target,
                label: s.label.clone(),
            })
        })
        .collect::<Result<Vec<_>, EncodingError>>()?;
    PatternSet::new(entries)
}

/// Features CSV: `track_id,label,beat,fft_stat,mfcc_stat,pitch,zcr_mean`.
pub fn write_features_csv<W: io::Write>(
    writer: W,
    summaries: &[FeatureSummary],
) -> Result<(), EncodingError> {
    let mut w = csv::Writer::from_writer(writer);
    for s in summaries {
        w.serialize(s)?;
    }
    if summaries.is_empty() {
        w.write_record(FEATURE_COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

pub const FEATURE_COLUMNS: [&str; 7] = [
    "track_id",
    "label",
    "beat",
    "fft_stat",
    "mfcc_stat",
    "pitch",
    "zcr_mean",
];

pub fn read_features_csv<R: io::Read>(reader: R) -> Result<Vec<FeatureSummary>, EncodingError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().ne(FEATURE_COLUMNS) {
        return Err(EncodingError::InvalidPattern(format!(
            "unexpected features header `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let rows: Vec<FeatureSummary> = r.deserialize().collect::<Result<_, _>>()?;
    for s in &rows {
        for f in [
            Feature::Beat,
            Feature::Fft,
            Feature::Mfcc,
            Feature::Pitch,
            Feature::Zcr,
        ] {
            if !s.value(f).is_finite() {
                return Err(EncodingError::NonFiniteValue(s.value(f)));
            }
        }
    }
    Ok(rows)
}

pub fn load_features_csv(path: impl AsRef<Path>) -> Result<Vec<FeatureSummary>, EncodingError> {
    read_features_csv(std::fs::File::open(path)?)
}

/// Pitch frames from optional Hz values, `None` meaning unvoiced.
pub fn pitch_frames(hz: &[Option<f64>]) -> Vec<Pitch> {
    hz.iter()
        .map(|p| p.map_or(Pitch::Unvoiced, Pitch::Voiced))
        .collect()
}

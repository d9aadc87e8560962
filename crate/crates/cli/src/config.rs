//! Flat `key = value` pipeline configuration.
//!
//! The file is read as TOML restricted to top-level scalars. Every key is
//! optional. Lists are written as comma-separated strings, e.g.
//! `features = "beat,fft,mfcc,pitch"` and
//! `class_codes = "blues=00000001,rock=00000010"`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use mfh_core::dsp::{FeatureConfig, PitchConfig, TempoConfig};
use mfh_core::encoding::{BinaryPattern, ClassCodes, Feature};
use mfh_core::pipeline::{QuantMode, TrainOptions};
use mfh_core::{FrameSpec, TrainConfig, Window};

pub const SEED_ENV: &str = "MFH_SEED";

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    dataset_root: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    frame_len: usize,
    hop: usize,
    window: String,
    n_mels: usize,
    n_mfcc: usize,
    f_min: f64,
    f_max: Option<f64>,
    default_bpm: f64,
    voicing_threshold: f64,
    features: String,
    quantization: String,
    class_codes: Option<String>,
    learning_rate: f64,
    momentum: f64,
    momentum_enabled: bool,
    max_epochs: usize,
    target_error: f64,
    normalize_after_epoch: bool,
    unsupervised: bool,
    bias_input: bool,
    split_ratio: f64,
    seed: u64,
}

impl Default for RawConfig {
    fn default() -> Self {
        let frame = FrameSpec::default();
        let feat = FeatureConfig::default();
        let train = TrainConfig::default();
        let opts = TrainOptions::default();
        Self {
            dataset_root: None,
            output_dir: None,
            frame_len: frame.frame_len,
            hop: frame.hop,
            window: "hamming".into(),
            n_mels: feat.n_mels,
            n_mfcc: feat.n_mfcc,
            f_min: feat.f_min,
            f_max: None,
            default_bpm: feat.tempo.default_bpm,
            voicing_threshold: feat.pitch.voicing_threshold,
            features: "beat,fft,mfcc,pitch".into(),
            quantization: "fitted".into(),
            class_codes: None,
            learning_rate: train.learning_rate,
            momentum: train.momentum,
            momentum_enabled: train.momentum_enabled,
            max_epochs: train.max_epochs,
            target_error: train.target_error,
            normalize_after_epoch: train.normalize_after_epoch,
            unsupervised: train.unsupervised,
            bias_input: opts.bias_input,
            split_ratio: opts.split_ratio,
            seed: opts.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub dataset_root: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub features: FeatureConfig,
    pub train: TrainOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        RawConfig::default().resolve().expect("defaults are valid")
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).context("invalid config")?;
        raw.resolve()
    }

    /// Loads `path`, or the defaults when `None`, then applies `MFH_SEED`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                Self::parse(&text)?
            }
            None => Self::default(),
        };
        if let Ok(seed) = std::env::var(SEED_ENV) {
            cfg.train.seed = seed
                .trim()
                .parse()
                .map_err(|_| anyhow!("{SEED_ENV}=`{seed}` is not an unsigned integer"))?;
        }
        Ok(cfg)
    }

    /// Relative output paths land in `output_dir` when one is set.
    pub fn output_path(&self, path: &Path) -> PathBuf {
        match &self.output_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

impl RawConfig {
    fn resolve(self) -> Result<PipelineConfig> {
        if let Some(root) = &self.dataset_root {
            if !root.is_dir() {
                bail!("dataset_root {} is not a directory", root.display());
            }
        }
        let window: Window = self.window.parse().map_err(|e: String| anyhow!(e))?;
        let frame = FrameSpec {
            frame_len: self.frame_len,
            hop: self.hop,
            window,
        };
        frame.validate().context("invalid frame settings")?;
        if self.n_mels < 2 || self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            bail!("need 2 <= n_mels and 1 <= n_mfcc <= n_mels");
        }
        // mfcc_stat reads coefficient 1
        if self.n_mfcc < 2 {
            bail!("n_mfcc must be at least 2");
        }
        let f_max_ok = self.f_max.is_none_or(|f| f > self.f_min);
        if self.f_min.is_nan() || self.f_min < 0.0 || !f_max_ok {
            bail!("need 0 <= f_min < f_max");
        }
        let tempo = TempoConfig {
            default_bpm: self.default_bpm,
            ..TempoConfig::default()
        };
        if !(tempo.min_bpm..=tempo.max_bpm).contains(&self.default_bpm) {
            bail!(
                "default_bpm must lie in [{}, {}]",
                tempo.min_bpm,
                tempo.max_bpm
            );
        }
        if !(0.0..=1.0).contains(&self.voicing_threshold) {
            bail!("voicing_threshold must lie in [0, 1]");
        }
        let pitch = PitchConfig {
            voicing_threshold: self.voicing_threshold,
            ..PitchConfig::default()
        };

        let features = self
            .features
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Feature>, String>>()
            .map_err(|e| anyhow!(e))?;
        if features.is_empty() || features.len() * 8 > 64 {
            bail!("between 1 and 8 features are supported");
        }
        let quantization: QuantMode = self.quantization.parse().map_err(|e: String| anyhow!(e))?;
        let class_codes = self
            .class_codes
            .as_deref()
            .map(parse_class_codes)
            .transpose()?;

        let train = TrainConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            momentum_enabled: self.momentum_enabled,
            max_epochs: self.max_epochs,
            target_error: self.target_error,
            normalize_after_epoch: self.normalize_after_epoch,
            unsupervised: self.unsupervised,
            record_weights: false,
        };
        train.validate()?;
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            bail!("split_ratio must lie in (0, 1)");
        }

        Ok(PipelineConfig {
            dataset_root: self.dataset_root,
            output_dir: self.output_dir,
            features: FeatureConfig {
                frame,
                n_mels: self.n_mels,
                n_mfcc: self.n_mfcc,
                f_min: self.f_min,
                f_max: self.f_max,
                tempo,
                pitch,
            },
            train: TrainOptions {
                features,
                quantization,
                class_codes,
                split_ratio: self.split_ratio,
                seed: self.seed,
                bias_input: self.bias_input,
                train,
            },
        })
    }
}

fn parse_class_codes(text: &str) -> Result<ClassCodes> {
    let mut map = BTreeMap::new();
    for item in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (label, bits) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("class code `{item}` is not `label=bits`"))?;
        let code: BinaryPattern = bits.trim().parse()?;
        map.insert(label.trim().to_string(), code);
    }
    Ok(ClassCodes::new(map)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = PipelineConfig::parse("# nothing here\n").unwrap();
        assert_eq!(cfg.train.train, TrainConfig::default());
        assert_eq!(cfg.train.split_ratio, 0.66);
        assert_eq!(cfg.features.frame, FrameSpec::default());
    }

    #[test]
    fn keys_override_defaults() {
        let cfg = PipelineConfig::parse(
            "learning_rate = 0.5 # inline comment\n\
             window = \"rectangular\"\n\
             features = \"beat, zcr\"\n\
             quantization = \"raw\"\n\
             class_codes = \"a=01,b=10\"\n",
        )
        .unwrap();
        assert_eq!(cfg.train.train.learning_rate, 0.5);
        assert_eq!(cfg.features.frame.window, Window::Rectangular);
        assert_eq!(cfg.train.features, vec![Feature::Beat, Feature::Zcr]);
        assert_eq!(cfg.train.quantization, QuantMode::Raw);
        assert_eq!(cfg.train.class_codes.unwrap().width(), 2);
    }

    #[test]
    fn bad_values_rejected() {
        for bad in [
            "frame_len = 1000",
            "momentum = 1.5",
            "split_ratio = 0",
            "features = \"loudness\"",
            "no_such_key = 1",
            "n_mfcc = 40",
            "class_codes = \"a=01,b=01\"",
        ] {
            assert!(PipelineConfig::parse(bad).is_err(), "{bad}");
        }
    }
}

//! Summaries in, trained model and evaluation report out.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{
    build_pattern_set, encode_summary, BinaryPattern, ClassCodes, EncodingError, Feature,
    FeatureSummary, QuantRanges, CANONICAL_FEATURES,
};
use crate::eval::{accuracy_report, lms_error, split_dataset, EvalError, EvalReport, EvalRow};
use crate::hebbnet::{EpochLog, HebbError, HebbNetwork, TrainConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Hebb(#[from] HebbError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("training split is empty")]
    EmptyTrainSplit,
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

/// How feature values are mapped onto bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuantMode {
    /// Per-feature min/max of the training split.
    #[default]
    Fitted,
    /// Identity range `[0, 255]`: plain flooring.
    Raw,
}

impl std::str::FromStr for QuantMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fitted" | "minmax" => Ok(QuantMode::Fitted),
            "raw" | "floor" => Ok(QuantMode::Raw),
            other => Err(format!("unknown quantization mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub features: Vec<Feature>,
    pub quantization: QuantMode,
    /// Explicit label codes; `None` numbers the sorted labels from 1.
    pub class_codes: Option<ClassCodes>,
    pub split_ratio: f64,
    pub seed: u64,
    pub bias_input: bool,
    pub train: TrainConfig,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            features: CANONICAL_FEATURES.to_vec(),
            quantization: QuantMode::Fitted,
            class_codes: None,
            split_ratio: 0.66,
            seed: 42,
            bias_input: false,
            train: TrainConfig::default(),
        }
    }
}

/// Everything needed to re-encode features the way the model saw them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingMeta {
    pub features: Vec<Feature>,
    pub quantization: QuantMode,
    pub ranges: QuantRanges,
    pub class_codes: ClassCodes,
    pub split_ratio: f64,
    pub seed: u64,
}

/// Model file: `{n_inputs, n_outputs, bias_input, weights, config, encoding}`
/// with `weights` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub bias_input: bool,
    pub weights: Vec<f64>,
    pub config: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<EncodingMeta>,
}

impl ModelFile {
    pub fn new(net: &HebbNetwork, config: TrainConfig, encoding: Option<EncodingMeta>) -> Self {
        Self {
            n_inputs: net.n_inputs(),
            n_outputs: net.n_outputs(),
            bias_input: net.bias_input(),
            weights: net.weights().to_vec(),
            config,
            encoding,
        }
    }

    pub fn network(&self) -> Result<HebbNetwork, HebbError> {
        HebbNetwork::from_weights(
            self.n_inputs,
            self.n_outputs,
            self.bias_input,
            self.weights.clone(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let model: ModelFile = serde_json::from_str(text)?;
        model.network()?;
        Ok(model)
    }
}

pub struct TrainOutcome {
    pub model: ModelFile,
    pub log: EpochLog,
    pub train: Vec<FeatureSummary>,
    pub test: Vec<FeatureSummary>,
}

/// Splits, fits the encoding on the training split, and trains a fresh
/// network on it.
pub fn train_on_summaries(
    summaries: &[FeatureSummary],
    opts: &TrainOptions,
) -> Result<TrainOutcome, PipelineError> {
    opts.train.validate()?;
    let (train, test) =
        split_dataset(summaries, |s| s.label.as_str(), opts.split_ratio, opts.seed)?;
    if train.is_empty() {
        return Err(PipelineError::EmptyTrainSplit);
    }
    let codes = match &opts.class_codes {
        Some(c) => c.clone(),
        None => ClassCodes::from_labels(summaries.iter().map(|s| s.label.as_str()))?,
    };
    let ranges = match opts.quantization {
        QuantMode::Fitted => QuantRanges::fit(&train, &opts.features),
        QuantMode::Raw => QuantRanges::raw(&opts.features),
    };
    let patterns = build_pattern_set(&train, &codes, &ranges, &opts.features)?;

    let extra = usize::from(opts.bias_input);
    let mut net = HebbNetwork::new(
        patterns.input_width() + extra,
        codes.width(),
        opts.bias_input,
    )?;
    let log = net.train(&patterns, &opts.train)?;

    let encoding = EncodingMeta {
        features: opts.features.clone(),
        quantization: opts.quantization,
        ranges,
        class_codes: codes,
        split_ratio: opts.split_ratio,
        seed: opts.seed,
    };
    Ok(TrainOutcome {
        model: ModelFile::new(&net, opts.train.clone(), Some(encoding)),
        log,
        train,
        test,
    })
}

pub struct Evaluation {
    pub rows: Vec<EvalRow>,
    /// `(predicted label, true label)` per track.
    pub predictions: Vec<(String, String)>,
}

/// Predicts every summary and decodes the output to its nearest class code.
pub fn evaluate_summaries(
    net: &HebbNetwork,
    meta: &EncodingMeta,
    summaries: &[FeatureSummary],
) -> Result<Evaluation, PipelineError> {
    let mut rows = Vec::with_capacity(summaries.len());
    let mut predictions = Vec::with_capacity(summaries.len());
    for s in summaries {
        let input = encode_summary(s, &meta.ranges, &meta.features)?;
        let desired = meta.class_codes.get(&s.label)?.clone();
        let actual = net.predict_pattern(&input)?;
        let predicted = meta
            .class_codes
            .nearest(&actual)
            .unwrap_or_default()
            .to_string();
        rows.push(EvalRow::new(input, actual, desired)?);
        predictions.push((predicted, s.label.clone()));
    }
    Ok(Evaluation { rows, predictions })
}

/// Assembles a report; an empty evaluation yields zero LMS and accuracy.
pub fn build_report(eval: Evaluation, epoch_errors: Vec<f64>) -> Result<EvalReport, PipelineError> {
    let (lms, overall, per_class) = if eval.rows.is_empty() {
        (0.0, 0.0, BTreeMap::new())
    } else {
        let acc = accuracy_report(&eval.predictions)?;
        (lms_error(&eval.rows)?, acc.overall, acc.per_class)
    };
    Ok(EvalReport {
        rows: eval.rows,
        lms,
        accuracy_overall: overall,
        accuracy_per_class: per_class,
        epoch_errors,
    })
}

/// Input pattern of a summary under a model's encoding.
pub fn encode_for_model(
    meta: &EncodingMeta,
    s: &FeatureSummary,
) -> Result<BinaryPattern, PipelineError> {
    Ok(encode_summary(s, &meta.ranges, &meta.features)?)
}

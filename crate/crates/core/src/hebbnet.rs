//! Single-layer feedforward network trained with the Hebb rule.
//!
//! The network is a single `n_inputs x n_outputs` weight matrix. Its net
//! input is the linear map `y_j = sum_i x_i w_ij` and each output fires `+1`
//! when its net input is positive and `-1` otherwise. Training adds the outer
//! product of input and target, `w_ij += eta * x_i * t_j`, optionally with a
//! heavy-ball momentum term carried between updates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{BinaryPattern, PatternSet};

#[derive(Debug, Error, PartialEq)]
pub enum HebbError {
    #[error("invalid dimensions: {n_inputs} inputs x {n_outputs} outputs")]
    InvalidDimensions { n_inputs: usize, n_outputs: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("pattern set is empty")]
    EmptyPatternSet,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("weights are not finite")]
    NonFiniteWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    /// Training stops once the epoch error is at or below this value.
    pub target_error: f64,
    pub momentum_enabled: bool,
    /// Divide the weights by their largest magnitude after every epoch.
    pub normalize_after_epoch: bool,
    /// Use the network's own activation as the target instead of the
    /// supplied one.
    pub unsupervised: bool,
    /// Keep a weight snapshot per update and per epoch in the log.
    pub record_weights: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.2,
            momentum: 0.7,
            max_epochs: 10_000,
            target_error: 0.01,
            momentum_enabled: true,
            normalize_after_epoch: false,
            unsupervised: false,
            record_weights: false,
        }
    }
}

impl TrainConfig {
    /// Plain Hebb rule: unit learning rate, no momentum, one pass.
    pub fn plain_hebb() -> Self {
        Self {
            learning_rate: 1.0,
            momentum: 0.0,
            max_epochs: 1,
            target_error: 0.0,
            momentum_enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), HebbError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(HebbError::InvalidConfig(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(HebbError::InvalidConfig(format!(
                "momentum {} must lie in [0, 1)",
                self.momentum
            )));
        }
        if self.max_epochs == 0 {
            return Err(HebbError::InvalidConfig(
                "max_epochs must be positive".into(),
            ));
        }
        if self.target_error.is_nan() || self.target_error < 0.0 {
            return Err(HebbError::InvalidConfig(format!(
                "target_error {} must be nonnegative",
                self.target_error
            )));
        }
        Ok(())
    }

    pub fn effective_momentum(&self) -> f64 {
        if self.momentum_enabled {
            self.momentum
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean over patterns of the fraction of output bits that disagree with
    /// the target.
    pub error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// One weight update, recorded when `record_weights` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub epoch: usize,
    pub pattern: usize,
    pub delta: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpochLog {
    pub epochs: Vec<EpochRecord>,
    pub steps: Vec<StepRecord>,
}

impl EpochLog {
    pub fn errors(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.error).collect()
    }

    pub fn final_error(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.error)
    }
}

/// `+1` for positive net input, `-1` otherwise.
pub fn activate(y_in: f64) -> f64 {
    if y_in > 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HebbNetwork {
    n_inputs: usize,
    n_outputs: usize,
    /// Input 0 is a constant `+1`; callers may pass vectors without it.
    bias_input: bool,
    /// Row-major, `weights[i * n_outputs + j]` connects input `i` to output `j`.
    weights: Vec<f64>,
}

impl HebbNetwork {
    /// All-zero network. With `bias_input`, `n_inputs` counts the bias slot.
    pub fn new(n_inputs: usize, n_outputs: usize, bias_input: bool) -> Result<Self, HebbError> {
        if n_inputs == 0 || n_outputs == 0 || (bias_input && n_inputs < 2) {
            return Err(HebbError::InvalidDimensions {
                n_inputs,
                n_outputs,
            });
        }
        Ok(Self {
            n_inputs,
            n_outputs,
            bias_input,
            weights: vec![0.0; n_inputs * n_outputs],
        })
    }

    pub fn from_weights(
        n_inputs: usize,
        n_outputs: usize,
        bias_input: bool,
        weights: Vec<f64>,
    ) -> Result<Self, HebbError> {
        let mut net = Self::new(n_inputs, n_outputs, bias_input)?;
        if weights.len() != net.weights.len() {
            return Err(HebbError::DimensionMismatch {
                expected: net.weights.len(),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(HebbError::NonFiniteWeights);
        }
        net.weights = weights;
        Ok(net)
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn bias_input(&self) -> bool {
        self.bias_input
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, input: usize, output: usize) -> f64 {
        self.weights[input * self.n_outputs + output]
    }

    /// Weights feeding output `j`, one per input.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_inputs).map(|i| self.weight(i, j)).collect()
    }

    /// Returns `x` with the bias slot filled in when it was omitted.
    fn full_input<'a>(&self, x: &'a [f64]) -> Result<std::borrow::Cow<'a, [f64]>, HebbError> {
        if x.len() == self.n_inputs {
            Ok(x.into())
        } else if self.bias_input && x.len() + 1 == self.n_inputs {
            let mut full = Vec::with_capacity(self.n_inputs);
            full.push(1.0);
            full.extend_from_slice(x);
            Ok(full.into())
        } else {
            Err(HebbError::DimensionMismatch {
                expected: self.n_inputs,
                actual: x.len(),
            })
        }
    }

    fn check_len(&self, expected: usize, actual: usize) -> Result<(), HebbError> {
        if expected == actual {
            Ok(())
        } else {
            Err(HebbError::DimensionMismatch { expected, actual })
        }
    }

    /// Net input `y_j = sum_i x_i w_ij`, no activation.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, HebbError> {
        let x = self.full_input(x)?;
        let mut y = vec![0.0; self.n_outputs];
        forward_into(&self.weights, &x, &mut y);
        Ok(y)
    }

    pub fn predict(&self, x: &[f64]) -> Result<BinaryPattern, HebbError> {
        let y = self.forward(x)?;
        Ok(
            BinaryPattern::from_bits(y.into_iter().map(|v| activate(v) > 0.0).collect())
                .expect("output width is positive"),
        )
    }

    pub fn predict_pattern(&self, input: &BinaryPattern) -> Result<BinaryPattern, HebbError> {
        self.predict(&input.to_bipolar())
    }

    /// Applies `delta_ij = eta * x_i * t_j + mu * prev_delta_ij` and returns
    /// the delta. An empty `prev_delta` counts as zero.
    pub fn hebb_update(
        &mut self,
        x: &[f64],
        t: &[f64],
        cfg: &TrainConfig,
        prev_delta: &[f64],
    ) -> Result<Vec<f64>, HebbError> {
        let x = self.full_input(x)?;
        self.check_len(self.n_outputs, t.len())?;
        if !prev_delta.is_empty() {
            self.check_len(self.weights.len(), prev_delta.len())?;
        }
        let mu = cfg.effective_momentum();
        let mut delta = Vec::with_capacity(self.weights.len());
        for (i, xi) in x.iter().enumerate() {
            for (j, tj) in t.iter().enumerate() {
                let k = i * self.n_outputs + j;
                let carried = prev_delta.get(k).map_or(0.0, |d| mu * d);
                delta.push(cfg.learning_rate * xi * tj + carried);
            }
        }
        for (w, d) in self.weights.iter_mut().zip(&delta) {
            *w += d;
        }
        Ok(delta)
    }

    /// Fraction of output bits that disagree with the targets, averaged
    /// over the pattern set.
    pub fn pattern_error(&self, patterns: &PatternSet) -> Result<f64, HebbError> {
        if patterns.is_empty() {
            return Err(HebbError::EmptyPatternSet);
        }
        let mut total = 0.0;
        for e in patterns.entries() {
            let y = self.forward(&e.input)?;
            self.check_len(self.n_outputs, e.target.len())?;
            let wrong = y
                .iter()
                .zip(&e.target)
                .filter(|(&y, &t)| activate(y) != t)
                .count();
            total += wrong as f64 / self.n_outputs as f64;
        }
        Ok(total / patterns.len() as f64)
    }

    /// Runs epochs of in-order Hebb updates until the epoch error reaches
    /// `target_error` or `max_epochs` have run.
    pub fn train(
        &mut self,
        patterns: &PatternSet,
        cfg: &TrainConfig,
    ) -> Result<EpochLog, HebbError> {
        cfg.validate()?;
        if patterns.is_empty() {
            return Err(HebbError::EmptyPatternSet);
        }
        for e in patterns.entries() {
            self.full_input(&e.input)?;
            self.check_len(self.n_outputs, e.target.len())?;
        }

        let mut log = EpochLog::default();
        let mut prev_delta: Vec<f64> = Vec::new();
        for epoch in 1..=cfg.max_epochs {
            for (p, entry) in patterns.entries().iter().enumerate() {
                let own;
                let target = if cfg.unsupervised {
                    own = self
                        .forward(&entry.input)?
                        .into_iter()
                        .map(activate)
                        .collect::<Vec<_>>();
                    &own
                } else {
                    &entry.target
                };
                prev_delta = self.hebb_update(&entry.input, target, cfg, &prev_delta)?;
                if cfg.record_weights {
                    log.steps.push(StepRecord {
                        epoch,
                        pattern: p,
                        delta: prev_delta.clone(),
                        weights: self.weights.clone(),
                    });
                }
            }
            if cfg.normalize_after_epoch {
                let peak = self.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
                if peak > 0.0 {
                    self.weights.iter_mut().for_each(|w| *w /= peak);
                }
            }
            if self.weights.iter().any(|w| !w.is_finite()) {
                return Err(HebbError::NonFiniteWeights);
            }
            let error = self.pattern_error(patterns)?;
            log.epochs.push(EpochRecord {
                epoch,
                error,
                weights: cfg.record_weights.then(|| self.weights.clone()),
            });
            if error <= cfg.target_error {
                break;
            }
        }
        Ok(log)
    }
}

/// `y += x^T W` for a row-major `x.len() x y.len()` matrix.
pub(crate) fn forward_into(weights: &[f64], x: &[f64], y: &mut [f64]) {
    let m = y.len();
    y.iter_mut().for_each(|v| *v = 0.0);
    for (row, &xi) in weights.chunks_exact(m).zip(x) {
        for (acc, w) in y.iter_mut().zip(row) {
            *acc += xi * w;
        }
    }
}

/// Convenience alias for [`HebbNetwork::new`].
pub fn init_network(
    n_inputs: usize,
    n_outputs: usize,
    bias_input: bool,
) -> Result<HebbNetwork, HebbError> {
    HebbNetwork::new(n_inputs, n_outputs, bias_input)
}

//! Self-contained checks against the worked AND example, the feature byte
//! table and the signed-error table. No audio is needed.

use std::fmt;

use crate::encoding::{
    quantize_to_byte, to_binary_pattern, BinaryPattern, PatternEntry, PatternSet,
};
use crate::eval::signed_binary_error;
use crate::hebbnet::{HebbNetwork, TrainConfig};

/// Bipolar AND with a constant bias input in column 0.
pub const AND_PATTERNS: [([f64; 3], f64); 4] = [
    ([1.0, 1.0, 1.0], 1.0),
    ([1.0, 1.0, -1.0], -1.0),
    ([1.0, -1.0, 1.0], -1.0),
    ([1.0, -1.0, -1.0], -1.0),
];

/// Weights after each of the four AND updates (η = 1, no momentum).
pub const AND_TRAJECTORY: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [0.0, 0.0, 2.0],
    [-1.0, 1.0, 1.0],
    [-2.0, 2.0, 2.0],
];

/// Feature name, raw value and expected byte string.
pub const FEATURE_BYTES: [(&str, f64, &str); 4] = [
    ("Beat", 26.5, "00011010"),
    ("FFT", 61.2, "00111101"),
    ("MFCC", 58.4, "00111010"),
    ("Pitch", 36.6, "00100100"),
];

#[derive(Debug, Clone, Copy)]
pub struct ErrorTableRow {
    pub input: &'static str,
    pub actual: &'static str,
    pub desired: &'static str,
    /// Error string as printed in the source table.
    pub printed: &'static str,
    /// `desired - actual` rendered in signed binary.
    pub subtraction: &'static str,
}

impl ErrorTableRow {
    pub fn printed_is_consistent(&self) -> bool {
        self.printed == self.subtraction
    }
}

/// Rows 6 and 8 print values that disagree with `desired - actual`.
pub const ERROR_TABLE: [ErrorTableRow; 8] = [
    ErrorTableRow {
        input: "1010101",
        actual: "1110001",
        desired: "1010001",
        printed: "-100000",
        subtraction: "-100000",
    },
    ErrorTableRow {
        input: "1010100",
        actual: "1010110",
        desired: "1010010",
        printed: "-100",
        subtraction: "-100",
    },
    ErrorTableRow {
        input: "1010101",
        actual: "1010011",
        desired: "1010011",
        printed: "0",
        subtraction: "0",
    },
    ErrorTableRow {
        input: "1010011",
        actual: "0010011",
        desired: "1010010",
        printed: "111111",
        subtraction: "111111",
    },
    ErrorTableRow {
        input: "1010010",
        actual: "1011011",
        desired: "1010011",
        printed: "-1000",
        subtraction: "-1000",
    },
    ErrorTableRow {
        input: "1010011",
        actual: "1110100",
        desired: "1010001",
        printed: "-10011",
        subtraction: "-100011",
    },
    ErrorTableRow {
        input: "1010010",
        actual: "1010010",
        desired: "1010010",
        printed: "0",
        subtraction: "0",
    },
    ErrorTableRow {
        input: "1010001",
        actual: "1000101",
        desired: "1010101",
        printed: "100",
        subtraction: "10000",
    },
];

pub fn and_pattern_set() -> PatternSet {
    PatternSet::new(
        AND_PATTERNS
            .iter()
            .map(|(x, t)| PatternEntry {
                input: x.to_vec(),
                target: vec![*t],
                label: String::new(),
            })
            .collect(),
    )
    .expect("AND patterns are bipolar")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Matches the subtraction rule but not the printed table value.
    Documented,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, ok: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            status: if ok {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Documented => "PASS (table value inconsistent, documented)",
        };
        write!(f, "{tag:<5} {}: {}", self.name, self.detail)
    }
}

fn fmt_weights(w: &[f64]) -> String {
    let parts: Vec<String> = w.iter().map(|v| format!("{v}")).collect();
    format!("({})", parts.join(", "))
}

/// Hebb trajectory over the AND patterns and their classification.
pub fn check_and_training() -> Vec<CheckResult> {
    let mut net = HebbNetwork::new(3, 1, true).expect("valid shape");
    let cfg = TrainConfig {
        record_weights: true,
        ..TrainConfig::plain_hebb()
    };
    let log = match net.train(&and_pattern_set(), &cfg) {
        Ok(log) => log,
        Err(e) => {
            return vec![CheckResult::new(
                "AND weight trajectory",
                false,
                e.to_string(),
            )]
        }
    };
    let trajectory: Vec<Vec<f64>> = log.steps.iter().map(|s| s.weights.clone()).collect();
    let traj_ok = trajectory.len() == 4
        && trajectory
            .iter()
            .zip(AND_TRAJECTORY)
            .all(|(got, want)| got[..] == want[..]);
    let traj_detail = trajectory
        .iter()
        .map(|w| fmt_weights(w))
        .collect::<Vec<_>>()
        .join(" -> ");

    let outputs: Vec<f64> = AND_PATTERNS
        .iter()
        .map(|(x, _)| {
            net.predict(x)
                .map(|p| if p.bits()[0] { 1.0 } else { -1.0 })
                .unwrap_or(0.0)
        })
        .collect();
    let class_ok = outputs.iter().zip(AND_PATTERNS).all(|(o, (_, t))| *o == t);

    vec![
        CheckResult::new("AND weight trajectory", traj_ok, traj_detail),
        CheckResult::new(
            "AND classification",
            class_ok,
            format!("outputs {}", fmt_weights(&outputs)),
        ),
    ]
}

/// Byte encoding of the four feature values under the identity range.
pub fn check_feature_bytes() -> Vec<CheckResult> {
    FEATURE_BYTES
        .iter()
        .map(|&(name, value, expected)| {
            let got = quantize_to_byte(value, 0.0, 255.0)
                .map_err(|e| e.to_string())
                .and_then(|b| to_binary_pattern(b as i64).map_err(|e| e.to_string()));
            match got {
                Ok(p) => CheckResult::new(
                    format!("feature byte {name}"),
                    p.to_string() == expected,
                    format!("{value} -> {p} (expected {expected})"),
                ),
                Err(e) => CheckResult::new(format!("feature byte {name}"), false, e),
            }
        })
        .collect()
}

/// Signed errors of every row in the error table.
pub fn check_error_table() -> Vec<CheckResult> {
    ERROR_TABLE
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let name = format!("error table row {}", i + 1);
            let parsed = (
                row.desired.parse::<BinaryPattern>(),
                row.actual.parse::<BinaryPattern>(),
            );
            let (Ok(desired), Ok(actual)) = parsed else {
                return CheckResult::new(name, false, "unparseable pattern".into());
            };
            let computed = match signed_binary_error(&desired, &actual) {
                Ok((_, s)) => s,
                Err(e) => return CheckResult::new(name, false, e.to_string()),
            };
            if row.printed_is_consistent() {
                let ok = computed == row.printed;
                CheckResult::new(name, ok, format!("{computed} (table {})", row.printed))
            } else {
                let ok = computed == row.subtraction;
                let mut r = CheckResult::new(
                    name,
                    ok,
                    format!(
                        "{computed} (subtraction {}, table prints {})",
                        row.subtraction, row.printed
                    ),
                );
                if ok {
                    r.status = CheckStatus::Documented;
                }
                r
            }
        })
        .collect()
}

pub fn run_all() -> Vec<CheckResult> {
    let mut out = check_and_training();
    out.extend(check_feature_bytes());
    out.extend(check_error_table());
    out
}

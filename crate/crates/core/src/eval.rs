//! Split validation, signed-binary error rows, LMS error, accuracy and
//! training-curve summaries, plus a forward-pass micro-benchmark.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::encoding::BinaryPattern;
use crate::hebbnet::{forward_into, EpochLog};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("manifest is empty")]
    EmptyManifest,
    #[error("split ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error("pattern widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("no rows to evaluate")]
    EmptyRows,
    #[error("no predictions to score")]
    EmptyPredictions,
    #[error("epoch log is empty")]
    EmptyLog,
    #[error("malformed curve: {0}")]
    MalformedCurve(String),
}

/// Stratified split: per label, `floor(ratio * count)` items go to training
/// and the rest to test. Both lists are shuffled by a generator seeded with
/// `seed`, so a fixed seed always gives the same split.
pub fn split_dataset<T: Clone>(
    manifest: &[T],
    label_of: impl Fn(&T) -> &str,
    ratio: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), EvalError> {
    if manifest.is_empty() {
        return Err(EvalError::EmptyManifest);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(EvalError::InvalidRatio(ratio));
    }
    let mut groups: BTreeMap<&str, Vec<&T>> = BTreeMap::new();
    for item in manifest {
        groups.entry(label_of(item)).or_default().push(item);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for group in groups.values_mut() {
        group.shuffle(&mut rng);
        // the epsilon keeps e.g. 0.66 * 100 from flooring to 65
        let n_train = (ratio * group.len() as f64 + 1e-9).floor() as usize;
        train.extend(group[..n_train].iter().map(|&t| t.clone()));
        test.extend(group[n_train..].iter().map(|&t| t.clone()));
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((train, test))
}

/// `decode(desired) - decode(actual)` and its signed base-2 rendering.
pub fn signed_binary_error(
    desired: &BinaryPattern,
    actual: &BinaryPattern,
) -> Result<(i64, String), EvalError> {
    if desired.width() != actual.width() {
        return Err(EvalError::WidthMismatch(desired.width(), actual.width()));
    }
    let diff = desired.decode() as i128 - actual.decode() as i128;
    Ok((diff as i64, signed_binary(diff as i64)))
}

/// `-` for negatives, then the minimal unsigned binary of the magnitude.
pub fn signed_binary(value: i64) -> String {
    if value < 0 {
        format!("-{:b}", value.unsigned_abs())
    } else {
        format!("{value:b}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub input: BinaryPattern,
    pub actual: BinaryPattern,
    pub desired: BinaryPattern,
    pub error_int: i64,
    pub error_binary: String,
}

impl EvalRow {
    pub fn new(
        input: BinaryPattern,
        actual: BinaryPattern,
        desired: BinaryPattern,
    ) -> Result<Self, EvalError> {
        let (error_int, error_binary) = signed_binary_error(&desired, &actual)?;
        Ok(Self {
            input,
            actual,
            desired,
            error_int,
            error_binary,
        })
    }

    pub fn width(&self) -> usize {
        self.desired.width()
    }
}

impl Serialize for EvalRow {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("EvalRow", 5)?;
        st.serialize_field("input", &self.input)?;
        st.serialize_field("actual", &self.actual)?;
        st.serialize_field("desired", &self.desired)?;
        st.serialize_field("error_int", &self.error_int)?;
        st.serialize_field("error_binary", &self.error_binary)?;
        st.end()
    }
}

/// `sqrt(mean((error_int / 2^width)^2))` over the rows.
pub fn lms_error(rows: &[EvalRow]) -> Result<f64, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyRows);
    }
    let sum: f64 = rows
        .iter()
        .map(|r| (r.error_int as f64 / 2f64.powi(r.width() as i32)).powi(2))
        .sum();
    Ok((sum / rows.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub overall: f64,
    pub per_class: BTreeMap<String, f64>,
    pub support: BTreeMap<String, usize>,
}

/// Overall and per-true-label accuracy in percent. Each prediction is a
/// `(predicted, actual)` label pair.
pub fn accuracy_report<P: AsRef<str>, T: AsRef<str>>(
    predictions: &[(P, T)],
) -> Result<AccuracyReport, EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    let mut hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (pred, truth) in predictions {
        let e = hits.entry(truth.as_ref().to_string()).or_default();
        e.1 += 1;
        if pred.as_ref() == truth.as_ref() {
            e.0 += 1;
        }
    }
    let correct: usize = hits.values().map(|h| h.0).sum();
    Ok(AccuracyReport {
        overall: 100.0 * correct as f64 / predictions.len() as f64,
        per_class: hits
            .iter()
            .map(|(l, &(c, n))| (l.clone(), 100.0 * c as f64 / n as f64))
            .collect(),
        support: hits.iter().map(|(l, &(_, n))| (l.clone(), n)).collect(),
    })
}

/// Epoch error series with its shape summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub points: Vec<(usize, f64)>,
    pub first: f64,
    pub last: f64,
    /// Every error from epoch 2 on is at most its predecessor.
    pub non_increasing_after_first: bool,
    /// All errors equal; the non-increasing property then holds trivially.
    pub flat: bool,
}

impl ErrorCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,error\n");
        for (epoch, err) in &self.points {
            let _ = writeln!(out, "{epoch},{err:.6}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("epoch,error") {
            return Err(EvalError::MalformedCurve(
                "missing `epoch,error` header".into(),
            ));
        }
        let points = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let (e, v) = l
                    .split_once(',')
                    .ok_or_else(|| EvalError::MalformedCurve(format!("bad line `{l}`")))?;
                let epoch = e
                    .trim()
                    .parse()
                    .map_err(|_| EvalError::MalformedCurve(l.into()))?;
                let error = v
                    .trim()
                    .parse()
                    .map_err(|_| EvalError::MalformedCurve(l.into()))?;
                Ok((epoch, error))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_points(points)
    }

    fn from_points(points: Vec<(usize, f64)>) -> Result<Self, EvalError> {
        let (first, last) = match (points.first(), points.last()) {
            (Some(f), Some(l)) => (f.1, l.1),
            _ => return Err(EvalError::EmptyLog),
        };
        let errors: Vec<f64> = points.iter().map(|p| p.1).collect();
        Ok(Self {
            non_increasing_after_first: errors
                .get(1..)
                .unwrap_or(&[])
                .windows(2)
                .all(|w| w[1] <= w[0]),
            flat: errors.iter().all(|&e| e == first),
            points,
            first,
            last,
        })
    }

    pub fn describe(&self) -> String {
        let shape = if self.flat {
            "flat (non-increasing: trivially true)".to_string()
        } else {
            format!(
                "non-increasing after epoch 1: {}",
                self.non_increasing_after_first
            )
        };
        format!(
            "{} epochs, first error {:.6}, last error {:.6}, {shape}",
            self.points.len(),
            self.first,
            self.last
        )
    }
}

pub fn epoch_error_curve(log: &EpochLog) -> Result<ErrorCurve, EvalError> {
    ErrorCurve::from_points(log.epochs.iter().map(|e| (e.epoch, e.error)).collect())
}

/// Serializes as a JSON number with exactly six decimals.
struct Fixed6(f64);

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let value = if self.0.is_finite() { self.0 } else { 0.0 };
        let text = format!("{value:.6}");
        RawValue::from_string(text)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub lms: f64,
    pub accuracy_overall: f64,
    pub accuracy_per_class: BTreeMap<String, f64>,
    pub epoch_errors: Vec<f64>,
}

impl Serialize for EvalReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let per_class: BTreeMap<&String, Fixed6> = self
            .accuracy_per_class
            .iter()
            .map(|(k, &v)| (k, Fixed6(v)))
            .collect();
        let epochs: Vec<Fixed6> = self.epoch_errors.iter().map(|&e| Fixed6(e)).collect();
        let mut st = s.serialize_struct("EvalReport", 5)?;
        st.serialize_field("rows", &self.rows)?;
        st.serialize_field("lms", &Fixed6(self.lms))?;
        st.serialize_field("accuracy_overall", &Fixed6(self.accuracy_overall))?;
        st.serialize_field("accuracy_per_class", &per_class)?;
        st.serialize_field("epoch_errors", &epochs)?;
        st.end()
    }
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n_inputs: usize,
    pub n_outputs: usize,
    /// Median wall time of one forward pass, in nanoseconds.
    pub median_ns: f64,
    /// Median time relative to the previous (smaller) row.
    pub ratio: Option<f64>,
}

/// Shortest timed batch; single forward passes are too fast to time alone.
const MIN_BATCH_NS: u128 = 50_000;

/// Times the forward pass for each `(n_inputs, n_outputs)` size on the
/// calling thread. `reps` is raised to at least 10.
pub fn bench_forward(sizes: &[(usize, usize)], reps: usize) -> Vec<BenchRow> {
    let reps = reps.max(10);
    let mut sizes: Vec<(usize, usize)> = sizes
        .iter()
        .copied()
        .filter(|&(n, m)| n > 0 && m > 0)
        .collect();
    sizes.sort_unstable();
    sizes.dedup();

    let mut rows: Vec<BenchRow> = Vec::with_capacity(sizes.len());
    for (n, m) in sizes {
        let weights: Vec<f64> = (0..n * m).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
        let x: Vec<f64> = (0..n)
            .map(|i| if i % 3 == 0 { -1.0 } else { 1.0 })
            .collect();
        let mut y = vec![0.0; m];
        let mut run = |iters: usize| {
            let start = Instant::now();
            for _ in 0..iters {
                forward_into(black_box(&weights), black_box(&x), black_box(&mut y));
            }
            start.elapsed().as_nanos()
        };

        // calibrate the batch size, which also warms caches
        let mut batch = 1usize;
        while run(batch) < MIN_BATCH_NS && batch < 1 << 24 {
            batch *= 2;
        }
        let mut samples: Vec<f64> = (0..reps)
            .map(|_| run(batch) as f64 / batch as f64)
            .collect();
        samples.sort_by(f64::total_cmp);
        let median = samples[samples.len() / 2].max(f64::MIN_POSITIVE);
        let ratio = rows.last().map(|prev| median / prev.median_ns);
        rows.push(BenchRow {
            n_inputs: n,
            n_outputs: m,
            median_ns: median,
            ratio,
        });
    }
    rows
}

/// Aligned text table of benchmark rows.
pub fn format_bench_table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:>8} {:>9} {:>14} {:>8}\n",
        "n_inputs", "n_outputs", "median_ns", "ratio"
    );
    for r in rows {
        let ratio = r
            .ratio
            .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let _ = writeln!(
            out,
            "{:>8} {:>9} {:>14.1} {:>8}",
            r.n_inputs, r.n_outputs, r.median_ns, ratio
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hebbnet::EpochRecord;
    use proptest::prelude::*;

    fn p(s: &str) -> BinaryPattern {
        s.parse().unwrap()
    }

    #[test]
    fn table_rows() {
        assert_eq!(
            signed_binary_error(&p("1010010"), &p("1010110")).unwrap(),
            (-4, "-100".into())
        );
        assert_eq!(
            signed_binary_error(&p("1010010"), &p("0010011")).unwrap(),
            (63, "111111".into())
        );
        assert_eq!(
            signed_binary_error(&p("1010011"), &p("1010011")).unwrap(),
            (0, "0".into())
        );
        assert_eq!(
            signed_binary_error(&p("101"), &p("1010")),
            Err(EvalError::WidthMismatch(3, 4))
        );
    }

    #[test]
    fn lms_examples() {
        let zero = EvalRow::new(p("1010"), p("0110"), p("0110")).unwrap();
        assert_eq!(lms_error(&[zero.clone(), zero]).unwrap(), 0.0);
        let row = EvalRow::new(p("0000000"), p("0000000"), p("1000000")).unwrap();
        assert_eq!(row.error_int, 64);
        assert_eq!(lms_error(std::slice::from_ref(&row)).unwrap(), 0.5);
        let other = EvalRow::new(p("0000000"), p("0000011"), p("0000000")).unwrap();
        let once = lms_error(&[row.clone(), other.clone()]).unwrap();
        let twice = lms_error(&[row.clone(), other.clone(), row, other]).unwrap();
        assert!((once - twice).abs() < 1e-15);
        assert_eq!(lms_error(&[]), Err(EvalError::EmptyRows));
    }

    #[test]
    fn accuracy_examples() {
        let all = accuracy_report(&[("a", "a"), ("b", "b")]).unwrap();
        assert_eq!(all.overall, 100.0);
        let most = accuracy_report(&[("a", "a"), ("b", "b"), ("a", "a"), ("a", "b")]).unwrap();
        assert_eq!(most.overall, 75.0);
        assert_eq!(most.per_class["a"], 100.0);
        assert_eq!(most.per_class["b"], 50.0);
        assert!(accuracy_report::<&str, &str>(&[]).is_err());
    }

    #[test]
    fn split_counts() {
        let one: Vec<(usize, &str)> = (0..100).map(|i| (i, "rock")).collect();
        let (train, test) = split_dataset(&one, |t| t.1, 0.66, 7).unwrap();
        assert_eq!((train.len(), test.len()), (66, 34));

        let labels = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
        let ten: Vec<(usize, &str)> = (0..1000).map(|i| (i, labels[i % 10])).collect();
        let (train, test) = split_dataset(&ten, |t| t.1, 0.66, 7).unwrap();
        assert_eq!((train.len(), test.len()), (660, 340));
        assert_eq!(
            split_dataset(&ten, |t| t.1, 0.66, 7).unwrap(),
            (train, test)
        );

        assert_eq!(
            split_dataset::<(usize, &str)>(&[], |t| t.1, 0.5, 1),
            Err(EvalError::EmptyManifest)
        );
        assert_eq!(
            split_dataset(&ten, |t| t.1, 1.0, 1),
            Err(EvalError::InvalidRatio(1.0))
        );
    }

    #[test]
    fn curves() {
        let log = EpochLog {
            epochs: [0.25, 0.125, 0.125, 0.0]
                .iter()
                .enumerate()
                .map(|(i, &e)| EpochRecord {
                    epoch: i + 1,
                    error: e,
                    weights: None,
                })
                .collect(),
            steps: vec![],
        };
        let c = epoch_error_curve(&log).unwrap();
        assert!(c.non_increasing_after_first && !c.flat);
        assert_eq!(
            c.to_csv(),
            "epoch,error\n1,0.250000\n2,0.125000\n3,0.125000\n4,0.000000\n"
        );
        assert_eq!(ErrorCurve::from_csv(&c.to_csv()).unwrap(), c);

        let flat = ErrorCurve::from_points(vec![(1, 0.5), (2, 0.5)]).unwrap();
        assert!(flat.flat);
        assert!(flat.describe().contains("trivially true"));
        assert_eq!(
            epoch_error_curve(&EpochLog::default()),
            Err(EvalError::EmptyLog)
        );
    }

    #[test]
    fn report_uses_six_decimals() {
        let row = EvalRow::new(p("0101"), p("0100"), p("0110")).unwrap();
        let report = EvalReport {
            lms: lms_error(std::slice::from_ref(&row)).unwrap(),
            rows: vec![row],
            accuracy_overall: 75.0,
            accuracy_per_class: [("x".to_string(), 2.0 / 3.0 * 100.0)].into(),
            epoch_errors: vec![0.2, 0.0],
        };
        let json = report.to_json();
        assert!(json.contains("\"lms\": 0.125000"), "{json}");
        assert!(json.contains("\"accuracy_overall\": 75.000000"));
        assert!(json.contains("\"x\": 66.666667"));
        assert!(json.contains("\"error_binary\": \"10\""));
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["rows"][0]["error_int"], 2);
    }

    #[test]
    fn bench_structure() {
        let rows = bench_forward(&[(16, 4), (1, 1), (8, 4)], 10);
        let sizes: Vec<_> = rows.iter().map(|r| (r.n_inputs, r.n_outputs)).collect();
        assert_eq!(sizes, vec![(1, 1), (8, 4), (16, 4)]);
        assert!(rows
            .iter()
            .all(|r| r.median_ns.is_finite() && r.median_ns > 0.0));
        assert!(rows[0].ratio.is_none() && rows[1].ratio.is_some());
        assert!(format_bench_table(&rows).contains("ratio"));
    }

    proptest! {
        #[test]
        fn error_antisymmetry_and_reconstruction(a in 0u64..128, b in 0u64..128) {
            let (pa, pb) = (BinaryPattern::from_value(a, 7).unwrap(), BinaryPattern::from_value(b, 7).unwrap());
            let (e1, _) = signed_binary_error(&pa, &pb).unwrap();
            let (e2, _) = signed_binary_error(&pb, &pa).unwrap();
            prop_assert_eq!(e1, -e2);
            prop_assert_eq!(b as i64 + e1, a as i64);
            prop_assert_eq!(signed_binary_error(&pa, &pa).unwrap(), (0, "0".to_string()));
        }

        #[test]
        fn split_partitions_manifest(n in 1usize..200, classes in 1usize..6, seed in any::<u64>(), ratio in 0.05f64..0.95) {
            let items: Vec<(usize, String)> = (0..n).map(|i| (i, format!("c{}", i % classes))).collect();
            let (train, test) = split_dataset(&items, |t| t.1.as_str(), ratio, seed).unwrap();
            let mut ids: Vec<usize> = train.iter().chain(&test).map(|t| t.0).collect();
            ids.sort_unstable();
            prop_assert_eq!(ids, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn overall_is_weighted_mean(pairs in proptest::collection::vec((0u8..3, 0u8..3), 1..60)) {
            let preds: Vec<(String, String)> = pairs.iter().map(|(p, t)| (p.to_string(), t.to_string())).collect();
            let r = accuracy_report(&preds).unwrap();
            let weighted: f64 = r.per_class.iter().map(|(l, acc)| acc * r.support[l] as f64).sum::<f64>() / preds.len() as f64;
            prop_assert!((weighted - r.overall).abs() < 1e-9);
            prop_assert!((0.0..=100.0).contains(&r.overall));
        }
    }
}

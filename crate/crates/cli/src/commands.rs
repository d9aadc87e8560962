use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use log::{info, warn};
use rayon::prelude::*;

use mfh_core::dsp::analyze_track;
use mfh_core::encoding::{load_features_csv, summarize_track, write_features_csv, FeatureSummary};
use mfh_core::eval::{
    bench_forward, epoch_error_curve, format_bench_table, split_dataset, ErrorCurve, EvalError,
};
use mfh_core::hebbnet::HebbError;
use mfh_core::load_wav;
use mfh_core::pipeline::{
    build_report, evaluate_summaries, train_on_summaries, ModelFile, PipelineError,
};
use mfh_core::reproduce::run_all;

use crate::config::PipelineConfig;

pub const REPRODUCTION_FAILED: u8 = 1;
pub const INPUT_ERROR: u8 = 2;
pub const CONFIG_ERROR: u8 = 3;

pub const EPOCHS_FILE: &str = "epochs.csv";

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type CmdResult = Result<(), Failure>;

trait OrExit<T> {
    fn or_exit(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrExit<T> for Result<T, E> {
    fn or_exit(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

fn pipeline_code(e: &PipelineError) -> u8 {
    match e {
        PipelineError::EmptyTrainSplit
        | PipelineError::Hebb(HebbError::InvalidConfig(_))
        | PipelineError::Eval(EvalError::InvalidRatio(_)) => CONFIG_ERROR,
        _ => INPUT_ERROR,
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// `(label, path)` for every WAV file one directory below `root`, sorted.
fn dataset_files(root: &Path) -> anyhow::Result<Vec<(String, PathBuf)>> {
    let mut files = Vec::new();
    let entries =
        fs::read_dir(root).with_context(|| format!("cannot read dataset {}", root.display()))?;
    for dir in entries {
        let dir = dir?.path();
        if !dir.is_dir() {
            continue;
        }
        let Some(label) = dir.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
            warn!("skipping directory with non-UTF-8 name {}", dir.display());
            continue;
        };
        for f in fs::read_dir(&dir)? {
            let path = f?.path();
            let is_wav = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
            if is_wav && path.is_file() {
                files.push((label.clone(), path));
            }
        }
    }
    files.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(files)
}

fn extract_one(label: &str, path: &Path, cfg: &PipelineConfig) -> anyhow::Result<FeatureSummary> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| anyhow!("non-UTF-8 file name"))?;
    let buf = load_wav(path)?;
    let features = analyze_track(&buf, &cfg.features)?;
    if features.tempo.defaulted {
        warn!("{}: no usable periodicity, tempo defaulted", path.display());
    }
    Ok(summarize_track(
        &format!("{label}/{stem}"),
        label,
        &features,
        false,
    )?)
}

pub fn extract(
    dataset: Option<&Path>,
    out: &Path,
    config: Option<&Path>,
    jobs: usize,
) -> CmdResult {
    let cfg = PipelineConfig::load(config).or_exit(CONFIG_ERROR)?;
    let root = dataset
        .map(Path::to_path_buf)
        .or_else(|| cfg.dataset_root.clone())
        .ok_or_else(|| anyhow!("no dataset given (--dataset or dataset_root)"))
        .or_exit(INPUT_ERROR)?;
    let files = dataset_files(&root).or_exit(INPUT_ERROR)?;
    if files.is_empty() {
        return Err(anyhow!("no WAV files under {}", root.display())).or_exit(INPUT_ERROR);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .or_exit(CONFIG_ERROR)?;
    info!(
        "extracting {} files with {} workers",
        files.len(),
        pool.current_num_threads()
    );
    // indexed collect keeps the sorted-path order
    let results: Vec<_> = pool.install(|| {
        files
            .par_iter()
            .map(|(label, path)| extract_one(label, path, &cfg))
            .collect()
    });

    let mut summaries = Vec::with_capacity(files.len());
    for ((_, path), r) in files.iter().zip(results) {
        match r {
            Ok(s) => summaries.push(s),
            Err(e) => warn!("skipping {}: {e:#}", path.display()),
        }
    }
    if summaries.is_empty() {
        return Err(anyhow!("every file failed to decode")).or_exit(INPUT_ERROR);
    }

    let mut bytes = Vec::new();
    write_features_csv(&mut bytes, &summaries).or_exit(INPUT_ERROR)?;
    let out = cfg.output_path(out);
    write_file(&out, bytes).or_exit(INPUT_ERROR)?;
    info!(
        "wrote {} of {} tracks to {}",
        summaries.len(),
        files.len(),
        out.display()
    );
    Ok(())
}

pub fn train(features: &Path, out: &Path, config: Option<&Path>) -> CmdResult {
    let cfg = PipelineConfig::load(config).or_exit(CONFIG_ERROR)?;
    let summaries = load_features_csv(features)
        .with_context(|| format!("cannot load {}", features.display()))
        .or_exit(INPUT_ERROR)?;
    if summaries.is_empty() {
        return Err(anyhow!("{} has no tracks", features.display())).or_exit(INPUT_ERROR);
    }

    let outcome = train_on_summaries(&summaries, &cfg.train).map_err(|e| Failure {
        code: pipeline_code(&e),
        error: e.into(),
    })?;
    info!(
        "trained on {} tracks ({} held out) for {} epochs",
        outcome.train.len(),
        outcome.test.len(),
        outcome.log.epochs.len()
    );

    let out = cfg.output_path(out);
    write_file(&out, outcome.model.to_json()).or_exit(INPUT_ERROR)?;
    let curve = epoch_error_curve(&outcome.log).or_exit(INPUT_ERROR)?;
    info!("{}", curve.describe());
    write_file(&epochs_path(&out), curve.to_csv()).or_exit(INPUT_ERROR)?;
    Ok(())
}

fn epochs_path(model: &Path) -> PathBuf {
    model.with_file_name(EPOCHS_FILE)
}

/// `report.json` gets its curve in `report.curve.csv`.
pub fn curve_path(report: &Path) -> PathBuf {
    let stem = report
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    report.with_file_name(format!("{stem}.curve.csv"))
}

pub fn eval(model_path: &Path, features: &Path, out: &Path) -> CmdResult {
    let text = fs::read_to_string(model_path)
        .with_context(|| format!("cannot read {}", model_path.display()))
        .or_exit(INPUT_ERROR)?;
    let model = ModelFile::from_json(&text).or_exit(INPUT_ERROR)?;
    let meta = model
        .encoding
        .as_ref()
        .ok_or_else(|| anyhow!("model has no encoding section"))
        .or_exit(INPUT_ERROR)?;
    let net = model.network().or_exit(INPUT_ERROR)?;
    let summaries = load_features_csv(features)
        .with_context(|| format!("cannot load {}", features.display()))
        .or_exit(INPUT_ERROR)?;

    let (_, test) = split_dataset(
        &summaries,
        |s| s.label.as_str(),
        meta.split_ratio,
        meta.seed,
    )
    .or_exit(INPUT_ERROR)?;
    let evaluation = evaluate_summaries(&net, meta, &test).map_err(|e| Failure {
        code: INPUT_ERROR,
        error: e.into(),
    })?;

    let epochs = epochs_path(model_path);
    let curve = if epochs.is_file() {
        let text = fs::read_to_string(&epochs).or_exit(INPUT_ERROR)?;
        Some(ErrorCurve::from_csv(&text).or_exit(INPUT_ERROR)?)
    } else {
        warn!("{} not found, report has no epoch errors", epochs.display());
        None
    };
    let epoch_errors: Vec<f64> = curve
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.1))
        .collect();

    let report = build_report(evaluation, epoch_errors).or_exit(INPUT_ERROR)?;
    write_file(out, report.to_json()).or_exit(INPUT_ERROR)?;
    if let Some(c) = &curve {
        write_file(&curve_path(out), c.to_csv()).or_exit(INPUT_ERROR)?;
    }
    info!(
        "evaluated {} held-out tracks, lms {:.6}",
        report.rows.len(),
        report.lms
    );
    println!("accuracy: {:.2}%", report.accuracy_overall);
    Ok(())
}

pub fn reproduce() -> CmdResult {
    let results = run_all();
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        println!("{failed} of {} checks failed", results.len());
        return Err(Failure {
            code: REPRODUCTION_FAILED,
            error: anyhow!("{failed} checks failed"),
        });
    }
    println!("all {} checks passed", results.len());
    Ok(())
}

pub fn bench(sizes: &str, outputs: usize, reps: usize) -> CmdResult {
    let parsed: Result<Vec<usize>, _> = sizes
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect();
    let widths = match parsed {
        Ok(w) if !w.is_empty() && w.iter().all(|&n| n > 0) => w,
        _ => {
            warn!("cannot parse sizes `{sizes}`, using 8,64,512");
            vec![8, 64, 512]
        }
    };
    let shapes: Vec<(usize, usize)> = widths.iter().map(|&n| (n, outputs.max(1))).collect();
    print!("{}", format_bench_table(&bench_forward(&shapes, reps)));
    Ok(())
}

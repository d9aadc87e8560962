use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mfh_core::audio::encode_wav_pcm16;
use serde_json::Value;

const RATE: u32 = 8000;

fn mfh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfh"))
        .args(args)
        .env_remove("MFH_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tone(freq: f64, secs: f64, clicks_bpm: Option<f64>) -> Vec<f64> {
    let n = (RATE as f64 * secs) as usize;
    let mut x: Vec<f64> = (0..n)
        .map(|t| 0.4 * (2.0 * PI * freq * t as f64 / RATE as f64).sin())
        .collect();
    if let Some(bpm) = clicks_bpm {
        let period = (60.0 / bpm * RATE as f64) as usize;
        for k in (0..n).step_by(period) {
            x[k] = 0.9;
        }
    }
    x
}

/// Two labels with three clips each.
fn make_dataset(root: &Path) {
    for (label, base, bpm) in [("jazz", 220.0, None), ("rock", 330.0, Some(120.0))] {
        fs::create_dir_all(root.join(label)).unwrap();
        for i in 0..3 {
            let x = tone(base + 20.0 * i as f64, 2.0, bpm);
            fs::write(
                root.join(label).join(format!("{label}.{i:05}.wav")),
                encode_wav_pcm16(&[&x], RATE),
            )
            .unwrap();
        }
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn extract_counts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    make_dataset(&data);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");

    let out = mfh(&[
        "extract",
        "--dataset",
        s(&data),
        "--out",
        s(&a),
        "--jobs",
        "4",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = mfh(&[
        "extract",
        "--dataset",
        s(&data),
        "--out",
        s(&b),
        "--jobs",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let text = fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "track_id,label,beat,fft_stat,mfcc_stat,pitch,zcr_mean"
    );
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("jazz/jazz.00000,jazz,"));
    assert!(lines[6].starts_with("rock/rock.00002,rock,"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn extract_skips_corrupt_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    make_dataset(&data);
    fs::write(
        data.join("rock").join("broken.wav"),
        b"RIFF\x04\x00\x00\x00WAVE",
    )
    .unwrap();
    let csv = dir.path().join("f.csv");
    let out = mfh(&["extract", "--dataset", s(&data), "--out", s(&csv)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 7);
    assert!(stderr(&out).contains("broken.wav"), "{}", stderr(&out));
}

#[test]
fn extract_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir_all(empty.join("jazz")).unwrap();
    let csv = dir.path().join("f.csv");
    assert_eq!(
        mfh(&["extract", "--dataset", s(&empty), "--out", s(&csv)])
            .status
            .code(),
        Some(2)
    );

    fs::write(empty.join("jazz").join("x.wav"), b"not a wav").unwrap();
    assert_eq!(
        mfh(&["extract", "--dataset", s(&empty), "--out", s(&csv)])
            .status
            .code(),
        Some(2)
    );
    assert!(!csv.exists());
}

#[test]
fn train_eval_round() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    make_dataset(&data);
    let csv = dir.path().join("f.csv");
    assert!(mfh(&["extract", "--dataset", s(&data), "--out", s(&csv)])
        .status
        .success());

    let m1 = dir.path().join("m1").join("model.json");
    let m2 = dir.path().join("m2").join("model.json");
    for m in [&m1, &m2] {
        let out = mfh(&["train", "--features", s(&csv), "--out", s(m)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
    let epochs = fs::read_to_string(m1.with_file_name("epochs.csv")).unwrap();
    assert!(epochs.starts_with("epoch,error\n1,"));

    let model: Value = serde_json::from_str(&fs::read_to_string(&m1).unwrap()).unwrap();
    assert_eq!(model["config"]["learning_rate"], 0.2);
    assert_eq!(model["config"]["momentum"], 0.7);
    assert_eq!(model["config"]["max_epochs"], 10000);
    assert_eq!(model["n_inputs"], 32);

    let report = dir.path().join("report.json");
    let out = mfh(&[
        "eval",
        "--model",
        s(&m1),
        "--features",
        s(&csv),
        "--out",
        s(&report),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let pct: f64 = stdout
        .trim()
        .strip_prefix("accuracy: ")
        .and_then(|v| v.strip_suffix('%'))
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.0..=100.0).contains(&pct));

    let text = fs::read_to_string(&report).unwrap();
    let rep: Value = serde_json::from_str(&text).unwrap();
    // floor(0.66 * 3) = 1 of 3 per label trained on, the other 2 held out
    let rows = rep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let desired = i64::from_str_radix(row["desired"].as_str().unwrap(), 2).unwrap();
        let actual = i64::from_str_radix(row["actual"].as_str().unwrap(), 2).unwrap();
        let err = row["error_binary"].as_str().unwrap();
        let value = match err.strip_prefix('-') {
            Some(mag) => -i64::from_str_radix(mag, 2).unwrap(),
            None => i64::from_str_radix(err, 2).unwrap(),
        };
        assert_eq!(desired - actual, value);
        assert_eq!(row["error_int"], value);
    }
    assert!(text.contains("\"lms\": "));
    assert!(fs::read_to_string(dir.path().join("report.curve.csv"))
        .unwrap()
        .starts_with("epoch,error"));
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    make_dataset(&data);
    let csv = dir.path().join("f.csv");
    assert!(mfh(&["extract", "--dataset", s(&data), "--out", s(&csv)])
        .status
        .success());
    let model = dir.path().join("model.json");
    let out = Command::new(env!("CARGO_BIN_EXE_mfh"))
        .args(["train", "--features", s(&csv), "--out", s(&model)])
        .env("MFH_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(v["encoding"]["seed"], 7);
}

#[test]
fn train_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");

    let empty = dir.path().join("empty.csv");
    fs::write(
        &empty,
        "track_id,label,beat,fft_stat,mfcc_stat,pitch,zcr_mean\n",
    )
    .unwrap();
    assert_eq!(
        mfh(&["train", "--features", s(&empty), "--out", s(&model)])
            .status
            .code(),
        Some(2)
    );

    let malformed = dir.path().join("bad.csv");
    fs::write(&malformed, "a,b\n1,2\n").unwrap();
    assert_eq!(
        mfh(&["train", "--features", s(&malformed), "--out", s(&model)])
            .status
            .code(),
        Some(2)
    );

    let missing = dir.path().join("missing.csv");
    assert_eq!(
        mfh(&["train", "--features", s(&missing), "--out", s(&model)])
            .status
            .code(),
        Some(2)
    );

    let single = dir.path().join("single.csv");
    fs::write(
        &single,
        "track_id,label,beat,fft_stat,mfcc_stat,pitch,zcr_mean\njazz/a,jazz,120,900,-3,220,0.05\n",
    )
    .unwrap();
    assert_eq!(
        mfh(&["train", "--features", s(&single), "--out", s(&model)])
            .status
            .code(),
        Some(3)
    );

    let config = dir.path().join("bad.conf");
    fs::write(&config, "momentum = 2.0\n").unwrap();
    assert_eq!(
        mfh(&[
            "train",
            "--features",
            s(&single),
            "--out",
            s(&model),
            "--config",
            s(&config)
        ])
        .status
        .code(),
        Some(3)
    );
    assert!(!model.exists());
}

#[test]
fn eval_rejects_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    make_dataset(&data);
    let csv = dir.path().join("f.csv");
    assert!(mfh(&["extract", "--dataset", s(&data), "--out", s(&csv)])
        .status
        .success());
    let model = dir.path().join("model.json");
    assert!(mfh(&["train", "--features", s(&csv), "--out", s(&model)])
        .status
        .success());

    let mut v: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    let n_out = v["n_outputs"].as_u64().unwrap() as usize;
    v["n_inputs"] = 8.into();
    v["weights"] = vec![0.5; 8 * n_out].into();
    fs::write(&model, serde_json::to_string(&v).unwrap()).unwrap();

    let report = dir.path().join("r.json");
    let out = mfh(&[
        "eval",
        "--model",
        s(&model),
        "--features",
        s(&csv),
        "--out",
        s(&report),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn config_file_drives_training() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    make_dataset(&data);
    let config = dir.path().join("mfh.conf");
    fs::write(
        &config,
        format!(
            "# test settings\ndataset_root = \"{}\"\nfeatures = \"beat,zcr\"\nlearning_rate = 0.5\nquantization = \"fitted\"\n",
            data.display()
        ),
    )
    .unwrap();
    let csv = dir.path().join("f.csv");
    let out = mfh(&["extract", "--out", s(&csv), "--config", s(&config)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let model = dir.path().join("model.json");
    assert!(mfh(&[
        "train",
        "--features",
        s(&csv),
        "--out",
        s(&model),
        "--config",
        s(&config)
    ])
    .status
    .success());
    let v: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(v["n_inputs"], 16);
    assert_eq!(v["config"]["learning_rate"], 0.5);
}

#[test]
fn reproduce_and_bench() {
    let out = mfh(&["reproduce"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text
        .lines()
        .any(|l| l.starts_with("PASS") && l.contains("(-2, 2, 2)")));
    assert!(!text.contains("FAIL"));

    let out = mfh(&["bench", "--reps", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].contains("ratio"));
    assert_eq!(lines.len(), 4);

    assert_eq!(
        mfh(&["bench", "--sizes", "oops", "--reps", "10"])
            .status
            .code(),
        Some(0)
    );
}

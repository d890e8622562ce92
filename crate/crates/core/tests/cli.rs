mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use handvqa::dataset::read_dataset;
use handvqa::evaluate::MetricsReport;
use handvqa::oracle::ValidationReport;
use handvqa::skeleton::{DescriptorKind, TOTAL_TARGETS};
use serde_json::Value;
use tempfile::TempDir;

fn handvqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_handvqa")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn generated(dir: &TempDir, n: usize) -> (std::path::PathBuf, std::path::PathBuf) {
    let manifest = common::write_manifest(dir.path(), "poses.jsonl", &common::separated_records(n, 3));
    let out = dir.path().join("mcq.jsonl");
    let o = handvqa(&["generate", "--manifest", s(&manifest), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (manifest, out)
}

#[test]
fn generate_prints_summary_and_writes_header() {
    let dir = TempDir::new().unwrap();
    let manifest = common::write_manifest(dir.path(), "poses.jsonl", &common::separated_records(4, 3));
    let out = dir.path().join("mcq.jsonl");
    let o = handvqa(&["generate", "--manifest", s(&manifest), "--out", s(&out), "--seed", "9"]);
    assert!(o.status.success());
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["images"], 4);
    assert_eq!(summary["mcqs"], 100);
    assert_eq!(summary["shortfalls"], 0);
    let reader = read_dataset(&out).unwrap();
    assert_eq!(reader.header.config.seed, 9);
    assert_eq!(reader.count(), 100);
}

#[test]
fn validate_clean_then_tampered() {
    let dir = TempDir::new().unwrap();
    let (manifest, out) = generated(&dir, 3);
    let o = handvqa(&["validate", "--manifest", s(&manifest), "--dataset", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("checked 75 questions: 0 mismatches"));

    let text = fs::read_to_string(&out).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut q: Value = serde_json::from_str(&lines[1]).unwrap();
    let n = q["options"].as_array().unwrap().len() as u64;
    let flipped = (q["correct_index"].as_u64().unwrap() + 1) % n;
    q["correct_index"] = flipped.into();
    let id = q["question_id"].as_str().unwrap().to_string();
    lines[1] = q.to_string();
    let tampered = dir.path().join("tampered.jsonl");
    fs::write(&tampered, lines.join("\n") + "\n").unwrap();

    let report = dir.path().join("report.json");
    let o = handvqa(&[
        "validate",
        "--manifest",
        s(&manifest),
        "--dataset",
        s(&tampered),
        "--report",
        s(&report),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains(&format!("mismatch {id}")));
    let r: ValidationReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r.mismatches.len(), 1);
    assert_eq!(r.mismatches[0].question_id, id);
}

#[test]
fn validate_threshold_override_detects_drift() {
    let dir = TempDir::new().unwrap();
    let (manifest, out) = generated(&dir, 5);
    let o = handvqa(&[
        "validate",
        "--manifest",
        s(&manifest),
        "--dataset",
        s(&out),
        "--distance-cuts",
        "0.1,0.3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = handvqa(&[
        "validate",
        "--manifest",
        s(&manifest),
        "--dataset",
        s(&out),
        "--relpos-band",
        "10",
    ]);
    // Every relpos question becomes aligned under a band wider than the pose.
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("75 mismatches"));
}

#[test]
fn score_and_baseline_reports() {
    let dir = TempDir::new().unwrap();
    let (_, out) = generated(&dir, 4);
    let mut preds = String::new();
    for (i, m) in read_dataset(&out).unwrap().enumerate() {
        let m = m.unwrap();
        let answer = if i % 2 == 0 {
            format!("({})", (b'a' + m.correct_index as u8) as char)
        } else {
            "no idea".to_string()
        };
        preds.push_str(&serde_json::json!({"question_id": m.question_id, "raw_answer": answer}).to_string());
        preds.push('\n');
    }
    let pred = dir.path().join("pred.jsonl");
    fs::write(&pred, preds).unwrap();
    let report = dir.path().join("metrics.json");
    let o = handvqa(&["score", "--gold", s(&out), "--pred", s(&pred), "--report", s(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: MetricsReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let correct: u64 = m.per_kind.iter().map(|k| k.correct).sum();
    assert_eq!(correct, 50);
    assert_eq!(m.unparseable, 50);
    assert_eq!(m.angle_mae, Some(0.0));
    assert!(m.calibration.is_none());
    for c in &m.confusion {
        let row_sum: u64 = c.counts.iter().flatten().sum();
        assert_eq!(row_sum, m.kind(c.kind).count);
    }

    let report = dir.path().join("baseline.json");
    let o = handvqa(&["baseline", "--gold", s(&out), "--trials", "3", "--report", s(&report)]);
    assert!(o.status.success());
    let m: MetricsReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(m.kind(DescriptorKind::Angle).count, 60);
    assert_eq!(m.unparseable, 0);
}

#[test]
fn score_with_confidences_attaches_calibration() {
    let dir = TempDir::new().unwrap();
    let (_, out) = generated(&dir, 2);
    let mut preds = String::new();
    for m in read_dataset(&out).unwrap() {
        let m = m.unwrap();
        preds.push_str(
            &serde_json::json!({"question_id": m.question_id, "raw_answer": "a", "confidence": 0.5}).to_string(),
        );
        preds.push('\n');
    }
    let pred = dir.path().join("pred.jsonl");
    fs::write(&pred, preds).unwrap();
    let report = dir.path().join("metrics.json");
    let o = handvqa(&["score", "--gold", s(&out), "--pred", s(&pred), "--report", s(&report)]);
    assert!(o.status.success());
    let m: MetricsReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let cal = m.calibration.unwrap();
    assert_eq!(cal.bins.len(), 10);
    assert_eq!(cal.total, 50);
}

#[test]
fn stats_and_catalog() {
    let dir = TempDir::new().unwrap();
    let (_, out) = generated(&dir, 2);
    let o = handvqa(&["stats", "--dataset", s(&out), "--json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["total"], 50);

    let o = handvqa(&["catalog", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["total"], TOTAL_TARGETS);
    assert_eq!(v["angle"].as_array().unwrap().len(), 15);
    assert_eq!(v["relpos_z"].as_array().unwrap().len(), 23);
    let o = handvqa(&["catalog"]);
    assert!(stdout(&o).contains("\"distal interphalangeal joint of the middle finger\""));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out = dir.path().join("out.jsonl");
    assert_eq!(handvqa(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        handvqa(&["generate", "--manifest", s(&missing), "--out", s(&out)])
            .status
            .code(),
        Some(5)
    );

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"image_id\": \"a\", \"joints\": [[0,0,0]]}\n").unwrap();
    let o = handvqa(&["generate", "--manifest", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let manifest = common::write_manifest(dir.path(), "ok.jsonl", &common::separated_records(1, 1));
    let o = handvqa(&[
        "generate",
        "--manifest",
        s(&manifest),
        "--out",
        s(&out),
        "--samples-per-type",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = handvqa(&[
        "generate",
        "--manifest",
        s(&manifest),
        "--out",
        s(&out),
        "--angle-cuts",
        "150,105,170",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = handvqa(&["generate", "--manifest", s(&manifest), "--out", s(&out)]);
    assert!(o.status.success());
    let pred = dir.path().join("pred.jsonl");
    fs::write(
        &pred,
        "{\"question_id\": \"ffffffffffffffff\", \"raw_answer\": \"a\"}\n",
    )
    .unwrap();
    assert_eq!(
        handvqa(&["score", "--gold", s(&out), "--pred", s(&pred)]).status.code(),
        Some(1)
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let manifest = common::write_manifest(dir.path(), "poses.jsonl", &common::separated_records(2, 8));
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 77\nsamples_per_type = 2\n").unwrap();
    let out = dir.path().join("a.jsonl");
    let o = handvqa(&[
        "--config",
        s(&cfg),
        "generate",
        "--manifest",
        s(&manifest),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let r = read_dataset(&out).unwrap();
    assert_eq!(r.header.config.seed, 77);
    assert_eq!(r.count(), 20);

    let o = handvqa(&[
        "--config",
        s(&cfg),
        "generate",
        "--manifest",
        s(&manifest),
        "--out",
        s(&out),
        "--seed",
        "5",
    ]);
    assert!(o.status.success());
    assert_eq!(read_dataset(&out).unwrap().header.config.seed, 5);
}

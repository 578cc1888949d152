use std::path::Path;
use std::process::{Command, Output};

fn hitomi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitomi"))
        .args(args)
        .env("HITOMI_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    let out = hitomi(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(hitomi(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hitomi(&["eval", "--dets", "a", "--gt", "b", "--bogus"]).status.code(), Some(1));
    assert_eq!(hitomi(&["eval", "--dets", "a"]).status.code(), Some(1));
    assert_eq!(hitomi(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out = hitomi(&["eval", "--dets", s(&missing), "--gt", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert!(out.stdout.is_empty());
}

#[test]
fn eval_writes_report_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.jsonl");
    let dets = dir.path().join("d.jsonl");
    std::fs::write(&gt, "{\"frame\":\"f0\",\"box\":[0,0,10,10]}\n{\"frame\":\"f0\",\"box\":[50,50,10,10]}\n").unwrap();
    std::fs::write(&dets, "{\"frame\":\"f0\",\"box\":[5,0,10,10],\"conf\":1.0}\n").unwrap();
    let out = hitomi(&["eval", "--dets", s(&dets), "--gt", s(&gt)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "model,scene,iou,ap,precision,recall,f1,tp,fp,fn");
    assert_eq!(lines[1], "hitomi,all,0.2,0.5,1.0,0.5,0.6666666666666666,1,0,1");

    let svg = dir.path().join("pr.svg");
    let out = hitomi(&["eval", "--dets", s(&dets), "--gt", s(&gt), "--sweep", "0.1:0.5:0.1", "--pr-svg", s(&svg), "--model", "m", "--scene", "x"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let tps: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(7).unwrap()).collect();
    assert_eq!(tps, ["1", "1", "1", "0", "0"]);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn synth_train_detect_eval_bench() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    std::fs::write(d.join("ds.json"), r#"{"n_per_material":150,"seed":3}"#).unwrap();
    let data = d.join("train");
    let out = hitomi(&["synth", "--dataset", s(&d.join("ds.json")), "--out", s(&data)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(data.join("samples.csv").exists() && data.join("labels.json").exists());

    let model = d.join("model.json");
    let log = d.join("log.csv");
    let out = hitomi(&["train", "--data", s(&data), "--out", s(&model), "--seed", "3", "--epochs", "200", "--lr", "0.01", "--batch-size", "64", "--log", s(&log)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&log).unwrap().starts_with("epoch,train_loss,val_loss,val_accuracy"));

    let frames = d.join("frames");
    std::fs::create_dir_all(&frames).unwrap();
    let mut gt_text = String::new();
    for seed in ["1", "2"] {
        let f = frames.join(format!("s{seed}.hmc"));
        let gt = d.join(format!("s{seed}.jsonl"));
        let out = hitomi(&["synth", "--sar", seed, "--out", s(&f), "--gt", s(&gt), "--spec-out", s(&d.join("spec.json"))]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        gt_text += &std::fs::read_to_string(&gt).unwrap();
    }
    let gt = d.join("gt.jsonl");
    std::fs::write(&gt, gt_text).unwrap();
    // The saved spec renders the same frame again.
    let again = d.join("again.hmc");
    assert_eq!(hitomi(&["synth", "--scene", s(&d.join("spec.json")), "--out", s(&again)]).status.code(), Some(0));
    assert_eq!(std::fs::read(&again).unwrap(), std::fs::read(frames.join("s2.hmc")).unwrap());

    let dets = d.join("dets.jsonl");
    let maps = d.join("maps");
    let out = hitomi(&["detect", "--model", s(&model), "--wb-region", "0,0,14,14", "--input", s(&frames), "--out", s(&dets), "--dump-maps", s(&maps)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let pgm = std::fs::read(maps.join("s1_closed.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5"));
    assert_eq!(std::fs::read_dir(&maps).unwrap().count(), 6);

    let report = d.join("report.csv");
    let out = hitomi(&["eval", "--dets", s(&dets), "--gt", s(&gt), "--out", s(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&report).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let ap: f64 = row[3].parse().unwrap();
    assert!(ap > 0.5, "{text}");

    let wb = d.join("wb.json");
    std::fs::write(&wb, r#"{"gains":[1.0,1.0,1.0,1.0],"target":1.0}"#).unwrap();
    let timing = d.join("timing.csv");
    let out = hitomi(&["bench", "--input", s(&frames.join("s1.hmc")), "--model", s(&model), "--wb", s(&wb), "--iters", "3", "--warmup", "1", "--out", s(&timing)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&timing).unwrap();
    assert!(text.starts_with("stage,mean_ms,sd_ms\n"));
    assert_eq!(text.lines().count(), 11);

    let out = hitomi(&["bench", "--input", s(&frames.join("s1.hmc")), "--model", s(&model), "--iters", "2", "--warmup", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("mlp-inference,"));
}

#[test]
fn conflicting_wb_flags_are_usage_errors() {
    let out = hitomi(&["detect", "--model", "m", "--input", "i", "--out", "o", "--wb", "w", "--wb-region", "0,0,2,2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = hitomi(&["detect", "--model", "m", "--input", "i", "--out", "o", "--wb-region", "0,0,0,2"]);
    assert_eq!(out.status.code(), Some(1));
}

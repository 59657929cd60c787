use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semg-auth"))
        .args(args)
        .output()
        .unwrap()
}

fn synth(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--users",
        "3",
        "--gestures",
        "3",
        "--trials",
        "3",
        "--channels",
        "4",
        "--duration-s",
        "1",
        "--seed",
        "42",
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_is_reproducible_and_validates() {
    let tmp = tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(synth(&a, &[]).status.success());
    assert!(synth(&b, &[]).status.success());
    assert_eq!(tree(&a), tree(&b));

    let out = run(&["validate", "--dataset", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 issues"));

    std::fs::remove_file(a.join("data/P02/TA/1.csv")).unwrap();
    let out = run(&["validate", "--dataset", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("missing trial: P02/TA/1"));
}

#[test]
fn synth_rejects_a_single_trial() {
    let tmp = tempdir().unwrap();
    let out = synth(&tmp.path().join("x"), &["--trials", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn eval_writes_reports_and_reruns_from_its_config() {
    let tmp = tempdir().unwrap();
    let data = tmp.path().join("data");
    assert!(synth(&data, &["--separation", "0.3"]).status.success());
    let first = tmp.path().join("first");
    let out = run(&[
        "eval",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        first.to_str().unwrap(),
        "--features",
        "td+fdt",
        "--channels",
        "0,1,2,3",
        "--ranks",
        "1,2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "summary.json",
        "det_normal.csv",
        "det_leaked.csv",
        "det_self.csv",
        "cmc.csv",
        "folds.csv",
        "participants.csv",
        "config.json",
    ] {
        assert!(first.join(f).exists(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(first.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["dim"], 40);
    assert!(summary["identification"]["r2e"]["med"].is_number());

    // the resolved config reproduces the run; only --out differs
    let second = tmp.path().join("second");
    let config = first.join("config.json");
    let out = run(&[
        "eval",
        "--config",
        config.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["summary.json", "det_leaked.csv", "cmc.csv", "folds.csv"] {
        assert_eq!(
            std::fs::read(first.join(f)).unwrap(),
            std::fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn eval_exports_models_and_features() {
    let tmp = tempdir().unwrap();
    let data = tmp.path().join("data");
    assert!(synth(&data, &[]).status.success());
    let models = tmp.path().join("models");
    let feats = tmp.path().join("features.csv");
    let out = run(&[
        "eval",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        tmp.path().join("r").to_str().unwrap(),
        "--scenario",
        "leaked",
        "--aggregate",
        "--export-models",
        models.to_str().unwrap(),
        "--dump-features",
        feats.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(std::fs::read_dir(&models).unwrap().count(), 9);
    let m = semg_auth::model::load_model(&models.join("TA__P03.model")).unwrap();
    assert_eq!(m.dim(), 16);
    let text = std::fs::read_to_string(&feats).unwrap();
    assert!(text.starts_with("participant,gesture,trial,window,f0,"));
    assert_eq!(text.lines().count(), 1 + 3 * 3 * 3 * 17);
}

#[test]
fn sfs_routes_metrics_and_rejects_unknown_ones() {
    let tmp = tempdir().unwrap();
    let data = tmp.path().join("data");
    assert!(synth(&data, &["--separation", "0.2"]).status.success());
    for metric in ["eer", "r1e"] {
        let out_dir = tmp.path().join(metric);
        let out = run(&[
            "sfs",
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--metric",
            metric,
            "--scenario",
            "leaked",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let csv = std::fs::read_to_string(out_dir.join("sfs.csv")).unwrap();
        assert!(csv.starts_with("iteration,candidate_channel,error,selected,range\n"));
        assert_eq!(csv.lines().count(), 1 + 4 + 3 + 2 + 1);
        let summary: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out_dir.join("sfs_summary.json")).unwrap())
                .unwrap();
        let want = if metric == "eer" { "eer:leaked" } else { "r1e" };
        assert_eq!(summary["metric"], want);
        assert_eq!(summary["order"].as_array().unwrap().len(), 4);
    }
    let out = run(&[
        "sfs",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        "unused",
        "--metric",
        "accuracy",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("accuracy"));
}

#[test]
fn bad_settings_fail_before_computing() {
    let tmp = tempdir().unwrap();
    let data = tmp.path().join("data");
    assert!(synth(&data, &[]).status.success());
    let out_dir = tmp.path().join("r");
    for bad in [
        vec!["--channels", "0,9"],
        vec!["--channels", "2,1"],
        vec!["--lambda", "-1"],
        vec!["--features", "td+xyz"],
        vec!["--ranks", "0"],
        vec!["--fdt-bands", "10,2000", "--features", "fdt"],
    ] {
        let mut args = vec![
            "eval",
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ];
        args.extend(bad.iter().copied());
        let out = run(&args);
        assert_eq!(
            out.status.code(),
            Some(1),
            "{bad:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out_dir.exists(), "{bad:?} wrote output");
    }
}

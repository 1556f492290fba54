use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jgcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jgcs")).args(args).output().expect("run jgcs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn sim_reports_orthogonal_and_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = jgcs(&["sim", &write(dir.path(), "e.txt", "1 0 0\n0 1 0\n0 0 1\n")]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["cosTheta"], 0.0);
    assert_eq!(v["detG"], 1.0);
    assert_eq!(v["pairwiseCos"].as_array().unwrap().len(), 3);

    let out = jgcs(&["sim", &write(dir.path(), "same.txt", "0.3,1.5,2\n0.3,1.5,2\n")]);
    let v = json(&out);
    assert!((v["cosTheta"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v.get("phi3").is_none());
}

#[test]
fn sim_phi3_field_matches_cos_theta_squared() {
    let dir = tempfile::tempdir().unwrap();
    let out = jgcs(&["sim", &write(dir.path(), "r.txt", "0.8 -1.2 0.5 2.0\n1.1, 0.4, -0.3, 0.9\n-0.6 1.7 0.2 0.1\n")]);
    let v = json(&out);
    let c = v["cosTheta"].as_f64().unwrap();
    assert!((c * c - v["phi3"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn sim_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let degenerate = jgcs(&["sim", &write(dir.path(), "z.txt", "1 2 3\n0 0 0\n")]);
    assert_eq!(degenerate.status.code(), Some(3));
    let malformed = jgcs(&["sim", &write(dir.path(), "m.txt", "1 2 3\n4 five 6\n")]);
    assert_eq!(malformed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("line 2"));
    let ragged = jgcs(&["sim", &write(dir.path(), "g.txt", "1 2 3\n4 5\n")]);
    assert_eq!(ragged.status.code(), Some(2));
    let single = jgcs(&["sim", &write(dir.path(), "s.txt", "1 2 3\n")]);
    assert_eq!(single.status.code(), Some(2));
    assert_eq!(jgcs(&["sim", "/nonexistent/file"]).status.code(), Some(2));
}

#[test]
fn checkgrad_passes_and_is_reproducible() {
    let a = jgcs(&["checkgrad", "--seed", "5"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stdout));
    let b = jgcs(&["checkgrad", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8_lossy(&a.stdout);
    for name in ["similarity", "similarity_n2_vs_cosine", "contrastive", "angular", "gha", "pipeline"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{name},")) && l.ends_with(",pass")), "{name}");
    }
    let two = jgcs(&["checkgrad", "--modalities", "2", "--dim", "4", "--format", "json"]);
    assert!(two.status.success());
    assert_eq!(json(&two)["components"].as_array().unwrap().len(), 6);
}

#[test]
fn invalid_flags_exit_2_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = out.to_str().unwrap();
    for args in [
        vec!["align", "--tau", "0", "--out", o],
        vec!["align", "--negatives", "0", "--out", o],
        vec!["align", "--batch", "1", "--out", o],
        vec!["bench", "--tau", "-1", "--out", o],
        vec!["bench", "--mode", "sideways", "--out", o],
        vec!["align", "--neg-scheme", "random", "--out", o],
        vec!["checkgrad", "--modalities", "1"],
        vec!["frobnicate"],
    ] {
        assert_eq!(jgcs(&args).status.code(), Some(2), "{args:?}");
    }
    assert!(!out.exists());
}

#[test]
fn noise_writes_identical_files_for_the_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let status = jgcs(&["noise", "--seed", "42", "--out", out.to_str().unwrap()]);
        assert!(status.status.success());
        (fs::read(out.join("noise_report.csv")).unwrap(), fs::read(out.join("noise_summary.json")).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    let csv = String::from_utf8(a.0).unwrap();
    assert!(csv.contains("# seed: 42"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 5 * 100);
}

#[test]
fn small_align_run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &Path, extra: &[&str]| {
        let mut args = vec![
            "align", "--count", "200", "--dim", "16", "--hidden", "16", "--epochs", "2", "--batch", "32", "--quiet",
            "--out", out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let o = jgcs(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o
    };
    let out = dir.path().join("align");
    let ckpt = dir.path().join("enc.ckpt");
    let o = run(&out, &["--checkpoint", ckpt.to_str().unwrap(), "--format", "json"]);
    assert_eq!(json(&o)["epochs_run"], 2);
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert!(history.lines().any(|l| l == "epoch,l_contrastive,l_angular,l_total,mean_cos_pos,skipped"));
    let before = fs::read_to_string(out.join("embeddings_before.csv")).unwrap();
    let rows: Vec<&str> = before.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1 + 7 * 3);
    assert_eq!(rows[1].split(',').count(), 4 + 16);
    assert!(fs::read_to_string(&ckpt).unwrap().starts_with("jgcs-encoders 1\n"));

    let again = dir.path().join("again");
    run(&again, &["--exec", "sequential"]);
    for f in ["history.csv", "embeddings_before.csv", "embeddings_after.csv"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bench_by_modalities_has_ten_rows_per_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let o = jgcs(&[
        "bench", "--mode", "by_modalities", "--batch", "8", "--dim", "8", "--repetitions", "2", "--warmups", "0",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("bench.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.iter().filter(|r| r.starts_with("GHA,")).count(), 10);
    assert_eq!(rows.iter().filter(|r| r.starts_with("Dual,")).count(), 10);
    assert!(rows.iter().all(|r| r.split(',').nth(5) == Some("2")));
}

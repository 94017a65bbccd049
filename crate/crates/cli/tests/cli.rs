use std::path::Path;
use std::process::{Command, Output};

use mrkernel::corpus::bundled_overrides;
use mrkernel::mt::parse_label_csv;

fn mrkernel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrkernel"))
        .args(args)
        .env_remove("MRKERNEL_CONFIG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = mrkernel(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn corpus_gram_train_predict_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["corpus-build", "--out", p(&d.join("c"))]);
    let graphs = d.join("c/graphs");
    assert_eq!(std::fs::read_dir(&graphs).unwrap().count(), 55);
    ok(&["gram", "--graphs", p(&graphs), "--lambda", "0.5", "--out", p(&d.join("g.txt"))]);
    ok(&[
        "train", "--gram", p(&d.join("g.txt")), "--labels", p(&d.join("c/labels.csv")),
        "--c", "10", "--out", p(&d.join("m")),
    ]);
    for c in ["Permutative", "Additive", "Multiplicative"] {
        assert!(read(&d.join(format!("m/{c}.model"))).starts_with(&format!("category: {c}\n")));
    }
    let out = ok(&[
        "predict", "--model", p(&d.join("m/Additive.model")), p(&d.join("m/Permutative.model")),
        "--train-corpus", p(&graphs), "--graphs", p(&graphs),
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("function,MR,label,score"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 110);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let score: f64 = f[3].parse().unwrap();
        assert_eq!(f[2], if score >= 0.0 { "1" } else { "-1" }, "{row}");
    }
}

#[test]
fn predict_rejects_a_mismatched_training_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["corpus-build", "--out", p(&d.join("c"))]);
    let graphs = d.join("c/graphs");
    ok(&["gram", "--corpus", p(&graphs), "--out", p(&d.join("g.txt"))]);
    ok(&[
        "train", "--gram", p(&d.join("g.txt")), "--labels", p(&d.join("c/labels.csv")),
        "--mr", "additive", "--out", p(&d.join("m/Additive.model")),
    ]);
    std::fs::remove_file(graphs.join("copy.dot")).unwrap();
    let out = mrkernel(&[
        "predict", "--model", p(&d.join("m/Additive.model")), "--train-corpus", p(&graphs),
        "--graphs", p(&graphs),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("55") && err.contains("54"), "{err}");
}

#[test]
fn mt_labels_for_the_bundled_corpus_are_the_labels_before_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["corpus-build", "--out", p(&d.join("c"))]);
    ok(&["mt", "--subjects", "all", "--out", p(&d.join("mt.txt")), "--labels", p(&d.join("mt.csv"))]);
    let campaign = parse_label_csv(&read(&d.join("mt.csv"))).unwrap();
    let corpus = parse_label_csv(&read(&d.join("c/labels.csv"))).unwrap();
    assert_eq!(campaign.len(), corpus.len());
    let overrides = bundled_overrides();
    let mut differing = 0;
    for (a, b) in campaign.iter().zip(&corpus) {
        assert_eq!((&a.function, a.category), (&b.function, b.category));
        let overridden = overrides
            .iter()
            .any(|o| o.row.function == a.function && o.row.category == a.category);
        if overridden {
            differing += (a.positive != b.positive) as usize;
        } else {
            assert_eq!(a.positive, b.positive, "{} {}", a.function, a.category);
        }
    }
    assert!(differing > 0);
    assert!(read(&d.join("mt.txt")).contains("subject,category,variant,seed,result,detail"));
}

#[test]
fn eval_writes_text_and_json_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["eval", "--bundled", "--reps", "1", "--lambda-grid", "0.5,0.9", "--out", p(&d.join("r.txt"))]);
    assert!(read(&d.join("r.txt")).contains("mean test AUC"));
    let json = read(&d.join("r.json"));
    assert!(json.contains("\"categories\""));
}

#[test]
fn compile_reports_positions_and_tolerates_empty_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::create_dir(d.join("empty")).unwrap();
    ok(&["compile", p(&d.join("empty")), "--out-dir", p(&d.join("o"))]);

    std::fs::create_dir(d.join("src")).unwrap();
    std::fs::write(
        d.join("src/good.mml"),
        "fn ident(a: matrix): matrix {\n  return a;\n}\n",
    )
    .unwrap();
    ok(&["compile", p(&d.join("src")), "--out-dir", p(&d.join("o"))]);
    assert!(read(&d.join("o/ident.dot")).contains("start"));

    std::fs::write(d.join("src/bad.mml"), "fn f(a: matrix): matrix {\n  return a +;\n}\n").unwrap();
    let out = mrkernel(&["compile", p(&d.join("src")), "--out-dir", p(&d.join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.mml:2:"), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(mrkernel(&["gram", "--out", "x"]).status.code(), Some(2));
    assert_eq!(mrkernel(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        mrkernel(&["gram", "--bundled", "--lambda", "1.5", "--out", "x"]).status.code(),
        Some(2)
    );
}

#[test]
fn config_values_apply_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("c.toml");
    std::fs::write(&cfg, "[kernel]\nlambda = 0.3\nmax_len = 4\n").unwrap();
    ok(&["--config", p(&cfg), "gram", "--bundled", "--out", p(&d.join("a.txt"))]);
    ok(&["gram", "--bundled", "--lambda", "0.3", "--max-len", "4", "--out", p(&d.join("b.txt"))]);
    assert_eq!(read(&d.join("a.txt")), read(&d.join("b.txt")));
    ok(&["--config", p(&cfg), "gram", "--bundled", "--lambda", "0.6", "--out", p(&d.join("c.txt"))]);
    assert_ne!(read(&d.join("a.txt")), read(&d.join("c.txt")));

    std::fs::write(&cfg, "[kernel]\nlamda = 0.3\n").unwrap();
    assert_eq!(mrkernel(&["--config", p(&cfg), "gram", "--bundled", "--out", "x"]).status.code(), Some(1));
}

#[test]
fn mt_runs_named_subjects_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a.txt", "b.txt"] {
        ok(&[
            "mt", "--subjects", "copy,transpose", "--trials", "10", "--seed", "3",
            "--out", p(&d.join(out)),
        ]);
    }
    let report = read(&d.join("a.txt"));
    assert_eq!(report, read(&d.join("b.txt")));
    assert!(report.lines().any(|l| l.starts_with("copy,")));
    assert!(report.lines().any(|l| l.starts_with("transpose,")));
    assert_eq!(mrkernel(&["mt", "--subjects", "nosuch"]).status.code(), Some(2));
}

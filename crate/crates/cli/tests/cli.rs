use std::path::Path;
use std::process::{Command, Output};

fn qfusion(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfusion"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .env_remove("QF_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = qfusion(args, cwd);
    assert!(
        out.status.success(),
        "qfusion {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn pgm_dims(path: &Path) -> (usize, usize) {
    let bytes = std::fs::read(path).unwrap();
    let text = String::from_utf8_lossy(&bytes[..20]);
    let mut it = text.split_whitespace().skip(1);
    let w = it.next().unwrap().parse().unwrap();
    let h = it.next().unwrap().parse().unwrap();
    (h, w)
}

#[test]
fn train_evaluate_matches_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "data", "--classes", "3", "--pairs", "8", "--train", "4"], d);
    std::fs::write(d.join("run.cfg"), "k_max = 10\nhidden = 16\nmax_epochs = 400\n").unwrap();

    ok(&["train", "--manifest", "data/manifest.csv", "--config", "run.cfg", "--out", "m.qf"], d);
    ok(
        &["evaluate", "--manifest", "data/manifest.csv", "--model", "m.qf", "--report", "csv", "--out", "r.csv"],
        d,
    );
    let piped = ok(
        &["pipeline", "--manifest", "data/manifest.csv", "--config", "run.cfg", "--report", "csv"],
        d,
    );
    let report = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(report, piped);
    assert!(report.starts_with("class,tested,recognized,rate_percent\n"));
    assert_eq!(report.lines().count(), 5);

    let text = ok(&["evaluate", "--manifest", "data/manifest.csv", "--model", "m.qf"], d);
    assert!(text.contains("class0"));
}

#[test]
fn seed_env_changes_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "data", "--classes", "2", "--pairs", "4", "--train", "2"], d);
    std::fs::write(d.join("run.cfg"), "k_max = 3\nhidden = 4\nmax_epochs = 5\n").unwrap();
    let train = |seed: Option<&str>, out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qfusion"));
        cmd.args(["train", "--manifest", "data/manifest.csv", "--config", "run.cfg", "--out", out])
            .current_dir(d)
            .env_remove("QF_SEED");
        if let Some(s) = seed {
            cmd.env("QF_SEED", s);
        }
        assert!(cmd.status().unwrap().success());
        std::fs::read(d.join(out)).unwrap()
    };
    let base = train(None, "a.qf");
    assert_eq!(base, train(Some("0"), "b.qf"));
    assert_ne!(base, train(Some("9"), "c.qf"));
}

#[test]
fn gen_manifest_and_image_tools() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "data", "--classes", "2", "--pairs", "4", "--train", "2"], d);

    ok(&["gen-manifest", "data", "--seed", "3", "--train-frac", "0.5", "--out", "data/split.csv"], d);
    let csv = std::fs::read_to_string(d.join("data/split.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "class_id,visual_path,thermal_path,split"));
    assert_eq!(csv.matches(",train").count(), 4);
    assert_eq!(csv.matches(",test").count(), 4);

    ok(&["gen-manifest", "data", "--seed", "3", "--train-frac", "0.5", "--out", "elsewhere.csv"], d);
    ok(&["train", "--manifest", "elsewhere.csv", "--out", "m.qf"], d);

    let v = "data/class0/visual/0000.pgm";
    let t = "data/class0/thermal/0000.pgm";
    ok(&["quotient", "--method", "1", v, t, "--out", "q1.pgm"], d);
    ok(&["quotient", "--method", "2", v, t, "--out", "q2.pgm", "--fusion", "sum"], d);
    assert_eq!(pgm_dims(&d.join("q1.pgm")), (80, 100));
    assert_eq!(pgm_dims(&d.join("q2.pgm")), (40, 50));

    ok(&["decompose", v, "--out", "bands", "--levels", "2"], d);
    assert_eq!(pgm_dims(&d.join("bands/level1_cA.pgm")), (40, 50));
    assert_eq!(pgm_dims(&d.join("bands/level2_cD.pgm")), (20, 25));
    assert_eq!(pgm_dims(&d.join("bands/level1_tiled.pgm")), (80, 100));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = qfusion(&["quotient", "missing.pgm", "missing.pgm", "--out", "q.pgm"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.pgm"));

    let out = qfusion(&["quotient", "--method", "3", "a", "b", "--out", "q"], d);
    assert!(!out.status.success());

    std::fs::write(d.join("bad.qf"), b"not a model").unwrap();
    std::fs::write(d.join("m.csv"), "class_id,visual_path,thermal_path,split\n").unwrap();
    let out = qfusion(&["evaluate", "--manifest", "m.csv", "--model", "bad.qf"], d);
    assert!(!out.status.success());
}

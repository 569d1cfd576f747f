use std::path::Path;
use std::process::{Command, Output};

use radon_lens::Density1D;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_radon-lens"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn ok(args: &[&str], out: &Path) -> serde_json::Value {
    let o = run(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let line = String::from_utf8(o.stdout).unwrap();
    assert_eq!(line.trim_end().lines().count(), 1);
    serde_json::from_str(&line).unwrap()
}

fn read_density(path: &Path) -> Density1D {
    let text = std::fs::read_to_string(path).unwrap();
    let (mut t, mut p) = (Vec::new(), Vec::new());
    for line in text.lines().skip(1) {
        let mut it = line.split(',').map(|c| c.parse::<f64>().unwrap());
        t.push(it.next().unwrap());
        p.push(it.next().unwrap());
    }
    Density1D::from_values(t, p, 0.0).unwrap()
}

#[test]
fn gaussian_slices_agree_across_axes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["sample", "gaussian", "--n", "20000", "--seed", "3"], d);
    let data = d.join("gaussian.csv");
    let data = data.to_str().unwrap();
    let a = d.join("a");
    let b = d.join("b");
    ok(&["slice", "--data", data, "--theta-deg", "0"], &a);
    ok(&["slice", "--data", data, "--theta-deg", "90"], &b);
    let ks = read_density(&a.join("slice.csv")).ks_distance(&read_density(&b.join("slice.csv")));
    assert!(ks <= 0.01, "KS {ks}");
}

#[test]
fn fbp_report_meets_error_bound() {
    let dir = tempfile::tempdir().unwrap();
    let summary = ok(
        &["fbp", "--phantom-size", "128", "--n-thetas", "180"],
        dir.path(),
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fbp_report.json")).unwrap())
            .unwrap();
    let err = report["rel_l1_disk"].as_f64().unwrap();
    assert!(err <= 0.15, "rel L1 {err}");
    assert_eq!(summary["rel_l1_disk"], report["rel_l1_disk"]);

    // Reconstruct again from the written phantom file.
    let again = dir.path().join("again");
    let phantom = dir.path().join("phantom.csv");
    let s2 = ok(
        &[
            "fbp",
            "--image",
            phantom.to_str().unwrap(),
            "--n-thetas",
            "180",
        ],
        &again,
    );
    assert_eq!(s2["rel_l1_disk"], summary["rel_l1_disk"]);
}

#[test]
fn sinogram_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["sample", "halfmoon", "--n", "300", "--seed", "8"], d);
    let data = d.join("halfmoon.csv");
    let args = [
        "sinogram",
        "--data",
        data.to_str().unwrap(),
        "--n-thetas",
        "30",
    ];
    ok(&args, &d.join("r1"));
    ok(&args, &d.join("r2"));
    for f in ["sinogram.csv", "sinogram.svg"] {
        let a = std::fs::read(d.join("r1").join(f)).unwrap();
        let b = std::fs::read(d.join("r2").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn train_then_levelsets_and_adversarial() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "sample", "halfmoon", "--n", "200", "--seed", "1", "--header",
        ],
        d,
    );
    let data = d.join("halfmoon.csv");
    let data = data.to_str().unwrap();
    let s = ok(
        &[
            "train",
            "--arch",
            "2-12-1:tanh",
            "--data",
            data,
            "--epochs",
            "100",
            "--seed",
            "2",
        ],
        d,
    );
    assert!(s["accuracy"].as_f64().unwrap() >= 0.85, "{s}");
    let loss = std::fs::read_to_string(d.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().next(), Some("epoch,loss,accuracy"));
    assert_eq!(loss.lines().count(), 1 + 101);

    let model = d.join("model.json");
    let model = model.to_str().unwrap();
    let l = ok(
        &["levelsets", "--model", model, "--data", data, "--at", "0.5"],
        d,
    );
    assert_eq!(l["levels"], serde_json::json!([0.5]));
    let set: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("levelsets.json")).unwrap()).unwrap();
    assert!(!set["levels"][0]["polylines"].as_array().unwrap().is_empty());

    let adv = ok(
        &[
            "adversarial",
            "--model",
            model,
            "--data",
            data,
            "--start-idx",
            "0",
        ],
        d,
    );
    assert!(adv["steps"].as_u64().unwrap() >= 1);
    let traj = std::fs::read_to_string(d.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("step,x0,x1,g"));
}

#[test]
fn slice_accepts_defining_function_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["sample", "gaussian", "--n", "500"], d);
    let g = d.join("g.json");
    std::fs::write(&g, r#"{"kind":"circular","theta":[1.0,0.0],"radius":1.0}"#).unwrap();
    let data = d.join("gaussian.csv");
    ok(
        &[
            "slice",
            "--g",
            g.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
            "--theta-deg",
            "45",
        ],
        d,
    );
    assert!(d.join("slice.csv").exists());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["sample", "halfmoon", "--bogus"],
        vec!["sample", "halfmoon", "--n", "many"],
        vec!["fbp", "--n-thetas", "10"],
        vec![
            "train", "--arch", "linear", "--data", "x.csv", "--batch", "zero",
        ],
    ] {
        let o = run(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = bin()
        .args(["sample", "halfmoon", "--out"])
        .arg(dir.path())
        .env("RADON_LENS_THREADS", "none")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compute_errors_exit_one_with_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["slice", "--data", missing.to_str().unwrap()],
        vec!["sample", "halfmoon", "--noise=-1"],
        vec!["fbp", "--phantom-size", "1"],
    ];
    for args in cases {
        let o = run(&args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        let v: serde_json::Value = serde_json::from_str(&err).unwrap();
        assert!(v["error"].is_string() && v["message"].is_string(), "{v}");
    }
}

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn skj(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skj"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn skj")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = skj(dir, args);
    assert!(
        out.status.success(),
        "skj {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_cohort(dir: &Path, name: &str, seed: &str) {
    ok(
        dir,
        &["synth", "--seed", seed, "--out", name, "--families", "6", "--keypoints", "40", "--dim", "16"],
    );
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn synth_is_byte_identical_for_a_seed() {
    let tmp = TempDir::new().unwrap();
    small_cohort(tmp.path(), "a", "7");
    small_cohort(tmp.path(), "b", "7");
    small_cohort(tmp.path(), "c", "8");
    for file in ["labels.csv", "pair_labels.csv", "cohort.toml", "keypoints/S0001.skj", "keypoints/S0005.skj"] {
        assert_eq!(read(tmp.path().join("a").join(file)), read(tmp.path().join("b").join(file)), "{file}");
    }
    assert_ne!(
        read(tmp.path().join("a/keypoints/S0001.skj")),
        read(tmp.path().join("c/keypoints/S0001.skj"))
    );
}

#[test]
fn dist_then_analysis_pipeline() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    small_cohort(d, "coh", "1");
    ok(d, &["dist", "--in", "coh", "--out", "d.csv", "--k", "20"]);
    let dist = read(d.join("d.csv"));
    let mut lines = dist.lines();
    assert_eq!(lines.next(), Some("subject_a,subject_b,distance"));
    let n = read(d.join("coh/labels.csv")).lines().count() - 1;
    assert_eq!(lines.count(), n * (n - 1) / 2);

    let manifest: serde_json::Value = serde_json::from_str(&read(d.join("d.csv.run_manifest.json"))).unwrap();
    assert_eq!(manifest["subcommand"], "dist");
    assert_eq!(manifest["config"]["kernel"], "app+geo");
    assert_eq!(manifest["config"]["k"], 20);

    let labels = ["--labels", "coh/labels.csv"];
    let roc = ok(d, &[&["roc", "--in", "d.csv", "--out", "roc.csv"][..], &labels].concat());
    let auc: f64 = roc.trim().strip_prefix("auc ").unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    assert!(read(d.join("roc.csv")).starts_with("threshold,fpr,tpr\n"));

    ok(d, &[&["ks", "--in", "d.csv", "--out", "ks.json", "--a", "FS", "--b", "UR"][..], &labels].concat());
    let ks: serde_json::Value = serde_json::from_str(&read(d.join("ks.json"))).unwrap();
    let stat = ks["statistic"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&stat));

    ok(d, &[&["family", "--in", "d.csv", "--out", "fam.csv"][..], &labels].concat());
    assert_eq!(read(d.join("fam.csv")).lines().count(), n + 1);
    ok(d, &[&["outliers", "--in", "d.csv", "--out", "out.csv"][..], &labels].concat());
    ok(
        d,
        &[&["labels", "--in", "d.csv", "--out", "pairs.csv", "--summary", "sum.json"][..], &labels].concat(),
    );
    assert!(read(d.join("pairs.csv")).starts_with("subject_a,subject_b,label,distance,"));
    for f in ["roc.csv", "ks.json", "fam.csv", "out.csv", "pairs.csv"] {
        assert!(d.join(format!("{f}.run_manifest.json")).exists(), "{f}");
    }
}

#[test]
fn saved_index_gives_same_distances() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    small_cohort(d, "coh", "2");
    ok(d, &["index", "--in", "coh", "--out", "idx.bin", "--seed", "3"]);
    ok(d, &["dist", "--in", "coh", "--out", "a.csv", "--k", "15", "--seed", "3"]);
    ok(d, &["dist", "--in", "coh/cohort.toml", "--out", "b.csv", "--k", "15", "--index-file", "idx.bin"]);
    assert_eq!(read(d.join("a.csv")), read(d.join("b.csv")));
}

#[test]
fn full_format_and_threads_agree() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    small_cohort(d, "coh", "3");
    ok(d, &["dist", "--in", "coh", "--out", "one.csv", "--k", "10", "--exact", "--format", "full"]);
    ok(
        d,
        &["dist", "--in", "coh", "--out", "four.csv", "--k", "10", "--exact", "--format", "full", "--threads", "4"],
    );
    assert_eq!(read(d.join("one.csv")), read(d.join("four.csv")));
    assert!(read(d.join("one.csv")).starts_with("subject_id,"));
}

#[test]
fn group_and_alignment_commands() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    small_cohort(d, "coh", "4");
    ok(d, &["group", "--in", "coh", "--out", "g.csv", "--k", "20", "--tau", "-0.5", "--roc", "groc.csv"]);
    assert!(read(d.join("g.csv")).starts_with("subject_id,d_to_F,d_to_M,score,predicted,actual\n"));
    assert!(d.join("groc.csv").exists());

    ok(d, &["align", "--in", "coh/keypoints/S0002.skj", "--atlas", "coh/keypoints/S0001.skj", "--out", "t.txt"]);
    assert_eq!(read(d.join("t.txt")).split_whitespace().count(), 13);
    ok(d, &["align", "--in", "coh", "--atlas", "coh/keypoints/S0001.skj", "--out", "aligned"]);
    ok(d, &["dist", "--in", "aligned", "--out", "ad.csv", "--k", "10"]);
    assert!(d.join("aligned/run_manifest.json").exists());

    ok(d, &["scale-reg", "--in", "coh", "--out", "sr.json"]);
    let fit: serde_json::Value = serde_json::from_str(&read(d.join("sr.json"))).unwrap();
    assert!(fit["normalized"]["slope"].is_f64());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    for args in [
        &["dist", "--bogus"][..],
        &["dist", "--in", "x"][..],
        &["dist", "--in", "x", "--out", "y", "--kernel", "gaussian"][..],
        &["dist", "--in", "x", "--out", "y", "--exact", "--approx"][..],
        &["nonsense"][..],
    ] {
        assert_eq!(skj(tmp.path(), args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_1() {
    let tmp = TempDir::new().unwrap();
    let out = skj(tmp.path(), &["dist", "--in", "missing", "--out", "d.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    std::fs::write(tmp.path().join("bad.csv"), "subject_a,subject_b,distance\nA,B,nope\n").unwrap();
    std::fs::write(
        tmp.path().join("labels.csv"),
        "subject_id,family_id,mother_id,father_id,zygosity,sex,race,age\n",
    )
    .unwrap();
    let out = skj(tmp.path(), &["roc", "--in", "bad.csv", "--labels", "labels.csv", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rerunning_manifest_argv_reproduces_output() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    small_cohort(d, "coh", "5");
    for args in [
        &["dist", "--in", "coh", "--out", "d.csv", "--k", "12", "--seed", "9"][..],
        &["group", "--in", "coh", "--out", "g.csv", "--k", "12", "--exact"][..],
    ] {
        ok(d, args);
        let out = d.join(args[4]);
        let first = read(&out);
        let manifest: serde_json::Value =
            serde_json::from_str(&read(d.join(format!("{}.run_manifest.json", args[4])))).unwrap();
        let argv: Vec<String> = manifest["argv"].as_array().unwrap()[1..]
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect();
        std::fs::remove_file(&out).unwrap();
        ok(d, &argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(read(&out), first, "{}", args[0]);
    }
}

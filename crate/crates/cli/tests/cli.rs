use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn construct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_construct")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let path = entry.unwrap().path();
        let dest = to.join(path.file_name().unwrap());
        if path.is_dir() {
            copy_dir(&path, &dest);
        } else {
            fs::copy(&path, &dest).unwrap();
        }
    }
}

#[test]
fn synth_cbc_on_pi_writes_model_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let (mo, report, curves) = (tmp.path().join("out.mo"), tmp.path().join("r.json"), tmp.path().join("c.csv"));
    let out = construct(&[
        "synth",
        s(&fixture("pi")),
        "--mode",
        "cbc",
        "--pop",
        "50",
        "--gens",
        "10",
        "--seed",
        "7",
        "-o",
        s(&mo),
        "--report",
        s(&report),
        "--curves",
        s(&curves),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let model = fs::read_to_string(&mo).unwrap();
    assert!(model.starts_with("model PI\n") && model.ends_with("end PI;\n"), "{model}");
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["mode"], "cbc");
    assert_eq!(r["per_generation"].as_array().unwrap().len(), 10);
    assert_eq!(r["best_genes"].as_array().unwrap().len(), 15);
    let curves = fs::read_to_string(&curves).unwrap();
    assert!(curves.starts_with("mode,generation,best_mse\ncbc,0,"));
    assert_eq!(curves.lines().count(), 11);
}

#[test]
fn synth_cbt_on_pid_exits_2_when_nothing_simulates() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("r.json");
    let out = construct(&[
        "synth",
        s(&fixture("pid")),
        "--mode",
        "cbt",
        "--pop",
        "50",
        "--gens",
        "10",
        "--seed",
        "7",
        "--report",
        s(&report),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r["best_mse"].is_null());
}

#[test]
fn synth_without_reference_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&fixture("pi"), tmp.path());
    fs::remove_file(tmp.path().join("traces/reference.csv")).unwrap();
    let out = construct(&["synth", s(tmp.path()), "--mode", "cbc", "--pop", "10", "--gens", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reference"));
}

#[test]
fn report_is_identical_across_thread_counts() {
    let run = |threads: &str| {
        let tmp = tempfile::tempdir().unwrap();
        let report = tmp.path().join("r.json");
        let status = Command::new(env!("CARGO_BIN_EXE_construct"))
            .env("CONSTRUCT_THREADS", threads)
            .args(["synth", s(&fixture("limpid")), "--mode", "cbc", "--pop", "30", "--gens", "4", "--seed", "3"])
            .args(["--report", s(&report), "-o", s(&tmp.path().join("m.mo"))])
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        fs::read(report).unwrap()
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn make_reference_regenerates_identical_trace() {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&fixture("pid"), tmp.path());
    let reference = tmp.path().join("traces/reference.csv");
    let before = fs::read(&reference).unwrap();
    fs::remove_file(&reference).unwrap();
    let out = construct(&[
        "make-reference",
        s(tmp.path()),
        "--mapping",
        s(&tmp.path().join("ground_truth.json")),
        "--inputs",
        s(&tmp.path().join("traces/input.csv")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&reference).unwrap(), before);
}

#[test]
fn invalid_mapping_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let mapping = tmp.path().join("bad.json");
    fs::write(&mapping, "{\"genes\":[0,1,2,3,4,5,6,7,8,9,10,11,12,13,14]}").unwrap();
    let out = construct(&["make-reference", s(&fixture("pi")), "--mapping", s(&mapping)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not a valid assignment") && err.contains("C"), "{err}");

    let out = construct(&["validate", s(&fixture("pi")), "--mapping", s(&mapping)]);
    assert_eq!(out.status.code(), Some(1));
    let out = construct(&["validate", s(&fixture("pi")), "--mapping", s(&fixture("pi").join("ground_truth.json"))]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn simulate_ground_truth_reproduces_reference() {
    let out = construct(&[
        "simulate",
        s(&fixture("limpid")),
        "--mapping",
        s(&fixture("limpid").join("ground_truth.json")),
    ]);
    assert!(out.status.success());
    let reference = fs::read_to_string(fixture("limpid").join("traces/reference.csv")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), reference);
}

#[test]
fn translate_prints_skeleton_with_slots() {
    let out = construct(&["translate", s(&fixture("pi"))]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("der(sym_0x"));
    assert_eq!(text.lines().filter(|l| l.starts_with("// sym_")).count(), 15);
}

#[test]
fn space_prints_exact_counts() {
    let out = construct(&["space", "12", "13"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "6227020800\n");
    let out = construct(&["space", "12", "12"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "479001600\n");
    let out = construct(&["space", "3", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_lists_flags_and_unknown_flags_fail() {
    let out = construct(&["synth", "--help"]);
    assert!(out.status.success());
    let help = String::from_utf8(out.stdout).unwrap();
    for flag in [
        "--mode",
        "--pop",
        "--gens",
        "--seed",
        "--elitism",
        "--pc",
        "--pm",
        "--tournament",
        "--no-early-stop",
        "--cbt-repair",
        "--out",
        "--report",
        "--curves",
    ] {
        assert!(help.contains(flag), "missing {flag}");
    }
    let out = construct(&["synth", s(&fixture("pi")), "--mode", "cbc", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn make_fixture_matches_checked_in_copy() {
    let tmp = tempfile::tempdir().unwrap();
    let out = construct(&["make-fixture", "pi", s(tmp.path())]);
    assert!(out.status.success());
    assert_eq!(
        fs::read(tmp.path().join("ground_truth.json")).unwrap(),
        fs::read(fixture("pi").join("ground_truth.json")).unwrap()
    );
    assert_eq!(construct(&["make-fixture", "pd", s(tmp.path())]).status.code(), Some(1));
}

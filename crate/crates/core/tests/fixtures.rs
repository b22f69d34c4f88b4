use std::fs;
use std::path::{Path, PathBuf};

use construct::container::{VarType, REFERENCE_TRACE};
use construct::expr::Expr;
use construct::fixtures::{
    build_fixture, ground_truth_equations, FIXTURE_NAMES, GROUND_TRUTH_FILE,
};
use construct::pipeline::{load_mapping, simulate_mapping, translate_container};

fn checked_in(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn checked_in_fixtures_match_regenerated() {
    for name in FIXTURE_NAMES {
        let tmp = tempfile::tempdir().unwrap();
        build_fixture(name, tmp.path()).unwrap();
        let repo = checked_in(name);
        assert_eq!(files(tmp.path()), files(&repo), "{name}: file sets differ");
        for rel in files(tmp.path()) {
            let fresh = fs::read(tmp.path().join(&rel)).unwrap();
            let stored = fs::read(repo.join(&rel)).unwrap();
            assert!(
                fresh == stored,
                "{name}/{} is stale; regenerate with make-fixture",
                rel.display()
            );
        }
    }
}

#[test]
fn fixture_shapes() {
    let expect = [
        ("pi", 8, 18, 18, false),
        ("pid", 6, 37, 20, true),
        ("limpid", 13, 80, 39, true),
    ];
    for (name, eqs, vars, max_slots, mixed) in expect {
        let tmp = tempfile::tempdir().unwrap();
        let f = build_fixture(name, tmp.path()).unwrap();
        assert_eq!(f.counts.0, eqs, "{name}");
        assert_eq!(f.counts.1, vars, "{name}");
        assert!(
            f.counts.2 <= max_slots && f.counts.2 <= vars,
            "{name}: {} slots",
            f.counts.2
        );
        assert_eq!(f.mixed_types, mixed, "{name}");

        let t = translate_container(tmp.path()).unwrap();
        assert_eq!(t.model.equations.len(), eqs, "{name}");
        let bool_slots = t
            .model
            .slots
            .iter()
            .filter(|s| s.inferred_type.known() == Some(VarType::Boolean))
            .count();
        assert_eq!(bool_slots > 0, mixed, "{name}");
    }
}

#[test]
fn limpid_keeps_its_clamp() {
    let eqs = ground_truth_equations("limpid").unwrap();
    let clamp = eqs
        .iter()
        .any(|e| matches!(&e.rhs, Expr::Min(inner, _) if matches!(**inner, Expr::Max(..))));
    assert!(clamp);
}

#[test]
fn ground_truth_binds_to_the_authored_equations() {
    for name in FIXTURE_NAMES {
        let dir = checked_in(name);
        let t = translate_container(&dir).unwrap();
        let c = load_mapping(&dir.join(GROUND_TRUTH_FILE)).unwrap();
        let bound = t.bind(&c).unwrap();
        assert_eq!(
            bound.equations,
            ground_truth_equations(name).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn reference_regeneration_is_byte_identical() {
    for name in FIXTURE_NAMES {
        let dir = checked_in(name);
        let t = translate_container(&dir).unwrap();
        let c = load_mapping(&dir.join(GROUND_TRUTH_FILE)).unwrap();
        let inputs = t.container.input_trace.clone().unwrap();
        let csv = simulate_mapping(&t, &c, &inputs).unwrap().to_csv();
        assert_eq!(
            csv,
            fs::read_to_string(dir.join(REFERENCE_TRACE)).unwrap(),
            "{name}"
        );
    }
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn core(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core").join(rel).display().to_string()
}

fn rules() -> String {
    core("data/insurance.n3")
}

fn ontology() -> String {
    core("data/insurance.ttl")
}

fn eligible() -> String {
    core("tests/data/fixtures/eligible.json")
}

fn kgsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgsc")).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn compile_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kgsc(&["compile", "--rules", &rules(), "--ontology", &ontology(), "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    for f in ["Contract1.sol", "Contract1.pseudo.txt", "manifest.json", "bridge.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let bridge = std::fs::read_to_string(dir.path().join("bridge.json")).unwrap();
    kgsc_core::ir::deserialize(&bridge).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["functions"][0], "process");
}

#[test]
fn single_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kgsc(&["compile", "--rules", &rules(), "--ontology", &ontology(), "--target", "pseudocode", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("Contract1.pseudo.txt").exists());
    assert!(!dir.path().join("Contract1.sol").exists());
}

#[test]
fn compile_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        kgsc(&["compile", "--rules", &rules(), "--ontology", &ontology(), "--out", d.path().to_str().unwrap()]);
    }
    for f in ["Contract1.sol", "Contract1.pseudo.txt", "manifest.json", "bridge.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

fn compiled_bridge(dir: &tempfile::TempDir) -> String {
    let out = dir.path().to_str().unwrap();
    kgsc(&["compile", "--rules", &rules(), "--ontology", &ontology(), "--target", "bridge-json", "--out", out]);
    dir.path().join("bridge.json").display().to_string()
}

#[test]
fn run_with_oracle_check_matches() {
    let dir = tempfile::tempdir().unwrap();
    let bridge = compiled_bridge(&dir);
    let o = kgsc(&[
        "run", "--program", &bridge, "--fixture", &eligible(), "--oracle-check", "--rules", &rules(), "--ontology", &ontology(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert_eq!(stdout.lines().count(), 6);
    assert!(stdout.lines().last().unwrap().contains("\"EventEmitted\""));
    assert!(text(&o.stderr).contains("MATCH"));
}

#[test]
fn tampered_program_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let bridge = compiled_bridge(&dir);
    let ir = std::fs::read_to_string(&bridge).unwrap().replace("\"complete\"", "\"partial\"");
    std::fs::write(&bridge, ir).unwrap();
    let o = kgsc(&[
        "run", "--program", &bridge, "--fixture", &eligible(), "--oracle-check", "--rules", &rules(), "--ontology", &ontology(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("MISMATCH"));
}

#[test]
fn run_without_check_prints_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let bridge = compiled_bridge(&dir);
    let o = kgsc(&["run", "--program", &bridge, "--fixture", &eligible()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o.stdout).starts_with("{\"entry\":\"FunctionEntered\",\"name\":\"process\"}"));
}

#[test]
fn seeded_runs_are_reproducible() {
    let args = ["run", "--seed", "3", "--count", "5", "--oracle-check", "--rules", &rules(), "--ontology", &ontology()];
    let (a, b) = (kgsc(&args), kgsc(&args));
    assert_eq!(a.status.code(), Some(0), "{}", text(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}

#[test]
fn graph_writes_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("rules.dot");
    let o = kgsc(&["graph", "--rules", &rules(), "--ontology", &ontology(), "--dot", dot.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = std::fs::read_to_string(dot).unwrap();
    assert_eq!(s.matches("digraph").count(), 3);
}

#[test]
fn check_accepts_running_example() {
    let o = kgsc(&["check", "--rules", &rules(), "--ontology", &ontology()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(text(&o.stdout).trim(), "ok: 3 rules");
}

#[test]
fn check_rejects_variable_predicate() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.n3");
    std::fs::write(
        &f,
        "@prefix cg: <https://w3id.org/kgsc/cg#> . @prefix fhir: <http://hl7.org/fhir/> .\n\
         { ?req ?p ?x } => { ?req fhir:purpose ?x } ; cg:functionParam ?req .\n",
    )
    .unwrap();
    let o = kgsc(&["check", "--rules", f.to_str().unwrap(), "--ontology", &ontology()]);
    assert_eq!(o.status.code(), Some(1));
    let err = text(&o.stderr);
    assert!(err.contains("E_VARIABLE_PREDICATE at 2:"), "{err}");
    assert!(err.contains("must be IRIs"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(kgsc(&["compile", "--rules", &rules()]).status.code(), Some(2));
    assert_eq!(kgsc(&["check", "--rules", "/nonexistent.n3", "--ontology", &ontology()]).status.code(), Some(2));
    assert_eq!(kgsc(&["run", "--fixture", &eligible()]).status.code(), Some(2));
}

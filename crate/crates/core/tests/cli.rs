use std::path::PathBuf;
use std::process::{Command, Output};

use droidsec::genfuzz::gen_valid_state;
use droidsec::io::emit_state;
use droidsec::Platform;

fn droidsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_droidsec")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn replaying_shipped_fixtures_matches_recorded_outcomes() {
    for name in droidsec::fixtures::ALL {
        let out = droidsec(&["replay", &fixture(name)]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn replay_reports_final_read() {
    let out = droidsec(&["replay", &fixture(droidsec::fixtures::DELEGATION_SURVIVES)]);
    let text = stdout(&out);
    assert_eq!(text.matches("\"response\": \"ok\"").count(), 4, "{text}");
}

#[test]
fn replay_detects_tampered_expectations() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture(droidsec::fixtures::IMPLICIT_GRANT)).unwrap();
    let tampered = text.replacen("\"response\": \"ok\"", "\"response\": \"no_such_app\"", 1);
    assert_ne!(text, tampered);
    let path = dir.path().join("t.trace.json");
    std::fs::write(&path, tampered).unwrap();
    let out = droidsec(&["replay", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn replay_emits_states() {
    let dir = tempfile::tempdir().unwrap();
    let states = dir.path().join("states");
    let out = droidsec(&[
        "replay",
        &fixture(droidsec::fixtures::INSTALL_GUARDS),
        "--emit-states",
        states.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(&states).unwrap().count(), 10);
}

#[test]
fn check_state_accepts_generated_states() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, emit_state(&gen_valid_state(3, 3, &Platform::sample()))).unwrap();
    let out = droidsec(&["check-state", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("valid"));
}

#[test]
fn check_state_rejects_dangling_running_instance() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = droidsec::AndroidState::empty();
    s.running.insert(droidsec::InstanceId(0), "ghost.main".into());
    let path = dir.path().join("s.json");
    std::fs::write(&path, emit_state(&s)).unwrap();
    let out = droidsec(&["check-state", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    for args in [
        vec!["check-state", path.to_str().unwrap()],
        vec!["replay", path.to_str().unwrap()],
        vec!["replay", "/nonexistent/trace.json"],
    ] {
        let out = droidsec(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn step_applies_one_action() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, emit_state(&droidsec::AndroidState::empty())).unwrap();
    let out = droidsec(&["step", path.to_str().unwrap(), r#"{"uninstall": {"app": "a"}}"#]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("no_such_app\n"), "{}", stdout(&out));

    let out = droidsec(&["step", path.to_str().unwrap(), r#"{"explode": {}}"#]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn props_runs_a_single_property() {
    let dir = tempfile::tempdir().unwrap();
    let out = droidsec(&["props", "--only", "delegation", "--dump-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS delegation"));

    let out = droidsec(&["props", "--only", "no-such-property"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fuzz_finds_nothing_in_a_short_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = droidsec(&["fuzz", "--seed", "7", "--steps", "300", "--dump-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("300 steps, 0 failures"));
}

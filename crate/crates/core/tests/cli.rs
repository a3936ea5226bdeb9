use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dimforge"));
    c.env_remove("DIMFORGE_CONFIG");
    c
}

fn shipped_cfg() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../paper.cfg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn report_with_shipped_config() {
    let o = bin().arg("--config").arg(shipped_cfg()).arg("report").arg("--replay").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("NO commuting trace-scaling pair at K0 level for generators {5, 2+sqrt(3)}"), "{out}");
    assert_eq!(out.lines().filter(|l| l.matches('|').count() == 4).count(), 10, "header plus 9 rows:\n{out}");
    assert!(out.contains("replay: ok"));
}

#[test]
fn config_from_environment() {
    let dir = std::env::temp_dir().join(format!("dimforge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.cfg");
    std::fs::write(&bad, "s = 1\n").unwrap();
    let o = bin().env("DIMFORGE_CONFIG", &bad).arg("report").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    // --config wins over the environment.
    let o = bin().env("DIMFORGE_CONFIG", &bad).arg("--config").arg(shipped_cfg()).arg("fungroup").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let unconstrained = dir.join("free.cfg");
    std::fs::write(&unconstrained, "m1 = 1\nm2 = 1\n").unwrap();
    let o = bin().env("DIMFORGE_CONFIG", &unconstrained).arg("report").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("OBSTRUCTION NOT FOUND (residue level)"), "{}", stdout(&o));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn structured_records_are_single_lines() {
    for args in [
        vec!["pell", "--d", "3", "--n", "-1"],
        vec!["implus", "--d", "3", "--p", "11"],
        vec!["unit", "--d", "7"],
        vec!["report"],
    ] {
        let o = bin().arg("--structured").args(&args).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        let out = stdout(&o);
        assert_eq!(out.lines().count(), 1, "{args:?}");
        let rec: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(rec["verdict"].is_string(), "{args:?}: {rec}");
    }
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    assert_eq!(code(&["pell", "--d", "3", "--n", "-1"]), Some(0));
    assert_eq!(code(&["pell", "--d", "4", "--n", "1"]), Some(1));
    assert_eq!(code(&["classify", "--lambda", "5", "--mod", "10"]), Some(2));
    assert_eq!(code(&["--config", "/nonexistent/dimforge.cfg", "report"]), Some(2));
    assert_eq!(code(&["obstruction", "--l1", "5"]), Some(1));
    assert_eq!(code(&["dimcheck", "--elem", "0,1,0,2,0"]), Some(0));
}

#[test]
fn rejected_witness_is_not_an_error() {
    let o = bin().args(["verify-witness", "--lambda", "5", "--matrix", "5,0,0,2"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "REJECTED: det=10");
}

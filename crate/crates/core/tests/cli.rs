use std::fs;
use std::process::Command;

fn qtzopt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qtzopt"))
}

#[test]
fn theory_runs_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qtzopt().args(["theory", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(csv.starts_with("diagnostic,value,expected,abs_error,pass"));
    assert!(!csv.contains(",false"));
}

#[test]
fn tsp_trace_is_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = qtzopt()
            .args(["tsp", "--cities", "30", "--budget", "2000", "--trials", "2", "--trace", "--out"])
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect();
        files.sort();
        files
    };
    let a = run();
    assert!(a.iter().any(|(n, _)| n == "trace_qtz_0.csv"));
    assert_eq!(a, run());
    let (_, trace) = a.iter().find(|(n, _)| n == "trace_qtz_0.csv").unwrap();
    let text = String::from_utf8_lossy(trace);
    assert_eq!(text.lines().next(), Some("tau,f,f_opt,qp_or_T,accepted"));
}

#[test]
fn unknown_set_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = qtzopt()
        .args(["bench", "--set", "sa.alpah=0.9", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sa.alpah"));
}

#[test]
fn unknown_config_file_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "kind = washboard\n# comment\nbudget = 100\nqtz.bogus = 3\n").unwrap();
    let out = qtzopt()
        .args(["washboard", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("qtz.bogus"));
}

#[test]
fn config_file_drives_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "kind = washboard\nbudget = 300\ntrials = 3\n").unwrap();
    let out = qtzopt()
        .args(["washboard", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let saved = fs::read_to_string(dir.path().join("o/config.txt")).unwrap();
    assert!(saved.contains("budget = 300"));
}

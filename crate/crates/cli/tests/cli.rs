use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cayley(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cayley")).args(args).output().expect("binary runs")
}

fn data(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn free_norms_csv_approaches_formula() {
    let o = cayley(&["run", "free-norms", "--ranks", "2..5", "--depth", "60"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i,n,bound,extrapolated,formula"));
    let last: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect::<Vec<f64>>())
        .filter(|r| r[1] == 60.0)
        .collect();
    assert_eq!(last.len(), 4);
    for r in last {
        let i = r[0];
        assert!((r[4] - 2.0 * (i - 1.0).sqrt() / i).abs() < 1e-12);
        assert!((r[3] - r[4]).abs() < 0.01, "{r:?}");
        assert!(r[2] <= r[4]);
    }
}

#[test]
fn hn_limit_exits_cleanly() {
    let o = cayley(&["run", "hn-limit", "--n", "1..3", "--depth", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 3 * 6);
    // traces of H_n never exceed those of the lamplighter
    for l in text.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        let frac = |s: &str| {
            let (a, b) = s.split_once('/').unwrap_or((s, "1"));
            a.parse::<f64>().unwrap() / b.parse::<f64>().unwrap()
        };
        assert!(frac(f[2]) <= frac(f[3]));
    }
}

#[test]
fn malformed_group_file_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.group");
    fs::write(&path, "engine = coset-table\ngenerators = a b\nrelators = a^2 b^x\n").unwrap();
    let o = cayley(&["run", "grigorchuk", "--group", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("error: 3:"), "{err}");
    assert!(err.contains("bad.group"), "{err}");

    fs::write(&path, "engine = abelian\ngenerators = a\norders = 3\nwat\n").unwrap();
    let o = cayley(&["run", "grigorchuk", "--group", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("4:1:"), "{}", stderr(&o));
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.conf");
    fs::write(&path, "experiment = hn-limit\n\n  depth = six\n").unwrap();
    let o = cayley(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("3:11:"), "{}", stderr(&o));

    fs::write(&path, "experiment = cheeger\ngroup = missing.group\n").unwrap();
    let o = cayley(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("does not exist"));
}

#[test]
fn exit_codes_name_the_failure() {
    // planted dependence: certification failure
    let o = cayley(&["run", "basis-certify", "--planted", "--length", "3"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("witness"), "{}", stderr(&o));
    // a subset budget of one
    let o = cayley(&["run", "cheeger", "--group", &data("groups/s3.group"), "--mode", "balanced", "--budget", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("resource exceeded"));
}

#[test]
fn config_runs_write_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = cayley(&["run", "--config", &data("configs/grigorchuk.conf"), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("grigorchuk.csv")).unwrap();
    assert_eq!(report.lines().count(), 4);
    assert!(report.lines().nth(1).unwrap().starts_with("Z3,1,40,"));
    assert!(report.lines().nth(1).unwrap().ends_with(",0"));
}

fn run_to(dir: &Path, threads: &str, args: &[&str]) -> Vec<u8> {
    let mut all = vec!["run"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--threads", threads, "--out", dir.to_str().unwrap()]);
    let o = cayley(&all);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    let path: PathBuf = stderr(&o).trim().strip_prefix("wrote ").unwrap().into();
    fs::read(path).unwrap()
}

#[test]
fn reports_ignore_thread_count() {
    let s3 = data("groups/s3.group");
    let cases: Vec<Vec<&str>> = vec![
        vec!["free-norms", "--ranks", "2..4", "--depth", "30"],
        vec!["grigorchuk", "--depth", "30"],
        vec!["cheeger", "--radius", "5", "--format", "json"],
        vec!["cheeger", "--group", &s3, "--mode", "balanced"],
        vec!["hn-limit", "--n", "1..3", "--depth", "5"],
        vec!["powers-average", "--depth", "10"],
        vec!["basis-certify", "--length", "3", "--format", "json"],
        vec!["burnside-desk", "--format", "json"],
        vec!["sequence-report", "--ranks", "2..4", "--depth", "30"],
    ];
    for args in cases {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let c = tempfile::tempdir().unwrap();
        let one = run_to(a.path(), "1", &args);
        assert_eq!(one, run_to(b.path(), "4", &args), "{args:?}");
        assert_eq!(one, run_to(c.path(), "1", &args), "{args:?}");
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mess"))
        .args(args)
        .env_remove("MESS_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Vec<u8> {
    let out = mess(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_exits_zero_and_unknown_flag_exits_one() {
    let out = mess(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("supersample"));
    assert_eq!(mess(&["estimate", "--bogus"]).status.code(), Some(1));
}

#[test]
fn generate_writes_csv() {
    let csv = ok(&["generate", "--dataset", "sphere", "--n", "50", "--seed", "3", "--header"]);
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x0,x1,x2"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    ok(&["generate", "--dataset", "swiss-roll", "--n", "300", "--noise", "0.05", "--out", s(&data)]);
    let runs: [&[&str]; 3] = [
        &["supersample", s(&data), "--k1", "10", "--ext", "5", "--seed", "2"],
        &["estimate", s(&data), "--k1", "10", "--ext", "5", "--estimator", "hill"],
        &["sweep", s(&data), "--grid", "5,10", "--ext", "4", "--no-timings"],
    ];
    for args in runs {
        let one = ok(&[&["--threads", "1"], args].concat());
        let two = ok(&[&["--threads", "2"], args].concat());
        let again = ok(&[&["--threads", "2"], args].concat());
        assert!(!one.is_empty());
        assert_eq!(one, two, "{args:?}");
        assert_eq!(two, again, "{args:?}");
    }
}

#[test]
fn threads_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_mess"))
        .args(["generate", "--dataset", "ball", "--n", "10"])
        .env("MESS_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn estimate_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    ok(&["generate", "--dataset", "ball", "--n", "200", "--out", s(&data)]);
    let text = String::from_utf8(ok(&["estimate", s(&data), "--no-mess", "--k", "10"])).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("point_id,estimate,estimator,k"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!((first[0], first[2], first[3]), ("0", "abid", "10"));
    assert_eq!(lines.count(), 199);
}

#[test]
fn bad_input_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2\n3,oops\n").unwrap();
    let out = mess(&["estimate", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    let missing = dir.path().join("missing.csv");
    assert_eq!(mess(&["estimate", s(&missing)]).status.code(), Some(2));

    let small = dir.path().join("small.csv");
    fs::write(&small, "0,0\n1,0\n0,1\n").unwrap();
    let out = mess(&["estimate", s(&small), "--k1", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k1"));
}

#[test]
fn compare_writes_html_report() {
    let dir = tempfile::tempdir().unwrap();
    let html = dir.path().join("cmp.html");
    let csv = ok(&[
        "compare", "--dataset", "sphere", "--n", "200", "--k1", "8", "--ext", "4", "--out", s(&html),
    ]);
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(fs::read_to_string(&html).unwrap().contains("<svg"));
}

#[test]
fn small_repro_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("fig1");
    ok(&["repro", "fig1", "--scale", "0", "--no-timings", "--out", s(&out_dir)]);
    let html = fs::read_to_string(out_dir.join("fig1.html")).unwrap();
    assert!(html.contains("<svg"));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rmtlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmtlab"))
        .args(args)
        .env_remove("RMTLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn config(dir: &tempfile::TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

/// Drops the wall-time line, the only field allowed to vary.
fn body(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.starts_with("# wall_time_s"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn golden_report_is_stable() {
    let cfg = golden("tiny.toml");
    let out = rmtlab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let got = body(&stdout(&out));
    let path = golden("tiny.csv");
    if std::env::var_os("RMTLAB_BLESS").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    assert_eq!(got, std::fs::read_to_string(&path).unwrap());
}

#[test]
fn reruns_are_byte_identical_and_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        &dir,
        "experiment = \"semicircle\"\nn = 500\nsamples = 20\nmaster_seed = 7\n",
    );
    let cfg = cfg.to_str().unwrap();
    let a = body(&stdout(&rmtlab(&["run", cfg, "--threads", "1"])));
    let b = body(&stdout(&rmtlab(&["run", cfg, "--threads", "1"])));
    let c = body(&stdout(&rmtlab(&["run", cfg, "--threads", "8"])));
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn threads_fall_back_to_environment() {
    let cfg = golden("tiny.toml");
    let out = Command::new(env!("CARGO_BIN_EXE_rmtlab"))
        .args(["run", cfg.to_str().unwrap(), "--format", "json"])
        .env("RMTLAB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["experiment"], "semicircle");
    let bad = Command::new(env!("CARGO_BIN_EXE_rmtlab"))
        .args(["run", cfg.to_str().unwrap()])
        .env("RMTLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2), "clap usage errors exit with 2");
}

#[test]
fn json_rows_mirror_csv_rows() {
    let cfg = golden("tiny.toml");
    let csv = stdout(&rmtlab(&["run", cfg.to_str().unwrap()]));
    let json: serde_json::Value = serde_json::from_str(&stdout(&rmtlab(&[
        "run",
        cfg.to_str().unwrap(),
        "--format",
        "json",
    ])))
    .unwrap();
    let csv_rows = csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(json["rows"].as_array().unwrap().len(), csv_rows);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |text: &str| {
        rmtlab(&["run", config(&dir, text).to_str().unwrap()])
            .status
            .code()
    };

    assert_eq!(code("experiment = \"hs-check\"\nn = 30\n"), Some(0));
    assert_eq!(code("experiment = \"tracy\"\nn = 30\n"), Some(2));
    assert_eq!(
        code("experiment = \"hs-check\"\nn = 30\nsurprise = 1\n"),
        Some(3)
    );
    assert_eq!(
        code("experiment = \"semicircle\"\nn = 30\nsamples = 1\n"),
        Some(3)
    );
    assert_eq!(
        code("experiment = \"hs-check\"\nn = 30\n[envelopes]\nnot_a_key = 1.0\n"),
        Some(3)
    );
    assert_eq!(
        code(
            "experiment = \"semicircle\"\nn = 30\nsamples = 4\n[envelopes]\nmoment2_tol = 1e-12\n"
        ),
        Some(1)
    );
    assert_eq!(
        rmtlab(&["run", "/nonexistent/cfg.toml"]).status.code(),
        Some(4)
    );
    let ok = config(&dir, "experiment = \"hs-check\"\nn = 30\n");
    let out = rmtlab(&[
        "run",
        ok.to_str().unwrap(),
        "--out",
        "/nonexistent/dir/out.csv",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn validate_does_not_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        &dir,
        "experiment = \"rigidity\"\nn_sweep = [100000, 200000]\n",
    );
    let out = rmtlab(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("ok: rigidity"));
    let bad = config(
        &dir,
        "experiment = \"rigidity\"\nn = 10\nn_sweep = [10, 20]\n",
    );
    assert_eq!(
        rmtlab(&["validate", bad.to_str().unwrap()]).status.code(),
        Some(3)
    );
}

#[test]
fn list_experiments_names_all_fourteen() {
    let out = stdout(&rmtlab(&["list-experiments"]));
    assert_eq!(out.lines().count(), 14);
    assert!(out.lines().any(|l| l.starts_with("dbm-relax ")));
}

#[test]
fn poisson_gaps_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        &dir,
        "experiment = \"gaps\"\nn = 400\nsamples = 10\n[ensemble]\nsource = \"poisson\"\n[params]\nwindow = 1.0\nbins = 10\n",
    );
    let out = stdout(&rmtlab(&["run", cfg.to_str().unwrap()]));
    assert!(out.contains("gaps,no_level_repulsion,400,1.0,"), "{out}");
}

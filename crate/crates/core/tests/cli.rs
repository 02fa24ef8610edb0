use std::path::Path;
use std::process::{Command, Output};

fn eohs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eohs")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn gen_run_select_report_bench() {
    let tmp = tempfile::tempdir().unwrap();
    let set = tmp.path().join("set.jsonl");
    let set_s = set.to_str().unwrap();
    let o = eohs(&["gen", "--task", "obp", "--small", "--count", "6", "--seed", "2", "--out", set_s]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert_eq!(std::fs::read_to_string(&set).unwrap().lines().count(), 6);

    let config = write_config(
        tmp.path(),
        &format!("task = \"obp\"\nroute = \"in_process\"\n[instances]\nsource = \"file\"\npath = {set_s:?}\n"),
    );
    let out = tmp.path().join("run");
    let out_s = out.to_str().unwrap();
    let o = eohs(&[
        "run", "--config", &config, "--mock-llm", "--pop-size", "3", "--budget", "12", "--seed", "4", "--out", out_s,
    ]);
    assert_eq!(code(&o), 0, "{o:?}");
    for f in ["config.json", "heuristics.jsonl", "matrix.csv", "convergence.csv", "report.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let matrix = out.join("matrix.csv");
    let o = eohs(&["select", "--matrix", matrix.to_str().unwrap(), "--k", "2"]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(!stdout(&o).is_empty());

    let o = eohs(&["report", "--run", out_s]);
    assert_eq!(code(&o), 0, "{o:?}");
    let recomputed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let stored: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(recomputed, stored);

    let bench_dir = tmp.path().join("bpp");
    std::fs::create_dir(&bench_dir).unwrap();
    std::fs::write(bench_dir.join("toy.txt"), "6\n100\n60\n50\n45\n40\n30\n20\n").unwrap();
    let o = eohs(&["bench", "--run", out_s, "--dir", bench_dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).contains("toy"), "{}", stdout(&o));
}

#[test]
fn verify_passes_with_exit_zero() {
    let o = eohs(&["verify", "--trials", "200", "--greedy-trials", "20"]);
    assert_eq!(code(&o), 0, "{o:?}");
}

#[test]
fn invalid_configurations_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let out_s = out.to_str().unwrap();
    let o = eohs(&["run", "--mock-llm", "--pop-size", "1", "--budget", "5", "--out", out_s]);
    assert_eq!(code(&o), 1, "{o:?}");
    let o = eohs(&["run", "--mock-llm", "--no-cs", "--no-ls", "--out", out_s]);
    assert_eq!(code(&o), 1, "{o:?}");
    let o = eohs(&["run", "--config", "/nonexistent/config.toml", "--out", out_s]);
    assert_eq!(code(&o), 1, "{o:?}");
    let bad = write_config(tmp.path(), "population_size = \"many\"\n");
    let o = eohs(&["run", "--config", &bad, "--out", out_s]);
    assert_eq!(code(&o), 1, "{o:?}");
    assert!(!out.join("report.json").exists());
}

#[test]
fn unknown_arguments_are_rejected() {
    let o = eohs(&["run", "--frobnicate"]);
    assert_eq!(code(&o), 1, "{o:?}");
    let o = eohs(&["--help"]);
    assert_eq!(code(&o), 0, "{o:?}");
}

use std::path::Path;
use std::process::{Command, Output};

fn ctxbo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctxbo")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.txt");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL: &str = "objective = camelback\nstrategies = aei, ei-0.0\nbudget = 4\nrepeats = 3\nseed = 5\n[search]\ncandidates = 128\n";

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ctxbo(&[]).status.code(), Some(1));
    assert_eq!(ctxbo(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ctxbo(&["run"]).status.code(), Some(1));
    assert_eq!(ctxbo(&["--help"]).status.code(), Some(0));
    assert_eq!(ctxbo(&["run", "--config", "/nonexistent/ctxbo.txt"]).status.code(), Some(1));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "objective = branin\n\nbudgett = 3\n");
    let out = ctxbo(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("budgett"), "{err}");

    let cfg = write_config(dir.path(), "objective = branin\nacquisition = ei\nepsilon = -0.1\n");
    assert_eq!(ctxbo(&["run", "--config", &cfg]).status.code(), Some(1));
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = ctxbo(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["traces.csv", "summary.txt", "config.txt", "manifest.txt", "plot.svg"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let csv = std::fs::read_to_string(out.join("traces.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3 * (3 + 4));
    let svg = std::fs::read_to_string(out.join("plot.svg")).unwrap();
    assert_eq!(svg.matches("class=\"mean-line\"").count(), 2);
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("master_seed = 5"));
    assert_eq!(manifest.lines().find(|l| l.starts_with("repeat_seeds")).unwrap().split(',').count(), 3);

    // the echoed configuration reproduces the run
    let again = dir.path().join("again");
    let echo = out.join("config.txt");
    let o = ctxbo(&["run", "--config", echo.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(again.join("traces.csv")).unwrap(), csv.as_bytes());

    // report rebuilds the summary from the CSV alone
    let rep = dir.path().join("rep");
    let o = ctxbo(&["report", "--traces", out.join("traces.csv").to_str().unwrap(), "--out", rep.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(rep.join("summary.txt")).unwrap();
    assert!(summary.contains("(minimize)") && summary.contains("initial design: 3"), "{summary}");
    assert!(summary.contains("AEI") && summary.contains("EI-0.0"));
}

#[test]
fn overrides_apply_on_top_of_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    let o = ctxbo(&[
        "run", "--config", &cfg, "--acquisition", "ei", "--epsilon", "0.2", "--budget", "0",
        "--repeats", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("traces.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("EI-0.2,")));
    let echo = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echo.contains("strategies = ei-0.2\n") && echo.contains("budget = 0\n"));
}

#[test]
fn failing_objective_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "objective = subprocess\nbudget = 2\nrepeats = 1\n[subprocess]\ncommand = exit 3\nbounds = 0:1\ndirection = minimize\n",
    );
    let o = ctxbo(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_draws_one_grey_path_per_margin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "objective = branin\n[search]\ncandidates = 64\n[sweep]\nrepeats = 2\nbudget = 2\n");
    let out = dir.path().join("s");
    let o = ctxbo(&["sweep", "--config", &cfg, "--eps-grid", "0:0.4:0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(out.join("plot.svg")).unwrap();
    assert_eq!(svg.matches("class=\"eps-path\"").count(), 5);
    assert_eq!(svg.matches("class=\"aei-path\"").count(), 1);
    let text = std::fs::read_to_string(out.join("sweep.txt")).unwrap();
    assert!(text.contains("loss:") && text.contains("gain:"));

    let bad = ctxbo(&["sweep", "--config", &cfg, "--eps-grid", "0:1:0.1", "--full-paper-grid"]);
    assert_eq!(bad.status.code(), Some(1));
    let bad = ctxbo(&["sweep", "--config", &cfg, "--eps-grid", "1:0:0.1"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn selftest_passes() {
    let o = ctxbo(&["selftest"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(!text.contains("FAIL"));
    assert_eq!(text.matches("PASS branin").count(), 3);
}

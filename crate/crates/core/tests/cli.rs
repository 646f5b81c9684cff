use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracdelay::special::{ml_scalar, SeriesConfig};

const BIN: &str = env!("CARGO_BIN_EXE_fracdelay");

fn demo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/demo.toml")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

const SCALAR: &str = r#"
[problem]
a = [[-0.7]]
b = [[0.0]]
h = 1.0
alpha = 0.5
beta = 0.8
t_end = 2.0

[problem.history]
kind = "constant"
value = [0.0]
"#;

#[test]
fn eval_x_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SCALAR);
    let out = run(&["eval-x", "--config", cfg.to_str().unwrap(), "--times", "-0.5,0,0.75,1.6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(header, ["t", "entry_1_1"]);
    assert_eq!(rows[0], vec![-0.5, 0.0]);
    assert_eq!(rows[1], vec![0.0, 1.0]);
    // B = 0: t^{β-1} E_{α,β}(a t^α)
    for row in &rows[2..] {
        let t: f64 = row[0];
        let expect = t.powf(-0.2) * ml_scalar(0.5, 0.8, -0.7 * t.sqrt(), &SeriesConfig::default()).unwrap();
        assert!((row[1] - expect).abs() < 1e-13, "t = {t}");
    }
}

#[test]
fn eval_x_two_by_two_header() {
    let out = run(&["eval-x", "--config", demo().to_str().unwrap(), "--times", "0"]);
    let (header, rows) = read_csv(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(header, ["t", "entry_1_1", "entry_1_2", "entry_2_1", "entry_2_2"]);
    assert_eq!(rows[0], vec![0.0, 1.0, 0.0, 0.0, 1.0]);
}

#[test]
fn solve_matches_oracle_on_demo_and_keeps_history() {
    let dir = tempfile::tempdir().unwrap();
    let (s, o) = (dir.path().join("s.csv"), dir.path().join("o.csv"));
    let cfg = demo();
    let cfg = cfg.to_str().unwrap();
    assert!(run(&["solve", "--config", cfg, "--out", s.to_str().unwrap()]).status.success());
    assert!(run(&["oracle", "--config", cfg, "--out", o.to_str().unwrap()]).status.success());
    let (hs, ys) = read_csv(&std::fs::read_to_string(&s).unwrap());
    let (ho, yo) = read_csv(&std::fs::read_to_string(&o).unwrap());
    assert_eq!(hs, ["t", "y_1", "y_2"]);
    assert_eq!(hs, ho);
    assert_eq!(ys.len(), yo.len());
    let mut worst = 0.0_f64;
    for (a, b) in ys.iter().zip(&yo) {
        assert_eq!(a[0], b[0]);
        worst = worst.max((a[1] - b[1]).abs()).max((a[2] - b[2]).abs());
    }
    assert!(worst <= 1e-3, "{worst}");
    // history rows are φ = (1 + 0.3t, -0.5 + 0.2t) exactly
    for row in ys.iter().take_while(|r| r[0] <= 0.0) {
        let t = row[0];
        assert_eq!(row[1], 1.0 + 0.3 * t);
        assert_eq!(row[2], -0.5 + 0.2 * t);
    }
    assert_eq!(ys.first().unwrap()[0], -1.0);
    assert_eq!(ys.last().unwrap()[0], 3.0);
}

#[test]
fn zero_data_gives_zero_columns() {
    let dir = tempfile::tempdir().unwrap();
    let body = SCALAR.replace("b = [[0.0]]", "b = [[0.4]]");
    let cfg = write_config(dir.path(), &body);
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--mesh", "0.05"]);
    assert!(out.status.success());
    let (_, rows) = read_csv(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(rows.len(), 20 + 1 + 40);
    assert!(rows.iter().all(|r| r[1] == 0.0));
}

#[test]
fn solve_is_byte_deterministic() {
    let cfg = demo();
    let a = run(&["solve", "--config", cfg.to_str().unwrap(), "--mesh", "0.05"]);
    let b = run(&["solve", "--config", cfg.to_str().unwrap(), "--mesh", "0.05"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn create_new_refuses_to_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("y.csv");
    let body = format!(
        "{SCALAR}\n[output]\npath = \"{}\"\nmode = \"create-new\"\n",
        target.display()
    );
    let cfg = write_config(dir.path(), &body);
    assert!(run(&["solve", "--config", cfg.to_str().unwrap()]).status.success());
    assert!(target.exists());
    let again = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = run(&["verify", "--config", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = write_config(dir.path(), &SCALAR.replace("alpha = 0.5", "alpha = [0.5]"));
    let out = run(&["solve", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("alpha") && msg.contains("line"), "{msg}");

    let out = run(&["solve", "--config", demo().to_str().unwrap(), "--mesh", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluation_errors_name_the_time() {
    let dir = tempfile::tempdir().unwrap();
    let body = SCALAR.replace("[problem.history]", "[numerics]\nmax_terms = 3\n\n[problem.history]");
    let cfg = write_config(dir.path(), &body);
    let out = run(&["eval-x", "--config", cfg.to_str().unwrap(), "--times", "0.5,1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t = 0.5"));
}

#[test]
fn verify_demo_passes_and_is_deterministic() {
    let cfg = demo();
    let a = run(&["verify", "--config", cfg.to_str().unwrap()]);
    let b = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("seed: 20240611"));
    assert!(text.contains("0 failed"));
}

#[test]
fn verify_skips_commuting_checks_for_noncommuting_pair() {
    let dir = tempfile::tempdir().unwrap();
    let body = std::fs::read_to_string(demo())
        .unwrap()
        .replace("b = [[0.4, -0.04], [-0.04, 0.38]]", "b = [[0.4, 0.0], [0.1, 0.0]]");
    let cfg = write_config(dir.path(), &body);
    let out = run(&["verify", "--config", cfg.to_str().unwrap(), "--seed", "11"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("seed: 11"));
    let line = text.lines().find(|l| l.starts_with("qtable.commuting")).unwrap();
    assert!(line.contains("skipped"), "{line}");
    let strict = run(&["verify", "--config", cfg.to_str().unwrap(), "--strict"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn verify_runs_classical_comparison_at_alpha_one() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
[problem]
a = [[-1.0]]
b = [[0.5]]
h = 1.0
alpha = 1.0
t_end = 3.0

[problem.history]
kind = "constant"
value = [1.0]
"#;
    let cfg = write_config(dir.path(), body);
    let out = run(&["verify", "--config", cfg.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("solve.classical_limit")).unwrap();
    assert!(line.contains("pass"), "{text}");
}

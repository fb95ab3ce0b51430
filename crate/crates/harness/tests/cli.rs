use std::path::{Path, PathBuf};

use heurist::cli::run;

fn heurist(args: &[&str]) -> i32 {
    run(std::iter::once("heurist").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn diagonal_config(dir: &Path, extra: &str) -> PathBuf {
    let text = format!(
        r#"
[problem]
kind = "diagonal"
n = 20
beta = 4.0
nu = 2.0

[regularizer]
kind = "power_lq"
q = 1.5

[noise]
kappa = 1.0
seed = 42

[output]
dir = "out"
{extra}"#
    );
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn experiment_output_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = diagonal_config(dir.path(), "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(heurist(&["experiment", "--config", s(&cfg), "--out-dir", s(&a)]), 0);
    assert_eq!(heurist(&["experiment", "--config", s(&cfg), "--out-dir", s(&b)]), 0);
    for f in ["report.csv", "report.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "level_index,delta,rule,alpha_star,error,alpha_opt,error_opt,efficiency");
    assert_eq!(lines.count(), 40);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = diagonal_config(dir.path(), "[grid]\nunknown_key = 3\n");
    assert_eq!(heurist(&["experiment", "--config", s(&cfg)]), 2);
    assert_eq!(heurist(&["experiment", "--config", s(&dir.path().join("missing.toml"))]), 2);
    assert_eq!(heurist(&["experiment"]), 2);
}

#[test]
fn non_converged_solves_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("A.txt");
    assert_eq!(heurist(&["gen-matrix", "--rows", "15", "--cols", "10", "--cond", "100", "--seed", "2", "--out", s(&a)]), 0);
    std::fs::write(dir.path().join("x.txt"), "1 0 0 0 1 0 0 0 0 -1\n").unwrap();
    let text = r#"
[problem]
kind = "matrix"
matrix = "A.txt"
x_dagger = "x.txt"

[regularizer]
kind = "l1"

[noise]
count = 2
seed = 1

[solver]
max_iters = 2
"#;
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, text).unwrap();
    assert_eq!(heurist(&["experiment", "--config", s(&cfg), "--out-dir", s(&dir.path().join("o"))]), 3);
    let warn = text.replace("max_iters = 2", "max_iters = 2\non_nonconvergence = \"warn\"");
    std::fs::write(&cfg, warn).unwrap();
    assert_eq!(heurist(&["experiment", "--config", s(&cfg), "--out-dir", s(&dir.path().join("o"))]), 0);
}

#[test]
fn solve_and_rules_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let y = dir.path().join("y.txt");
    std::fs::write(&y, "1\n0.5\n0.1\n").unwrap();
    let x = dir.path().join("x.txt");
    assert_eq!(heurist(&["solve", "--diag-beta", "0", "--n", "3", "--q", "2", "--alpha", "1", "--y", s(&y), "--out", s(&x)]), 0);
    let xs: Vec<f64> = std::fs::read_to_string(&x).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(xs, vec![0.5, 0.25, 0.05]);

    let m = dir.path().join("A.txt");
    std::fs::write(&m, "1 0 0\n0 0.5 0\n0 0 0.25\n").unwrap();
    let out = dir.path().join("rules.csv");
    assert_eq!(heurist(&["rules", "--matrix", s(&m), "--l1", "--y", s(&y), "--points-per-decade", "4", "--max-iters", "100000", "--out", s(&out)]), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("alpha,psi_hd,psi_hr,psi_sqo,psi_rqo\n"));
    // grid [1/16, 1] at 4 points per decade
    assert_eq!(text.lines().count(), 1 + 1 + (4.0 * 16f64.log10()).ceil() as usize);

    assert_eq!(heurist(&["solve", "--matrix", s(&m), "--q", "1.5", "--l1", "--alpha", "1", "--y", s(&y)]), 2);
}

#[test]
fn conditions_emit_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = diagonal_config(dir.path(), "[grid]\npoints_per_decade = 2\n");
    let out = dir.path().join("cond.csv");
    assert_eq!(heurist(&["conditions", "--config", s(&cfg), "--level", "3", "--C1", "0.1", "--out", s(&out)]), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    for name in ["AUTOREG_HD", "AUTOREG_RQO", "MUCK_HR", "MUCK_SQO", "RATE_SQO"] {
        assert!(text.contains(&format!(",{name},")), "{name}");
    }
    assert!(text.lines().skip(1).all(|l| l.starts_with("3,")));
}

#[test]
fn classify_and_gen_matrix() {
    assert_eq!(heurist(&["classify", "--beta", "4", "--nu", "6", "--kappa", "1", "--q", "1.5"]), 0);
    assert_eq!(heurist(&["classify", "--beta", "0", "--nu", "6", "--kappa", "1", "--q", "1.5"]), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.txt");
    assert_eq!(heurist(&["gen-matrix", "--rows", "6", "--cols", "4", "--cond", "10", "--out", s(&out)]), 0);
    let m = heurist::io::read_matrix(&out).unwrap();
    assert_eq!((m.nrows(), m.ncols()), (6, 4));
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

/// Exit code, stdout and stderr of one CLI invocation.
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn coulhole(args: &[&str], cwd: &Path) -> Outcome {
    coulhole_env(args, cwd, &[])
}

pub fn coulhole_env(args: &[&str], cwd: &Path, env: &[(&str, &Path)]) -> Outcome {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coulhole"));
    cmd.args(args)
        .current_dir(cwd)
        .env_remove("COULHOLE_OUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Outcome {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Numeric rows of a comment-headed table, plus its comment lines.
pub fn parse_table(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut comments = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim().to_string());
        } else if !line.trim().is_empty() {
            rows.push(line.split(',').map(|x| x.trim().parse().unwrap()).collect());
        }
    }
    (comments, rows)
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()) || (a - b).abs() < 1e-300
}

/// Compare `actual` with the pinned file `name`; `UPDATE_GOLDEN=1` rewrites it.
///
/// Tables match when the comment lines agree (numbers in them to 1e-9) and
/// every value agrees to 1e-9 relative; other files must match exactly.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_dir().join(name), actual).unwrap();
        return Ok(());
    }
    compare_golden(name, actual)
}

/// Compare without ever rewriting the pinned file.
pub fn compare_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    let want = std::fs::read_to_string(&path).map_err(|e| {
        format!(
            "{}: {e} (run with UPDATE_GOLDEN=1 to create)",
            path.display()
        )
    })?;
    if !name.ends_with(".csv") {
        return if want == actual {
            Ok(())
        } else {
            Err(format!("{name} differs"))
        };
    }
    let (wc, wr) = parse_table(&want);
    let (ac, ar) = parse_table(actual);
    if wc.len() != ac.len() || wr.len() != ar.len() {
        return Err(format!("{name}: shape differs"));
    }
    for (w, a) in wc.iter().zip(&ac) {
        let tok = |s: &str| -> Vec<String> {
            s.split(|c: char| c.is_whitespace() || c == '=' || c == ';')
                .map(str::to_string)
                .collect()
        };
        for (x, y) in tok(w).iter().zip(tok(a).iter()) {
            let same = match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(p), Ok(q)) => close(p, q),
                _ => x == y,
            };
            if !same {
                return Err(format!("{name}: comment differs:\n  {w}\n  {a}"));
            }
        }
    }
    for (i, (w, a)) in wr.iter().zip(&ar).enumerate() {
        if w.len() != a.len() || w.iter().zip(a).any(|(x, y)| !close(*x, *y)) {
            return Err(format!("{name}: row {i} differs"));
        }
    }
    Ok(())
}

/// Small runs pinned by golden files: (file produced, arguments).
pub const GOLDEN_RUNS: [(&str, &[&str]); 6] = [
    (
        "map.csv",
        &[
            "map", "--u-min", "0.01", "--u-max", "100", "--points", "41", "--approx",
        ],
    ),
    (
        "timemap.csv",
        &[
            "timemap",
            "--xi-over-sc",
            "0,0.05,0.1,0.3",
            "--ti-range",
            "1e-3,1e2",
            "--points",
            "41",
            "--approx",
        ],
    ),
    (
        "correlation.csv",
        &[
            "correlation",
            "--ef",
            "1keV",
            "--de",
            "1eV",
            "--L",
            "1cm",
            "--grid-spacing",
            "tau_c",
            "--output-max",
            "50tau_c",
        ],
    ),
    (
        "scales.txt",
        &["scales", "--preset", "kiesel", "--r0", "38nm"],
    ),
    (
        "simulate-tf.csv",
        &[
            "simulate", "--ef", "1keV", "--de", "1eV", "--L", "1cm", "--tbar", "2e-3ns", "--pairs",
            "20000", "--seed", "1", "--bins", "20",
        ],
    ),
    ("gamow.json", &["gamow", "--eta", "1"]),
];

/// Run one golden configuration in a fresh directory and return the file text.
pub fn golden_output(file: &str, args: &[&str]) -> String {
    let dir = tempfile::tempdir().unwrap();
    let o = coulhole(args, dir.path());
    assert_eq!(o.code, 0, "{args:?}: {}", o.stderr);
    std::fs::read_to_string(dir.path().join(file)).unwrap()
}

//! End-to-end checks of the binary: exit codes, artifact layout, and byte
//! determinism across repeated runs with the same seed.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pilotload"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

#[test]
fn design_writes_books_and_exits_zero() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["design", "--config"])
        .arg(repo_config("threecell.cfg"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert!(status.success());
    for name in [
        "gwbe_book.txt",
        "gwbe_report.csv",
        "wbe_book.txt",
        "fos_book.txt",
        "fos_groups.csv",
    ] {
        let body = read(out.path(), name);
        assert!(!body.is_empty());
        // every artifact names the seed and config hash
        let text = String::from_utf8(body).unwrap();
        assert!(text.contains("seed=1"), "{name} lacks the seed");
        assert!(text.contains("config="), "{name} lacks the config hash");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    for out in [&out_a, &out_b] {
        let status = bin()
            .args(["validate", "--trials", "5000", "--seed", "9", "--config"])
            .arg(repo_config("validate.cfg"))
            .arg("--out")
            .arg(out.path())
            .status()
            .unwrap();
        assert!(status.success());
        let status = bin()
            .args(["region", "--grid", "16", "--seed", "9", "--config"])
            .arg(repo_config("region.cfg"))
            .arg("--out")
            .arg(out.path())
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in [
        "validate.csv",
        "validate_mc.csv",
        "region_surface.csv",
        "region_summary.csv",
    ] {
        assert_eq!(
            read(out_a.path(), name),
            read(out_b.path(), name),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn infeasible_targets_exit_with_code_two() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("bad.cfg");
    std::fs::write(
        &cfg,
        "L = 3\nK = 4\ntau = 3\nNt = 100\nsigma_w2 = 1\nsigma_n2 = 1\n\
         beta_own = 1.0\nbeta_cross = 0.9\n\
         gamma = 0.9 0.9 0.9 0.9 ; 0.2 0.2 0.2 0.2 ; 0.2 0.2 0.2 0.2\n",
    )
    .unwrap();
    let status = bin()
        .args(["design", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn verify_flags_a_corrupted_column() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["design", "--designs", "gwbe", "--config"])
        .arg(repo_config("threecell.cfg"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert!(status.success());

    let book = out.path().join("gwbe_book.txt");
    let status = bin()
        .args(["verify", "--config"])
        .arg(repo_config("threecell.cfg"))
        .arg("--book")
        .arg(&book)
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert!(status.success(), "pristine book must verify");

    // Scale the first column to norm 0.9.
    let text = std::fs::read_to_string(&book).unwrap();
    let corrupted: Vec<String> = text
        .lines()
        .map(|l| {
            if l.starts_with('#') || l.starts_with("tau=") {
                l.to_string()
            } else {
                let mut parts: Vec<String> = l.split_whitespace().map(str::to_string).collect();
                let v: f64 = parts[0].parse().unwrap();
                parts[0] = format!("{:.16e}", v * 0.9);
                parts.join(" ")
            }
        })
        .collect();
    let bad = out.path().join("corrupt.txt");
    std::fs::write(&bad, corrupted.join("\n") + "\n").unwrap();
    let output = bin()
        .args(["verify", "--config"])
        .arg(repo_config("threecell.cfg"))
        .arg("--book")
        .arg(&bad)
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("1.000e-1"), "reports the 0.1 residual");
}

#[test]
fn invalid_frame_size_exits_with_code_three() {
    // K < tau makes the per-cell WBE frame infeasible.
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("short.cfg");
    std::fs::write(
        &cfg,
        "L = 2\nK = 2\ntau = 3\nNt = 16\nsigma_w2 = 1\nsigma_n2 = 1\n\
         beta_own = 1.0\nbeta_cross = 0.9\ngamma = 0.3 0.2 ; 0.3 0.2\n",
    )
    .unwrap();
    let status = bin()
        .args(["design", "--designs", "wbe", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn missing_config_exits_with_code_one() {
    let status = bin()
        .args(["design", "--config", "/does/not/exist.cfg", "--out", "/tmp"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn cells_sweep_covers_the_requested_range() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["cells", "--lmin", "2", "--lmax", "3", "--designs", "gwbe,fos", "--config"])
        .arg(repo_config("region.cfg"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = String::from_utf8(read(out.path(), "cells.csv")).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("L,"))
        .collect();
    assert_eq!(rows.len(), 4, "2 cell counts x 2 designs");
    assert!(rows.iter().any(|r| r.starts_with("2,GWBE")));
    assert!(rows.iter().any(|r| r.starts_with("3,FOS")));
}

#[test]
fn antennas_reports_the_replay_crossing() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["antennas", "--designs", "gwbe", "--config"])
        .arg(repo_config("threecell_replay.cfg"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = String::from_utf8(read(out.path(), "crossings.csv")).unwrap();
    let row = text
        .lines()
        .find(|l| l.starts_with("GWBE"))
        .expect("GWBE crossing row");
    let nt_exact: f64 = row.split(',').last().unwrap().parse().unwrap();
    assert_eq!(nt_exact.ceil() as u32, 93);
}

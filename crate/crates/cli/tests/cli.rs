use std::path::Path;
use std::process::{Command, Output};

fn hysfem(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hysfem")).args(args).env("HYSFEM_OUT", out).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn mesh_info_counts_vertices_and_elements() {
    let dir = tempfile::tempdir().unwrap();
    let out = hysfem(dir.path(), &["mesh-info", "--dim", "3", "--n", "2"]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    assert!(stdout.contains("27 vertices"), "{stdout}");
    assert!(stdout.contains("48 elements"), "{stdout}");
}

#[test]
fn missing_config_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = hysfem(dir.path(), &["study-h", "--config", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("nope.toml"), "{}", text(&out.stderr));
}

#[test]
fn malformed_toml_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "case = 1\n[grid\nn_ref = 4\n").unwrap();
    let out = hysfem(dir.path(), &["study-h", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("line"), "{}", text(&out.stderr));
}

#[test]
fn unknown_subcommand_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = hysfem(dir.path(), &["frobnicate"]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("Usage"));
}

#[test]
fn study_h_writes_the_error_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(
        &cfg,
        "case = 1\nt_final = 0.25\noutput_dir = \"tiny\"\n\n[grid]\nn_ref = 64\nk_ref = 32\nn_init = 8\nk_init = 8\nr_h = 2\nr_tau = 0\n",
    )
    .unwrap();
    let out = hysfem(dir.path(), &["study-h", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("tiny/case1_h.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("level,N,K,l2_error,l2_order,h1_error,h1_order"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn preisach_demo_writes_loop_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("demo.toml");
    std::fs::write(&cfg, "preisach_nodes = 20\nsamples_per_period = 100\nperiods = 2\n").unwrap();
    let out = hysfem(dir.path(), &["preisach-demo", "--config", cfg.to_str().unwrap(), "--output-dir", "loop"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for f in ["preisach_loop.csv", "preisach_loop.svg"] {
        assert!(dir.path().join("loop").join(f).is_file(), "{f} missing");
    }
}

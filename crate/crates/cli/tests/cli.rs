use std::path::Path;
use std::process::Command;

fn tpsearch() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tpsearch"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const CENTRAL_SPIN: &str = r#"
n_runs = 2
master_seed = 3

[hamiltonian]
family = "central_spin"
beta = 0.0
dims = { n_s = 1, n_e = 2 }

[optimizer]
mode = "FixedState"
max_iterations = 300

[eval]
grid_points = 16
"#;

#[test]
fn gen_and_optimize_then_classify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CENTRAL_SPIN);
    let out = dir.path().join("sweep");
    let status = tpsearch()
        .args(["gen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("manifest.json").exists());

    let output = tpsearch()
        .arg("optimize")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "1", "--max-iters", "200", "--threshold", "1e-12"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let lines = std::fs::read_to_string(out.join("runs.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 2);
    assert!(lines.lines().all(|l| l.contains("\"schema\":\"runrecord/1\"")));

    let classified = dir.path().join("classified");
    let output = tpsearch()
        .arg("classify")
        .arg(&out)
        .arg("--out")
        .arg(&classified)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&output.stdout).starts_with("category,count"));
    assert!(classified.join("classification.csv").exists());
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = tpsearch().arg("optimize").status().unwrap();
    assert_eq!(missing.code(), Some(2));

    let cfg = write_config(dir.path(), "[hamiltonian]\nfamily = \"dfs_split\"\ndfs_size = 9\ndims = { n_s = 1, n_e = 2 }\n");
    let status = tpsearch().arg("gen").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let bad = dir.path().join("bad.cmat");
    std::fs::write(&bad, "cmat 2 2\n1,0 1,0\n0,0 1,0\n").unwrap();
    let status = tpsearch().args(["recipe", "--hamiltonian"]).arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn failed_runs_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n_runs = 2\n[hamiltonian]\nfamily = \"dfs_split\"\ndfs_size = 9\ndims = { n_s = 1, n_e = 2 }\n",
    );
    let status = tpsearch()
        .arg("optimize")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("sweep"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn recipe_and_empty_classify() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("h.cmat");
    std::fs::write(
        &h,
        "cmat 4 4\n0,0 0,0 0,0 0,0\n0,0 1,0 0,0 0,0\n0,0 0,0 2,0 0,0\n0,0 0,0 0,0 4,0\n",
    )
    .unwrap();
    let out = dir.path().join("recipe");
    let output = tpsearch()
        .args(["recipe", "--hamiltonian"])
        .arg(&h)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["worst_entropy"].as_f64().unwrap() <= 1e-12);

    let status = tpsearch().arg("classify").arg("--out").arg(dir.path().join("c")).status().unwrap();
    assert_eq!(status.code(), Some(0));
}

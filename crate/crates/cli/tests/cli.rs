use std::path::Path;
use std::process::{Command, Output};

use kerrchain_cli::ExperimentConfig;

fn kerrchain(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerrchain"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

/// Config embedded in the second header line of a CSV.
fn embedded(csv: &str) -> ExperimentConfig {
    let line = csv.lines().nth(1).unwrap();
    serde_json::from_str(line.trim_start_matches("# config: ")).unwrap()
}

const SMALL_SIM: &str = "[chain]\ng1 = 0.4\ng2 = 0.5\neta_d2 = 0.5\n[controls]\nt_settle = 0.5\nt_filter = 2.0\nn_traj = 5\n";

#[test]
fn linear_report_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kerrchain(&["linear", "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/linear.json")).unwrap()).unwrap();
    assert!((doc["result"]["squeezer_threshold"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!(doc["tool"].as_str().unwrap().starts_with("kerrchain-cli "));
    assert_eq!(doc["config"]["scenario"], "linear_analysis");
}

#[test]
fn simulate_flags_override_config_and_rerun_is_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", SMALL_SIM);
    let run = |out: &str| {
        let o = kerrchain(&["simulate", "--config", &cfg, "--out", out, "--seed", "11", "--traj", "3", "--emit", "csv"], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(tmp.path().join(out).join("shots.csv")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert!(!tmp.path().join("a/metrics.json").exists());
    // only the output directory differs between the embedded configs
    assert_eq!(a.lines().skip(2).collect::<Vec<_>>(), b.lines().skip(2).collect::<Vec<_>>());
    let cfg = embedded(&a);
    assert_eq!(cfg.controls.seed, 11);
    assert_eq!(cfg.controls.n_traj, 3);
    assert_eq!(a.lines().nth(2), Some("class,I,Q,seed"));
    assert_eq!(a.lines().count(), 3 + 6);
    let c = run("a");
    assert_eq!(a, c);
}

#[test]
fn sweep_writes_row_major_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.toml",
        "scenario = \"sweep2d\"\n[chain]\ng1 = 0.4\n\
         [sweep.axis1]\nparam = \"g2\"\nmin = 0.5\nmax = 0.9\nsteps = 3\n\
         [sweep.axis2]\nparam = \"eta_d2\"\nmin = 0.0\nmax = 1.0\nsteps = 2\n",
    );
    let o = kerrchain(&["sweep", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("o/grid.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(4)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    assert_eq!((rows[0][0], rows[0][1]), (0.5, 0.0));
    assert_eq!((rows[1][0], rows[1][1]), (0.5, 1.0));
    assert_eq!(rows[5][0], 0.9);
    // no drive, no separation
    assert_eq!(rows[0][2], 0.0);
    assert!(tmp.path().join("o/sweep.json").exists());
}

#[test]
fn convert_round_trip_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "v.toml",
        "[convert.physical]\nomega_s = 0.1\nomega_p = 0.2\ng3 = 0.2\ng4 = 0.0\nkappa_s = 4.0\n\
         eps_p = 0.5\nphi_p = 0.3\neta_sig = 0.5\nphi_sig = 0.0\n",
    );
    let o = kerrchain(&["convert", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/convert.json")).unwrap()).unwrap();
    let phi_d2 = doc["result"]["effective"]["phi_d2"].as_f64().unwrap();
    assert!((phi_d2 - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    // config errors: unknown key, unreadable file, scenario mismatch, bad worker count
    let bad = write(tmp.path(), "bad.toml", "[chain]\ngl = 0.4\n");
    assert_eq!(kerrchain(&["simulate", "--config", &bad], tmp.path()).status.code(), Some(2));
    assert_eq!(kerrchain(&["simulate", "--config", "missing.toml"], tmp.path()).status.code(), Some(2));
    let lin = write(tmp.path(), "lin.toml", "scenario = \"linear_analysis\"\n");
    assert_eq!(kerrchain(&["sweep", "--config", &lin], tmp.path()).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_kerrchain"))
        .args(["linear", "--out", "o"])
        .current_dir(tmp.path())
        .env("KERRCHAIN_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    // physics error: squeezer above threshold
    let hot = write(tmp.path(), "hot.toml", &SMALL_SIM.replace("g1 = 0.4", "g1 = 0.6"));
    assert_eq!(kerrchain(&["simulate", "--config", &hot, "--out", "o"], tmp.path()).status.code(), Some(3));
    // I/O error: output path is a file
    write(tmp.path(), "taken", "");
    assert_eq!(kerrchain(&["linear", "--out", "taken"], tmp.path()).status.code(), Some(4));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 5);
}

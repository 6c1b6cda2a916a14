use std::fs;
use std::path::Path;
use std::process::Command;

use ham_asclt::config::{Experiment, ExperimentConfig};
use ham_asclt::output::{run, RunManifest, MANIFEST_FILE};
use ham_asclt::plot::emit_plot_data;
use ham_asclt::CliError;
use ham_asclt_core::noise::read_dump;

fn small(experiment: Experiment, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        experiment,
        output_dir: out.to_path_buf(),
        ..ExperimentConfig::default()
    };
    cfg.grid.t = 0.5;
    cfg.replications = 120;
    cfg.radii = vec![2.0, 4.0, 8.0, 16.0];
    cfg
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn header(path: &Path) -> Vec<String> {
    csv::Reader::from_path(path)
        .unwrap()
        .headers()
        .unwrap()
        .iter()
        .map(String::from)
        .collect()
}

#[test]
fn variance_scan_hashes_ignore_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let hashes = |threads, sub: &str| {
        let mut cfg = small(Experiment::VarianceScan, &dir.path().join(sub));
        cfg.threads = Some(threads);
        let m = run(&cfg).unwrap();
        (m.config_digest.clone(), m.outputs)
    };
    let a = hashes(1, "a");
    let b = hashes(3, "b");
    let c = hashes(1, "c");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let names: Vec<&str> = a.1.iter().map(|o| o.path.as_str()).collect();
    assert_eq!(names, ["ensemble.csv", "sigma.csv", "scaling.csv"]);
    assert_eq!(header(&dir.path().join("a/ensemble.csv")), ["replication", "R", "F", "F_tilde"]);
    assert_eq!(rows(&dir.path().join("a/ensemble.csv")).len(), 120 * 4);
}

#[test]
fn manifest_round_trips_and_records_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(Experiment::Clt, dir.path());
    let m = run(&cfg).unwrap();
    let back = RunManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(back.outputs, m.outputs);
    assert_eq!(back.config_digest, m.config_digest);
    assert!(back.kernel_truncation.is_some());
    assert_eq!(back.config, cfg);
    assert_eq!(header(&dir.path().join("clt.csv")), ["R", "M", "mean", "sigma_hat", "ks"]);
}

#[test]
fn scaling_plot_has_one_row_per_radius() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&small(Experiment::VarianceScan, dir.path())).unwrap();
    let out = dir.path().join("plots");
    let files = emit_plot_data(&m, dir.path(), &out).unwrap();
    assert_eq!(files, vec![out.join("plot_scaling.csv")]);
    assert_eq!(header(&files[0]), ["log_R", "log_sigma2", "fit"]);
    let r = rows(&files[0]);
    assert_eq!(r.len(), 4);
    let log_r: f64 = r[0][0].parse().unwrap();
    assert!((log_r - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn qq_plot_pairs_normal_quantiles_with_sorted_samples() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&small(Experiment::Clt, dir.path())).unwrap();
    let files = emit_plot_data(&m, dir.path(), dir.path()).unwrap();
    let r = rows(&files[0]);
    assert_eq!(r.len(), 120);
    let sample: Vec<f64> = r.iter().map(|x| x[1].parse().unwrap()).collect();
    assert!(sample.windows(2).all(|w| w[0] <= w[1]));
    let first: f64 = r[0][0].parse().unwrap();
    assert!(first < -2.0);
}

#[test]
fn asclt_plot_has_seed_by_checkpoint_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::Asclt, dir.path());
    cfg.asclt.horizon = 12.0;
    cfg.asclt.checkpoints = vec![4.0, 8.0, 12.0];
    cfg.asclt.seeds = 20;
    cfg.asclt.pilot_replications = 40;
    cfg.asclt.points_per_decade = 16;
    let m = run(&cfg).unwrap();
    let names: Vec<&str> = m.outputs.iter().map(|o| o.path.as_str()).collect();
    assert_eq!(
        names,
        ["pilot_sigma.csv", "asclt.csv", "asclt_wasserstein.csv", "lipschitz.csv", "asclt_summary.csv"]
    );
    assert_eq!(header(&dir.path().join("asclt.csv")), ["seed", "T_or_N", "mode", "weighted_ks"]);
    assert_eq!(rows(&dir.path().join("asclt.csv")).len(), 120);
    assert_eq!(rows(&dir.path().join("lipschitz.csv")).len(), 20 * 3 * 3);
    let files = emit_plot_data(&m, dir.path(), dir.path()).unwrap();
    assert_eq!(header(&files[0]), ["seed", "T", "log_T", "weighted_ks"]);
    assert_eq!(rows(&files[0]).len(), 60);
}

#[test]
fn plot_data_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = run(&small(Experiment::VarianceScan, dir.path())).unwrap();
    fs::remove_file(dir.path().join("sigma.csv")).unwrap();
    match emit_plot_data(&m, dir.path(), dir.path()) {
        Err(CliError::MissingInput(p)) => assert!(p.ends_with("sigma.csv")),
        other => panic!("expected a missing-input error, got {other:?}"),
    }
    m.outputs.clear();
    let err = emit_plot_data(&m, dir.path(), dir.path()).unwrap_err();
    assert!(err.to_string().contains("no outputs"));
}

#[test]
fn simulate_dumps_field_and_noise() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::Simulate, dir.path());
    cfg.simulate.radius = 2.0;
    cfg.simulate.dump_noise = true;
    let m = run(&cfg).unwrap();
    let names: Vec<&str> = m.outputs.iter().map(|o| o.path.as_str()).collect();
    assert_eq!(names, ["field.csv", "noise.white.f64", "noise.colored.f64", "noise.json"]);
    let field = rows(&dir.path().join("field.csv"));
    assert_eq!(field.len(), 81);
    let (sidecar, white, colored) = read_dump(&dir.path().join("noise.json")).unwrap();
    assert_eq!(white.len(), sidecar.rows * sidecar.cols);
    assert_eq!(colored.len(), white.len());
    assert!(emit_plot_data(&m, dir.path(), dir.path()).unwrap().is_empty());
}

#[test]
fn unsafe_domain_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::VarianceScan, &dir.path().join("never"));
    cfg.grid.half_width = Some(10.0);
    assert!(matches!(run(&cfg), Err(CliError::Config(_))));
    assert!(!dir.path().join("never").exists());
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ham-asclt"))
}

#[test]
fn binary_runs_from_a_toml_config_and_emits_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("oracle.toml");
    fs::write(&config, "seed = 4\n\n[oracle]\nn = 5000\nseeds = 3\n").unwrap();
    let out = dir.path().join("run");
    let status = binary()
        .args(["oracle-iid", "--config"])
        .arg(&config)
        .args(["--threads", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let r = rows(&out.join("oracle_iid.csv"));
    assert_eq!(r.len(), 3 * 2);
    assert_eq!(&r[0][0], "4");
    let out2 = dir.path().join("plots");
    let status = binary().arg("plot-data").arg("--manifest").arg(&out).arg("--out").arg(&out2).status().unwrap();
    assert!(status.success());
    assert_eq!(rows(&out2.join("plot_asclt.csv")).len(), 6);
}

#[test]
fn binary_reports_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "sed = 4\n").unwrap();
    let o = binary().args(["clt", "--config"]).arg(&config).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("sed"));
    let o = binary()
        .args(["clt", "--threads", "0", "--out"])
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert!(!o.status.success());
    let o = binary().arg("plot-data").arg("--manifest").arg(dir.path().join("absent.json")).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.json"));
}

#[test]
fn shipped_configs_load_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert_eq!(seen, 7);
}

//! CSV tables, the run manifest and the `run` entry point.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ham_asclt_core::analytics::Criterion;
use ham_asclt_core::kernels::KernelTruncation;
use ham_asclt_core::noise::write_dump;
use ham_asclt_core::statistics::LogAverageMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{io_err, Result};
use crate::experiments;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    /// SHA-256 of the resolved configuration as JSON, without the thread
    /// count and output directory.
    pub config_digest: String,
    pub seed: u64,
    pub version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<OutputFile>,
    pub kernel_truncation: Option<KernelTruncation>,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
    /// Configured pass criteria that were not met.
    pub failures: Vec<String>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn output(&self, name: &str) -> Option<&OutputFile> {
        self.outputs.iter().find(|o| o.path == name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_digest(cfg: &ExperimentConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.threads = None;
    c.output_dir = PathBuf::new();
    Ok(sha256_hex(&serde_json::to_vec(&c)?))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Collects files written into one directory with their hashes.
pub(crate) struct Outputs {
    dir: PathBuf,
    pub(crate) files: Vec<OutputFile>,
}

impl Outputs {
    pub(crate) fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub(crate) fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        self.bytes(name, &bytes)
    }

    pub(crate) fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.files.push(OutputFile {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Registers a file some other writer produced.
    fn existing(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(io_err(path))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.files.push(OutputFile {
            path: name,
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }
}

#[derive(Serialize)]
struct IdentityRow<'a> {
    name: &'a str,
    lhs: f64,
    rhs: f64,
    abs_err: f64,
    rel_err: f64,
    criterion: &'static str,
    slack: Option<f64>,
    pass: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub replication: u64,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "F")]
    pub value: f64,
    #[serde(rename = "F_tilde")]
    pub normalized: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SigmaRow {
    #[serde(rename = "R")]
    pub radius: f64,
    pub sigma_hat: f64,
    #[serde(rename = "M")]
    pub replications: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScalingRow {
    pub beta_hat: f64,
    pub intercept: f64,
    pub stderr: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CltRow {
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "M")]
    pub replications: usize,
    pub mean: f64,
    pub sigma_hat: f64,
    pub ks: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CltSampleRow {
    pub replication: u64,
    #[serde(rename = "F")]
    pub value: f64,
    #[serde(rename = "F_tilde")]
    pub normalized: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AscltRow {
    pub seed: u64,
    #[serde(rename = "T_or_N")]
    pub horizon: f64,
    pub mode: String,
    pub weighted_ks: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct WassersteinRow {
    seed: u64,
    #[serde(rename = "T_or_N")]
    horizon: f64,
    mode: String,
    wasserstein1: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryRow {
    mode: String,
    #[serde(rename = "T_or_N")]
    horizon: f64,
    median_ks: f64,
    fraction_below: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LipschitzRow {
    seed: u64,
    #[serde(rename = "T")]
    horizon: f64,
    g: String,
    #[serde(rename = "L_T")]
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OracleRow {
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub weighted_ks: f64,
    pub below_asymptotic: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct FieldRow {
    x: f64,
    u: f64,
}

fn criterion_label(c: Criterion) -> &'static str {
    match c {
        Criterion::Absolute(_) => "absolute",
        Criterion::Relative(_) => "relative",
        Criterion::UpperBound => "upper_bound",
    }
}

#[derive(Default)]
struct Report {
    summary: Vec<String>,
    warnings: Vec<String>,
    failures: Vec<String>,
    truncation: Option<KernelTruncation>,
}

/// Validates `cfg`, runs its experiment on a pool of `cfg.threads()` workers,
/// writes every table and `manifest.json` into `cfg.output_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let started = unix_now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads() {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let mut out = Outputs::new(&cfg.output_dir)?;
    let report = pool.install(|| execute(cfg, &mut out))?;
    let manifest = RunManifest {
        experiment: cfg.experiment,
        config_digest: config_digest(cfg)?,
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        outputs: out.files,
        kernel_truncation: report.truncation,
        summary: report.summary,
        warnings: report.warnings,
        failures: report.failures,
        config: cfg.clone(),
    };
    let path = cfg.output_dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(io_err(&path))?;
    Ok(manifest)
}

fn execute(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Report> {
    let mut rep = Report::default();
    match cfg.experiment {
        Experiment::Identities => {
            let rows = experiments::identities()?;
            out.csv(
                "identities.csv",
                rows.iter().map(|r| IdentityRow {
                    name: &r.name,
                    lhs: r.lhs,
                    rhs: r.rhs,
                    abs_err: r.abs_err,
                    rel_err: r.rel_err,
                    criterion: criterion_label(r.criterion),
                    slack: r.slack,
                    pass: r.pass,
                }),
            )?;
            for r in &rows {
                rep.summary.push(format!(
                    "{:<4} {:<44} lhs={:<12.6e} rhs={:<12.6e} abs_err={:.2e}",
                    if r.pass { "ok" } else { "FAIL" },
                    r.name,
                    r.lhs,
                    r.rhs,
                    r.abs_err
                ));
                if !r.pass {
                    rep.failures.push(format!("identity {} failed", r.name));
                }
            }
        }
        Experiment::VarianceScan => {
            let v = experiments::variance_scan(cfg)?;
            let n = v.ensemble.radii.len();
            out.csv(
                "ensemble.csv",
                v.ensemble.values.iter().zip(&v.normalized).enumerate().map(|(i, (f, ft))| EnsembleRow {
                    replication: (i / n) as u64,
                    radius: v.ensemble.radii[i % n],
                    value: *f,
                    normalized: *ft,
                }),
            )?;
            out.csv("sigma.csv", sigma_rows(&v.sigma))?;
            out.csv(
                "scaling.csv",
                [ScalingRow {
                    beta_hat: v.fit.beta_hat,
                    intercept: v.fit.intercept,
                    stderr: v.fit.stderr,
                }],
            )?;
            rep.summary.push(format!(
                "beta_hat = {:.4} ± {:.4}, log K = {:.4}",
                v.fit.beta_hat, v.fit.stderr, v.fit.intercept
            ));
            rep.truncation = Some(v.plan.truncation);
        }
        Experiment::Clt => {
            let c = experiments::clt(cfg)?;
            out.csv(
                "clt.csv",
                [CltRow {
                    radius: c.radius,
                    replications: c.samples.len(),
                    mean: c.mean,
                    sigma_hat: c.sigma_hat,
                    ks: c.ks,
                }],
            )?;
            out.csv(
                "clt_samples.csv",
                c.samples.iter().zip(&c.normalized).enumerate().map(|(i, (f, ft))| CltSampleRow {
                    replication: i as u64,
                    value: *f,
                    normalized: *ft,
                }),
            )?;
            rep.summary.push(format!("R = {}, M = {}, KS = {:.4}", c.radius, c.samples.len(), c.ks));
            rep.truncation = Some(c.plan.truncation);
        }
        Experiment::Asclt => {
            let a = experiments::asclt(cfg)?;
            out.csv("pilot_sigma.csv", sigma_rows(&a.pilot))?;
            let modes = [LogAverageMode::Continuous, LogAverageMode::Discrete];
            let per_mode = |p: &experiments::AscltPath, m: LogAverageMode| match m {
                LogAverageMode::Continuous => p.continuous.clone(),
                LogAverageMode::Discrete => p.discrete.clone(),
            };
            let mut ks_rows = Vec::new();
            let mut w_rows = Vec::new();
            for m in modes {
                for p in &a.paths {
                    for c in per_mode(p, m) {
                        ks_rows.push(AscltRow {
                            seed: p.seed,
                            horizon: c.horizon,
                            mode: m.label().into(),
                            weighted_ks: c.ks,
                        });
                        w_rows.push(WassersteinRow {
                            seed: p.seed,
                            horizon: c.horizon,
                            mode: m.label().into(),
                            wasserstein1: c.wasserstein,
                        });
                    }
                }
            }
            out.csv("asclt.csv", ks_rows)?;
            out.csv("asclt_wasserstein.csv", w_rows)?;
            out.csv(
                "lipschitz.csv",
                a.paths.iter().flat_map(|p| {
                    p.lipschitz.iter().map(|&(g, t, l)| LipschitzRow {
                        seed: p.seed,
                        horizon: t,
                        g: g.label().into(),
                        value: l,
                    })
                }),
            )?;
            let mut summary_rows = Vec::new();
            for m in modes {
                let s = a.summary(m, cfg.asclt.ks_threshold);
                for &(t, med, frac) in &s {
                    rep.summary
                        .push(format!("{:<10} T = {:<6} median KS = {:.4}, below {} = {:.0}%", m.label(), t, med, cfg.asclt.ks_threshold, 100.0 * frac));
                    summary_rows.push(SummaryRow {
                        mode: m.label().into(),
                        horizon: t,
                        median_ks: med,
                        fraction_below: frac,
                    });
                }
                if let Some(&(t, _, frac)) = s.last() {
                    if frac < cfg.asclt.pass_fraction {
                        rep.failures.push(format!(
                            "{} mode: {:.0}% of paths below {} at T = {t}, {:.0}% required",
                            m.label(),
                            100.0 * frac,
                            cfg.asclt.ks_threshold,
                            100.0 * cfg.asclt.pass_fraction
                        ));
                    }
                }
            }
            out.csv("asclt_summary.csv", summary_rows)?;
            rep.truncation = Some(a.plan.truncation);
        }
        Experiment::OracleIid => {
            let reports = experiments::oracle_iid(cfg)?;
            out.csv(
                "oracle_iid.csv",
                reports.iter().flat_map(|r| {
                    r.checkpoints.iter().map(|&(n, ks)| OracleRow {
                        seed: r.seed,
                        n,
                        weighted_ks: ks,
                        below_asymptotic: r.below_asymptotic,
                    })
                }),
            )?;
            if reports.iter().any(|r| r.below_asymptotic) {
                rep.warnings.push(format!("N = {} is below the asymptotic regime", cfg.oracle.n));
            }
            let s = experiments::oracle_summary(&reports, cfg.oracle.ks_threshold);
            for &(n, med, frac) in &s {
                rep.summary
                    .push(format!("N = {n:<8} median KS = {med:.4}, below {} = {:.0}%", cfg.oracle.ks_threshold, 100.0 * frac));
            }
            if let Some(&(n, _, frac)) = s.last() {
                if frac < cfg.oracle.pass_fraction {
                    rep.failures.push(format!(
                        "{:.0}% of paths below {} at N = {n}, {:.0}% required",
                        100.0 * frac,
                        cfg.oracle.ks_threshold,
                        100.0 * cfg.oracle.pass_fraction
                    ));
                }
            }
        }
        Experiment::Simulate => {
            let (noise, field, plan) = experiments::simulate(cfg)?;
            let g = field.grid;
            let last = field.grid.n_t();
            let rows: Vec<FieldRow> = (field.lo..field.lo + field.width)
                .map(|j| (g.x(j), field.u(last, j)))
                .filter(|(x, _)| x.abs() <= cfg.simulate.radius + 1e-9)
                .map(|(x, u)| FieldRow { x, u })
                .collect();
            out.csv("field.csv", rows)?;
            if cfg.simulate.dump_noise {
                for p in write_dump(&noise, &cfg.output_dir, "noise")? {
                    out.existing(&p)?;
                }
            }
            rep.summary.push(format!("u(t, 0) = {:.6}", field.u(last, g.half_cells())));
            rep.truncation = Some(plan.truncation);
        }
    }
    if let Some(t) = rep.truncation {
        if t.tail_mass > cfg.truncation.tail_tolerance {
            rep.warnings.push(format!(
                "kernel truncation at {} discards relative mass {:.3e}",
                t.half_width, t.tail_mass
            ));
        }
    }
    Ok(rep)
}

fn sigma_rows(t: &ham_asclt_core::statistics::SigmaTable) -> Vec<SigmaRow> {
    t.radii
        .iter()
        .zip(&t.sigma_hat)
        .map(|(&radius, &sigma_hat)| SigmaRow {
            radius,
            sigma_hat,
            replications: t.replications,
        })
        .collect()
}

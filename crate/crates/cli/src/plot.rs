//! Plot-ready tables derived from a finished run's CSVs.

use std::fs;
use std::path::{Path, PathBuf};

use ham_asclt_core::statistics::normal_qq;
use serde::{Deserialize, Serialize};

use crate::config::Experiment;
use crate::error::{io_err, CliError, Result};
use crate::output::{AscltRow, CltSampleRow, OracleRow, RunManifest, ScalingRow, SigmaRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    #[serde(rename = "log_R")]
    pub log_r: f64,
    pub log_sigma2: f64,
    /// Fitted line at `log_r`.
    pub fit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscltPoint {
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "log_T")]
    pub log_horizon: f64,
    pub weighted_ks: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>>(manifest: &RunManifest, dir: &Path, name: &str) -> Result<Vec<T>> {
    let path = dir.join(name);
    if manifest.output(name).is_none() || !path.is_file() {
        return Err(CliError::MissingInput(path));
    }
    let mut r = csv::Reader::from_path(&path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    fs::write(path, bytes).map_err(io_err(path))
}

/// Writes the plot tables for `manifest`'s experiment into `out`, reading
/// its outputs from `dir`. Experiments without plots yield no files.
pub fn emit_plot_data(manifest: &RunManifest, dir: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    if manifest.outputs.is_empty() {
        return Err(CliError::Config("manifest lists no outputs".into()));
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut written = Vec::new();
    match manifest.experiment {
        Experiment::VarianceScan => {
            let sigma: Vec<SigmaRow> = read_rows(manifest, dir, "sigma.csv")?;
            let fit: Vec<ScalingRow> = read_rows(manifest, dir, "scaling.csv")?;
            let fit = fit
                .first()
                .ok_or_else(|| CliError::Config("scaling.csv has no rows".into()))?;
            let rows: Vec<ScalingPoint> = sigma
                .iter()
                .map(|s| {
                    let log_r = s.radius.ln();
                    ScalingPoint {
                        log_r,
                        log_sigma2: 2.0 * s.sigma_hat.ln(),
                        fit: fit.intercept + fit.beta_hat * log_r,
                    }
                })
                .collect();
            let path = out.join("plot_scaling.csv");
            write_rows(&path, &rows)?;
            written.push(path);
        }
        Experiment::Clt => {
            let samples: Vec<CltSampleRow> = read_rows(manifest, dir, "clt_samples.csv")?;
            let values: Vec<f64> = samples.iter().map(|s| s.normalized).collect();
            let rows: Vec<QqPoint> = normal_qq(&values)
                .into_iter()
                .map(|(theoretical, sample)| QqPoint { theoretical, sample })
                .collect();
            let path = out.join("plot_qq.csv");
            write_rows(&path, &rows)?;
            written.push(path);
        }
        Experiment::Asclt => {
            let rows: Vec<AscltRow> = read_rows(manifest, dir, "asclt.csv")?;
            let points: Vec<AscltPoint> = rows
                .iter()
                .filter(|r| r.mode == "continuous")
                .map(|r| AscltPoint {
                    seed: r.seed,
                    horizon: r.horizon,
                    log_horizon: r.horizon.ln(),
                    weighted_ks: r.weighted_ks,
                })
                .collect();
            let path = out.join("plot_asclt.csv");
            write_rows(&path, &points)?;
            written.push(path);
        }
        Experiment::OracleIid => {
            let rows: Vec<OracleRow> = read_rows(manifest, dir, "oracle_iid.csv")?;
            let points: Vec<AscltPoint> = rows
                .iter()
                .map(|r| AscltPoint {
                    seed: r.seed,
                    horizon: r.n as f64,
                    log_horizon: (r.n as f64).ln(),
                    weighted_ks: r.weighted_ks,
                })
                .collect();
            let path = out.join("plot_asclt.csv");
            write_rows(&path, &points)?;
            written.push(path);
        }
        Experiment::Identities | Experiment::Simulate => {}
    }
    Ok(written)
}

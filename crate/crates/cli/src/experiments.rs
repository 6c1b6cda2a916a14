//! In-memory experiment runs. File output lives in `output`.

use ham_asclt_core::analytics::{identity_suite, IdentityReport};
use ham_asclt_core::noise::NoiseIncrements;
use ham_asclt_core::solver::SolutionField;
use ham_asclt_core::statistics::{
    estimate_sigma, fit_beta, geometric_theta_grid, iid_asclt_oracle, ks_to_standard_normal, log_average_measure,
    mean_variance, pilot_centers, weighted_ks, weighted_wasserstein1, Ensemble, IidOracleReport, LogAverageMode,
    ScalingFit, SigmaTable, TestFunction,
};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::engine::{Simulation, SimulationPlan};
use crate::error::Result;

/// Replication index of every ASCLT panel path; pilot replications start at 0.
pub const PANEL_REPLICATION: u64 = 1 << 31;

pub fn identities() -> Result<Vec<IdentityReport>> {
    Ok(identity_suite()?)
}

#[derive(Debug, Clone)]
pub struct VarianceScan {
    pub ensemble: Ensemble,
    pub sigma: SigmaTable,
    pub fit: ScalingFit,
    pub normalized: Vec<f64>,
    pub plan: SimulationPlan,
}

pub fn variance_scan(cfg: &ExperimentConfig) -> Result<VarianceScan> {
    let sim = Simulation::new(SimulationPlan::from_config(cfg)?)?;
    let rows = sim.ensemble(cfg.seed, cfg.replications, &cfg.radii)?;
    let ensemble = Ensemble::new(cfg.grid.t, cfg.radii.clone(), rows.concat(), cfg.seed)?;
    let sigma = estimate_sigma(&ensemble)?;
    let fit = fit_beta(&sigma)?;
    let normalized = ensemble.normalized(&sigma)?;
    Ok(VarianceScan {
        ensemble,
        sigma,
        fit,
        normalized,
        plan: sim.plan().clone(),
    })
}

#[derive(Debug, Clone)]
pub struct CltRun {
    pub radius: f64,
    pub samples: Vec<f64>,
    pub mean: f64,
    pub sigma_hat: f64,
    /// `F / σ̂`.
    pub normalized: Vec<f64>,
    pub ks: f64,
    pub plan: SimulationPlan,
}

pub fn clt(cfg: &ExperimentConfig) -> Result<CltRun> {
    let sim = Simulation::new(SimulationPlan::from_config(cfg)?)?;
    let radius = cfg.clt.radius;
    let samples: Vec<f64> = sim.ensemble(cfg.seed, cfg.replications, &[radius])?.concat();
    let (mean, var, _) = mean_variance(samples.iter().copied());
    let sigma_hat = var.sqrt();
    if !(sigma_hat > 0.0) {
        return Err(ham_asclt_core::Error::Degenerate(format!("sigma_hat = {sigma_hat} at radius {radius}")).into());
    }
    let normalized: Vec<f64> = samples.iter().map(|f| f / sigma_hat).collect();
    let ks = ks_to_standard_normal(&normalized)?;
    Ok(CltRun {
        radius,
        samples,
        mean,
        sigma_hat,
        normalized,
        ks,
        plan: sim.plan().clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathCheckpoint {
    pub horizon: f64,
    pub ks: f64,
    pub wasserstein: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscltPath {
    pub seed: u64,
    pub continuous: Vec<PathCheckpoint>,
    pub discrete: Vec<PathCheckpoint>,
    /// `(g, T, L_T)`.
    pub lipschitz: Vec<(TestFunction, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct AscltRun {
    pub thetas: Vec<f64>,
    pub pilot: SigmaTable,
    pub paths: Vec<AscltPath>,
    pub plan: SimulationPlan,
}

impl AscltRun {
    /// Per checkpoint: `(T, median KS, fraction of paths below threshold)`.
    pub fn summary(&self, mode: LogAverageMode, threshold: f64) -> Vec<(f64, f64, f64)> {
        summarize(
            self.paths.iter().map(|p| match mode {
                LogAverageMode::Continuous => p.continuous.iter().map(|c| (c.horizon, c.ks)).collect(),
                LogAverageMode::Discrete => p.discrete.iter().map(|c| (c.horizon, c.ks)).collect(),
            }),
            threshold,
        )
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn summarize(paths: impl Iterator<Item = Vec<(f64, f64)>>, threshold: f64) -> Vec<(f64, f64, f64)> {
    let paths: Vec<Vec<(f64, f64)>> = paths.collect();
    let Some(first) = paths.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|i| {
            let mut col: Vec<f64> = paths.iter().map(|p| p[i].1).collect();
            let below = col.iter().filter(|&&v| v < threshold).count() as f64 / col.len() as f64;
            (first[i].0, median(&mut col), below)
        })
        .collect()
}

fn checkpoints_of(points: &[(f64, f64)], checkpoints: &[f64], mode: LogAverageMode) -> Result<Vec<PathCheckpoint>> {
    checkpoints
        .iter()
        .map(|&c| {
            let end = points.partition_point(|p| p.0 <= c * (1.0 + 1e-12));
            let m = log_average_measure(&points[..end], mode)?;
            Ok(PathCheckpoint {
                horizon: c,
                ks: weighted_ks(&m)?,
                wasserstein: weighted_wasserstein1(&m)?,
            })
        })
        .collect()
}

/// Pilot `σ̂` on the θ grid and the integers `1..=T`, then one path per seed
/// normalised by the pilot.
pub fn asclt(cfg: &ExperimentConfig) -> Result<AscltRun> {
    let a = &cfg.asclt;
    let sim = Simulation::new(SimulationPlan::from_config(cfg)?)?;
    let thetas = geometric_theta_grid(a.horizon, a.points_per_decade, &a.checkpoints)?;
    let integers: Vec<f64> = (1..=a.horizon.floor() as u64).map(|k| k as f64).collect();
    let mut radii: Vec<f64> = thetas.iter().chain(&integers).copied().collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let locate = |r: f64| radii.binary_search_by(|x| x.total_cmp(&r)).expect("radius is in the union grid");
    let theta_idx: Vec<usize> = thetas.iter().map(|&t| locate(t)).collect();
    let int_idx: Vec<usize> = integers.iter().map(|&k| locate(k)).collect();

    let rows = sim.ensemble(cfg.seed, a.pilot_replications, &radii)?;
    let pilot = estimate_sigma(&Ensemble::new(cfg.grid.t, radii.clone(), rows.concat(), cfg.seed)?)?;
    let normalize = |row: &[f64], idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| row[i] / pilot.sigma_hat[i]).collect() };
    let pilot_paths: Vec<Vec<(f64, f64)>> = rows
        .iter()
        .map(|row| thetas.iter().copied().zip(normalize(row, &theta_idx)).collect())
        .collect();
    let centers = TestFunction::ALL
        .iter()
        .map(|&g| pilot_centers(&pilot_paths, g))
        .collect::<ham_asclt_core::Result<Vec<_>>>()?;

    let streams: Vec<(u64, u64)> = (0..a.seeds as u64).map(|i| (cfg.seed + i, PANEL_REPLICATION)).collect();
    let panel = sim.map_streams(&streams, |p| radii.iter().map(|&r| p.at(r)).collect::<Vec<f64>>())?;
    let discrete_checkpoints: Vec<f64> = a.checkpoints.iter().map(|c| c.floor()).collect();
    let paths = streams
        .par_iter()
        .zip(&panel)
        .map(|(&(seed, _), row)| -> Result<AscltPath> {
            let cont: Vec<(f64, f64)> = thetas.iter().copied().zip(normalize(row, &theta_idx)).collect();
            let disc: Vec<(f64, f64)> = integers.iter().copied().zip(normalize(row, &int_idx)).collect();
            let mut lipschitz = Vec::new();
            for (g, c) in TestFunction::ALL.iter().zip(&centers) {
                for &t in &a.checkpoints {
                    let end = thetas.partition_point(|&x| x <= t * (1.0 + 1e-12));
                    let l = ham_asclt_core::statistics::lipschitz_log_average(&cont[..end], *g, &c[..end])?;
                    lipschitz.push((*g, t, l));
                }
            }
            Ok(AscltPath {
                seed,
                continuous: checkpoints_of(&cont, &a.checkpoints, LogAverageMode::Continuous)?,
                discrete: checkpoints_of(&disc, &discrete_checkpoints, LogAverageMode::Discrete)?,
                lipschitz,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AscltRun {
        thetas,
        pilot,
        paths,
        plan: sim.plan().clone(),
    })
}

/// One classical-ASCLT path per seed `seed, seed+1, …`.
pub fn oracle_iid(cfg: &ExperimentConfig) -> Result<Vec<IidOracleReport>> {
    let o = &cfg.oracle;
    (0..o.seeds as u64)
        .into_par_iter()
        .map(|i| Ok(iid_asclt_oracle(&o.law, o.n, cfg.seed + i)?))
        .collect()
}

/// Per checkpoint `(N, median KS, fraction below threshold)`.
pub fn oracle_summary(reports: &[IidOracleReport], threshold: f64) -> Vec<(f64, f64, f64)> {
    summarize(
        reports
            .iter()
            .map(|r| r.checkpoints.iter().map(|&(n, ks)| (n as f64, ks)).collect()),
        threshold,
    )
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<(NoiseIncrements, SolutionField, SimulationPlan)> {
    let sim = Simulation::new(SimulationPlan::from_config(cfg)?)?;
    let (noise, field) = sim.realize(cfg.seed, 0)?;
    Ok((noise, field, sim.plan().clone()))
}

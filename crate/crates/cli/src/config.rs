//! Experiment configuration: presets, file loading (JSON or TOML) and
//! validation.

use std::path::{Path, PathBuf};

use ham_asclt_core::kernels::KernelSpec;
use ham_asclt_core::noise::{LevyMeasureSpec, NoiseDriver};
use ham_asclt_core::statistics::{IidLaw, MIN_REPLICATIONS};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Identities,
    VarianceScan,
    Clt,
    Asclt,
    OracleIid,
    Simulate,
}

impl Experiment {
    pub fn label(self) -> &'static str {
        match self {
            Self::Identities => "identities",
            Self::VarianceScan => "variance-scan",
            Self::Clt => "clt",
            Self::Asclt => "asclt",
            Self::OracleIid => "oracle-iid",
            Self::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Evaluation time; the grid spans `[0, t]`.
    pub t: f64,
    pub dt: f64,
    pub dx: f64,
    /// Spatial half-width. Derived from the largest radius when absent.
    pub half_width: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t: 1.0,
            dt: 0.05,
            dx: 0.05,
            half_width: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    /// Largest discarded kernel mass for integrable kernels.
    pub tail_tolerance: f64,
    /// Riesz kernel half-width as a multiple of `R_max + t`.
    pub riesz_factor: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            tail_tolerance: 1e-12,
            riesz_factor: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltConfig {
    pub radius: f64,
}

impl Default for CltConfig {
    fn default() -> Self {
        Self { radius: 64.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AscltConfig {
    /// Largest radius `T` of the log-averaged path.
    pub horizon: f64,
    pub checkpoints: Vec<f64>,
    pub points_per_decade: usize,
    /// Size of the seed panel.
    pub seeds: usize,
    /// Replications of the independent normalising ensemble.
    pub pilot_replications: usize,
    /// Acceptance thresholds reported alongside the panel.
    pub ks_threshold: f64,
    pub pass_fraction: f64,
}

impl Default for AscltConfig {
    fn default() -> Self {
        Self {
            horizon: 200.0,
            checkpoints: vec![20.0, 80.0, 200.0],
            points_per_decade: 64,
            seeds: 20,
            pilot_replications: 1000,
            ks_threshold: 0.30,
            pass_fraction: 0.70,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub law: IidLaw,
    pub n: usize,
    pub seeds: usize,
    pub ks_threshold: f64,
    pub pass_fraction: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            law: IidLaw::Rademacher,
            n: 100_000,
            seeds: 20,
            ks_threshold: 0.15,
            pass_fraction: 0.80,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Half-width of the dumped `u(t, ·)` profile.
    pub radius: f64,
    pub dump_noise: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            radius: 8.0,
            dump_noise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub replications: usize,
    /// Worker threads; `None` uses `HAM_ASCLT_THREADS` or all cores.
    pub threads: Option<usize>,
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    pub kernel: KernelSpec,
    pub driver: NoiseDriver,
    pub radii: Vec<f64>,
    pub truncation: TruncationConfig,
    pub clt: CltConfig,
    pub asclt: AscltConfig,
    pub oracle: OracleConfig,
    pub simulate: SimulateConfig,
}

pub fn preset_driver() -> NoiseDriver {
    NoiseDriver::Levy {
        measure: LevyMeasureSpec::two_point(4.0, 1.0, 0.5),
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::VarianceScan,
            seed: 1,
            replications: 2000,
            threads: None,
            output_dir: PathBuf::from("out"),
            grid: GridConfig::default(),
            kernel: KernelSpec::exponential(1.0),
            driver: preset_driver(),
            radii: vec![8.0, 16.0, 32.0, 64.0],
            truncation: TruncationConfig::default(),
            clt: CltConfig::default(),
            asclt: AscltConfig::default(),
            oracle: OracleConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads `.toml` as TOML and anything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        Ok(if is_toml {
            toml::from_str(&text)?
        } else {
            serde_json::from_str(&text)?
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(e) = o.experiment {
            self.experiment = e;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.replications {
            self.replications = m;
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
    }

    /// Largest spatial-average radius the experiment reads.
    pub fn max_radius(&self) -> f64 {
        match self.experiment {
            Experiment::VarianceScan => self.radii.iter().copied().fold(0.0, f64::max),
            Experiment::Clt => self.clt.radius,
            Experiment::Asclt => self.asclt.horizon,
            Experiment::Simulate => self.simulate.radius,
            Experiment::Identities | Experiment::OracleIid => 0.0,
        }
    }

    fn needs_solver(&self) -> bool {
        matches!(
            self.experiment,
            Experiment::VarianceScan | Experiment::Clt | Experiment::Asclt | Experiment::Simulate
        )
    }

    /// Cross-field checks that run before any allocation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if !self.needs_solver() {
            if self.experiment == Experiment::OracleIid {
                self.oracle.law.validate()?;
                if self.oracle.n < 3 || self.oracle.seeds == 0 {
                    return bad("oracle needs n ≥ 3 and at least one seed".into());
                }
            }
            return Ok(());
        }
        self.kernel.validate()?;
        self.driver.validate()?;
        if matches!(self.driver, NoiseDriver::Levy { measure: LevyMeasureSpec::Deterministic { .. } })
            && self.experiment != Experiment::Simulate
        {
            return bad("deterministic jumps are only meaningful for simulate".into());
        }
        let g = &self.grid;
        ham_asclt_core::noise::GridSpec::new(g.t, g.dt, g.dx, g.dx)?;
        match self.experiment {
            Experiment::VarianceScan => {
                if self.radii.len() < 3 {
                    return bad("variance-scan needs at least 3 radii".into());
                }
                if self.radii.iter().any(|r| !(*r > 0.0)) || self.radii.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("radii must be positive and strictly increasing".into());
                }
            }
            Experiment::Clt if !(self.clt.radius > 0.0) => return bad("clt radius must be positive".into()),
            Experiment::Asclt => {
                let a = &self.asclt;
                if !(a.horizon > std::f64::consts::E) {
                    return bad(format!("ASCLT horizon {} must exceed e", a.horizon));
                }
                if a.checkpoints.is_empty()
                    || a.checkpoints.windows(2).any(|w| w[1] <= w[0])
                    || a.checkpoints.iter().any(|c| !(*c > std::f64::consts::E && *c <= a.horizon))
                {
                    return bad("checkpoints must increase within (e, horizon]".into());
                }
                if a.seeds == 0 || a.points_per_decade == 0 {
                    return bad("ASCLT needs seeds and a positive grid density".into());
                }
                if a.pilot_replications < MIN_REPLICATIONS {
                    return bad(format!("pilot ensemble needs at least {MIN_REPLICATIONS} replications"));
                }
            }
            Experiment::Simulate if !(self.simulate.radius > 0.0) => {
                return bad("simulate radius must be positive".into())
            }
            _ => {}
        }
        if matches!(self.experiment, Experiment::VarianceScan | Experiment::Clt)
            && self.replications < MIN_REPLICATIONS
        {
            return bad(format!(
                "{} replications, at least {MIN_REPLICATIONS} required",
                self.replications
            ));
        }
        // domain size is checked here, before any noise is allocated
        crate::engine::SimulationPlan::from_config(self)?;
        Ok(())
    }

    pub fn threads(&self) -> Option<usize> {
        self.threads.or_else(|| {
            std::env::var("HAM_ASCLT_THREADS")
                .ok()
                .and_then(|v| v.trim().parse().ok())
                .filter(|&n: &usize| n > 0)
        })
    }
}

//! Replication engine: one noise draw, colouring and windowed solve per
//! `(seed, replication)`, with per-thread reusable buffers.

use ham_asclt_core::kernels::{truncation_for, KernelSpec, KernelTruncation};
use ham_asclt_core::noise::{Colorer, GridSpec, KernelCells, NoiseDriver, NoiseIncrements, WhiteNoise, WhiteSampler};
use ham_asclt_core::solver::{CumulativeProfile, MildSolver, SolutionField};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, GridConfig, TruncationConfig};
use crate::error::{CliError, Result};

/// Grid and truncation for spatial averages up to `max_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub grid: GridSpec,
    pub kernel: KernelSpec,
    pub driver: NoiseDriver,
    pub truncation: KernelTruncation,
    pub max_radius: f64,
    /// Solver window half-width in cells.
    pub window_cells: usize,
}

impl SimulationPlan {
    pub fn new(
        kernel: &KernelSpec,
        driver: &NoiseDriver,
        grid: &GridConfig,
        truncation: &TruncationConfig,
        max_radius: f64,
    ) -> Result<Self> {
        kernel.validate()?;
        driver.validate()?;
        if !(max_radius > 0.0 && max_radius.is_finite()) {
            return Err(CliError::Config(format!("radius {max_radius} must be positive")));
        }
        let reach = max_radius + grid.t;
        let window_cells = (reach / grid.dx - 1e-9).ceil() as usize + 1;
        let trunc = truncation_for(kernel, grid.dx, reach, truncation.tail_tolerance, truncation.riesz_factor)?;
        let needed = window_cells + trunc.half_width_cells;
        let half_cells = match grid.half_width {
            None => needed,
            Some(l) => {
                let cells = (l / grid.dx).round() as usize;
                if cells < needed {
                    return Err(CliError::Config(format!(
                        "domain half-width {l} is below the {} required for radius {max_radius}, light cone {} and kernel margin {}",
                        needed as f64 * grid.dx,
                        grid.t,
                        trunc.half_width
                    )));
                }
                cells
            }
        };
        let grid = GridSpec::new(grid.t, grid.dt, grid.dx, half_cells as f64 * grid.dx)?;
        Ok(Self {
            grid,
            kernel: *kernel,
            driver: driver.clone(),
            truncation: trunc,
            max_radius,
            window_cells,
        })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::new(&cfg.kernel, &cfg.driver, &cfg.grid, &cfg.truncation, cfg.max_radius())
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    plan: SimulationPlan,
    cells: KernelCells,
}

/// Buffers owned by one worker.
pub struct Workspace {
    sampler: WhiteSampler,
    colorer: Colorer,
    solver: MildSolver,
    white: Vec<f64>,
    colored: Vec<f64>,
    field: Vec<f64>,
    centered: Vec<f64>,
}

impl Simulation {
    pub fn new(plan: SimulationPlan) -> Result<Self> {
        let cells = KernelCells::from_spec(&plan.kernel, plan.grid.dx, plan.truncation.half_width_cells)?;
        Ok(Self { plan, cells })
    }

    pub fn plan(&self) -> &SimulationPlan {
        &self.plan
    }

    pub fn grid(&self) -> &GridSpec {
        &self.plan.grid
    }

    pub fn workspace(&self) -> Result<Workspace> {
        let g = &self.plan.grid;
        let solver = MildSolver::new(g, Some(self.plan.window_cells))?;
        let width = solver.width();
        Ok(Workspace {
            sampler: WhiteSampler::new(g, &self.plan.driver)?,
            colorer: Colorer::new(&self.cells, g.n_x())?,
            solver,
            white: vec![0.0; g.n_t() * g.n_x()],
            colored: vec![0.0; g.n_t() * g.n_x()],
            field: vec![0.0; (g.n_t() + 1) * width],
            centered: vec![0.0; width],
        })
    }

    /// Cumulative profile of `u(t, ·) - 1` for one replication.
    pub fn replicate(&self, ws: &mut Workspace, seed: u64, replication: u64) -> CumulativeProfile {
        ws.sampler.fill(&mut ws.white, seed, replication);
        ws.colorer.color(&ws.white, &mut ws.colored);
        ws.solver.solve_into(&ws.colored, &mut ws.field);
        let width = ws.solver.width();
        let last = &ws.field[self.plan.grid.n_t() * width..];
        for (c, u) in ws.centered.iter_mut().zip(last) {
            *c = u - 1.0;
        }
        CumulativeProfile::from_centered(&ws.centered, self.plan.grid.dx)
    }

    /// Profiles at `radii` for replications `0..count`, in replication order.
    pub fn ensemble(&self, seed: u64, count: usize, radii: &[f64]) -> Result<Vec<Vec<f64>>> {
        let streams: Vec<(u64, u64)> = (0..count as u64).map(|r| (seed, r)).collect();
        self.map_streams(&streams, |p| radii.iter().map(|&r| p.at(r)).collect())
    }

    /// Applies `f` to the profile of every `(seed, replication)` stream; the
    /// output order follows `streams` whatever the thread count.
    pub fn map_streams<T, F>(&self, streams: &[(u64, u64)], f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&CumulativeProfile) -> T + Sync,
    {
        self.check_radius(self.plan.max_radius)?;
        drop(self.workspace()?);
        let out = streams
            .par_iter()
            .map_init(
                || self.workspace().expect("workspace construction checked above"),
                |ws, &(seed, r)| f(&self.replicate(ws, seed, r)),
            )
            .collect();
        Ok(out)
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        let safe = self.plan.window_cells as f64 * self.plan.grid.dx - self.plan.grid.t_max;
        if r > safe + 1e-9 {
            return Err(CliError::Config(format!("radius {r} exceeds the safe region {safe}")));
        }
        Ok(())
    }

    /// Full noise and windowed field, for dumps.
    pub fn realize(&self, seed: u64, replication: u64) -> Result<(NoiseIncrements, SolutionField)> {
        let g = self.plan.grid;
        let mut ws = self.workspace()?;
        ws.sampler.fill(&mut ws.white, seed, replication);
        ws.colorer.color(&ws.white, &mut ws.colored);
        let noise = NoiseIncrements {
            white: WhiteNoise {
                grid: g,
                driver: self.plan.driver.clone(),
                seed,
                replication,
                values: ws.white.clone(),
            },
            colored: ws.colored.clone(),
            kernel: self.cells.clone(),
        };
        let field = ham_asclt_core::solver::solve_mild_for_radius(&noise, self.plan.max_radius)?;
        Ok((noise, field))
    }
}

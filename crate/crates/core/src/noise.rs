//! Compensated Lévy white-noise increments on a space-time grid, their
//! spatial colouring by κ, and the Gaussian white-noise driver.
//!
//! A grid has `N_t = t_max/dt` time rows and `N_x = 2L/dx + 1` cells centred
//! at `x_j = (j - L/dx)·dx`. Row `m` holds the increment over
//! `[m·dt, (m+1)·dt)`.
//!
//! Randomness is counter-based: the `(replication, row)` stream is a ChaCha8
//! generator keyed by the master seed with stream id `replication·2³² + row`,
//! so every row is reproducible independently of scheduling.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{kernel_cell_integrals, KernelSpec};

/// Largest admissible expected number of jumps per cell.
pub const MAX_JUMPS_PER_CELL: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeterministicJump {
    pub time_index: usize,
    pub space_index: usize,
    pub size: f64,
}

/// Finite-activity jump measure ν.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LevyMeasureSpec {
    /// Jumps `+a` with probability `p`, `-a` otherwise, at rate λ.
    TwoPoint {
        intensity: f64,
        magnitude: f64,
        up_probability: f64,
    },
    /// Centred normal jumps at rate λ.
    GaussianJumps { intensity: f64, jump_std: f64 },
    /// Exact jump placement for oracle tests; never compensated.
    Deterministic { jumps: Vec<DeterministicJump> },
}

impl LevyMeasureSpec {
    pub fn two_point(intensity: f64, magnitude: f64, up_probability: f64) -> Self {
        LevyMeasureSpec::TwoPoint {
            intensity,
            magnitude,
            up_probability,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyMeasureSpec::TwoPoint {
                intensity,
                magnitude,
                up_probability,
            } => {
                if !(intensity > 0.0 && intensity.is_finite()) {
                    return Err(Error::Config(format!("intensity must be positive, got {intensity}")));
                }
                if !(magnitude > 0.0 && magnitude.is_finite()) {
                    return Err(Error::Config(format!("jump magnitude must be positive, got {magnitude}")));
                }
                if !(0.0..=1.0).contains(&up_probability) {
                    return Err(Error::Config(format!(
                        "up probability must lie in [0,1], got {up_probability}"
                    )));
                }
            }
            LevyMeasureSpec::GaussianJumps { intensity, jump_std } => {
                if !(intensity > 0.0 && intensity.is_finite()) {
                    return Err(Error::Config(format!("intensity must be positive, got {intensity}")));
                }
                if !(jump_std > 0.0 && jump_std.is_finite()) {
                    return Err(Error::Config(format!("jump std must be positive, got {jump_std}")));
                }
            }
            LevyMeasureSpec::Deterministic { ref jumps } => {
                if jumps.iter().any(|j| !j.size.is_finite()) {
                    return Err(Error::Config("deterministic jump sizes must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn intensity(&self) -> Option<f64> {
        match *self {
            LevyMeasureSpec::TwoPoint { intensity, .. } | LevyMeasureSpec::GaussianJumps { intensity, .. } => {
                Some(intensity)
            }
            LevyMeasureSpec::Deterministic { .. } => None,
        }
    }

    /// `E[z]` under the normalised jump law.
    pub fn mean_jump(&self) -> Option<f64> {
        match *self {
            LevyMeasureSpec::TwoPoint {
                magnitude,
                up_probability,
                ..
            } => Some(magnitude * (2.0 * up_probability - 1.0)),
            LevyMeasureSpec::GaussianJumps { .. } => Some(0.0),
            LevyMeasureSpec::Deterministic { .. } => None,
        }
    }
}

/// `m₂ = ∫ z² ν(dz)`.
pub fn second_moment(spec: &LevyMeasureSpec) -> Result<f64> {
    spec.validate()?;
    match *spec {
        LevyMeasureSpec::TwoPoint {
            intensity, magnitude, ..
        } => Ok(intensity * magnitude * magnitude),
        LevyMeasureSpec::GaussianJumps { intensity, jump_std } => Ok(intensity * jump_std * jump_std),
        LevyMeasureSpec::Deterministic { .. } => {
            Err(Error::Unsupported("deterministic jumps carry no second moment".into()))
        }
    }
}

/// Noise driving the equation: compensated Lévy noise or Gaussian white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "driver", rename_all = "snake_case")]
pub enum NoiseDriver {
    Levy { measure: LevyMeasureSpec },
    Gaussian,
}

impl NoiseDriver {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseDriver::Levy { measure } => measure.validate(),
            NoiseDriver::Gaussian => Ok(()),
        }
    }

    /// Variance per unit space-time volume (`m₂`, or 1 for Gaussian).
    pub fn unit_variance(&self) -> Result<f64> {
        match self {
            NoiseDriver::Levy { measure } => second_moment(measure),
            NoiseDriver::Gaussian => Ok(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_max: f64,
    pub dt: f64,
    pub dx: f64,
    /// Spatial half-width `L`; the grid spans `[-L, L]`.
    pub half_width: f64,
}

const GRID_RATIO_TOL: f64 = 1e-9;

fn integer_ratio(num: f64, den: f64, what: &str) -> Result<usize> {
    let r = num / den;
    let n = r.round();
    if !(n >= 1.0) || (r - n).abs() > GRID_RATIO_TOL * n.max(1.0) {
        return Err(Error::Config(format!("{what} = {r} is not a positive integer")));
    }
    Ok(n as usize)
}

impl GridSpec {
    pub fn new(t_max: f64, dt: f64, dx: f64, half_width: f64) -> Result<Self> {
        let g = GridSpec {
            t_max,
            dt,
            dx,
            half_width,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("t_max", self.t_max), ("dt", self.dt), ("dx", self.dx), ("half_width", self.half_width)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        integer_ratio(self.t_max, self.dt, "t_max/dt")?;
        integer_ratio(self.half_width, self.dx, "half_width/dx")?;
        if self.dt > self.dx * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {} exceeds dx = {} (light cone under-resolved)",
                self.dt, self.dx
            )));
        }
        Ok(())
    }

    /// Number of time increments.
    pub fn n_t(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// `L/dx`, the index of the cell centred at the origin.
    pub fn half_cells(&self) -> usize {
        (self.half_width / self.dx).round() as usize
    }

    pub fn n_x(&self) -> usize {
        2 * self.half_cells() + 1
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - self.half_cells() as f64) * self.dx
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Grid row of time `t`, if `t` lies on the grid.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        let r = t / self.dt;
        let n = r.round();
        if n < 0.0 || (r - n).abs() > GRID_RATIO_TOL * n.max(1.0) || n as usize > self.n_t() {
            return Err(Error::Precondition(format!("t = {t} is not a grid time in [0, {}]", self.t_max)));
        }
        Ok(n as usize)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dt * self.dx
    }
}

/// Key expansion for the counter-based generator.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(master, replication, row)`.
pub fn stream_rng(master: u64, replication: u64, row: u64) -> ChaCha8Rng {
    assert!(replication < (1 << 32) && row < (1 << 32), "stream index out of range");
    let mut state = master;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream((replication << 32) | row);
    rng
}

/// White increments `ΔL(m, j)` (or `ΔW` for the Gaussian driver).
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteNoise {
    pub grid: GridSpec,
    pub driver: NoiseDriver,
    pub seed: u64,
    pub replication: u64,
    /// Row-major `N_t × N_x`.
    pub values: Vec<f64>,
}

impl WhiteNoise {
    pub fn row(&self, m: usize) -> &[f64] {
        let n_x = self.grid.n_x();
        &self.values[m * n_x..(m + 1) * n_x]
    }

    pub fn get(&self, m: usize, j: usize) -> f64 {
        self.values[m * self.grid.n_x() + j]
    }
}

/// Lévy white increments for replication 0 of `seed`.
pub fn sample_white_increments(grid: &GridSpec, spec: &LevyMeasureSpec, seed: u64) -> Result<WhiteNoise> {
    sample_white(grid, &NoiseDriver::Levy { measure: spec.clone() }, seed, 0)
}

/// Gaussian white increments with variance `dt·dx` per cell.
pub fn sample_gaussian_increments(grid: &GridSpec, seed: u64) -> Result<WhiteNoise> {
    sample_white(grid, &NoiseDriver::Gaussian, seed, 0)
}

pub fn sample_white(grid: &GridSpec, driver: &NoiseDriver, seed: u64, replication: u64) -> Result<WhiteNoise> {
    let mut values = vec![0.0; grid.n_t() * grid.n_x()];
    WhiteSampler::new(grid, driver)?.fill(&mut values, seed, replication);
    Ok(WhiteNoise {
        grid: *grid,
        driver: driver.clone(),
        seed,
        replication,
        values,
    })
}

#[derive(Debug, Clone)]
enum RowLaw {
    /// Row total count then uniform cell placement; exact for any cell mean.
    SparseTwoPoint { row_mean: f64, magnitude: f64, p: f64 },
    SparseGaussian { row_mean: f64, std: f64 },
    /// Per-cell Poisson count with the jump sum drawn in aggregate.
    DenseTwoPoint { cell_mean: f64, magnitude: f64, p: f64 },
    DenseGaussian { cell_mean: f64, std: f64 },
    Deterministic(Vec<DeterministicJump>),
    Gaussian { std: f64 },
}

/// Reusable sampler of white-noise rows.
#[derive(Debug, Clone)]
pub struct WhiteSampler {
    grid: GridSpec,
    law: RowLaw,
    compensation: f64,
}

/// Below this expected count per cell the row-total scheme is used.
const DENSE_THRESHOLD: f64 = 0.5;

impl WhiteSampler {
    pub fn new(grid: &GridSpec, driver: &NoiseDriver) -> Result<Self> {
        grid.validate()?;
        driver.validate()?;
        let vol = grid.cell_volume();
        let n_x = grid.n_x() as f64;
        let (law, compensation) = match driver {
            NoiseDriver::Gaussian => (RowLaw::Gaussian { std: vol.sqrt() }, 0.0),
            NoiseDriver::Levy { measure } => {
                let comp = match (measure.intensity(), measure.mean_jump()) {
                    (Some(l), Some(m)) => l * m * vol,
                    _ => 0.0,
                };
                if let Some(l) = measure.intensity() {
                    if l * vol > MAX_JUMPS_PER_CELL {
                        return Err(Error::Config(format!(
                            "expected jumps per cell {} exceeds {MAX_JUMPS_PER_CELL}",
                            l * vol
                        )));
                    }
                }
                let law = match *measure {
                    LevyMeasureSpec::TwoPoint {
                        intensity,
                        magnitude,
                        up_probability,
                    } => {
                        let cell_mean = intensity * vol;
                        if cell_mean < DENSE_THRESHOLD {
                            RowLaw::SparseTwoPoint {
                                row_mean: cell_mean * n_x,
                                magnitude,
                                p: up_probability,
                            }
                        } else {
                            RowLaw::DenseTwoPoint {
                                cell_mean,
                                magnitude,
                                p: up_probability,
                            }
                        }
                    }
                    LevyMeasureSpec::GaussianJumps { intensity, jump_std } => {
                        let cell_mean = intensity * vol;
                        if cell_mean < DENSE_THRESHOLD {
                            RowLaw::SparseGaussian {
                                row_mean: cell_mean * n_x,
                                std: jump_std,
                            }
                        } else {
                            RowLaw::DenseGaussian {
                                cell_mean,
                                std: jump_std,
                            }
                        }
                    }
                    LevyMeasureSpec::Deterministic { ref jumps } => {
                        for j in jumps {
                            if j.time_index >= grid.n_t() || j.space_index >= grid.n_x() {
                                return Err(Error::Config(format!(
                                    "deterministic jump at ({}, {}) lies off the grid",
                                    j.time_index, j.space_index
                                )));
                            }
                        }
                        RowLaw::Deterministic(jumps.clone())
                    }
                };
                (law, comp)
            }
        };
        Ok(Self {
            grid: *grid,
            law,
            compensation,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Fills all `N_t` rows of `out` for one replication.
    pub fn fill(&self, out: &mut [f64], seed: u64, replication: u64) {
        let n_x = self.grid.n_x();
        assert_eq!(out.len(), self.grid.n_t() * n_x);
        if let RowLaw::Deterministic(jumps) = &self.law {
            out.fill(0.0);
            for j in jumps {
                out[j.time_index * n_x + j.space_index] += j.size;
            }
            return;
        }
        for (m, row) in out.chunks_exact_mut(n_x).enumerate() {
            let mut rng = stream_rng(seed, replication, m as u64);
            self.fill_row(row, &mut rng);
        }
    }

    fn fill_row(&self, row: &mut [f64], rng: &mut ChaCha8Rng) {
        let n_x = row.len();
        match self.law {
            RowLaw::Gaussian { std } => {
                for v in row.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = std * z;
                }
            }
            RowLaw::SparseTwoPoint { row_mean, magnitude, p } => {
                row.fill(-self.compensation);
                let count = poisson_draw(row_mean, rng);
                for _ in 0..count {
                    let j = rng.random_range(0..n_x);
                    let up = rng.random::<f64>() < p;
                    row[j] += if up { magnitude } else { -magnitude };
                }
            }
            RowLaw::SparseGaussian { row_mean, std } => {
                row.fill(-self.compensation);
                let count = poisson_draw(row_mean, rng);
                for _ in 0..count {
                    let j = rng.random_range(0..n_x);
                    let z: f64 = StandardNormal.sample(rng);
                    row[j] += std * z;
                }
            }
            RowLaw::DenseTwoPoint { cell_mean, magnitude, p } => {
                let pois = Poisson::new(cell_mean).expect("validated mean");
                for v in row.iter_mut() {
                    let n = pois.sample(rng) as u64;
                    let ups = if n == 0 {
                        0
                    } else {
                        Binomial::new(n, p).expect("validated probability").sample(rng)
                    };
                    *v = magnitude * (2.0 * ups as f64 - n as f64) - self.compensation;
                }
            }
            RowLaw::DenseGaussian { cell_mean, std } => {
                let pois = Poisson::new(cell_mean).expect("validated mean");
                for v in row.iter_mut() {
                    let n: f64 = pois.sample(rng);
                    let z: f64 = StandardNormal.sample(rng);
                    *v = std * n.sqrt() * z - self.compensation;
                }
            }
            RowLaw::Deterministic(_) => unreachable!("handled in fill"),
        }
    }
}

fn poisson_draw(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Where a discretised kernel came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSource {
    Spec { spec: KernelSpec },
    /// Kronecker delta: colouring is the identity.
    Identity,
    Custom,
}

/// Symmetric cell-integral sequence `κ̄(-h..=h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCells {
    pub source: KernelSource,
    pub values: Vec<f64>,
}

impl KernelCells {
    pub fn from_spec(spec: &KernelSpec, dx: f64, half_width_cells: usize) -> Result<Self> {
        Ok(Self {
            source: KernelSource::Spec { spec: *spec },
            values: kernel_cell_integrals(spec, dx, half_width_cells)?,
        })
    }

    pub fn identity() -> Self {
        Self {
            source: KernelSource::Identity,
            values: vec![1.0],
        }
    }

    pub fn custom(values: Vec<f64>) -> Result<Self> {
        let k = Self {
            source: KernelSource::Custom,
            values,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.values.len();
        if n.is_multiple_of(2) {
            return Err(Error::Config("kernel cell sequence must have odd length".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("kernel cell values must be finite".into()));
        }
        if (0..n / 2).any(|i| self.values[i] != self.values[n - 1 - i]) {
            return Err(Error::Config("kernel cell sequence must be symmetric".into()));
        }
        Ok(())
    }

    pub fn half_width_cells(&self) -> usize {
        self.values.len() / 2
    }

    /// `κ̄(i)` for `|i| <= h`, zero beyond.
    pub fn at(&self, i: i64) -> f64 {
        let h = self.half_width_cells() as i64;
        if i.abs() > h {
            0.0
        } else {
            self.values[(i + h) as usize]
        }
    }
}

/// White and coloured increments on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrements {
    pub white: WhiteNoise,
    /// Row-major `N_t × N_x`, `ΔX(m, j) = Σ_k κ̄(k - j) ΔL(m, k)`.
    pub colored: Vec<f64>,
    pub kernel: KernelCells,
}

impl NoiseIncrements {
    pub fn grid(&self) -> &GridSpec {
        &self.white.grid
    }

    pub fn colored_row(&self, m: usize) -> &[f64] {
        let n_x = self.grid().n_x();
        &self.colored[m * n_x..(m + 1) * n_x]
    }

    pub fn colored_at(&self, m: usize, j: usize) -> f64 {
        self.colored[m * self.grid().n_x() + j]
    }

    /// Half-width around the origin on which the colouring saw no padding:
    /// `(L/dx - h)·dx`.
    pub fn exact_half_width(&self) -> f64 {
        let g = self.grid();
        (g.half_cells() as f64 - self.kernel.half_width_cells() as f64) * g.dx
    }
}

pub fn color_increments(white: WhiteNoise, kernel: &KernelCells) -> Result<NoiseIncrements> {
    let n_x = white.grid.n_x();
    let mut colorer = Colorer::new(kernel, n_x)?;
    let mut colored = vec![0.0; white.values.len()];
    colorer.color(&white.values, &mut colored);
    Ok(NoiseIncrements {
        white,
        colored,
        kernel: kernel.clone(),
    })
}

/// Kernels up to this many cells are applied by direct summation.
const DIRECT_MAX_CELLS: usize = 129;

enum Method {
    Direct,
    Fft {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
        spectrum: Vec<Complex64>,
        buffer: Vec<Complex64>,
        scratch: Vec<Complex64>,
    },
}

/// Row-wise zero-padded convolution with a symmetric cell kernel.
pub struct Colorer {
    kernel: Vec<f64>,
    n_x: usize,
    method: Method,
}

impl std::fmt::Debug for Colorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let method = match self.method {
            Method::Direct => "direct",
            Method::Fft { .. } => "fft",
        };
        f.debug_struct("Colorer")
            .field("kernel_len", &self.kernel.len())
            .field("n_x", &self.n_x)
            .field("method", &method)
            .finish()
    }
}

/// Smallest `2^a·3^b >= n`.
fn fast_fft_len(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p3 = 1usize;
    while p3 < best {
        let mut v = p3;
        while v < n {
            v *= 2;
        }
        best = best.min(v);
        p3 *= 3;
    }
    best
}

impl Colorer {
    pub fn new(kernel: &KernelCells, n_x: usize) -> Result<Self> {
        kernel.validate()?;
        let klen = kernel.values.len();
        if klen > n_x {
            return Err(Error::Config(format!(
                "kernel of {klen} cells is longer than a grid row of {n_x} cells"
            )));
        }
        let method = if klen <= DIRECT_MAX_CELLS {
            Method::Direct
        } else {
            let h = kernel.half_width_cells();
            let len = fast_fft_len(n_x + h);
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(len);
            let inverse = planner.plan_fft_inverse(len);
            let mut spectrum = vec![Complex64::new(0.0, 0.0); len];
            let scale = 1.0 / len as f64;
            for (idx, &v) in kernel.values.iter().enumerate() {
                let i = idx as i64 - h as i64;
                spectrum[i.rem_euclid(len as i64) as usize] = Complex64::new(v * scale, 0.0);
            }
            let scratch_len = forward
                .get_inplace_scratch_len()
                .max(inverse.get_inplace_scratch_len());
            let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
            forward.process_with_scratch(&mut spectrum, &mut scratch);
            Method::Fft {
                forward,
                inverse,
                spectrum,
                buffer: vec![Complex64::new(0.0, 0.0); len],
                scratch,
            }
        };
        Ok(Self {
            kernel: kernel.values.clone(),
            n_x,
            method,
        })
    }

    /// Colours every row of `white` into `out` (both row-major, `n_x` wide).
    pub fn color(&mut self, white: &[f64], out: &mut [f64]) {
        assert_eq!(white.len(), out.len());
        assert_eq!(white.len() % self.n_x, 0);
        let n_x = self.n_x;
        let h = self.kernel.len() / 2;
        match &mut self.method {
            Method::Direct => {
                for (w, o) in white.chunks_exact(n_x).zip(out.chunks_exact_mut(n_x)) {
                    direct_row(&self.kernel, h, w, o);
                }
            }
            Method::Fft {
                forward,
                inverse,
                spectrum,
                buffer,
                scratch,
            } => {
                let rows: Vec<&[f64]> = white.chunks_exact(n_x).collect();
                let mut outs: Vec<&mut [f64]> = out.chunks_exact_mut(n_x).collect();
                let mut r = 0;
                while r < rows.len() {
                    let pair = r + 1 < rows.len();
                    buffer.fill(Complex64::new(0.0, 0.0));
                    for j in 0..n_x {
                        let im = if pair { rows[r + 1][j] } else { 0.0 };
                        buffer[j] = Complex64::new(rows[r][j], im);
                    }
                    forward.process_with_scratch(buffer, scratch);
                    for (b, s) in buffer.iter_mut().zip(spectrum.iter()) {
                        *b *= s.re;
                    }
                    inverse.process_with_scratch(buffer, scratch);
                    for j in 0..n_x {
                        outs[r][j] = buffer[j].re;
                    }
                    if pair {
                        for j in 0..n_x {
                            outs[r + 1][j] = buffer[j].im;
                        }
                    }
                    r += 2;
                }
            }
        }
    }
}

fn direct_row(kernel: &[f64], h: usize, w: &[f64], o: &mut [f64]) {
    let n = w.len();
    for (j, oj) in o.iter_mut().enumerate() {
        let lo = j.saturating_sub(h);
        let hi = (j + h).min(n - 1);
        let mut s = 0.0;
        for k in lo..=hi {
            s += kernel[k + h - j] * w[k];
        }
        *oj = s;
    }
}

/// JSON sidecar of a binary increment dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpSidecar {
    pub grid: GridSpec,
    pub seed: u64,
    pub replication: u64,
    pub driver: NoiseDriver,
    pub kernel: KernelSource,
    pub kernel_half_width_cells: usize,
    pub rows: usize,
    pub cols: usize,
    pub layout: String,
    pub white_file: String,
    pub colored_file: String,
}

fn write_f64_le(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_f64_le(path: &Path) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Io(format!("{} is not a whole number of f64 values", path.display())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

/// Writes `<stem>.white.f64`, `<stem>.colored.f64` (row-major little-endian
/// f64) and the `<stem>.json` sidecar. Returns the three paths.
pub fn write_dump(noise: &NoiseIncrements, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let g = noise.grid();
    let white_file = format!("{stem}.white.f64");
    let colored_file = format!("{stem}.colored.f64");
    write_f64_le(&dir.join(&white_file), &noise.white.values)?;
    write_f64_le(&dir.join(&colored_file), &noise.colored)?;
    let sidecar = DumpSidecar {
        grid: *g,
        seed: noise.white.seed,
        replication: noise.white.replication,
        driver: noise.white.driver.clone(),
        kernel: noise.kernel.source.clone(),
        kernel_half_width_cells: noise.kernel.half_width_cells(),
        rows: g.n_t(),
        cols: g.n_x(),
        layout: "row-major f64 little-endian".into(),
        white_file: white_file.clone(),
        colored_file: colored_file.clone(),
    };
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(vec![dir.join(white_file), dir.join(colored_file), json_path])
}

/// Reads a dump back: sidecar, white values, coloured values.
pub fn read_dump(sidecar_path: &Path) -> Result<(DumpSidecar, Vec<f64>, Vec<f64>)> {
    let sidecar: DumpSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)?;
    let dir = sidecar_path.parent().unwrap_or(Path::new("."));
    let white = read_f64_le(&dir.join(&sidecar.white_file))?;
    let colored = read_f64_le(&dir.join(&sidecar.colored_file))?;
    let n = sidecar.rows * sidecar.cols;
    if white.len() != n || colored.len() != n {
        return Err(Error::Io("dump size does not match its sidecar".into()));
    }
    Ok((sidecar, white, colored))
}

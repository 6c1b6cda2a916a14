//! Explicit left-endpoint discretisation of the mild equation
//!
//! ```text
//! u(n, i) = 1 + Σ_{m<n} Σ_k G_{t_n - t_m}(x_i - x_k) · u(m, k) · ΔX(m, k)
//! ```
//!
//! The wave kernel is an indicator of the open light cone, so each inner sum
//! is a window sum read from a prefix-sum array of `u·ΔX` on row `m`. Total
//! cost is `O(N_t² · N_x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{GridSpec, NoiseIncrements};

/// Largest `h` with `h·dx < lag·dt`: cells centred on the light-cone
/// boundary get weight zero.
pub fn light_cone_half_width(grid: &GridSpec, lag: usize) -> usize {
    let r = lag as f64 * grid.dt / grid.dx;
    let h = (r - 1e-9).ceil() - 1.0;
    h.max(0.0) as usize
}

/// FNV-1a digest of a serialisable value, as 16 hex digits.
pub fn spec_digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("specs serialise");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub replication: u64,
    pub kernel_digest: String,
    pub driver_digest: String,
}

/// Values `u(n, j)` for `n = 0..=N_t` on a contiguous block of grid columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub grid: GridSpec,
    /// First grid column stored.
    pub lo: usize,
    pub width: usize,
    /// Row-major `(N_t + 1) × width`.
    pub values: Vec<f64>,
    /// Spatial half-width within which the noise and the solve are free of
    /// truncation at time 0; at time `t` the exact region shrinks by `t`.
    pub exact_half_width: f64,
    pub provenance: Provenance,
}

impl SolutionField {
    pub fn n_rows(&self) -> usize {
        self.grid.n_t() + 1
    }

    /// `u(n, j)` for a grid column `j` inside the stored block.
    pub fn u(&self, n: usize, j: usize) -> f64 {
        assert!(j >= self.lo && j < self.lo + self.width, "column {j} not stored");
        self.values[n * self.width + (j - self.lo)]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.width..(n + 1) * self.width]
    }

    /// Largest radius whose spatial average at time `t` is exact.
    pub fn safe_radius(&self, t: f64) -> f64 {
        self.exact_half_width - t
    }
}

/// Reusable solver over a centred window of `2·w + 1` columns.
#[derive(Debug, Clone)]
pub struct MildSolver {
    grid: GridSpec,
    lo: usize,
    width: usize,
    cone: Vec<usize>,
    prefix: Vec<f64>,
}

impl MildSolver {
    /// `window_half_cells = None` solves the whole grid.
    pub fn new(grid: &GridSpec, window_half_cells: Option<usize>) -> Result<Self> {
        grid.validate()?;
        let half = grid.half_cells();
        let w = window_half_cells.unwrap_or(half);
        if w > half {
            return Err(Error::Config(format!(
                "solve window of {w} cells exceeds grid half-width of {half} cells"
            )));
        }
        let n_t = grid.n_t();
        let width = 2 * w + 1;
        Ok(Self {
            grid: *grid,
            lo: half - w,
            width,
            cone: (0..=n_t).map(|lag| light_cone_half_width(grid, lag)).collect(),
            prefix: vec![0.0; n_t * (width + 1)],
        })
    }

    /// Window sized for spatial averages up to `radius` at `t_max`.
    pub fn for_output_radius(grid: &GridSpec, radius: f64) -> Result<Self> {
        let reach = radius + grid.t_max;
        let w = (reach / grid.dx - 1e-9).ceil() as usize + 1;
        if w > grid.half_cells() {
            return Err(Error::Config(format!(
                "domain half-width {} too small for radius {radius} plus light cone {}",
                grid.half_width, grid.t_max
            )));
        }
        Self::new(grid, Some(w))
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Half-width of the solved window in space.
    pub fn window_half_width(&self) -> f64 {
        ((self.width - 1) / 2) as f64 * self.grid.dx
    }

    /// Solves into `out` (`(N_t + 1) × width`) from coloured rows covering
    /// the full grid (`N_t × N_x`).
    pub fn solve_into(&mut self, colored: &[f64], out: &mut [f64]) {
        let n_t = self.grid.n_t();
        let n_x = self.grid.n_x();
        let width = self.width;
        let stride = width + 1;
        assert_eq!(colored.len(), n_t * n_x);
        assert_eq!(out.len(), (n_t + 1) * width);
        out[..width].fill(1.0);
        for n in 1..=n_t {
            // row n-1 of u is final: extend the prefix table
            let m = n - 1;
            {
                let (u_prev, _) = out.split_at(n * width);
                let u_prev = &u_prev[m * width..];
                let x_row = &colored[m * n_x + self.lo..m * n_x + self.lo + width];
                let p = &mut self.prefix[m * stride..(m + 1) * stride];
                p[0] = 0.0;
                let mut acc = 0.0;
                for k in 0..width {
                    acc += u_prev[k] * x_row[k];
                    p[k + 1] = acc;
                }
            }
            let row = &mut out[n * width..(n + 1) * width];
            row.fill(0.0);
            for m in 0..n {
                let h = self.cone[n - m];
                let p = &self.prefix[m * stride..(m + 1) * stride];
                if h == 0 {
                    for i in 0..width {
                        row[i] += p[i + 1] - p[i];
                    }
                    continue;
                }
                let inner_lo = h.min(width);
                let inner_hi = width.saturating_sub(h + 1).max(inner_lo);
                for i in 0..inner_lo.min(width) {
                    let hi = (i + h + 1).min(width);
                    row[i] += p[hi] - p[0];
                }
                for i in inner_lo..inner_hi {
                    row[i] += p[i + h + 1] - p[i - h];
                }
                for i in inner_hi.max(inner_lo)..width {
                    let lo = i.saturating_sub(h);
                    row[i] += p[width] - p[lo];
                }
            }
            for v in row.iter_mut() {
                *v = 1.0 + 0.5 * *v;
            }
        }
    }
}

fn provenance_of(noise: &NoiseIncrements) -> Provenance {
    Provenance {
        seed: noise.white.seed,
        replication: noise.white.replication,
        kernel_digest: spec_digest(&noise.kernel),
        driver_digest: spec_digest(&noise.white.driver),
    }
}

/// Solves the mild equation on the whole grid.
pub fn solve_mild(noise: &NoiseIncrements) -> Result<SolutionField> {
    let solver = MildSolver::new(noise.grid(), None)?;
    solve_with(solver, noise)
}

/// Solves only the columns that influence spatial averages up to `radius`.
pub fn solve_mild_for_radius(noise: &NoiseIncrements, radius: f64) -> Result<SolutionField> {
    let solver = MildSolver::for_output_radius(noise.grid(), radius)?;
    let field = solve_with(solver, noise)?;
    if field.safe_radius(noise.grid().t_max) < radius {
        return Err(Error::Config(format!(
            "radius {radius} exceeds the light-cone-safe region {} (kernel margin {} cells)",
            field.safe_radius(noise.grid().t_max),
            noise.kernel.half_width_cells()
        )));
    }
    Ok(field)
}

fn solve_with(mut solver: MildSolver, noise: &NoiseIncrements) -> Result<SolutionField> {
    let grid = *noise.grid();
    let mut values = vec![0.0; (grid.n_t() + 1) * solver.width()];
    solver.solve_into(&noise.colored, &mut values);
    Ok(SolutionField {
        grid,
        lo: solver.lo(),
        width: solver.width(),
        values,
        exact_half_width: solver.window_half_width().min(noise.exact_half_width()),
        provenance: provenance_of(noise),
    })
}

/// `θ ↦ F_θ(t)` sampled at a list of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub t: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

/// Cumulative trapezoid integrals of `u(t, ·) - 1` outward from 0 on each
/// side; `F_θ` is their sum, linearly interpolated between nodes.
#[derive(Debug, Clone)]
pub struct CumulativeProfile {
    dx: f64,
    right: Vec<f64>,
    left: Vec<f64>,
}

impl CumulativeProfile {
    /// `centered` holds `u(t, x_j) - 1` for `j = -c..=c` around the origin.
    pub fn from_centered(centered: &[f64], dx: f64) -> Self {
        assert!(centered.len() % 2 == 1);
        let c = centered.len() / 2;
        let mut right = Vec::with_capacity(c + 1);
        let mut left = Vec::with_capacity(c + 1);
        right.push(0.0);
        left.push(0.0);
        for l in 1..=c {
            let r = right[l - 1] + 0.5 * dx * (centered[c + l - 1] + centered[c + l]);
            let lv = left[l - 1] + 0.5 * dx * (centered[c - l + 1] + centered[c - l]);
            right.push(r);
            left.push(lv);
        }
        Self { dx, right, left }
    }

    pub fn max_radius(&self) -> f64 {
        (self.right.len() - 1) as f64 * self.dx
    }

    pub fn at(&self, theta: f64) -> f64 {
        let pos = theta / self.dx;
        let q = (pos.floor() as usize).min(self.right.len() - 1);
        let frac = pos - q as f64;
        let interp = |v: &[f64]| {
            if q + 1 < v.len() && frac > 0.0 {
                v[q] + frac * (v[q + 1] - v[q])
            } else {
                v[q]
            }
        };
        interp(&self.right) + interp(&self.left)
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::Precondition("no radii requested".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Precondition("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("radii must be strictly increasing".into()));
    }
    Ok(())
}

/// Cumulative profile of a field at grid time `t`, covering radii up to
/// `max_radius` (checked against the exact region).
pub fn cumulative_profile(field: &SolutionField, t: f64, max_radius: f64) -> Result<CumulativeProfile> {
    let n = field.grid.time_index(t)?;
    let dx = field.grid.dx;
    let cells = (max_radius / dx - 1e-9).ceil().max(1.0) as usize;
    if cells as f64 * dx > field.safe_radius(t) + 1e-9 * dx {
        return Err(Error::Config(format!(
            "radius {max_radius} exceeds the light-cone-safe region {} at t = {t}",
            field.safe_radius(t)
        )));
    }
    let center = field.grid.half_cells();
    let centered: Vec<f64> = (center - cells..=center + cells)
        .map(|j| field.u(n, j) - 1.0)
        .collect();
    Ok(CumulativeProfile::from_centered(&centered, dx))
}

/// `F_θ(t) = ∫_{-θ}^{θ} (u(t,x) - 1) dx` for every requested radius.
pub fn cumulative_centered_profile(field: &SolutionField, t: f64, radii: &[f64]) -> Result<RadialProfile> {
    check_radii(radii)?;
    let cum = cumulative_profile(field, t, *radii.last().expect("non-empty"))?;
    Ok(RadialProfile {
        t,
        radii: radii.to_vec(),
        values: radii.iter().map(|&r| cum.at(r)).collect(),
    })
}

/// Single-radius form of [`cumulative_centered_profile`].
pub fn spatial_average(field: &SolutionField, t: f64, radius: f64) -> Result<f64> {
    Ok(cumulative_centered_profile(field, t, &[radius])?.values[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::noise::*;

    /// Naive O(N_t²·N_x²) evaluation of the recursion on the full grid.
    fn naive(noise: &NoiseIncrements) -> Vec<f64> {
        let g = noise.grid();
        let (n_t, n_x) = (g.n_t(), g.n_x());
        let mut u = vec![1.0; (n_t + 1) * n_x];
        for n in 1..=n_t {
            for i in 0..n_x {
                let mut s = 0.0;
                for m in 0..n {
                    let lag = g.time(n) - g.time(m);
                    for k in 0..n_x {
                        let dist = (i as f64 - k as f64).abs() * g.dx;
                        // strict light cone, boundary cell excluded
                        let gval = if dist < lag - 1e-9 * g.dx { 0.5 } else { 0.0 };
                        s += gval * u[m * n_x + k] * noise.colored_at(m, k);
                    }
                }
                u[n * n_x + i] = 1.0 + s;
            }
        }
        u
    }

    fn jumps(grid: &GridSpec, list: &[(usize, usize, f64)], kernel: KernelCells) -> NoiseIncrements {
        let spec = LevyMeasureSpec::Deterministic {
            jumps: list
                .iter()
                .map(|&(m, k, z)| DeterministicJump {
                    time_index: m,
                    space_index: k,
                    size: z,
                })
                .collect(),
        };
        color_increments(sample_white_increments(grid, &spec, 0).unwrap(), &kernel).unwrap()
    }

    #[test]
    fn cone_widths() {
        let g = GridSpec::new(1.0, 0.05, 0.05, 2.0).unwrap();
        assert_eq!(light_cone_half_width(&g, 1), 0);
        assert_eq!(light_cone_half_width(&g, 5), 4);
        let g = GridSpec::new(1.0, 0.025, 0.05, 2.0).unwrap();
        assert_eq!(light_cone_half_width(&g, 1), 0);
        assert_eq!(light_cone_half_width(&g, 2), 0);
        assert_eq!(light_cone_half_width(&g, 3), 1);
    }

    #[test]
    fn zero_noise_gives_one() {
        let g = GridSpec::new(1.0, 0.05, 0.05, 3.0).unwrap();
        let noise = jumps(&g, &[], KernelCells::identity());
        let f = solve_mild(&noise).unwrap();
        assert!(f.values.iter().all(|&v| v == 1.0));
        let p = cumulative_centered_profile(&f, 1.0, &[0.5, 1.0, 1.5]).unwrap();
        assert!(p.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_jump_first_picard_term() {
        let g = GridSpec::new(1.0, 0.1, 0.1, 3.0).unwrap();
        let (m0, k0, z) = (2usize, 30usize, 0.7);
        let noise = jumps(&g, &[(m0, k0, z)], KernelCells::identity());
        let f = solve_mild(&noise).unwrap();
        for n in 0..=g.n_t() {
            for i in 0..g.n_x() {
                let inside = n > m0 && ((i as f64 - k0 as f64).abs() * g.dx) < g.time(n) - g.time(m0) - 1e-12;
                let want = if inside { 1.0 + 0.5 * z } else { 1.0 };
                assert!((f.u(n, i) - want).abs() < 1e-12, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn two_jumps_second_picard_term() {
        // z1 at (1, 20), z2 at (4, 22), dt = dx = 0.1
        let g = GridSpec::new(1.0, 0.1, 0.1, 2.0).unwrap();
        let (z1, z2) = (0.8, -0.3);
        let noise = jumps(&g, &[(1, 20, z1), (4, 22, z2)], KernelCells::identity());
        let f = solve_mild(&noise).unwrap();
        // h(lag) = lag - 1. u(4, 22): |22-20| = 2 <= h(3) = 2 → 1 + z1/2
        let u_at_jump2 = 1.0 + 0.5 * z1;
        assert!((f.u(4, 22) - u_at_jump2).abs() < 1e-12);
        for n in 0..=10usize {
            for i in 0..g.n_x() {
                let mut want = 1.0;
                if n > 1 && (i as i64 - 20).unsigned_abs() as usize <= n - 2 {
                    want += 0.5 * z1;
                }
                if n > 4 && (i as i64 - 22).unsigned_abs() as usize <= n - 5 {
                    want += 0.5 * z2 * u_at_jump2;
                }
                assert!((f.u(n, i) - want).abs() < 1e-12, "n={n} i={i}: {} vs {want}", f.u(n, i));
            }
        }
    }

    #[test]
    fn prefix_sums_match_naive_double_sum() {
        for (dt, dx) in [(0.1, 0.1), (0.05, 0.1)] {
            let g = GridSpec::new(30.0 * dt, dt, dx, 15.0 * dx).unwrap();
            assert!(g.n_x() <= 32 && g.n_t() <= 32);
            let w = sample_white(&g, &NoiseDriver::Gaussian, 17, 0).unwrap();
            let k = KernelCells::from_spec(&KernelSpec::exponential(0.2), dx, 3).unwrap();
            let noise = color_increments(w, &k).unwrap();
            let f = solve_mild(&noise).unwrap();
            let reference = naive(&noise);
            for (a, b) in f.values.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn window_solve_agrees_on_exact_region() {
        let g = GridSpec::new(1.0, 0.05, 0.05, 12.0).unwrap();
        let w = sample_white(&g, &NoiseDriver::Gaussian, 4, 0).unwrap();
        let k = KernelCells::from_spec(&KernelSpec::exponential(0.5), 0.05, 40).unwrap();
        let noise = color_increments(w, &k).unwrap();
        let full = solve_mild(&noise).unwrap();
        let win = solve_mild_for_radius(&noise, 4.0).unwrap();
        let n = g.n_t();
        let c = g.half_cells();
        for j in c - 80..=c + 80 {
            assert!((full.u(n, j) - win.u(n, j)).abs() < 1e-13);
        }
        assert!(solve_mild_for_radius(&noise, 10.5).is_err());
    }

    #[test]
    fn perturbation_is_causal() {
        let g = GridSpec::new(1.0, 0.1, 0.1, 3.0).unwrap();
        let k = KernelCells::from_spec(&KernelSpec::boxcar(0.3), 0.1, 3).unwrap();
        let base = sample_white(&g, &NoiseDriver::Gaussian, 9, 0).unwrap();
        let f0 = solve_mild(&color_increments(base.clone(), &k).unwrap()).unwrap();
        let (m0, k0) = (4usize, 30usize);
        let mut bumped = base;
        bumped.values[m0 * g.n_x() + k0] += 0.5;
        let f1 = solve_mild(&color_increments(bumped, &k).unwrap()).unwrap();
        let support = k.half_width_cells() as f64;
        // prefix sums spread rounding along the row, so compare to a tolerance
        for n in 0..=g.n_t() {
            for i in 0..g.n_x() {
                let changed = (f0.u(n, i) - f1.u(n, i)).abs() > 1e-12;
                let dist = (i as f64 - k0 as f64).abs();
                let outside = n <= m0 || dist >= (g.time(n) - g.time(m0)) / g.dx + support;
                if outside {
                    assert!(!changed, "n={n} i={i} outside the cone changed");
                }
            }
        }
        assert!((f0.u(g.n_t(), k0) - f1.u(g.n_t(), k0)).abs() > 1e-6);
    }

    #[test]
    fn constant_and_odd_synthetic_fields() {
        let dx = 0.1;
        let c = 40;
        let constant: Vec<f64> = vec![0.3; 2 * c + 1];
        let cum = CumulativeProfile::from_centered(&constant, dx);
        for theta in [0.5, 1.25, 3.0] {
            assert!((cum.at(theta) - 2.0 * 0.3 * theta).abs() < 1e-13);
        }
        let odd: Vec<f64> = (0..=2 * c).map(|j| (j as f64 - c as f64) * dx).collect();
        let cum = CumulativeProfile::from_centered(&odd, dx);
        for theta in [0.5, 1.25, 4.0] {
            assert_eq!(cum.at(theta), 0.0);
        }
        assert_eq!(cum.at(0.0), 0.0);
    }

    #[test]
    fn single_jump_average_matches_direct_sum() {
        let g = GridSpec::new(1.0, 0.05, 0.05, 4.0).unwrap();
        let (m0, k0, z) = (3usize, 70usize, 1.3);
        let noise = jumps(&g, &[(m0, k0, z)], KernelCells::identity());
        let f = solve_mild(&noise).unwrap();
        let n = g.n_t();
        let closed = |j: usize| {
            let inside = ((j as f64 - k0 as f64).abs() * g.dx) < g.time(n) - g.time(m0) - 1e-12;
            if inside {
                0.5 * z
            } else {
                0.0
            }
        };
        let c = g.half_cells();
        for &(radius, cells) in &[(1.0, 20usize), (2.0, 40)] {
            // trapezoid sum of the closed form, computed independently
            let mut direct = 0.0;
            for j in c - cells..=c + cells {
                let w = if j == c - cells || j == c + cells { 0.5 } else { 1.0 };
                direct += w * g.dx * closed(j);
            }
            let got = spatial_average(&f, 1.0, radius).unwrap();
            assert!((got - direct).abs() < 1e-12, "R={radius}: {got} vs {direct}");
            let prof = cumulative_centered_profile(&f, 1.0, &[radius]).unwrap();
            assert_eq!(prof.values[0], got);
        }
    }

    #[test]
    fn profile_rejects_unsafe_radius_and_bad_input() {
        let g = GridSpec::new(1.0, 0.05, 0.05, 5.0).unwrap();
        let noise = jumps(&g, &[], KernelCells::identity());
        let f = solve_mild(&noise).unwrap();
        assert!(spatial_average(&f, 1.0, 4.0).is_ok());
        assert!(spatial_average(&f, 1.0, 4.5).is_err());
        assert!(cumulative_centered_profile(&f, 1.0, &[2.0, 1.0]).is_err());
        assert!(spatial_average(&f, 0.33, 1.0).is_err());
    }

    #[test]
    fn refinement_changes_single_jump_only_at_interval_boundaries() {
        // the jump lives at x = 0.5; refining dt = dx halves the cells
        let coarse = GridSpec::new(1.0, 0.1, 0.1, 3.0).unwrap();
        let fine = GridSpec::new(1.0, 0.05, 0.05, 3.0).unwrap();
        let fc = solve_mild(&jumps(&coarse, &[(2, 35, 1.0)], KernelCells::identity())).unwrap();
        let ff = solve_mild(&jumps(&fine, &[(4, 70, 1.0)], KernelCells::identity())).unwrap();
        let mut mismatches = Vec::new();
        for i in 0..coarse.n_x() {
            let x = coarse.x(i);
            let a = fc.u(coarse.n_t(), i);
            let b = ff.u(fine.n_t(), 2 * i);
            if a != b {
                mismatches.push(x);
            }
        }
        // the cone edges are at x = 0.5 ± 0.8
        assert!(mismatches.len() <= 2, "{mismatches:?}");
        for x in mismatches {
            assert!(((x - 0.5).abs() - 0.8).abs() < 1e-9, "interior mismatch at {x}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(48))]

        #[test]
        fn perturbations_stay_inside_the_cone(
            seed in 0u64..1_000,
            m0 in 0usize..8,
            k0 in 5usize..36,
            size in -1.0f64..1.0,
            scale in 0.05f64..0.3,
        ) {
            let g = GridSpec::new(1.0, 0.1, 0.1, 2.0).unwrap();
            let k = KernelCells::from_spec(&KernelSpec::exponential(scale), 0.1, 3).unwrap();
            let base = sample_white(&g, &NoiseDriver::Gaussian, seed, 0).unwrap();
            let f0 = solve_mild(&color_increments(base.clone(), &k).unwrap()).unwrap();
            let mut bumped = base;
            bumped.values[m0 * g.n_x() + k0] += size;
            let f1 = solve_mild(&color_increments(bumped, &k).unwrap()).unwrap();
            let support = k.half_width_cells() as f64;
            for n in 0..=g.n_t() {
                for i in 0..g.n_x() {
                    let dist = (i as f64 - k0 as f64).abs();
                    if n <= m0 || dist >= (g.time(n) - g.time(m0)) / g.dx + support {
                        proptest::prop_assert!((f0.u(n, i) - f1.u(n, i)).abs() <= 1e-12, "n={} i={}", n, i);
                    }
                }
            }
        }

        #[test]
        fn prefix_sums_agree_with_naive_sum(seed in 0u64..1_000, dt in prop_dt()) {
            let g = GridSpec::new(12.0 * dt, dt, 0.1, 1.0).unwrap();
            let k = KernelCells::from_spec(&KernelSpec::exponential(0.2), 0.1, 3).unwrap();
            let noise = color_increments(sample_white(&g, &NoiseDriver::Gaussian, seed, 0).unwrap(), &k).unwrap();
            let fast = solve_mild(&noise).unwrap();
            let slow = naive(&noise);
            let err = fast.values.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            proptest::prop_assert!(err < 1e-12, "max error {}", err);
        }
    }

    fn prop_dt() -> impl proptest::strategy::Strategy<Value = f64> {
        proptest::sample::select(vec![0.025, 0.05, 0.1])
    }
}

//! Ensemble statistics, scaling fits, KS distances and log-averaged
//! empirical measures.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::stream_rng;
use crate::solver::RadialProfile;
use crate::special::{compensated_sum, normal_cdf, normal_pdf, normal_quantile, KahanSum};

pub const MIN_REPLICATIONS: usize = 30;
pub const MIN_KS_SAMPLES: usize = 100;
/// Smallest ratio between the largest and smallest radius accepted by
/// [`fit_beta`].
pub const MIN_RADIUS_SPAN: f64 = 8.0;
/// Total-weight tolerance of a normalised measure.
pub const WEIGHT_TOL: f64 = 1e-9;

/// Spatial averages of `M` replications at a common time and radius list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub t: f64,
    pub radii: Vec<f64>,
    /// Row-major `M × radii.len()`.
    pub values: Vec<f64>,
    pub master_seed: u64,
}

impl Ensemble {
    pub fn new(t: f64, radii: Vec<f64>, values: Vec<f64>, master_seed: u64) -> Result<Self> {
        if radii.is_empty() || !values.len().is_multiple_of(radii.len()) {
            return Err(Error::Precondition(format!(
                "{} values do not tile {} radii",
                values.len(),
                radii.len()
            )));
        }
        Ok(Self { t, radii, values, master_seed })
    }

    pub fn from_profiles(profiles: &[RadialProfile], master_seed: u64) -> Result<Self> {
        let first = profiles
            .first()
            .ok_or_else(|| Error::Precondition("empty ensemble".into()))?;
        let mut values = Vec::with_capacity(profiles.len() * first.radii.len());
        for p in profiles {
            if p.t != first.t || p.radii != first.radii {
                return Err(Error::Precondition(
                    "profiles disagree on time or radii".into(),
                ));
            }
            values.extend_from_slice(&p.values);
        }
        Self::new(first.t, first.radii.clone(), values, master_seed)
    }

    pub fn replications(&self) -> usize {
        self.values.len() / self.radii.len()
    }

    /// Values of every replication at radius index `r`.
    pub fn column(&self, r: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        self.values.iter().skip(r).step_by(self.radii.len()).copied()
    }

    /// `F / σ̂` per replication and radius.
    pub fn normalized(&self, table: &SigmaTable) -> Result<Vec<f64>> {
        if table.radii != self.radii {
            return Err(Error::Precondition("sigma table radii differ from ensemble".into()));
        }
        let n = self.radii.len();
        Ok(self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v / table.sigma_hat[i % n])
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaTable {
    pub radii: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub replications: usize,
}

impl SigmaTable {
    pub fn new(radii: Vec<f64>, sigma_hat: Vec<f64>, replications: usize) -> Result<Self> {
        if radii.len() != sigma_hat.len() {
            return Err(Error::Precondition("radii and sigma lengths differ".into()));
        }
        if let Some((r, s)) = radii
            .iter()
            .zip(&sigma_hat)
            .find(|(_, s)| !(**s > 0.0 && s.is_finite()))
        {
            return Err(Error::Degenerate(format!("sigma_hat = {s} at radius {r}")));
        }
        Ok(Self { radii, sigma_hat, replications })
    }

    /// `σ̂` interpolated linearly in `(log R, log σ̂)`, clamped at the ends.
    pub fn interpolate(&self, radius: f64) -> f64 {
        let n = self.radii.len();
        if n == 1 || radius <= self.radii[0] {
            return self.sigma_hat[0];
        }
        if radius >= self.radii[n - 1] {
            return self.sigma_hat[n - 1];
        }
        let k = self.radii.partition_point(|&r| r <= radius).max(1);
        let (r0, r1) = (self.radii[k - 1].ln(), self.radii[k].ln());
        let (s0, s1) = (self.sigma_hat[k - 1].ln(), self.sigma_hat[k].ln());
        (s0 + (radius.ln() - r0) / (r1 - r0) * (s1 - s0)).exp()
    }
}

/// Sample mean and unbiased variance, with compensated sums.
pub fn mean_variance(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let mut n = 0usize;
    let mut s = KahanSum::new();
    for v in values.clone() {
        s.add(v);
        n += 1;
    }
    let mean = s.value() / n as f64;
    let ss = compensated_sum(values.map(|v| (v - mean) * (v - mean)));
    (mean, ss / (n as f64 - 1.0), n)
}

pub fn estimate_sigma(ensemble: &Ensemble) -> Result<SigmaTable> {
    let m = ensemble.replications();
    if m < MIN_REPLICATIONS {
        return Err(Error::Precondition(format!(
            "{m} replications, at least {MIN_REPLICATIONS} required"
        )));
    }
    let sigma = (0..ensemble.radii.len())
        .map(|r| mean_variance(ensemble.column(r)).1.sqrt())
        .collect();
    SigmaTable::new(ensemble.radii.clone(), sigma, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub beta_hat: f64,
    /// Estimate of `log K(t)`.
    pub intercept: f64,
    /// Standard error of the slope; zero for exact data, NaN with 2 points.
    pub stderr: f64,
}

/// Least squares of `log σ̂²` on `log R`.
pub fn fit_beta(table: &SigmaTable) -> Result<ScalingFit> {
    let n = table.radii.len();
    if n < 3 {
        return Err(Error::Precondition(format!("{n} radii, at least 3 required")));
    }
    let (lo, hi) = table
        .radii
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    if hi / lo < MIN_RADIUS_SPAN * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "radii span a factor {:.3}, at least {MIN_RADIUS_SPAN} required",
            hi / lo
        )));
    }
    let xs: Vec<f64> = table.radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = table.sigma_hat.iter().map(|s| 2.0 * s.ln()).collect();
    let nf = n as f64;
    let mx = compensated_sum(xs.iter().copied()) / nf;
    let my = compensated_sum(ys.iter().copied()) / nf;
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let sxy = compensated_sum(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = compensated_sum(
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2)),
    );
    Ok(ScalingFit {
        beta_hat: slope,
        intercept,
        stderr: (ssr / (nf - 2.0) / sxx).sqrt(),
    })
}

/// `sup_x |F̂(x) − Φ(x)|`.
pub fn ks_to_standard_normal(samples: &[f64]) -> Result<f64> {
    if samples.len() < MIN_KS_SAMPLES {
        return Err(Error::Precondition(format!(
            "{} samples, at least {MIN_KS_SAMPLES} required",
            samples.len()
        )));
    }
    let w = 1.0 / samples.len() as f64;
    let measure = EmpiricalMeasure::from_unnormalized(samples.iter().map(|&x| (x, w)).collect())?;
    Ok(measure.ks_distance())
}

/// `(Φ⁻¹((i − ½)/n), sample_(i))` pairs of the sorted samples.
pub fn normal_qq(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, s)| (normal_quantile((i as f64 + 0.5) / n), s))
        .collect()
}

/// Atoms `(location, weight)` with total weight 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<(f64, f64)>,
}

impl EmpiricalMeasure {
    /// Accepts weights summing to 1 within [`WEIGHT_TOL`].
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::check_atoms(&atoms)?;
        let total = compensated_sum(atoms.iter().map(|a| a.1));
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Precondition(format!("total weight {total} is not 1")));
        }
        Ok(Self { atoms })
    }

    /// Rescales positive total weight to 1.
    pub fn from_unnormalized(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::check_atoms(&atoms)?;
        let total = compensated_sum(atoms.iter().map(|a| a.1));
        if !(total > 0.0) {
            return Err(Error::Degenerate("measure has zero total weight".into()));
        }
        for a in &mut atoms {
            a.1 /= total;
        }
        Ok(Self { atoms })
    }

    fn check_atoms(atoms: &[(f64, f64)]) -> Result<()> {
        if atoms.is_empty() {
            return Err(Error::Precondition("measure has no atoms".into()));
        }
        if atoms.iter().any(|(x, w)| !x.is_finite() || !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Precondition(
                "atoms need finite locations and nonnegative weights".into(),
            ));
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.1))
    }

    /// Distinct sorted locations with their merged weights.
    pub fn merged(&self) -> Vec<(f64, f64)> {
        let mut sorted = self.atoms.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, KahanSum)> = Vec::new();
        for (x, w) in sorted {
            match out.last_mut() {
                Some((lx, acc)) if *lx == x => acc.add(w),
                _ => {
                    let mut acc = KahanSum::new();
                    acc.add(w);
                    out.push((x, acc));
                }
            }
        }
        out.into_iter().map(|(x, s)| (x, s.value())).collect()
    }

    /// Weighted KS distance to the standard normal law.
    pub fn ks_distance(&self) -> f64 {
        let merged = self.merged();
        let total = compensated_sum(merged.iter().map(|a| a.1));
        let mut below = KahanSum::new();
        let mut d = 0.0f64;
        for (x, w) in merged {
            let phi = normal_cdf(x);
            let before = below.value() / total;
            below.add(w);
            let after = below.value() / total;
            d = d.max((before - phi).abs()).max((after - phi).abs());
        }
        d
    }

    /// `∫ |F_μ(x) − Φ(x)| dx`.
    pub fn wasserstein1_to_normal(&self) -> f64 {
        // G(x) = ∫_{-∞}^x Φ = xΦ(x) + φ(x)
        let big_g = |x: f64| x * normal_cdf(x) + normal_pdf(x);
        let merged = self.merged();
        let total = compensated_sum(merged.iter().map(|a| a.1));
        let first = merged[0].0;
        let last = merged[merged.len() - 1].0;
        let mut acc = KahanSum::new();
        acc.add(big_g(first));
        acc.add(big_g(last) - last);
        let mut below = KahanSum::new();
        for pair in merged.windows(2) {
            below.add(pair[0].1);
            let c = below.value() / total;
            let (a, b) = (pair[0].0, pair[1].0);
            // c − Φ changes sign at most once on [a, b]
            let q = if c <= 0.0 {
                f64::NEG_INFINITY
            } else if c >= 1.0 {
                f64::INFINITY
            } else {
                normal_quantile(c)
            };
            let m = q.clamp(a, b);
            acc.add(c * (m - a) - (big_g(m) - big_g(a)));
            acc.add((big_g(b) - big_g(m)) - c * (b - m));
        }
        acc.value()
    }
}

/// Weighted KS distance to the standard normal law.
pub fn weighted_ks(measure: &EmpiricalMeasure) -> Result<f64> {
    let total = measure.total_weight();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Precondition(format!("total weight {total} is not 1")));
    }
    Ok(measure.ks_distance())
}

pub fn weighted_wasserstein1(measure: &EmpiricalMeasure) -> Result<f64> {
    let total = measure.total_weight();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Precondition(format!("total weight {total} is not 1")));
    }
    Ok(measure.wasserstein1_to_normal())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogAverageMode {
    /// `(1/log T) ∫_1^T δ_{F̃_θ} dθ/θ` by the trapezoid rule in `log θ`.
    Continuous,
    /// `(1/log N) Σ_{k≤N} δ_{F_k}/k`, renormalised to total weight 1.
    Discrete,
}

impl LogAverageMode {
    pub fn label(self) -> &'static str {
        match self {
            Self::Continuous => "continuous",
            Self::Discrete => "discrete",
        }
    }
}

/// Log-averaging weights for the abscissae of `points`, summing to 1.
pub fn log_average_weights(thetas: &[f64], mode: LogAverageMode) -> Result<Vec<f64>> {
    match mode {
        LogAverageMode::Continuous => {
            let n = thetas.len();
            if n < 2 {
                return Err(Error::Precondition("continuous mode needs at least 2 points".into()));
            }
            if (thetas[0] - 1.0).abs() > 1e-12 {
                return Err(Error::Precondition(format!(
                    "theta grid starts at {}, not 1",
                    thetas[0]
                )));
            }
            if thetas.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Precondition("theta grid is not strictly increasing".into()));
            }
            let logs: Vec<f64> = thetas.iter().map(|t| t.ln()).collect();
            let span = logs[n - 1] - logs[0];
            let mut w = vec![0.0; n];
            for i in 0..n - 1 {
                let h = 0.5 * (logs[i + 1] - logs[i]) / span;
                w[i] += h;
                w[i + 1] += h;
            }
            Ok(w)
        }
        LogAverageMode::Discrete => {
            let n = thetas.len();
            let consecutive = thetas
                .iter()
                .enumerate()
                .all(|(i, &k)| k == (i + 1) as f64);
            if !consecutive {
                return Err(Error::Precondition(
                    "discrete mode needs indices 1, 2, …, N".into(),
                ));
            }
            let raw: Vec<f64> = (1..=n).map(|k| 1.0 / k as f64).collect();
            let total = compensated_sum(raw.iter().copied());
            Ok(raw.into_iter().map(|w| w / total).collect())
        }
    }
}

/// Log-averaged empirical measure of `(θ, value)` points sorted by `θ`.
pub fn log_average_measure(points: &[(f64, f64)], mode: LogAverageMode) -> Result<EmpiricalMeasure> {
    if points.iter().any(|p| p.0 < 1.0) {
        return Err(Error::Precondition("theta below 1".into()));
    }
    if points.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::Precondition("points are not sorted by theta".into()));
    }
    let thetas: Vec<f64> = points.iter().map(|p| p.0).collect();
    match mode {
        LogAverageMode::Continuous if thetas.last().is_some_and(|&t| t <= std::f64::consts::E) => {
            return Err(Error::Precondition("continuous mode needs T > e".into()));
        }
        LogAverageMode::Discrete if thetas.len() < 3 => {
            return Err(Error::Precondition("discrete mode needs N ≥ 3".into()));
        }
        _ => {}
    }
    let weights = log_average_weights(&thetas, mode)?;
    let atoms = points.iter().zip(weights).map(|(p, w)| (p.1, w)).collect();
    EmpiricalMeasure::from_unnormalized(atoms)
}

/// `1 = θ_0 < … < θ_n = T`, geometric between consecutive knots from
/// `{1, checkpoints…, T}`, with about `points_per_decade` steps per decade.
pub fn geometric_theta_grid(t_max: f64, points_per_decade: usize, checkpoints: &[f64]) -> Result<Vec<f64>> {
    if !(t_max > 1.0) || points_per_decade == 0 {
        return Err(Error::Precondition("need T > 1 and a positive density".into()));
    }
    let mut knots: Vec<f64> = std::iter::once(1.0)
        .chain(checkpoints.iter().copied())
        .chain(std::iter::once(t_max))
        .collect();
    if knots.iter().any(|&k| !(1.0..=t_max).contains(&k)) {
        return Err(Error::Precondition("checkpoints must lie in [1, T]".into()));
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut grid = vec![1.0];
    for pair in knots.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let steps = ((points_per_decade as f64) * (b / a).log10()).ceil().max(1.0) as usize;
        grid.extend((1..steps).map(|i| a * (b / a).powf(i as f64 / steps as f64)));
        grid.push(b);
    }
    Ok(grid)
}

/// Weighted KS after each checkpoint, from the prefix `θ ≤ T_i` of a path.
pub fn checkpoint_ks(points: &[(f64, f64)], checkpoints: &[f64], mode: LogAverageMode) -> Result<Vec<(f64, f64)>> {
    checkpoints
        .iter()
        .map(|&c| {
            let end = points.partition_point(|p| p.0 <= c * (1.0 + 1e-12));
            let measure = log_average_measure(&points[..end], mode)?;
            Ok((c, weighted_ks(&measure)?))
        })
        .collect()
}

/// Centred, unit-variance step laws for the classical ASCLT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IidLaw {
    Rademacher,
    StandardNormal,
    /// Uniform on `[−√3, √3]`.
    Uniform,
    Discrete { values: Vec<f64>, probabilities: Vec<f64> },
}

impl IidLaw {
    pub fn validate(&self) -> Result<()> {
        if let Self::Discrete { values, probabilities } = self {
            if values.len() != probabilities.len() || values.is_empty() {
                return Err(Error::Domain("values and probabilities differ in length".into()));
            }
            if probabilities.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::Domain("negative probability".into()));
            }
            let total = compensated_sum(probabilities.iter().copied());
            let mean = compensated_sum(values.iter().zip(probabilities).map(|(v, p)| v * p));
            let second = compensated_sum(values.iter().zip(probabilities).map(|(v, p)| v * v * p));
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("probabilities sum to {total}")));
            }
            if mean.abs() > 1e-12 {
                return Err(Error::Domain(format!("law is not centred: mean {mean}")));
            }
            if (second - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("law has variance {second}, not 1")));
            }
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::StandardNormal => StandardNormal.sample(rng),
            Self::Uniform => 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0),
            Self::Discrete { values, probabilities } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probabilities) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated non-empty")
            }
        }
    }
}

/// Sample sizes below this are reported as pre-asymptotic.
pub const IID_ASYMPTOTIC_N: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidOracleReport {
    pub seed: u64,
    /// `(N_i, weighted KS of μ_{N_i})`.
    pub checkpoints: Vec<(usize, f64)>,
    pub below_asymptotic: bool,
}

/// Powers of ten from 10³ below `n`, then `n` itself.
pub fn iid_checkpoints(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(IID_ASYMPTOTIC_N), |c| c.checked_mul(10))
        .take_while(|&c| c < n)
        .collect();
    out.push(n);
    out
}

/// One path of `S_k/√k`, log-averaged up to each checkpoint.
pub fn iid_asclt_oracle(law: &IidLaw, n: usize, seed: u64) -> Result<IidOracleReport> {
    iid_asclt_oracle_at(law, &iid_checkpoints(n), seed)
}

pub fn iid_asclt_oracle_at(law: &IidLaw, checkpoints: &[usize], seed: u64) -> Result<IidOracleReport> {
    law.validate()?;
    let n = *checkpoints
        .last()
        .ok_or_else(|| Error::Precondition("no checkpoints".into()))?;
    if n < 3 || checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "checkpoints must increase and end at N ≥ 3".into(),
        ));
    }
    let mut rng = stream_rng(seed, 0, 0);
    let mut sum = KahanSum::new();
    let path: Vec<(f64, f64)> = (1..=n)
        .map(|k| {
            sum.add(law.sample(&mut rng));
            (k as f64, sum.value() / (k as f64).sqrt())
        })
        .collect();
    let values = checkpoints
        .iter()
        .map(|&c| {
            let measure = log_average_measure(&path[..c], LogAverageMode::Discrete)?;
            Ok((c, weighted_ks(&measure)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IidOracleReport {
        seed,
        checkpoints: values,
        below_asymptotic: n < IID_ASYMPTOTIC_N,
    })
}

/// Bounded Lipschitz test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// `max(−1, min(1, x))`.
    ClampedIdentity,
    Tanh,
    /// `cos(x)`.
    ClampedCosine,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [Self::ClampedIdentity, Self::Tanh, Self::ClampedCosine];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Self::ClampedIdentity => x.clamp(-1.0, 1.0),
            Self::Tanh => x.tanh(),
            Self::ClampedCosine => x.cos(),
        }
    }

    pub fn lipschitz_constant(self) -> f64 {
        1.0
    }

    pub fn sup_norm(self) -> f64 {
        1.0
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::ClampedIdentity => "clamped_identity",
            Self::Tanh => "tanh",
            Self::ClampedCosine => "clamped_cosine",
        }
    }
}

/// `L_T = (1/log T) ∫_1^T (g(F̃_θ) − E g(F̃_θ)) dθ/θ` on the path's θ grid.
pub fn lipschitz_log_average(points: &[(f64, f64)], g: TestFunction, centers: &[(f64, f64)]) -> Result<f64> {
    if points.len() != centers.len()
        || points
            .iter()
            .zip(centers)
            .any(|(p, c)| (p.0 - c.0).abs() > 1e-12 * p.0.abs().max(1.0))
    {
        return Err(Error::Precondition("path and centers use different theta grids".into()));
    }
    let thetas: Vec<f64> = points.iter().map(|p| p.0).collect();
    if thetas.last().is_some_and(|&t| t <= 1.0) {
        return Err(Error::Precondition("need T > 1".into()));
    }
    let weights = log_average_weights(&thetas, LogAverageMode::Continuous)?;
    Ok(compensated_sum(
        points
            .iter()
            .zip(centers)
            .zip(weights)
            .map(|((p, c), w)| w * (g.eval(p.1) - c.1)),
    ))
}

/// Standard Gaussian path on `thetas` with `Corr(X_θ, X_w) = (θ/w)^{1/2}`
/// for `θ ≤ w`: an Ornstein-Uhlenbeck process in `log θ`.
pub fn log_time_ou_path(thetas: &[f64], seed: u64, replication: u64) -> Result<Vec<(f64, f64)>> {
    if thetas.is_empty() || thetas.windows(2).any(|w| !(w[1] > w[0])) || !(thetas[0] > 0.0) {
        return Err(Error::Precondition("theta grid must be positive and increasing".into()));
    }
    let mut rng = stream_rng(seed, replication, 0);
    let mut x: f64 = StandardNormal.sample(&mut rng);
    let mut out = Vec::with_capacity(thetas.len());
    out.push((thetas[0], x));
    for w in thetas.windows(2) {
        let rho = (w[0] / w[1]).sqrt();
        let z: f64 = StandardNormal.sample(&mut rng);
        x = rho * x + (1.0 - rho * rho).sqrt() * z;
        out.push((w[1], x));
    }
    Ok(out)
}

/// `2C(1/β₁ + 1/β₂)`: bound on `E[L_T²]·log T` when
/// `|E[H_θ H_w]| ≤ C((θ/w)^β₁ + (θ/w)^β₂)`.
pub fn second_moment_bound(c: f64, beta1: f64, beta2: f64) -> f64 {
    2.0 * c * (1.0 / beta1 + 1.0 / beta2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzMoment {
    pub g: TestFunction,
    pub horizon: f64,
    /// Sample mean of `L_T²`.
    pub mean_square: f64,
    /// `mean_square · log T`.
    pub scaled: f64,
}

/// Per-θ means of `g` over independent paths.
pub fn pilot_centers(paths: &[Vec<(f64, f64)>], g: TestFunction) -> Result<Vec<(f64, f64)>> {
    let first = paths
        .first()
        .ok_or_else(|| Error::Precondition("empty pilot".into()))?;
    if paths.iter().any(|p| p.len() != first.len()) {
        return Err(Error::Precondition("pilot paths use different theta grids".into()));
    }
    Ok(first
        .iter()
        .enumerate()
        .map(|(i, &(theta, _))| {
            let mean = compensated_sum(paths.iter().map(|p| g.eval(p[i].1))) / paths.len() as f64;
            (theta, mean)
        })
        .collect())
}

/// Sample `E[L_T²]` over `paths` paths of the log-time OU process, with
/// centers from `pilot` further independent paths.
pub fn synthetic_lipschitz_moments(
    horizons: &[f64],
    paths: usize,
    pilot: usize,
    points_per_decade: usize,
    seed: u64,
) -> Result<Vec<LipschitzMoment>> {
    let t_max = horizons
        .iter()
        .copied()
        .fold(f64::NAN, f64::max);
    let thetas = geometric_theta_grid(t_max, points_per_decade, horizons)?;
    let sample = |first: u64, count: usize| -> Result<Vec<Vec<(f64, f64)>>> {
        (first..first + count as u64)
            .map(|r| log_time_ou_path(&thetas, seed, r))
            .collect()
    };
    let panel = sample(0, paths)?;
    let reference = sample(1 << 31, pilot)?;
    let mut out = Vec::new();
    for g in TestFunction::ALL {
        let centers = pilot_centers(&reference, g)?;
        for &horizon in horizons {
            let end = thetas.partition_point(|&t| t <= horizon * (1.0 + 1e-12));
            let squares = panel
                .iter()
                .map(|p| lipschitz_log_average(&p[..end], g, &centers[..end]).map(|l| l * l))
                .collect::<Result<Vec<_>>>()?;
            let mean_square = compensated_sum(squares) / paths as f64;
            out.push(LipschitzMoment {
                g,
                horizon,
                mean_square,
                scaled: mean_square * horizon.ln(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest, Strategy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synthetic_ensemble(radii: &[f64], beta: f64, m: usize, seed: u64) -> Ensemble {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(m * radii.len());
        for _ in 0..m {
            for r in radii {
                let z: f64 = StandardNormal.sample(&mut rng);
                values.push(z * r.powf(beta / 2.0));
            }
        }
        Ensemble::new(1.0, radii.to_vec(), values, seed).unwrap()
    }

    #[test]
    fn sigma_rejects_small_and_degenerate_ensembles() {
        let e = Ensemble::new(1.0, vec![1.0], vec![0.0; 2], 0).unwrap();
        assert!(matches!(estimate_sigma(&e), Err(Error::Precondition(_))));
        let e = Ensemble::new(1.0, vec![1.0, 2.0], vec![0.7; 100], 0).unwrap();
        assert!(matches!(estimate_sigma(&e), Err(Error::Degenerate(_))));
    }

    #[test]
    fn sigma_ratio_on_synthetic_gaussians() {
        // F_R ~ N(0, R) at R = 1, 4: the ratio is 2 up to about 1.5% at M = 4000
        let e = synthetic_ensemble(&[1.0, 4.0], 1.0, 4000, 3);
        let t = estimate_sigma(&e).unwrap();
        let ratio = t.sigma_hat[1] / t.sigma_hat[0];
        assert!((ratio - 2.0).abs() < 3.0 * 2.0 * (1.0f64 / 4000.0).sqrt(), "{ratio}");
    }

    #[test]
    fn sigma_is_reduction_order_independent() {
        let e = synthetic_ensemble(&[1.0, 8.0], 1.0, 997, 11);
        let mut rev = e.clone();
        let n = e.radii.len();
        let rows: Vec<&[f64]> = e.values.chunks(n).rev().collect();
        rev.values = rows.concat();
        let a = estimate_sigma(&e).unwrap();
        let b = estimate_sigma(&rev).unwrap();
        for (x, y) in a.sigma_hat.iter().zip(&b.sigma_hat) {
            assert!(((x - y) / x).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_exact_tables() {
        let radii = vec![8.0, 16.0, 32.0, 64.0];
        let t = SigmaTable::new(radii.clone(), radii.iter().map(|r| (3.0 * r).sqrt()).collect(), 100).unwrap();
        let f = fit_beta(&t).unwrap();
        assert!((f.beta_hat - 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        let t = SigmaTable::new(radii.clone(), radii.iter().map(|r| r.powf(0.75)).collect(), 100).unwrap();
        assert!((fit_beta(&t).unwrap().beta_hat - 1.5).abs() < 1e-12);
        let short = SigmaTable::new(vec![1.0, 2.0], vec![1.0, 2.0], 100).unwrap();
        assert!(fit_beta(&short).is_err());
        let narrow = SigmaTable::new(vec![8.0, 16.0, 32.0], vec![1.0, 2.0, 3.0], 100).unwrap();
        assert!(fit_beta(&narrow).is_err());
    }

    #[test]
    fn noisy_fit_within_reported_stderr() {
        // σ² = R^{1.5}(1 + ε), ε ~ N(0, 0.05²), over 200 replicate tables
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let radii: Vec<f64> = (0..8).map(|k| 2f64.powi(k)).collect();
        let mut within = 0;
        for _ in 0..200 {
            let sig: Vec<f64> = radii
                .iter()
                .map(|r| {
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    (r.powf(1.5) * (1.0 + 0.05 * eps)).sqrt()
                })
                .collect();
            let f = fit_beta(&SigmaTable::new(radii.clone(), sig, 100).unwrap()).unwrap();
            if (f.beta_hat - 1.5).abs() <= 2.0 * f.stderr {
                within += 1;
            }
        }
        // t_6 two-sided 2σ coverage is about 0.91
        assert!(within >= 170, "{within}");
    }

    #[test]
    fn ks_examples() {
        let n = 1000;
        let q: Vec<f64> = (1..=n).map(|i| normal_quantile((i as f64 - 0.5) / n as f64)).collect();
        let d = ks_to_standard_normal(&q).unwrap();
        assert!(d <= 0.5 / n as f64 + 1e-12, "{d}");
        assert_eq!(ks_to_standard_normal(&vec![0.0; 200]).unwrap(), 0.5);
        assert!(ks_to_standard_normal(&[0.0; 99]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let d = ks_to_standard_normal(&draws).unwrap();
        assert!(d < 0.02, "{d}");
    }

    #[test]
    fn ks_matches_classical_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut draws: Vec<f64> = (0..500).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let d = ks_to_standard_normal(&draws).unwrap();
        draws.sort_by(f64::total_cmp);
        let n = draws.len() as f64;
        let classical = draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let p = normal_cdf(x);
                ((i as f64 + 1.0) / n - p).max(p - i as f64 / n)
            })
            .fold(0.0, f64::max);
        assert!((d - classical).abs() < 1e-14);
    }

    #[test]
    fn weighted_ks_examples() {
        let delta = EmpiricalMeasure::new(vec![(0.0, 1.0)]).unwrap();
        assert_eq!(weighted_ks(&delta).unwrap(), 0.5);
        let n = 1000;
        let atoms: Vec<(f64, f64)> = (1..=n)
            .map(|i| (normal_quantile((i as f64 - 0.5) / n as f64), 1.0 / n as f64))
            .collect();
        let m = EmpiricalMeasure::new(atoms).unwrap();
        assert!(weighted_ks(&m).unwrap() <= 0.5 / n as f64 + 1e-12);
        assert!(EmpiricalMeasure::new(vec![(0.0, 0.5)]).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        // W1(δ_0, N(0,1)) = E|Z| = √(2/π)
        let delta = EmpiricalMeasure::new(vec![(0.0, 1.0)]).unwrap();
        let w = weighted_wasserstein1(&delta).unwrap();
        assert!((w - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
        // W1(δ_c, N(0,1)) = E|Z − c| = 2φ(c) + c(2Φ(c) − 1)
        let c = 0.7;
        let m = EmpiricalMeasure::new(vec![(c, 1.0)]).unwrap();
        let want = 2.0 * normal_pdf(c) + c * (2.0 * normal_cdf(c) - 1.0);
        assert!((weighted_wasserstein1(&m).unwrap() - want).abs() < 1e-14);
        let n = 4000;
        let atoms: Vec<(f64, f64)> = (1..=n)
            .map(|i| (normal_quantile((i as f64 - 0.5) / n as f64), 1.0 / n as f64))
            .collect();
        let q = EmpiricalMeasure::new(atoms).unwrap();
        assert!(weighted_wasserstein1(&q).unwrap() < 2e-3);
    }

    #[test]
    fn log_average_examples() {
        let m = log_average_measure(&[(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)], LogAverageMode::Discrete).unwrap();
        let w: Vec<f64> = m.atoms().iter().map(|a| a.1).collect();
        let total = 1.0 + 0.5 + 1.0 / 3.0;
        for (got, want) in w.iter().zip([1.0 / total, 0.5 / total, 1.0 / 3.0 / total]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(m.merged(), vec![(2.0, m.merged()[0].1)]);
        assert!((m.merged()[0].1 - 1.0).abs() < 1e-12);

        let grid = geometric_theta_grid(50.0, 64, &[]).unwrap();
        let pts: Vec<(f64, f64)> = grid.iter().map(|&t| (t, -0.4)).collect();
        let c = log_average_measure(&pts, LogAverageMode::Continuous).unwrap();
        assert!((c.total_weight() - 1.0).abs() < 1e-12);
        assert_eq!(c.merged().len(), 1);

        assert!(log_average_measure(&[(0.5, 0.0), (2.0, 0.0), (3.0, 0.0)], LogAverageMode::Continuous).is_err());
        assert!(log_average_measure(&[(1.0, 0.0), (3.0, 0.0), (2.0, 0.0)], LogAverageMode::Continuous).is_err());
        assert!(log_average_measure(&[(1.0, 0.0), (2.0, 0.0)], LogAverageMode::Continuous).is_err());
        assert!(log_average_measure(&[(1.0, 0.0), (2.0, 0.0)], LogAverageMode::Discrete).is_err());
    }

    #[test]
    fn continuous_weights_are_log_theta_trapezoid() {
        let thetas = [1.0, 2.0, 8.0];
        let w = log_average_weights(&thetas, LogAverageMode::Continuous).unwrap();
        let l = 8f64.ln();
        let want = [0.5 * 2f64.ln() / l, 0.5 * 8f64.ln() / l, 0.5 * 4f64.ln() / l];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn continuous_refinement_self_consistency() {
        // a smooth path in log θ, sampled on two nested grids
        let path = |t: f64| (1.3 * t.ln()).sin() + 0.3 * (0.4 * t.ln()).cos();
        let ks_on = |ppd: usize| {
            let g = geometric_theta_grid(200.0, ppd, &[20.0, 80.0]).unwrap();
            let pts: Vec<(f64, f64)> = g.iter().map(|&t| (t, path(t))).collect();
            weighted_ks(&log_average_measure(&pts, LogAverageMode::Continuous).unwrap()).unwrap()
        };
        let a = ks_on(256);
        let b = ks_on(512);
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }

    #[test]
    fn theta_grid_contains_checkpoints() {
        let g = geometric_theta_grid(200.0, 64, &[20.0, 80.0]).unwrap();
        assert_eq!(g[0], 1.0);
        assert_eq!(*g.last().unwrap(), 200.0);
        assert!(g.contains(&20.0) && g.contains(&80.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let ratio = g.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        assert!(ratio <= 10f64.powf(1.0 / 64.0) * (1.0 + 1e-12));
        let cks = checkpoint_ks(
            &g.iter().map(|&t| (t, 0.0)).collect::<Vec<_>>(),
            &[20.0, 80.0, 200.0],
            LogAverageMode::Continuous,
        )
        .unwrap();
        assert!(cks.iter().all(|c| c.1 == 0.5));
    }

    #[test]
    fn iid_oracle_flags_and_validation() {
        let r = iid_asclt_oracle(&IidLaw::Rademacher, 10, 1).unwrap();
        assert!(r.below_asymptotic);
        assert_eq!(r.checkpoints.len(), 1);
        let r = iid_asclt_oracle(&IidLaw::Rademacher, 10_000, 1).unwrap();
        assert!(!r.below_asymptotic);
        assert_eq!(r.checkpoints.iter().map(|c| c.0).collect::<Vec<_>>(), vec![1000, 10_000]);
        let skewed = IidLaw::Discrete {
            values: vec![0.0, 1.0],
            probabilities: vec![0.5, 0.5],
        };
        assert!(matches!(iid_asclt_oracle(&skewed, 1000, 1), Err(Error::Domain(_))));
        let centred = IidLaw::Discrete {
            values: vec![-2.0, 0.5],
            probabilities: vec![0.2, 0.8],
        };
        // mean -0.4 + 0.4 = 0, variance 0.8 + 0.2 = 1
        assert!(centred.validate().is_ok());
        assert_eq!(iid_checkpoints(100_000), vec![1000, 10_000, 100_000]);
    }

    #[test]
    fn iid_oracle_deterministic_per_seed() {
        let a = iid_asclt_oracle(&IidLaw::StandardNormal, 2000, 42).unwrap();
        let b = iid_asclt_oracle(&IidLaw::StandardNormal, 2000, 42).unwrap();
        assert_eq!(a, b);
        let c = iid_asclt_oracle(&IidLaw::Uniform, 2000, 43).unwrap();
        assert!(c.checkpoints.iter().all(|x| x.1 > 0.0 && x.1 < 1.0));
    }

    #[test]
    fn lipschitz_examples() {
        let g = geometric_theta_grid(std::f64::consts::E.powi(3), 64, &[]).unwrap();
        let path: Vec<(f64, f64)> = g.iter().map(|&t| (t, (t.ln()).sin())).collect();
        for f in TestFunction::ALL {
            let centers: Vec<(f64, f64)> = path.iter().map(|&(t, v)| (t, f.eval(v))).collect();
            assert_eq!(lipschitz_log_average(&path, f, &centers).unwrap(), 0.0);
            let shifted: Vec<(f64, f64)> = centers.iter().map(|&(t, c)| (t, c - 0.25)).collect();
            let l = lipschitz_log_average(&path, f, &shifted).unwrap();
            assert!((l - 0.25).abs() < 1e-14);
        }
        let wrong: Vec<(f64, f64)> = path.iter().map(|&(t, v)| (t * 1.01, v)).collect();
        assert!(lipschitz_log_average(&path, TestFunction::Tanh, &wrong).is_err());
        assert!(lipschitz_log_average(&path, TestFunction::Tanh, &wrong[1..]).is_err());
    }

    #[test]
    fn synthetic_gaussian_pipeline() {
        // F_R ~ N(0, R^1.5): ensemble → sigma → fit → normalise → KS
        let radii = [8.0, 16.0, 32.0, 64.0];
        let e = synthetic_ensemble(&radii, 1.5, 3000, 21);
        let table = estimate_sigma(&e).unwrap();
        let fit = fit_beta(&table).unwrap();
        assert!((fit.beta_hat - 1.5).abs() < 0.05, "{fit:?}");
        let z = e.normalized(&table).unwrap();
        let last: Vec<f64> = z.iter().skip(3).step_by(4).copied().collect();
        assert!(ks_to_standard_normal(&last).unwrap() < 0.03);
    }

    #[test]
    fn sigma_interpolation_is_log_linear() {
        let t = SigmaTable::new(vec![1.0, 4.0], vec![1.0, 2.0], 50).unwrap();
        assert!((t.interpolate(2.0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(t.interpolate(0.5), 1.0);
        assert_eq!(t.interpolate(9.0), 2.0);
    }

    fn atoms_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec(((-30i32..30).prop_map(|k| k as f64 / 10.0), 0.01f64..1.0), 1..40)
    }

    proptest! {
        #[test]
        fn normalised_measures_have_unit_weight(atoms in atoms_strategy()) {
            let m = EmpiricalMeasure::from_unnormalized(atoms).unwrap();
            prop_assert!((m.total_weight() - 1.0).abs() < WEIGHT_TOL);
        }

        #[test]
        fn ks_invariant_under_reordering_and_merging(atoms in atoms_strategy(), seed in 0u64..1000) {
            let m = EmpiricalMeasure::from_unnormalized(atoms.clone()).unwrap();
            let mut shuffled = m.atoms().to_vec();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..shuffled.len()).rev() {
                let j = rng.random_range(0..=i);
                shuffled.swap(i, j);
            }
            let s = EmpiricalMeasure::new(shuffled).unwrap();
            let merged = EmpiricalMeasure::new(m.merged()).unwrap();
            let d = weighted_ks(&m).unwrap();
            prop_assert!((d - weighted_ks(&s).unwrap()).abs() < 1e-12);
            prop_assert!((d - weighted_ks(&merged).unwrap()).abs() < 1e-12);
            let w = weighted_wasserstein1(&m).unwrap();
            prop_assert!((w - weighted_wasserstein1(&merged).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn equal_weights_match_unweighted_ks(xs in prop::collection::vec(-4.0f64..4.0, 100..300)) {
            let w = 1.0 / xs.len() as f64;
            let m = EmpiricalMeasure::from_unnormalized(xs.iter().map(|&x| (x, w)).collect()).unwrap();
            prop_assert_eq!(weighted_ks(&m).unwrap(), ks_to_standard_normal(&xs).unwrap());
        }

        #[test]
        fn fit_recovers_exact_power_laws(beta in 0.2f64..2.5, logk in -3.0f64..3.0) {
            let radii = vec![8.0, 16.0, 32.0, 64.0];
            let sig = radii.iter().map(|r: &f64| (logk.exp() * r.powf(beta)).sqrt()).collect();
            let f = fit_beta(&SigmaTable::new(radii, sig, 100).unwrap()).unwrap();
            prop_assert!((f.beta_hat - beta).abs() < 1e-12);
            prop_assert!((f.intercept - logk).abs() < 1e-11);
        }

        #[test]
        fn log_average_weights_sum_to_one(t in 3.0f64..500.0, ppd in 4usize..80) {
            let g = geometric_theta_grid(t, ppd, &[]).unwrap();
            let w = log_average_weights(&g, LogAverageMode::Continuous).unwrap();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn log_time_ou_has_square_root_correlation() {
        let thetas = geometric_theta_grid(16.0, 32, &[4.0]).unwrap();
        let i4 = thetas.iter().position(|&t| t == 4.0).unwrap();
        let last = thetas.len() - 1;
        let n = 20_000;
        let (mut s0, mut s4, mut s04, mut s16) = (0.0, 0.0, 0.0, 0.0);
        for r in 0..n {
            let p = log_time_ou_path(&thetas, 3, r).unwrap();
            s0 += p[0].1 * p[0].1;
            s4 += p[i4].1 * p[i4].1;
            s04 += p[0].1 * p[i4].1;
            s16 += p[0].1 * p[last].1;
        }
        let n = n as f64;
        assert!((s0 / n - 1.0).abs() < 0.04);
        assert!((s4 / n - 1.0).abs() < 0.04);
        assert!((s04 / n - 0.5).abs() < 0.03);
        assert!((s16 / n - 0.25).abs() < 0.03);
    }

    #[test]
    fn synthetic_moments_respect_the_bound() {
        let e = std::f64::consts::E;
        let horizons = [e * e, e.powi(3), e.powi(4)];
        let moments = synthetic_lipschitz_moments(&horizons, 100, 100, 32, 7).unwrap();
        assert_eq!(moments.len(), 9);
        let bound = second_moment_bound(0.5, 0.5, 0.5);
        assert_eq!(bound, 4.0);
        for m in &moments {
            assert!(m.scaled > 0.0 && m.scaled < bound, "{m:?}");
        }
    }

    #[test]
    fn pilot_centers_reject_ragged_paths() {
        let a = vec![(1.0, 0.0), (2.0, 1.0)];
        let b = vec![(1.0, 0.0)];
        assert!(pilot_centers(&[a.clone(), b], TestFunction::Tanh).is_err());
        let c = pilot_centers(&[a.clone(), a], TestFunction::ClampedIdentity).unwrap();
        assert_eq!(c, vec![(1.0, 0.0), (2.0, 1.0)]);
    }
}

//! Closed-form identities and bounds for the overlap integrals
//!
//! ```text
//! A_{θ,w} = ∫∫ I_θ(y) I_w(z) f(y - z) dy dz
//! ```
//!
//! where `I_θ` is the wave-kernel overlap of [`indicator_overlap`] and `f` is
//! a covariance kernel. For the Riesz covariance `f(x) = C|x|^{2H-2}` the
//! integral is evaluated twice: in space, with the singular factor
//! integrated analytically against the piecewise-linear overlaps, and in
//! frequency, where it becomes
//!
//! ```text
//! A_{θ,w} = (4/π) ∫_0^∞ sin²(tξ) sin(θξ) sin(wξ) ξ^{-3-2H} dξ.
//! ```
//!
//! [`indicator_overlap`]: crate::kernels::indicator_overlap

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{covariance_kernel, riesz_constant, KernelFamily, KernelSpec};
use crate::quadrature::{cosine_power_tail, integrate, integrate_algebraic_origin, integrate_split, QuadResult, Tolerance};
use crate::special::{gamma, sinc};

/// Split point between the near-origin and oscillatory parts of the
/// frequency integrals.
const FREQUENCY_SPLIT: f64 = 1.0;
const TAIL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstConstants {
    pub h: f64,
    /// Riesz covariance order `2H - 1`.
    pub alpha: f64,
    /// `H(2H - 1)`.
    pub alpha_h: f64,
    /// `Γ(2H + 1) sin(πH) / (2π)`.
    pub c_h: f64,
}

impl HurstConstants {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.5 && h < 1.0) {
            return Err(Error::Domain(format!("Hurst index {h} outside (1/2, 1)")));
        }
        Ok(Self {
            h,
            alpha: 2.0 * h - 1.0,
            alpha_h: h * (2.0 * h - 1.0),
            c_h: gamma(2.0 * h + 1.0) * (PI * h).sin() / (2.0 * PI),
        })
    }

    /// `α_H / (2π c_H)`, the constant of `f(x) = C|x|^{2H-2}`.
    pub fn riesz_prefactor(&self) -> f64 {
        self.alpha_h / (2.0 * PI * self.c_h)
    }

    /// `1/(2π C_{1,2H-1}) = c_H / α_H`.
    pub fn gamma_chain(&self) -> Result<IdentityReport> {
        let lhs = 1.0 / (2.0 * PI * riesz_constant(self.alpha)?);
        let rhs = self.c_h / self.alpha_h;
        Ok(IdentityReport::equality(
            format!("gamma_chain[H={}]", self.h),
            lhs,
            rhs,
            Criterion::Relative(1e-12),
            None,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "tolerance", rename_all = "snake_case")]
pub enum Criterion {
    Absolute(f64),
    Relative(f64),
    /// `lhs ≤ rhs`.
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadratureSettings {
    fn from_result(q: &QuadResult, tol: Tolerance) -> Self {
        Self {
            abs_tol: tol.abs,
            rel_tol: tol.rel,
            error_estimate: q.abs_err,
            evaluations: q.evaluations,
            converged: q.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub criterion: Criterion,
    /// `rhs - lhs` for bounds.
    pub slack: Option<f64>,
    pub pass: bool,
    pub quadrature: Option<QuadratureSettings>,
}

impl IdentityReport {
    pub fn equality(
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        criterion: Criterion,
        quadrature: Option<QuadratureSettings>,
    ) -> Self {
        let abs_err = (lhs - rhs).abs();
        let rel_err = if rhs != 0.0 { abs_err / rhs.abs() } else { abs_err };
        let within = match criterion {
            Criterion::Absolute(tol) => abs_err < tol,
            Criterion::Relative(tol) => rel_err < tol,
            Criterion::UpperBound => lhs <= rhs,
        };
        let converged = quadrature.is_none_or(|q| q.converged);
        Self {
            name: name.into(),
            lhs,
            rhs,
            abs_err,
            rel_err,
            criterion,
            slack: matches!(criterion, Criterion::UpperBound).then_some(rhs - lhs),
            pass: within && converged && lhs.is_finite() && rhs.is_finite(),
            quadrature,
        }
    }

    pub fn bound(name: impl Into<String>, lhs: f64, rhs: f64, quadrature: Option<QuadratureSettings>) -> Self {
        Self::equality(name, lhs, rhs, Criterion::UpperBound, quadrature)
    }
}

/// `c0 + c1·z` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub c0: f64,
    pub c1: f64,
}

/// Compactly supported piecewise-linear function, possibly discontinuous
/// at segment ends.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    segments: Vec<Segment>,
}

impl PiecewiseLinear {
    pub fn new(mut segments: Vec<Segment>) -> Self {
        segments.retain(|s| s.b > s.a);
        segments.sort_by(|x, y| x.a.total_cmp(&y.a));
        Self { segments }
    }

    pub fn indicator(a: f64, b: f64) -> Self {
        Self::new(vec![Segment { a, b, c0: 1.0, c1: 0.0 }])
    }

    /// `I_θ(y) = ½·|[y-t, y+t] ∩ [-θ, θ]|`: ramps of slope ½ between
    /// `±(θ+t)` and `±|θ-t|`, plateau `min(t, θ)`.
    pub fn overlap(t: f64, theta: f64) -> Self {
        let outer = theta + t;
        let inner = (theta - t).abs();
        Self::new(vec![
            Segment { a: -outer, b: -inner, c0: 0.5 * outer, c1: 0.5 },
            Segment { a: -inner, b: inner, c0: t.min(theta), c1: 0.0 },
            Segment { a: inner, b: outer, c0: 0.5 * outer, c1: -0.5 },
        ])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| s.a <= x && x < s.b)
            .map_or(0.0, |s| s.c0 + s.c1 * x)
    }

    pub fn support(&self) -> (f64, f64) {
        let lo = self.segments.first().map_or(0.0, |s| s.a);
        let hi = self.segments.last().map_or(0.0, |s| s.b);
        (lo, hi)
    }

    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.segments.iter().flat_map(|s| [s.a, s.b]).collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    /// `∫ self(z) |y - z|^p dz` for `p ∈ (-1, 0]`, in closed form.
    pub fn power_convolution(&self, y: f64, p: f64) -> f64 {
        // ∫ |u|^p du = sign(u)|u|^{p+1}/(p+1), ∫ u|u|^p du = |u|^{p+2}/(p+2)
        let p0 = |u: f64| u.signum() * u.abs().powf(p + 1.0) / (p + 1.0);
        let p1 = |u: f64| u.abs().powf(p + 2.0) / (p + 2.0);
        self.segments
            .iter()
            .map(|s| {
                let (lo, hi) = (s.a - y, s.b - y);
                (s.c0 + s.c1 * y) * (p0(hi) - p0(lo)) + s.c1 * (p1(hi) - p1(lo))
            })
            .sum()
    }
}

/// `∫∫ outer(y) inner(z) |y - z|^p dy dz`; the inner integral is exact and
/// the outer one adaptive, split at every knot of both functions.
pub fn singular_double_integral(outer: &PiecewiseLinear, inner: &PiecewiseLinear, p: f64, tol: Tolerance) -> QuadResult {
    let (lo, hi) = outer.support();
    let mut pts = outer.knots();
    pts.extend(inner.knots().into_iter().filter(|k| *k > lo && *k < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    integrate_split(|y| outer.eval(y) * inner.power_convolution(y, p), &pts, tol)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} must be positive")))
    }
}

const SPATIAL_TOL: Tolerance = Tolerance::new(1e-14, 1e-12);

/// Riesz-covariance `A_{θ,w}` from the spatial double integral.
pub fn overlap_integral_spatial(t: f64, theta: f64, w: f64, h: f64) -> Result<QuadResult> {
    check_positive("t", t)?;
    check_positive("theta", theta)?;
    check_positive("w", w)?;
    let hc = HurstConstants::new(h)?;
    let q = singular_double_integral(
        &PiecewiseLinear::overlap(t, theta),
        &PiecewiseLinear::overlap(t, w),
        2.0 * h - 2.0,
        SPATIAL_TOL,
    );
    Ok(q.scale(hc.riesz_prefactor()))
}

const FOURIER_TOL: Tolerance = Tolerance::new(1e-14, 1e-12);

/// Riesz-covariance `A_{θ,w}` from the frequency integral.
pub fn overlap_integral_fourier(t: f64, theta: f64, w: f64, h: f64) -> Result<QuadResult> {
    check_positive("t", t)?;
    check_positive("theta", theta)?;
    check_positive("w", w)?;
    HurstConstants::new(h)?;
    let x0 = FREQUENCY_SPLIT;
    // near the origin: (4/π) t²θw sinc²(tξ) sinc(θξ) sinc(wξ) ξ^{1-2H}
    let scale = 4.0 / PI * t * t * theta * w;
    let near = integrate_algebraic_origin(
        |xi| sinc(t * xi).powi(2) * sinc(theta * xi) * sinc(w * xi),
        1.0 - 2.0 * h,
        x0,
        FOURIER_TOL,
    )
    .scale(scale);
    // sin²(tξ) sin(θξ) sin(wξ) as a sum of cosines
    let d = (w - theta).abs();
    let s = w + theta;
    let terms = [
        (1.0, d),
        (-1.0, s),
        (-0.5, 2.0 * t + d),
        (-0.5, (2.0 * t - d).abs()),
        (0.5, 2.0 * t + s),
        (0.5, (2.0 * t - s).abs()),
    ];
    let q = -3.0 - 2.0 * h;
    let tail = terms
        .iter()
        .map(|&(c, k)| cosine_power_tail(k, q, x0, TAIL_TOL).scale(c))
        .fold(QuadResult::zero(), QuadResult::combine)
        .scale(1.0 / PI);
    Ok(near.combine(tail))
}

/// `c_H ∫_ℝ sin(θ|ξ|) sin(w|ξ|) |ξ|^{-1-2H} dξ` by quadrature.
pub fn sine_integral_numeric(theta: f64, w: f64, h: f64) -> Result<QuadResult> {
    check_positive("theta", theta)?;
    check_positive("w", w)?;
    let hc = HurstConstants::new(h)?;
    let x0 = FREQUENCY_SPLIT;
    let near = integrate_algebraic_origin(
        |xi| sinc(theta * xi) * sinc(w * xi),
        1.0 - 2.0 * h,
        x0,
        FOURIER_TOL,
    )
    .scale(theta * w);
    let q = -1.0 - 2.0 * h;
    let tail = cosine_power_tail((w - theta).abs(), q, x0, TAIL_TOL)
        .combine(cosine_power_tail(w + theta, q, x0, TAIL_TOL).scale(-1.0))
        .scale(0.5);
    Ok(near.combine(tail).scale(2.0 * hc.c_h))
}

/// `(|θ + w|^{2H} - |θ - w|^{2H}) / 4`.
pub fn sine_integral_closed_form(theta: f64, w: f64, h: f64) -> f64 {
    ((theta + w).abs().powf(2.0 * h) - (theta - w).abs().powf(2.0 * h)) / 4.0
}

pub fn erdelyi_identity(theta: f64, w: f64, h: f64) -> Result<IdentityReport> {
    let q = sine_integral_numeric(theta, w, h)?;
    let settings = QuadratureSettings::from_result(&q, FOURIER_TOL);
    Ok(IdentityReport::equality(
        format!("erdelyi[theta={theta},w={w},H={h}]"),
        q.value,
        sine_integral_closed_form(theta, w, h),
        Criterion::Absolute(1e-6),
        Some(settings),
    ))
}

/// `α_H ∫_0^t ∫_0^s |x - y|^{2H-2} dy dx` against the fBm covariance.
pub fn fbm_covariance_check(t: f64, s: f64, h: f64) -> Result<IdentityReport> {
    check_positive("t", t)?;
    check_positive("s", s)?;
    let hc = HurstConstants::new(h)?;
    let q = singular_double_integral(
        &PiecewiseLinear::indicator(0.0, t),
        &PiecewiseLinear::indicator(0.0, s),
        2.0 * h - 2.0,
        SPATIAL_TOL,
    )
    .scale(hc.alpha_h);
    let rhs = 0.5 * (t.powf(2.0 * h) + s.powf(2.0 * h) - (t - s).abs().powf(2.0 * h));
    Ok(IdentityReport::equality(
        format!("fbm_covariance[t={t},s={s},H={h}]"),
        q.value,
        rhs,
        Criterion::Absolute(1e-8),
        Some(QuadratureSettings::from_result(&q, SPATIAL_TOL)),
    ))
}

/// Both routes for the Riesz `A_{θ,w}`.
pub fn parseval_check(t: f64, theta: f64, w: f64, h: f64) -> Result<IdentityReport> {
    let spatial = overlap_integral_spatial(t, theta, w, h)?;
    let fourier = overlap_integral_fourier(t, theta, w, h)?;
    let mut settings = QuadratureSettings::from_result(&spatial, SPATIAL_TOL);
    settings.converged &= fourier.converged;
    settings.error_estimate += fourier.abs_err;
    settings.evaluations += fourier.evaluations;
    Ok(IdentityReport::equality(
        format!("parseval[t={t},theta={theta},w={w},H={h}]"),
        spatial.value,
        fourier.value,
        Criterion::Relative(1e-4),
        Some(settings),
    ))
}

/// `A_{θ,w} ≤ t²/(2π c_H) · ((w + θ)^{2H} - |w - θ|^{2H})`.
pub fn odd_part_bound_check(t: f64, theta: f64, w: f64, h: f64) -> Result<IdentityReport> {
    let hc = HurstConstants::new(h)?;
    let a = overlap_integral_fourier(t, theta, w, h)?;
    let rhs = t * t / (2.0 * PI * hc.c_h) * ((w + theta).powf(2.0 * h) - (w - theta).abs().powf(2.0 * h));
    Ok(IdentityReport::bound(
        format!("odd_part_bound[t={t},theta={theta},w={w},H={h}]"),
        a.value,
        rhs,
        Some(QuadratureSettings::from_result(&a, FOURIER_TOL)),
    ))
}

const KERNEL_INNER_TOL: Tolerance = Tolerance::new(1e-15, 1e-13);
const KERNEL_OUTER_TOL: Tolerance = Tolerance::new(1e-13, 1e-11);

/// `A_{θ,w}` for an integrable covariance kernel, by nested quadrature.
pub fn overlap_integral_kernel(t: f64, theta: f64, w: f64, kernel: &KernelSpec) -> Result<QuadResult> {
    check_positive("t", t)?;
    check_positive("theta", theta)?;
    check_positive("w", w)?;
    kernel.validate()?;
    let kink = match *kernel {
        KernelSpec::Integrable { family: KernelFamily::Boxcar, scale } => Some(2.0 * scale),
        KernelSpec::Integrable { .. } => None,
        KernelSpec::Riesz { .. } => {
            return Err(Error::Unsupported("nested quadrature needs an integrable kernel".into()))
        }
    };
    let outer = PiecewiseLinear::overlap(t, theta);
    let inner = PiecewiseLinear::overlap(t, w);
    let (zlo, zhi) = inner.support();
    let inner_knots = inner.knots();
    let cov = |x: f64| covariance_kernel(kernel, x).expect("validated kernel");
    let inner_at = |y: f64| {
        let mut pts = inner_knots.clone();
        pts.push(y);
        if let Some(k) = kink {
            pts.extend([y - k, y + k]);
        }
        pts.retain(|p| *p >= zlo && *p <= zhi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        integrate_split(|z| inner.eval(z) * cov(y - z), &pts, KERNEL_INNER_TOL)
    };
    let (ylo, yhi) = outer.support();
    let mut pts = outer.knots();
    pts.extend(inner_knots.iter().copied());
    if let Some(k) = kink {
        pts.extend(inner_knots.iter().flat_map(|z| [z - k, z + k]));
    }
    pts.retain(|p| *p >= ylo && *p <= yhi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let inner_ok = std::cell::Cell::new(true);
    let q = integrate_split(
        |y| {
            let r = inner_at(y);
            if !r.converged {
                inner_ok.set(false);
            }
            outer.eval(y) * r.value
        },
        &pts,
        KERNEL_OUTER_TOL,
    );
    Ok(QuadResult {
        converged: q.converged && inner_ok.get(),
        ..q
    })
}

/// `A_{θ,w} ≤ 2θt‖f‖₁` for `θ < w`.
pub fn young_bound_check(t: f64, theta: f64, w: f64, kernel: &KernelSpec) -> Result<IdentityReport> {
    if !(theta < w) {
        return Err(Error::Precondition(format!("need theta < w, got {theta} and {w}")));
    }
    let norm = kernel
        .covariance_l1_norm()
        .ok_or_else(|| Error::Unsupported("covariance kernel is not integrable".into()))?;
    let a = overlap_integral_kernel(t, theta, w, kernel)?;
    Ok(IdentityReport::bound(
        format!("young_bound[{},t={t},theta={theta},w={w}]", kernel_label(kernel)),
        a.value,
        2.0 * theta * t * norm,
        Some(QuadratureSettings::from_result(&a, KERNEL_OUTER_TOL)),
    ))
}

fn kernel_label(kernel: &KernelSpec) -> String {
    match *kernel {
        KernelSpec::Integrable { family, scale } => {
            let f = match family {
                KernelFamily::Exponential => "exponential",
                KernelFamily::Gaussian => "gaussian",
                KernelFamily::Boxcar => "boxcar",
            };
            format!("{f}:{scale}")
        }
        KernelSpec::Riesz { alpha } => format!("riesz:{alpha}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszRatioRow {
    pub w: f64,
    /// `θ / w`.
    pub ratio: f64,
    pub overlap: f64,
    /// `A / (θw)^H`.
    pub normalized: f64,
    /// `normalized / ((θ/w)^{1-H} + (θ/w)^H)`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszRatioReport {
    pub t: f64,
    pub h: f64,
    pub rows: Vec<RieszRatioRow>,
    /// Largest `constant` for each `w`.
    pub constants: Vec<(f64, f64)>,
    /// Log-log slope of `normalized` against `θ/w` over the three smallest
    /// ratios at the largest `w`.
    pub small_ratio_slope: f64,
}

/// Relative spread of the per-`w` constants accepted as stable.
pub const RIESZ_RATIO_STABILITY: f64 = 0.10;
/// Allowed gap between the small-ratio slope and `1 - H`.
pub const RIESZ_RATIO_SLOPE_TOL: f64 = 0.1;

impl RieszRatioReport {
    pub fn stability(&self) -> IdentityReport {
        let hi = self.constants.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let lo = self.constants.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        IdentityReport::equality(
            format!("riesz_ratio_stability[t={},H={}]", self.t, self.h),
            hi,
            lo,
            Criterion::Relative(RIESZ_RATIO_STABILITY),
            None,
        )
    }

    pub fn slope(&self) -> IdentityReport {
        IdentityReport::equality(
            format!("riesz_ratio_slope[t={},H={}]", self.t, self.h),
            self.small_ratio_slope,
            1.0 - self.h,
            Criterion::Absolute(RIESZ_RATIO_SLOPE_TOL),
            None,
        )
    }
}

pub fn riesz_ratio_check(t: f64, h: f64, ratios: &[f64], ws: &[f64]) -> Result<RieszRatioReport> {
    HurstConstants::new(h)?;
    if ratios.len() < 3 || ws.is_empty() {
        return Err(Error::Precondition("need at least 3 ratios and one w".into()));
    }
    let mut rows = Vec::with_capacity(ratios.len() * ws.len());
    for &w in ws {
        for &r in ratios {
            let theta = r * w;
            let a = overlap_integral_fourier(t, theta, w, h)?;
            if !a.converged {
                return Err(Error::Degenerate(format!("quadrature failed at theta={theta}, w={w}")));
            }
            let normalized = a.value / (theta * w).powf(h);
            rows.push(RieszRatioRow {
                w,
                ratio: r,
                overlap: a.value,
                normalized,
                constant: normalized / (r.powf(1.0 - h) + r.powf(h)),
            });
        }
    }
    let constants = ws
        .iter()
        .map(|&w| {
            let c = rows
                .iter()
                .filter(|r| r.w == w)
                .map(|r| r.constant)
                .fold(f64::NEG_INFINITY, f64::max);
            (w, c)
        })
        .collect();
    let w_max = ws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut small: Vec<&RieszRatioRow> = rows.iter().filter(|r| r.w == w_max).collect();
    small.sort_by(|a, b| a.ratio.total_cmp(&b.ratio));
    small.truncate(3);
    let xs: Vec<f64> = small.iter().map(|r| r.ratio.ln()).collect();
    let ys: Vec<f64> = small.iter().map(|r| r.normalized.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(RieszRatioReport {
        t,
        h,
        rows,
        constants,
        small_ratio_slope: sxy / sxx,
    })
}

/// `∫∫_{1<θ<w<T} (θw)^{-1} (θ/w)^β dθ dw` three ways, plus the simplified
/// upper bound `log T / β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleIntegral {
    pub beta: f64,
    pub t_max: f64,
    /// Outer `w`, inner `θ ∈ (1, w)`.
    pub quadrature: f64,
    /// Outer `θ`, inner `w ∈ (θ, T)`.
    pub swapped: f64,
    /// `(log T - (1 - T^{-β})/β) / β`.
    pub closed_form: f64,
    /// `log T / β`.
    pub simplified: f64,
    pub converged: bool,
}

const TRIANGLE_TOL: Tolerance = Tolerance::new(1e-13, 1e-12);

pub fn triangle_integral(beta: f64, t_max: f64) -> Result<TriangleIntegral> {
    check_positive("beta", beta)?;
    if !(t_max > 1.0 && t_max.is_finite()) {
        return Err(Error::Domain(format!("T = {t_max} must exceed 1")));
    }
    let kernel = |theta: f64, w: f64| (theta / w).powf(beta) / (theta * w);
    let mut converged = true;
    let mut track = |q: QuadResult| {
        converged &= q.converged;
        q.value
    };
    let inner_tol = Tolerance::new(1e-16, 1e-13);
    let quadrature = {
        let q = integrate(
            |w| {
                let r = integrate(|th| kernel(th, w), 1.0, w, inner_tol);
                r.value
            },
            1.0,
            t_max,
            TRIANGLE_TOL,
        );
        track(q)
    };
    let swapped = {
        let q = integrate(
            |th| integrate(|w| kernel(th, w), th, t_max, inner_tol).value,
            1.0,
            t_max,
            TRIANGLE_TOL,
        );
        track(q)
    };
    let l = t_max.ln();
    Ok(TriangleIntegral {
        beta,
        t_max,
        quadrature,
        swapped,
        closed_form: (l + (-beta * l).exp_m1() / beta) / beta,
        simplified: l / beta,
        converged,
    })
}

impl TriangleIntegral {
    fn label(&self, what: &str) -> String {
        format!("{what}[beta={},T={}]", self.beta, self.t_max)
    }

    pub fn exact(&self) -> IdentityReport {
        IdentityReport::equality(self.label("triangle_integral"), self.quadrature, self.closed_form, Criterion::Absolute(1e-8), None)
    }

    pub fn fubini(&self) -> IdentityReport {
        IdentityReport::equality(self.label("triangle_integral_fubini"), self.quadrature, self.swapped, Criterion::Absolute(1e-10), None)
    }

    pub fn bound(&self) -> IdentityReport {
        IdentityReport::bound(self.label("triangle_integral_bound"), self.quadrature, self.simplified, None)
    }

    /// Equality against `log T / β` itself.
    pub fn simplified_equality(&self) -> IdentityReport {
        IdentityReport::equality(self.label("triangle_integral_log_t_over_beta"), self.quadrature, self.simplified, Criterion::Absolute(1e-8), None)
    }
}

/// 20 Hurst indices evenly spread over `[0.51, 0.99]`.
pub fn gamma_chain_grid() -> Vec<f64> {
    (0..20).map(|i| 0.51 + 0.48 * i as f64 / 19.0).collect()
}

pub const PARSEVAL_RADII: [f64; 3] = [0.5, 1.0, 2.0];
pub const PARSEVAL_HURST: [f64; 3] = [0.6, 0.75, 0.9];
pub const TRIANGLE_CASES: [(f64, f64); 3] = [(1.0, std::f64::consts::E), (2.0, 10.0), (0.5, 100.0)];

/// Every identity and bound, in a fixed order.
pub fn identity_suite() -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    for h in gamma_chain_grid() {
        out.push(HurstConstants::new(h)?.gamma_chain()?);
    }
    for h in PARSEVAL_HURST {
        for theta in PARSEVAL_RADII {
            for w in PARSEVAL_RADII {
                out.push(parseval_check(1.0, theta, w, h)?);
            }
        }
    }
    for h in PARSEVAL_HURST {
        for theta in PARSEVAL_RADII {
            for w in PARSEVAL_RADII {
                out.push(odd_part_bound_check(1.0, theta, w, h)?);
            }
        }
    }
    for h in PARSEVAL_HURST {
        for (theta, w) in [(1.0, 1.0), (0.5, 0.5), (2.0, 2.0), (0.5, 2.0), (1.0, 3.0)] {
            out.push(erdelyi_identity(theta, w, h)?);
        }
    }
    for h in PARSEVAL_HURST {
        for (t, s) in [(1.0, 1.0), (2.0, 1.0), (0.5, 1.5), (3.0, 3.0)] {
            out.push(fbm_covariance_check(t, s, h)?);
        }
    }
    for kernel in [KernelSpec::exponential(1.0), KernelSpec::gaussian(1.0), KernelSpec::boxcar(1.0)] {
        for (theta, w) in [(1.0, 4.0), (0.5, 1.0), (3.99, 4.0)] {
            out.push(young_bound_check(1.0, theta, w, &kernel)?);
        }
    }
    let ratio = riesz_ratio_check(1.0, 0.75, &RIESZ_RATIOS, &RIESZ_RATIO_W)?;
    out.push(ratio.stability());
    out.push(ratio.slope());
    for (beta, t_max) in TRIANGLE_CASES {
        let tri = triangle_integral(beta, t_max)?;
        out.push(tri.exact());
        out.push(tri.fubini());
        out.push(tri.bound());
    }
    Ok(out)
}

pub const RIESZ_RATIOS: [f64; 5] = [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 3.0 / 8.0, 1.0 / 2.0];
pub const RIESZ_RATIO_W: [f64; 3] = [8.0, 16.0, 32.0];

//! Wave Green's function, spatial correlation kernels and the
//! indicator-overlap functions built from them.
//!
//! All kernels κ are even and nonnegative. The integrable families are
//! normalised to unit mass; the Riesz kernel of order α/2 has covariance
//! `f = κ ∗ κ̃ = C_{1,α} |x|^{α-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_algebraic_origin, integrate_split, Tolerance};
use crate::special::{erfc, gamma, normal_pdf, sinc};

use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `e^{-|x|/s} / (2s)`
    Exponential,
    /// Centred normal density with standard deviation `s`.
    Gaussian,
    /// `1_{|x|<s} / (2s)`
    Boxcar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    Integrable { family: KernelFamily, scale: f64 },
    /// κ = R_{1,α/2}; the covariance kernel is R_{1,α}.
    Riesz { alpha: f64 },
}

impl KernelSpec {
    pub fn exponential(scale: f64) -> Self {
        KernelSpec::Integrable {
            family: KernelFamily::Exponential,
            scale,
        }
    }

    pub fn gaussian(scale: f64) -> Self {
        KernelSpec::Integrable {
            family: KernelFamily::Gaussian,
            scale,
        }
    }

    pub fn boxcar(scale: f64) -> Self {
        KernelSpec::Integrable {
            family: KernelFamily::Boxcar,
            scale,
        }
    }

    pub fn riesz(alpha: f64) -> Self {
        KernelSpec::Riesz { alpha }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Integrable { scale, .. } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::Domain(format!("kernel scale must be positive, got {scale}")));
                }
            }
            KernelSpec::Riesz { alpha } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::Domain(format!("Riesz alpha must lie in (0,1), got {alpha}")));
                }
            }
        }
        Ok(())
    }

    /// Pointwise κ(x). The Riesz kernel is `+∞` at the origin.
    pub fn kappa(&self, x: f64) -> f64 {
        match *self {
            KernelSpec::Integrable { family, scale: s } => match family {
                KernelFamily::Exponential => (-x.abs() / s).exp() / (2.0 * s),
                KernelFamily::Gaussian => normal_pdf(x / s) / s,
                KernelFamily::Boxcar => {
                    if x.abs() < s {
                        0.5 / s
                    } else {
                        0.0
                    }
                }
            },
            KernelSpec::Riesz { alpha } => {
                let c = riesz_constant_unchecked(alpha / 2.0);
                c * x.abs().powf(-(1.0 - alpha / 2.0))
            }
        }
    }

    /// `‖κ‖_{L¹}`, `None` for the Riesz kernel.
    pub fn l1_norm(&self) -> Option<f64> {
        match self {
            KernelSpec::Integrable { .. } => Some(1.0),
            KernelSpec::Riesz { .. } => None,
        }
    }

    /// `‖f‖_{L¹} = (∫κ)²` by Fubini.
    pub fn covariance_l1_norm(&self) -> Option<f64> {
        self.l1_norm().map(|m| m * m)
    }

    /// Growth exponent of `Var F_R` in `R`: 1 for integrable κ, α+1 for Riesz.
    pub fn scaling_exponent(&self) -> f64 {
        match *self {
            KernelSpec::Integrable { .. } => 1.0,
            KernelSpec::Riesz { alpha } => alpha + 1.0,
        }
    }

    /// Half-width of the support when compact.
    pub fn support_half_width(&self) -> Option<f64> {
        match *self {
            KernelSpec::Integrable {
                family: KernelFamily::Boxcar,
                scale,
            } => Some(scale),
            _ => None,
        }
    }

    /// Integral of κ over `[a, b]`, `a <= b`, in closed form.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        debug_assert!(a <= b);
        if a < 0.0 && b > 0.0 {
            return self.integral(a, 0.0) + self.integral(0.0, b);
        }
        if b <= 0.0 {
            return self.integral(-b, -a);
        }
        // 0 <= a < b from here on.
        match *self {
            KernelSpec::Integrable { family, scale: s } => match family {
                KernelFamily::Exponential => 0.5 * ((-a / s).exp() - (-b / s).exp()),
                KernelFamily::Gaussian => {
                    0.5 * (erfc(a / (s * SQRT_2)) - erfc(b / (s * SQRT_2)))
                }
                KernelFamily::Boxcar => (b.min(s) - a.min(s)).max(0.0) / (2.0 * s),
            },
            KernelSpec::Riesz { alpha } => {
                let h = alpha / 2.0;
                let c = riesz_constant_unchecked(h);
                c * (b.powf(h) - a.powf(h)) / h
            }
        }
    }

    /// Mass of κ outside `[-k, k]` (integrable families only).
    pub fn tail_mass(&self, k: f64) -> Option<f64> {
        match *self {
            KernelSpec::Integrable { .. } => Some((1.0 - 2.0 * self.integral(0.0, k.max(0.0))).max(0.0)),
            KernelSpec::Riesz { .. } => None,
        }
    }
}

/// d'Alembert kernel `G_t(x) = ½·1_{|x|<t}`; the light-cone boundary gets 0.
pub fn wave_green(t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    Ok(if x.abs() < t { 0.5 } else { 0.0 })
}

/// `𝓕G_t(ξ) = sin(tξ)/ξ`, equal to `t` at ξ = 0.
pub fn wave_green_fourier(t: f64, xi: f64) -> Result<f64> {
    check_time(t)?;
    Ok(t * sinc(t * xi))
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be nonnegative, got {t}")))
    }
}

/// `C_{1,α} = π^{-1/2} 2^{-α} Γ((1-α)/2) / Γ(α/2)`.
pub fn riesz_constant(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("Riesz order must lie in (0,1), got {alpha}")));
    }
    Ok(riesz_constant_unchecked(alpha))
}

fn riesz_constant_unchecked(alpha: f64) -> f64 {
    PI.powf(-0.5) * 2f64.powf(-alpha) * gamma((1.0 - alpha) / 2.0) / gamma(alpha / 2.0)
}

/// Cell integrals `κ̄(i) = ∫_{(i-½)dx}^{(i+½)dx} κ` for `i = -h..=h`,
/// stored at index `i + h`.
pub fn kernel_cell_integrals(spec: &KernelSpec, dx: f64, half_width_cells: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::Domain(format!("dx must be positive, got {dx}")));
    }
    let h = half_width_cells as i64;
    let mut cells = vec![0.0; 2 * half_width_cells + 1];
    for i in 0..=h {
        let a = (i as f64 - 0.5) * dx;
        let b = (i as f64 + 0.5) * dx;
        let v = spec.integral(a, b);
        cells[(h + i) as usize] = v;
        cells[(h - i) as usize] = v;
    }
    Ok(cells)
}

/// Covariance kernel `f = κ ∗ κ̃` in closed form.
pub fn covariance_kernel(spec: &KernelSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    let ax = x.abs();
    Ok(match *spec {
        KernelSpec::Integrable { family, scale: s } => match family {
            KernelFamily::Exponential => (s + ax) * (-ax / s).exp() / (4.0 * s * s),
            KernelFamily::Gaussian => normal_pdf(ax / (s * SQRT_2)) / (s * SQRT_2),
            KernelFamily::Boxcar => (2.0 * s - ax).max(0.0) / (4.0 * s * s),
        },
        KernelSpec::Riesz { alpha } => {
            if x == 0.0 {
                return Err(Error::Singular("Riesz covariance is infinite at x = 0".into()));
            }
            riesz_constant_unchecked(alpha) * ax.powf(alpha - 1.0)
        }
    })
}

/// `∫ κ(u) κ(u - x) du` by adaptive quadrature; integrable families only.
pub fn numeric_self_convolution(spec: &KernelSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    let s = match *spec {
        KernelSpec::Integrable { scale, .. } => scale,
        KernelSpec::Riesz { .. } => {
            return Err(Error::Unsupported("numeric self-convolution needs an integrable kernel".into()))
        }
    };
    let reach = x.abs() + 60.0 * s;
    let mut pts = vec![-reach, reach, 0.0, x, s, -s, x + s, x - s];
    pts.retain(|p| p.abs() <= reach);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let r = integrate_split(
        |u| spec.kappa(u) * spec.kappa(u - x),
        &pts,
        Tolerance::new(1e-14, 1e-12),
    );
    Ok(r.value)
}

/// `I_θ(y) = ∫_{-θ}^{θ} G_t(x - y) dx = ½·|[y-t, y+t] ∩ [-θ, θ]|`.
/// `φ_{t,θ}(r, y)` is `indicator_overlap(t - r, θ, y)`.
pub fn indicator_overlap(t: f64, theta: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    check_radius(theta)?;
    let lo = (y - t).max(-theta);
    let hi = (y + t).min(theta);
    Ok(0.5 * (hi - lo).max(0.0))
}

/// `𝓕I_θ(ξ) = 2·𝓕G_t(ξ)·sin(ξθ)/ξ`, with limit `2tθ` at the origin.
pub fn fourier_indicator_overlap(t: f64, theta: f64, xi: f64) -> Result<f64> {
    check_radius(theta)?;
    Ok(2.0 * wave_green_fourier(t, xi)? * theta * sinc(theta * xi))
}

fn check_radius(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be positive, got {theta}")))
    }
}

/// Truncation of the discretised kernel and what it discards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTruncation {
    pub half_width_cells: usize,
    /// `(h + ½)·dx`
    pub half_width: f64,
    /// Integrable kernels: L¹ mass outside the retained cells. Riesz kernel:
    /// relative covariance deficit at the lag spanning the output region.
    pub tail_mass: f64,
}

/// Chooses how many cells of κ to keep.
///
/// Integrable kernels keep the smallest window with tail mass at most
/// `tail_tolerance`. The Riesz kernel keeps `riesz_factor × output_half_width`.
pub fn truncation_for(
    spec: &KernelSpec,
    dx: f64,
    output_half_width: f64,
    tail_tolerance: f64,
    riesz_factor: f64,
) -> Result<KernelTruncation> {
    spec.validate()?;
    let cells_for = |k: f64| ((k / dx) - 0.5).ceil().max(0.0) as usize;
    match *spec {
        KernelSpec::Integrable { family, scale: s } => {
            let k = match family {
                KernelFamily::Exponential => s * (1.0 / tail_tolerance).ln(),
                KernelFamily::Gaussian => s * SQRT_2 * erfc_inv(tail_tolerance),
                KernelFamily::Boxcar => s,
            };
            let h = cells_for(k);
            let half_width = (h as f64 + 0.5) * dx;
            Ok(KernelTruncation {
                half_width_cells: h,
                half_width,
                tail_mass: spec.tail_mass(half_width).unwrap_or(0.0),
            })
        }
        KernelSpec::Riesz { alpha } => {
            let h = cells_for(riesz_factor * output_half_width);
            let half_width = (h as f64 + 0.5) * dx;
            let lag = 2.0 * output_half_width;
            let deficit = riesz_covariance_deficit(alpha, half_width, lag)?;
            Ok(KernelTruncation {
                half_width_cells: h,
                half_width,
                tail_mass: deficit,
            })
        }
    }
}

/// Relative loss `1 - (κ_K ∗ κ_K)(D) / f(D)` when the Riesz kernel is cut at
/// `|u| <= K`, to leading order (both tails of one factor, `K > D`).
pub fn riesz_covariance_deficit(alpha: f64, k: f64, lag: f64) -> Result<f64> {
    if !(k > lag && lag > 0.0) {
        return Err(Error::Config(format!(
            "Riesz truncation {k} must exceed the output lag {lag}"
        )));
    }
    let q = 1.0 - alpha / 2.0;
    let c = riesz_constant_unchecked(alpha / 2.0);
    // ∫_K^∞ u^{-q}(u-D)^{-q} du = K^{1-2q} ∫_0^1 v^{-α} (1 - Dv/K)^{-q} dv
    let inner = integrate_algebraic_origin(
        |v| (1.0 - lag * v / k).powf(-q),
        -alpha,
        1.0,
        Tolerance::new(1e-14, 1e-12),
    );
    let tail = 2.0 * c * c * k.powf(1.0 - 2.0 * q) * inner.value;
    let full = riesz_constant_unchecked(alpha) * lag.powf(alpha - 1.0);
    Ok(tail / full)
}

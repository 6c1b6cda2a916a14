//! Numerical integration: globally adaptive Gauss–Kronrod (10/21), an
//! algebraic-weight substitution for integrable endpoint singularities, and
//! oscillatory cosine tails summed between zeros with Wynn's epsilon
//! extrapolation.

use std::f64::consts::PI;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 4000,
        }
    }

    pub const fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-12, 1e-12)
    }
}

/// Value and error estimate of a quadrature. `converged` is false when the
/// requested tolerance was not met within the interval budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            abs_err: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    /// Sum of independent pieces.
    pub fn combine(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            abs_err: self.abs_err + other.abs_err,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }

    pub fn scale(self, c: f64) -> QuadResult {
        QuadResult {
            value: self.value * c,
            abs_err: self.abs_err * c.abs(),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Panel { a, b, value, err }
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    integrate_split(f, &[a, b], tol)
}

/// Adaptive integral over consecutive breakpoints `pts[0] < pts[1] < ...`.
/// Kinks and integrable singularities should sit on breakpoints. Zero-length
/// pieces are skipped and the refinement budget is shared globally.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, pts: &[f64], tol: Tolerance) -> QuadResult {
    let mut panels: Vec<Panel> = pts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk21(&f, w[0], w[1]))
        .collect();
    if panels.is_empty() {
        return QuadResult::zero();
    }
    let mut evaluations = 21 * panels.len();
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        if !total.is_finite() || !err.is_finite() {
            return QuadResult {
                value: total,
                abs_err: f64::INFINITY,
                evaluations,
                converged: false,
            };
        }
        let target = tol.abs.max(tol.rel * total.abs());
        if err <= target || panels.len() >= tol.max_intervals {
            return QuadResult {
                value: total,
                abs_err: err,
                evaluations,
                converged: err <= target,
            };
        }
        let (idx, worst) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, p)| (i, *p))
            .expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine resolution
            return QuadResult {
                value: total,
                abs_err: err,
                evaluations,
                converged: false,
            };
        }
        panels[idx] = gk21(&f, worst.a, mid);
        panels.push(gk21(&f, mid, worst.b));
        evaluations += 42;
    }
}

/// `∫_0^a g(x) x^r dx` for `r > -1` and smooth `g`, via `x = a v^{1/(r+1)}`
/// which absorbs the algebraic weight.
pub fn integrate_algebraic_origin<F: Fn(f64) -> f64>(
    g: F,
    r: f64,
    a: f64,
    tol: Tolerance,
) -> QuadResult {
    assert!(r > -1.0, "weight exponent must exceed -1");
    let m = 1.0 / (r + 1.0);
    let scale = a.powf(r + 1.0) / (r + 1.0);
    integrate(|v| g(a * v.powf(m)), 0.0, 1.0, tol).scale(scale)
}

/// Incremental Wynn epsilon extrapolation.
#[derive(Debug, Default)]
struct WynnEpsilon {
    e: Vec<f64>,
}

impl WynnEpsilon {
    fn push(&mut self, s: f64) -> f64 {
        const TINY: f64 = 1e-300;
        const HUGE: f64 = 1e300;
        let n = self.e.len();
        self.e.push(s);
        if n == 0 {
            return s;
        }
        let mut aux2 = 0.0;
        for j in (1..=n).rev() {
            let aux1 = aux2;
            aux2 = self.e[j - 1];
            let diff = self.e[j] - aux2;
            self.e[j - 1] = if diff.abs() < TINY { HUGE } else { aux1 + 1.0 / diff };
        }
        if n.is_multiple_of(2) {
            self.e[0]
        } else {
            self.e[1]
        }
    }
}

/// `∫_{x0}^∞ cos(k x) x^q dx` for `x0 > 0`.
///
/// For `k = 0` the closed form (requires `q < -1`) is returned. Otherwise the
/// integral is summed panel by panel between consecutive zeros of `cos(k x)`;
/// the panel contributions alternate in sign, so the partial sums are
/// extrapolated with Wynn's epsilon and the reported error is the larger of
/// the extrapolation increment and the quadrature error.
pub fn cosine_power_tail(k: f64, q: f64, x0: f64, tol: f64) -> QuadResult {
    assert!(x0 > 0.0);
    let k = k.abs();
    if k == 0.0 {
        assert!(q < -1.0, "non-oscillatory tail diverges");
        return QuadResult {
            value: -x0.powf(q + 1.0) / (q + 1.0),
            abs_err: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let f = |x: f64| (k * x).cos() * x.powf(q);
    let panel_tol = Tolerance::new(tol * 1e-3, 1e-14);
    let half_period = PI / k;
    let mut j = (k * x0 / PI - 0.5).ceil();
    let mut zero = (j + 0.5) * half_period;
    if zero <= x0 {
        j += 1.0;
        zero = (j + 0.5) * half_period;
    }
    let first = integrate(f, x0, zero, panel_tol);
    let mut partial = first.value;
    let mut quad_err = first.abs_err;
    let mut evaluations = first.evaluations;
    let mut wynn = WynnEpsilon::default();
    let mut previous = wynn.push(partial);
    let mut lo = zero;
    let mut last_increment = f64::INFINITY;
    const MIN_PANELS: usize = 8;
    const MAX_PANELS: usize = 2000;
    for n in 1..=MAX_PANELS {
        let hi = lo + half_period;
        let piece = integrate(f, lo, hi, panel_tol);
        evaluations += piece.evaluations;
        quad_err += piece.abs_err;
        partial += piece.value;
        lo = hi;
        let estimate = wynn.push(partial);
        let increment = (estimate - previous).abs();
        previous = estimate;
        if n >= MIN_PANELS && increment.max(last_increment) < tol {
            return QuadResult {
                value: estimate,
                abs_err: increment.max(last_increment) + quad_err,
                evaluations,
                converged: true,
            };
        }
        last_increment = increment;
    }
    QuadResult {
        value: previous,
        abs_err: last_increment + quad_err,
        evaluations,
        converged: false,
    }
}

//! Adaptive quadrature.
//!
//! Finite intervals use a globally adaptive 21-point Gauss–Kronrod rule
//! (the QUADPACK `qag` scheme). The rule never samples the interval
//! endpoints, so integrable endpoint singularities are tolerated once a
//! substitution has made them mild.
//!
//! Half-lines are handled in two ways:
//! - [`integrate_ray`] walks panels of growing width away from an origin
//!   and lets the caller decide when the remaining tail is negligible.
//! - [`integrate_log_tail`] integrates `∫_a^∞` decade by decade in the
//!   variable `s = ln x`, extrapolates a geometric tail and reports
//!   divergence when the decade contributions stop shrinking.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

// 10-point Gauss weights, paired with XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Mixed absolute/relative accuracy request: the estimate is accepted
/// once `error <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub const fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }

    /// Same relative part, absolute part multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs: self.abs * factor,
            rel: self.rel,
        }
    }
}

/// Integral value with its error estimate and the number of integrand calls.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl Estimate {
    fn accumulate(&mut self, other: Estimate) {
        self.value += other.value;
        self.error += other.error;
        self.evaluations += other.evaluations;
    }
}

struct Rule {
    value: f64,
    error: f64,
    abs_value: f64,
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Rule {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();

    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_k = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = kronrod * half;
    let abs_value = abs_k * abs_half;
    let asc = asc * abs_half;
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_value > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_value);
    }
    Rule {
        value,
        error,
        abs_value,
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Default subdivision budget for [`adaptive`].
pub const MAX_SEGMENTS: usize = 4000;

/// Globally adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    adaptive_with_budget(f, a, b, tol, MAX_SEGMENTS)
}

pub fn adaptive_with_budget<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
    max_segments: usize,
) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::QuadratureFailure(format!(
            "non-finite interval [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Estimate::default());
    }

    let first = gk21(&f, a, b);
    let mut evaluations = 21;
    let mut value = first.value;
    let mut error = first.error;
    let mut abs_value = first.abs_value;
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }

    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: first.value,
        error: first.error,
    });

    loop {
        let floor = 50.0 * f64::EPSILON * abs_value;
        if error <= tol.target(value).max(floor) {
            return Ok(Estimate {
                value,
                error,
                evaluations,
            });
        }
        if heap.len() >= max_segments {
            return Err(Error::QuadratureFailure(format!(
                "subdivision budget of {max_segments} exhausted on [{a}, {b}] (error {error:.3e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Interval no longer splittable in floating point; accept what we have.
            return Ok(Estimate {
                value,
                error,
                evaluations,
            });
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        evaluations += 42;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        abs_value += left.abs_value + right.abs_value;
        if !value.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integrand near {mid}"
            )));
        }
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: left.value,
            error: left.error,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: right.value,
            error: right.error,
        });
    }
}

/// Panel layout for [`integrate_ray`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panels {
    pub first_width: f64,
    pub max_width: f64,
    pub max_panels: usize,
}

/// Integrates `f` from `origin` towards `+∞` (`direction > 0`) or `-∞`.
///
/// Panels start at `first_width` and double up to `max_width`. After each
/// panel `done(t, panel_value, total)` is asked whether the remaining
/// tail beyond `t` can be neglected.
pub fn integrate_ray<F, D>(
    f: F,
    origin: f64,
    direction: f64,
    panels: Panels,
    tol: Tolerance,
    mut done: D,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    D: FnMut(f64, f64, f64) -> bool,
{
    let sign = if direction < 0.0 { -1.0 } else { 1.0 };
    let panel_tol = tol.scaled(0.125);
    let mut total = Estimate::default();
    let mut t = origin;
    let mut width = panels.first_width;
    for _ in 0..panels.max_panels {
        let next = t + sign * width;
        let (lo, hi) = if sign > 0.0 { (t, next) } else { (next, t) };
        let piece = adaptive(&f, lo, hi, panel_tol)?;
        total.accumulate(piece);
        t = next;
        if done(t, piece.value, total.value) {
            return Ok(total);
        }
        width = (width * 2.0).min(panels.max_width);
    }
    Err(Error::QuadratureFailure(format!(
        "tail did not become negligible within {} panels (reached t = {t})",
        panels.max_panels
    )))
}

/// `∫_a^∞ f(x) dx` for `a > 0`, integrated per decade in `s = ln x`.
///
/// Once successive decade contributions shrink geometrically the remaining
/// tail is extrapolated. Contributions that stop shrinking are reported as
/// divergence.
pub fn integrate_log_tail<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<Estimate> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::QuadratureFailure(format!(
            "log-tail start must be positive, got {a}"
        )));
    }
    let g = |s: f64| {
        let x = s.exp();
        if x.is_infinite() {
            0.0
        } else {
            x * f(x)
        }
    };
    let decade = std::f64::consts::LN_10;
    let panel_tol = tol.scaled(0.05);
    let mut total = Estimate::default();
    let mut s = a.ln();
    let mut previous: Option<f64> = None;
    let mut non_shrinking = 0;
    for _ in 0..300 {
        let piece = adaptive(g, s, s + decade, panel_tol)?;
        total.accumulate(piece);
        s += decade;
        let current = piece.value.abs();
        if let Some(prev) = previous {
            if current == 0.0 {
                return Ok(total);
            }
            let ratio = current / prev;
            if ratio < 0.9 {
                non_shrinking = 0;
                let remainder = current * ratio / (1.0 - ratio);
                if remainder <= 0.1 * tol.target(total.value) {
                    total.value += remainder.copysign(piece.value);
                    total.error += remainder;
                    return Ok(total);
                }
            } else {
                non_shrinking += 1;
                if non_shrinking >= 6 {
                    return Err(Error::QuadratureFailure(format!(
                        "integral diverges: decade contributions stop shrinking near x = {:.3e}",
                        s.exp()
                    )));
                }
            }
        } else if current == 0.0 {
            return Ok(total);
        }
        previous = Some(current);
        if !total.value.is_finite() {
            break;
        }
    }
    Err(Error::QuadratureFailure(
        "integral diverges: tail did not converge".to_string(),
    ))
}

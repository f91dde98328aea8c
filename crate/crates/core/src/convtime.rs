//! Convergence times of the error dynamics
//!
//! ```text
//! ẋ1 = −k1 Φ_{k3}(x1) + x2
//! ẋ2 = −2 k2 Φ_{k3}(x1) Φ'_{k3}(x1) + f̈,     |f̈| ≤ L
//! ```
//!
//! With `z = g(x) = (Φ_{k3}(x1), x2)` and the time change `Ψ'(z1) dτ = 2 dt`
//! the unperturbed system becomes the linear system `dz/dτ = A z` with
//! `A = [[−k1/2, 1/2], [−k2, 0]]`. The convergence time from `x0` is then
//!
//! ```text
//! T0(x0) = ∫_0^∞ ½ Ψ'(e1ᵀ e^{Aτ} g(x0)) dτ
//! ```
//!
//! and the global convergence time is the supremum of the same integral
//! over `τ ∈ ℝ` and unit vectors `v`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgf::{self, AdmissibilityConstants, GeneratingFunction, ParamTriple};
use crate::error::{Error, Result};
use crate::quad::{self, Estimate, Panels, Tolerance};
use crate::search;

/// Relative width of the band `|k1² − 8k2| ≤ REPEATED_RTOL·k1²` treated as a repeated eigenvalue.
pub const REPEATED_RTOL: f64 = 1e-10;

/// Default absolute tolerance for convergence-time integrals.
pub const DEFAULT_TOL: Tolerance = Tolerance::new(1e-8, 1e-12);

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Eigenstructure {
    /// `λ1 > λ2`, both negative.
    RealDistinct { lambda1: f64, lambda2: f64 },
    RealRepeated { lambda: f64 },
    /// `re ± i·im`.
    Complex { re: f64, im: f64 },
}

/// The matrix `A = [[−k1/2, 1/2], [−k2, 0]]` with its eigenstructure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemMatrix {
    pub k1: f64,
    pub k2: f64,
    eig: Eigenstructure,
    // A − σI squares to q·I with σ = −k1/4, q = (k1² − 8k2)/16.
    sigma: f64,
    q: f64,
}

impl SystemMatrix {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if !(k1 > 0.0 && k2 > 0.0 && k1.is_finite() && k2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "k1, k2 must be positive, got ({k1}, {k2})"
            )));
        }
        let disc = k1 * k1 - 8.0 * k2;
        let sigma = -0.25 * k1;
        let (eig, q) = if disc.abs() <= REPEATED_RTOL * k1 * k1 {
            (Eigenstructure::RealRepeated { lambda: sigma }, 0.0)
        } else if disc > 0.0 {
            let h = disc.sqrt();
            (
                Eigenstructure::RealDistinct {
                    // −(k1 − h)/4 without cancellation
                    lambda1: -2.0 * k2 / (k1 + h),
                    lambda2: -0.25 * (k1 + h),
                },
                disc / 16.0,
            )
        } else {
            (
                Eigenstructure::Complex {
                    re: sigma,
                    im: 0.25 * (-disc).sqrt(),
                },
                disc / 16.0,
            )
        };
        Ok(Self {
            k1,
            k2,
            eig,
            sigma,
            q,
        })
    }

    pub fn from_triple(kappa: &ParamTriple) -> Result<Self> {
        Self::new(kappa.k1, kappa.k2)
    }

    pub fn eigenstructure(&self) -> Eigenstructure {
        self.eig
    }

    pub fn matrix(&self) -> Mat2 {
        [[-0.5 * self.k1, 0.5], [-self.k2, 0.0]]
    }

    /// Decay rate of the slowest mode: `|λ1|` for real eigenvalues, `|Re λ|` otherwise.
    pub fn slow_rate(&self) -> f64 {
        match self.eig {
            Eigenstructure::RealDistinct { lambda1, .. } => -lambda1,
            Eigenstructure::RealRepeated { lambda } => -lambda,
            Eigenstructure::Complex { re, .. } => -re,
        }
    }

    /// Largest eigenvalue magnitude (fastest time scale).
    pub fn fast_rate(&self) -> f64 {
        match self.eig {
            Eigenstructure::RealDistinct { lambda2, .. } => -lambda2,
            Eigenstructure::RealRepeated { lambda } => -lambda,
            Eigenstructure::Complex { re, im } => re.hypot(im),
        }
    }

    /// Half period of the oscillation in the complex case.
    pub fn half_period(&self) -> Option<f64> {
        match self.eig {
            Eigenstructure::Complex { im, .. } => Some(std::f64::consts::PI / im),
            _ => None,
        }
    }

    // (e^{στ} cosh(√q τ), e^{στ} sinh(√q τ)/√q), with the trigonometric
    // counterparts for q < 0 and series near q·τ² = 0.
    fn basis(&self, tau: f64) -> (f64, f64) {
        let qt2 = self.q * tau * tau;
        if qt2.abs() < 1e-6 {
            let e = (self.sigma * tau).exp();
            let c = 1.0 + qt2 / 2.0 + qt2 * qt2 / 24.0;
            let s = tau * (1.0 + qt2 / 6.0 + qt2 * qt2 / 120.0);
            return (e * c, e * s);
        }
        match self.eig {
            Eigenstructure::RealDistinct { lambda1, lambda2 } => {
                let (e1, e2) = ((lambda1 * tau).exp(), (lambda2 * tau).exp());
                (0.5 * (e1 + e2), (e1 - e2) / (lambda1 - lambda2))
            }
            Eigenstructure::Complex { re, im } => {
                let e = (re * tau).exp();
                let (sin, cos) = (im * tau).sin_cos();
                (e * cos, e * sin / im)
            }
            Eigenstructure::RealRepeated { .. } => unreachable!("q = 0 handled by the series branch"),
        }
    }

    /// `e^{Aτ}` in closed form.
    pub fn expm(&self, tau: f64) -> Mat2 {
        let (c, s) = self.basis(tau);
        let m = self.shifted();
        [
            [c + s * m[0][0], s * m[0][1]],
            [s * m[1][0], c + s * m[1][1]],
        ]
    }

    // A − σI
    fn shifted(&self) -> Mat2 {
        [[-0.25 * self.k1, 0.5], [-self.k2, 0.25 * self.k1]]
    }

    /// `e1ᵀ e^{Aτ} w`.
    pub fn first_component(&self, tau: f64, w: [f64; 2]) -> f64 {
        let (c, s) = self.basis(tau);
        let m = self.shifted();
        c * w[0] + s * (m[0][0] * w[0] + m[0][1] * w[1])
    }

    pub fn apply(&self, tau: f64, w: [f64; 2]) -> [f64; 2] {
        let e = self.expm(tau);
        [
            e[0][0] * w[0] + e[0][1] * w[1],
            e[1][0] * w[0] + e[1][1] * w[1],
        ]
    }

    // Bounds on |e^{σs} c(s)| and |e^{σs} s(s)| as (sup over s ≥ 0, ∫_0^∞),
    // for the second function; the first is bounded by e^{-r s}.
    fn sine_part_bounds(&self) -> (f64, f64) {
        let r = self.slow_rate();
        let sup_t = 1.0 / (std::f64::consts::E * r);
        let int_t = 1.0 / (r * r);
        match self.eig {
            Eigenstructure::RealDistinct { lambda1, lambda2 } => {
                let two_delta = lambda1 - lambda2;
                (sup_t.min(1.0 / two_delta), int_t.min(1.0 / (two_delta * r)))
            }
            Eigenstructure::Complex { im, .. } => (sup_t.min(1.0 / im), int_t.min(1.0 / (im * r))),
            Eigenstructure::RealRepeated { .. } => (sup_t, int_t),
        }
    }

    /// Upper bounds on `sup_{s≥0} |e1ᵀ e^{As} w|` and `∫_0^∞ |e1ᵀ e^{As} w| ds`.
    pub fn first_component_bounds(&self, w: [f64; 2]) -> (f64, f64) {
        let m = self.shifted();
        let (a, b) = (w[0].abs(), (m[0][0] * w[0] + m[0][1] * w[1]).abs());
        let (sup_s, int_s) = self.sine_part_bounds();
        (a + b * sup_s, a / self.slow_rate() + b * int_s)
    }
}

/// `e^{Aτ}` for the system matrix of `(k1, k2)`.
pub fn expm2(sys: &SystemMatrix, tau: f64) -> Mat2 {
    sys.expm(tau)
}

/// Differentiator error `x1 = f − y1`, `x2 = ḟ − y2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorState {
    pub x1: f64,
    pub x2: f64,
}

impl ErrorState {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// `g(x) = (Φ_{k3}(x1), x2)`.
    pub fn transformed(&self, dgf: &GeneratingFunction, k3: f64) -> [f64; 2] {
        [dgf::nu1(dgf, k3, self.x1), self.x2]
    }
}

fn half_psi_prime(dgf: &GeneratingFunction, k3: f64, z: f64) -> f64 {
    if !z.is_finite() {
        return 0.0;
    }
    dgf::psi_prime(dgf, k3, z).map_or(f64::NAN, |v| 0.5 * v)
}

/// `∫_0^∞ ½ Ψ'(e1ᵀ e^{Aτ} w) dτ`.
///
/// The tail is cut once `|e1ᵀ e^{As} w|` provably stays below the radius
/// where `Ψ'(z) ≤ 3|z|`, and the resulting bound on the remainder is below
/// a tenth of the tolerance.
fn forward_integral(
    dgf: &GeneratingFunction,
    k3: f64,
    sys: &SystemMatrix,
    w: [f64; 2],
    radius: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    if w == [0.0, 0.0] {
        return Ok(Estimate::default());
    }
    let fast = sys.fast_rate();
    let mut max_width = 1.0 / sys.slow_rate();
    if let Some(hp) = sys.half_period() {
        max_width = max_width.min(0.5 * hp);
    }
    let panels = Panels {
        first_width: (0.25 / fast).min(max_width),
        max_width,
        max_panels: 20_000,
    };
    quad::integrate_ray(
        |tau| half_psi_prime(dgf, k3, sys.first_component(tau, w)),
        0.0,
        1.0,
        panels,
        tol,
        |tau, _, total| {
            let (sup, l1) = sys.first_component_bounds(sys.apply(tau, w));
            sup <= radius && 1.5 * l1 <= 0.1 * tol.target(total)
        },
    )
}

/// `∫_{-∞}^0 ½ Ψ'(e1ᵀ e^{Aτ} w) dτ`, walking left until three consecutive
/// panels are negligible. A non-finite `h` means the exponential overflowed.
fn backward_integral(
    dgf: &GeneratingFunction,
    k3: f64,
    sys: &SystemMatrix,
    h: impl Fn(f64) -> f64,
    tol: Tolerance,
) -> Result<Estimate> {
    let fast = sys.fast_rate();
    let mut max_width = 2.0 / fast;
    if let Some(hp) = sys.half_period() {
        max_width = max_width.max(hp);
    }
    let panels = Panels {
        first_width: 0.25 / fast,
        max_width,
        max_panels: 20_000,
    };
    let mut quiet = 0;
    quad::integrate_ray(
        |tau| half_psi_prime(dgf, k3, h(tau)),
        0.0,
        -1.0,
        panels,
        tol,
        |tau, piece, total| {
            if piece.abs() <= 1e-3 * tol.target(total) && !(h(tau).abs() < 1.0) {
                quiet += 1;
            } else {
                quiet = 0;
            }
            quiet >= 3
        },
    )
}

/// Unperturbed convergence time `T0(x0)` at the default tolerance.
pub fn t0_exact(dgf: &GeneratingFunction, kappa: &ParamTriple, x0: ErrorState) -> Result<f64> {
    t0_exact_with(dgf, kappa, x0, DEFAULT_TOL).map(|e| e.value)
}

/// Unperturbed convergence time `T0(x0) = ∫_0^∞ ½ Ψ'(e1ᵀ e^{Aτ} g(x0)) dτ`.
pub fn t0_exact_with(
    dgf: &GeneratingFunction,
    kappa: &ParamTriple,
    x0: ErrorState,
    tol: Tolerance,
) -> Result<Estimate> {
    let sys = SystemMatrix::from_triple(kappa)?;
    let radius = dgf::slope_bound_radius(dgf, kappa.k3)?;
    forward_integral(dgf, kappa.k3, &sys, x0.transformed(dgf, kappa.k3), radius, tol)
}

/// `∫_0^∞ Ψ'(c e^{λτ}) dτ = −(k3 λ)⁻¹ ∫_0^{Φ⁻¹(k3 c)} dx / Φ(x)`, evaluated
/// through the right-hand side. `c` may be infinite.
pub fn single_exp_reduction(dgf: &GeneratingFunction, k3: f64, lambda: f64, c: f64) -> Result<f64> {
    if !(lambda < 0.0) || !(k3 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need lambda < 0 and k3 > 0, got lambda = {lambda}, k3 = {k3}"
        )));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let upper = if c.is_infinite() {
        f64::INFINITY
    } else {
        dgf::invert_phi(dgf, k3 * c)?
    };
    let integral = dgf.reciprocal_integral(upper, Tolerance::new(1e-12, 1e-12))?;
    Ok(-integral.value / (k3 * lambda))
}

/// Largest admissible perturbation bound `L̄` in closed form.
pub fn lbar(k1: f64, k2: f64, d: f64) -> f64 {
    let disc = k1 * k1 - 8.0 * k2;
    if disc >= 0.0 {
        k2 / d
    } else {
        k2 / d * (std::f64::consts::PI * k1 / (2.0 * (-disc).sqrt())).tanh()
    }
}

/// `L̄ = 1 / (D ∫_0^∞ |e1ᵀ e^{Aτ} e2| dτ)` by quadrature, splitting the
/// integrand at its sign changes.
pub fn lbar_integral(k1: f64, k2: f64, d: f64) -> Result<f64> {
    let sys = SystemMatrix::new(k1, k2)?;
    let e2 = [0.0, 1.0];
    let f = |tau: f64| sys.first_component(tau, e2);
    let tol = Tolerance::new(1e-14, 1e-12);

    let mut width = 1.0 / sys.fast_rate();
    if let Some(hp) = sys.half_period() {
        width = width.min(0.25 * hp);
    }
    let samples = 8;
    let mut total = 0.0;
    let mut t = 0.0;
    for _ in 0..100_000 {
        // Sub-sample the panel to bracket sign changes, then integrate |f| piecewise.
        let mut left = t;
        for i in 1..=samples {
            let right = t + width * i as f64 / samples as f64;
            let mut pieces = vec![left];
            if f(left) * f(right) < 0.0 {
                pieces.push(bisect_root(&f, left, right));
            }
            pieces.push(right);
            for w in pieces.windows(2) {
                total += quad::adaptive(|s| f(s).abs(), w[0], w[1], tol)?.value;
            }
            left = right;
        }
        t += width;
        let (_, rest) = sys.first_component_bounds(sys.apply(t, e2));
        if rest <= 1e-13 * total {
            return Ok(1.0 / (d * total));
        }
    }
    Err(Error::QuadratureFailure(
        "Lbar integral did not converge".to_string(),
    ))
}

fn bisect_root<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Perturbed bound `T_L ≤ T0 / (1 − L/L̄)`.
pub fn t_perturbed_bound(t0: f64, l: f64, lbar: f64) -> Result<f64> {
    if l >= lbar {
        return Err(Error::LipschitzTooLarge { l, lbar });
    }
    Ok(t0 / (1.0 - l / lbar))
}

fn require_real(kappa: &ParamTriple) -> Result<()> {
    if kappa.discriminant() < -REPEATED_RTOL * kappa.k1 * kappa.k1 {
        return Err(Error::BoundNotApplicable {
            k1: kappa.k1,
            k2: kappa.k2,
        });
    }
    Ok(())
}

/// Lower bound on the global convergence time,
/// `2 B / ((k1 − √(k1² − 8k2)) k3)`, where `b_exact = ∫_0^∞ dx/Φ`.
pub fn lower_bound(b_exact: f64, kappa: &ParamTriple) -> Result<f64> {
    require_real(kappa)?;
    let disc = kappa.discriminant();
    let h = if disc <= REPEATED_RTOL * kappa.k1 * kappa.k1 { 0.0 } else { disc.sqrt() };
    // k1 − h = 8 k2 / (k1 + h)
    let gap = 8.0 * kappa.k2 / (kappa.k1 + h);
    Ok(2.0 * b_exact / (gap * kappa.k3))
}

/// Upper bound `T̃(Φ, κ)` on the unperturbed global convergence time.
pub fn upper_bound_ttilde(constants: &AdmissibilityConstants, kappa: &ParamTriple) -> Result<f64> {
    require_real(kappa)?;
    let ParamTriple { k1, k2, k3 } = *kappa;
    let (b, c) = (constants.b, constants.c);
    let disc = kappa.discriminant();
    if disc.abs() <= REPEATED_RTOL * k1 * k1 {
        return Ok((c + 6.0 * b) / (k1 * k3));
    }
    // log((k1 + h)/(k1 − h)) / (2 h) = atanh(h/k1) / h, which tends to 1/k1 as h → 0.
    let h = disc.sqrt();
    let r = h / k1;
    let atanh_over_h = if r < 1e-4 {
        (1.0 + r * r / 3.0 + r.powi(4) / 5.0) / k1
    } else {
        r.atanh() / h
    };
    Ok(atanh_over_h / k3 * c + (k1 * k1 + 4.0 * k2) / (2.0 * k1 * k2 * k3) * b)
}

/// Parametrization used for the outer supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupremumForm {
    /// Exponential pair for distinct real eigenvalues, unit circle otherwise.
    Auto,
    /// `v = (cos θ, sin θ)`, `θ ∈ [0, π)`; valid for all gains.
    UnitCircle,
    /// `|a| e^{λ1 τ} + a e^{λ2 τ}`, `a ∈ ℝ`; requires `k1² > 8 k2`.
    ExponentialPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalSearch {
    pub form: SupremumForm,
    pub grid_points: usize,
    pub inner_tol: f64,
}

impl Default for GlobalSearch {
    fn default() -> Self {
        Self {
            form: SupremumForm::Auto,
            grid_points: 256,
            inner_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalConvTime {
    pub value: f64,
    /// θ for the unit circle, `a` for the exponential pair (`±∞` for the
    /// slow eigen-trajectory, `0` for the fast one).
    pub argmax: f64,
    pub form: SupremumForm,
    pub grid_points: usize,
    pub inner_tol: f64,
    /// The supremum is the limit along an eigen-trajectory rather than an
    /// interior grid point.
    pub eigen_limit: bool,
}

type Objective<'a> = Box<dyn Fn(f64) -> Result<f64> + Sync + 'a>;

/// Numerical global convergence time with the default search settings.
pub fn global_convtime_numeric(dgf: &GeneratingFunction, kappa: &ParamTriple) -> Result<GlobalConvTime> {
    global_convtime_with(dgf, kappa, GlobalSearch::default())
}

// ∫_ℝ ½ Ψ'(e^{λτ}) dτ = B / (2 k3 |λ|).
fn eigen_trajectory_time(dgf: &GeneratingFunction, k3: f64, lambda: f64) -> Result<f64> {
    Ok(0.5 * single_exp_reduction(dgf, k3, lambda, f64::INFINITY)?)
}

/// Supremum over unit vectors `v` of `∫_{−∞}^{∞} ½ Ψ'(e1ᵀ e^{Aτ} v) dτ`.
///
/// Inner integrals run in parallel over the outer grid; the best grid
/// point is refined by golden-section search. Near a real eigenvector the
/// objective approaches its limit only logarithmically, so eigen-trajectories
/// enter as separate candidates evaluated in closed form.
pub fn global_convtime_with(
    dgf: &GeneratingFunction,
    kappa: &ParamTriple,
    search: GlobalSearch,
) -> Result<GlobalConvTime> {
    let sys = SystemMatrix::from_triple(kappa)?;
    let k3 = kappa.k3;
    let radius = dgf::slope_bound_radius(dgf, k3)?;
    let tol = Tolerance::new(search.inner_tol, 0.0);
    let n = search.grid_points.max(8);
    let eig = sys.eigenstructure();
    let form = match (search.form, eig) {
        (SupremumForm::Auto, Eigenstructure::RealDistinct { .. }) => SupremumForm::ExponentialPair,
        (SupremumForm::Auto, _) => SupremumForm::UnitCircle,
        (f, _) => f,
    };

    let (grid, objective): (Vec<f64>, Objective) = match form {
        SupremumForm::ExponentialPair => {
            let Eigenstructure::RealDistinct { lambda1, lambda2 } = eig else {
                return Err(Error::BoundNotApplicable {
                    k1: kappa.k1,
                    k2: kappa.k2,
                });
            };
            // Signed log grid: s = ±(1 + 20u) ↦ a = ±10^{|s| − 11}, |a| ∈ [1e-10, 1e10].
            let half = n / 2;
            let grid: Vec<f64> = (0..2 * half)
                .map(|i| {
                    let u = (i % half) as f64 / (half - 1) as f64;
                    let sign = if i < half { -1.0 } else { 1.0 };
                    sign * (1.0 + 20.0 * u)
                })
                .collect();
            let objective = move |s: f64| {
                let a = s.signum() * 10f64.powf(s.abs() - 11.0);
                let h = move |t: f64| a.abs() * (lambda1 * t).exp() + a * (lambda2 * t).exp();
                let tail = 0.1 * tol.abs;
                let right = quad::integrate_ray(
                    |t| half_psi_prime(dgf, k3, h(t)),
                    0.0,
                    1.0,
                    Panels {
                        first_width: 0.25 / -lambda2,
                        max_width: 1.0 / -lambda1,
                        max_panels: 20_000,
                    },
                    tol.scaled(0.5),
                    |t, _, _| {
                        let env = 2.0 * a.abs() * (lambda1 * t).exp();
                        env <= radius && 1.5 * env / -lambda1 <= tail
                    },
                )?;
                let left = backward_integral(dgf, k3, &sys, h, tol.scaled(0.5))?;
                Ok(right.value + left.value)
            };
            (grid, Box::new(objective))
        }
        _ => {
            let grid = (0..n)
                .map(|i| std::f64::consts::PI * i as f64 / n as f64)
                .collect();
            let objective = move |theta: f64| {
                let v = [theta.cos(), theta.sin()];
                let right = forward_integral(dgf, k3, &sys, v, radius, tol.scaled(0.5))?;
                let left = backward_integral(dgf, k3, &sys, |t| sys.first_component(t, v), tol.scaled(0.5))?;
                Ok(right.value + left.value)
            };
            (grid, Box::new(objective))
        }
    };

    let values: Vec<f64> = grid
        .par_iter()
        .map(|&p| objective(p))
        .collect::<Result<Vec<f64>>>()?;
    let best = search::argmax(&values).ok_or(Error::NoBracket)?;

    let (lo, hi) = match form {
        SupremumForm::ExponentialPair => {
            let half = n / 2;
            let lo = if best % half == 0 { grid[best] } else { grid[best - 1] };
            let hi = if best % half == half - 1 { grid[best] } else { grid[best + 1] };
            (lo, hi)
        }
        // Periodic in θ with period π.
        _ => {
            let step = std::f64::consts::PI / n as f64;
            (grid[best] - step, grid[best] + step)
        }
    };
    let refined = search::golden_max(|x| objective(x).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-9);
    let (mut value, arg) = if refined.value > values[best] {
        (refined.value, refined.arg)
    } else {
        (values[best], grid[best])
    };
    let mut argmax = match form {
        SupremumForm::ExponentialPair => arg.signum() * 10f64.powf(arg.abs() - 11.0),
        _ => arg.rem_euclid(std::f64::consts::PI),
    };

    // Eigen-trajectories: (value, argument in the chosen parametrization).
    let mut limits = Vec::new();
    match eig {
        Eigenstructure::RealDistinct { lambda1, lambda2 } => {
            let slow = eigen_trajectory_time(dgf, k3, lambda1)?;
            let fast = eigen_trajectory_time(dgf, k3, lambda2)?;
            if form == SupremumForm::ExponentialPair {
                limits.push((slow, f64::INFINITY));
                limits.push((fast, 0.0));
            } else {
                let angle = |l: f64| (2.0 * l + kappa.k1).atan2(1.0).rem_euclid(std::f64::consts::PI);
                limits.push((slow, angle(lambda1)));
                limits.push((fast, angle(lambda2)));
            }
        }
        Eigenstructure::RealRepeated { lambda } => {
            let angle = (2.0 * lambda + kappa.k1).atan2(1.0).rem_euclid(std::f64::consts::PI);
            limits.push((eigen_trajectory_time(dgf, k3, lambda)?, angle));
        }
        Eigenstructure::Complex { .. } => {}
    }
    let mut eigen_limit = false;
    for (v, a) in limits {
        if v > value {
            value = v;
            argmax = a;
            eigen_limit = true;
        }
    }

    Ok(GlobalConvTime {
        value,
        argmax,
        form,
        grid_points: grid.len(),
        inner_tol: search.inner_tol,
        eigen_limit,
    })
}

/// Analytic bracket around the global convergence time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lower: Option<f64>,
    pub numeric: GlobalConvTime,
    pub upper: Option<f64>,
}

/// Lower bound, numerical supremum and `T̃`; the analytic bounds are `None`
/// when `k1² < 8 k2`.
pub fn bound_report(
    dgf: &GeneratingFunction,
    constants: &AdmissibilityConstants,
    kappa: &ParamTriple,
) -> Result<BoundReport> {
    let numeric = global_convtime_numeric(dgf, kappa)?;
    let lower = lower_bound(constants.b, kappa).ok();
    let upper = upper_bound_ttilde(constants, kappa).ok();
    Ok(BoundReport {
        lower,
        numeric,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn matmul(a: Mat2, b: Mat2) -> Mat2 {
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    }

    // Oracle: scaling and squaring of a Taylor series.
    fn expm_taylor(a: Mat2, tau: f64) -> Mat2 {
        let squarings = 12;
        let scale = tau / f64::from(1 << squarings);
        let m = [[a[0][0] * scale, a[0][1] * scale], [a[1][0] * scale, a[1][1] * scale]];
        let mut result = [[1.0, 0.0], [0.0, 1.0]];
        let mut term = result;
        for k in 1..20 {
            term = matmul(term, m);
            let inv = 1.0 / k as f64;
            term = [[term[0][0] * inv, term[0][1] * inv], [term[1][0] * inv, term[1][1] * inv]];
            for i in 0..2 {
                for j in 0..2 {
                    result[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..squarings {
            result = matmul(result, result);
        }
        result
    }

    #[test]
    fn expm_at_zero_is_identity() {
        for (k1, k2) in [(5.0, 1.0), (8f64.sqrt(), 1.0), (1.0, 1.0)] {
            let sys = SystemMatrix::new(k1, k2).unwrap();
            assert_eq!(expm2(&sys, 0.0), [[1.0, 0.0], [0.0, 1.0]]);
        }
    }

    #[test]
    fn expm_matches_taylor_oracle() {
        for (k1, k2) in [(5.0, 1.0), (8f64.sqrt(), 1.0), (1.0, 1.0), (6.0, 4.5), (3.0, 1.2)] {
            let sys = SystemMatrix::new(k1, k2).unwrap();
            for tau in [-1.5, -0.2, 0.3, 1.0, 4.0] {
                let e = sys.expm(tau);
                let o = expm_taylor(sys.matrix(), tau);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((e[i][j] - o[i][j]).abs() < 1e-10 * (1.0 + o[i][j].abs()), "k=({k1},{k2}) tau={tau}");
                    }
                }
            }
        }
    }

    #[test]
    fn eigenvalues_k1_5() {
        let sys = SystemMatrix::new(5.0, 1.0).unwrap();
        let Eigenstructure::RealDistinct { lambda1, lambda2 } = sys.eigenstructure() else {
            panic!("expected real eigenvalues")
        };
        // Roots of λ² + 2.5λ + 0.5
        let root = |s: f64| (-2.5 + s * (2.5f64 * 2.5 - 2.0).sqrt()) / 2.0;
        assert_relative_eq!(lambda1, root(1.0), epsilon = 1e-12);
        assert_relative_eq!(lambda2, root(-1.0), epsilon = 1e-12);
        assert_relative_eq!(lambda1, -0.219_223, epsilon = 1e-6);
        assert_relative_eq!(lambda2, -2.280_776, epsilon = 1e-6);
    }

    #[test]
    fn repeated_boundary_uses_jordan_form() {
        let sys = SystemMatrix::new(8f64.sqrt(), 1.0).unwrap();
        let lambda = -8f64.sqrt() / 4.0;
        assert_eq!(sys.eigenstructure(), Eigenstructure::RealRepeated { lambda });
        let a = sys.matrix();
        for tau in [0.5, 2.0, 7.0] {
            let e = sys.expm(tau);
            let f = (lambda * tau).exp();
            let jordan = [
                [f * (1.0 + (a[0][0] - lambda) * tau), f * a[0][1] * tau],
                [f * a[1][0] * tau, f * (1.0 + (a[1][1] - lambda) * tau)],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    assert_relative_eq!(e[i][j], jordan[i][j], epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn expm_continuous_across_boundary() {
        let k1 = 8f64.sqrt();
        let at = SystemMatrix::new(k1, 1.0).unwrap().expm(3.0);
        for eps in [1e-6, 1e-9] {
            for k2 in [1.0 + eps, 1.0 - eps] {
                let e = SystemMatrix::new(k1, k2).unwrap().expm(3.0);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((e[i][j] - at[i][j]).abs() < 20.0 * eps);
                    }
                }
            }
        }
    }

    #[test]
    fn first_component_bounds_hold() {
        for (k1, k2) in [(5.0, 1.0), (8f64.sqrt(), 1.0), (1.0, 1.0), (10.0, 1.0)] {
            let sys = SystemMatrix::new(k1, k2).unwrap();
            for w in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
                let (sup, l1) = sys.first_component_bounds(w);
                let samples: Vec<f64> = (0..20_000).map(|i| sys.first_component(i as f64 * 0.005, w).abs()).collect();
                let max = samples.iter().cloned().fold(0.0, f64::max);
                let riemann: f64 = samples.iter().sum::<f64>() * 0.005;
                assert!(max <= sup * (1.0 + 1e-12));
                assert!(riemann <= l1 * 1.001);
            }
        }
    }

    #[test]
    fn t0_is_zero_at_origin() {
        let kappa = ParamTriple::new(6.0, 4.5, 4.182).unwrap();
        assert_eq!(t0_exact(&GeneratingFunction::ured(), &kappa, ErrorState::default()).unwrap(), 0.0);
    }

    #[test]
    fn t0_on_eigenvector_matches_single_exponential() {
        let ured = GeneratingFunction::ured();
        let kappa = ParamTriple::new(5.0, 1.0, 1.0).unwrap();
        let sys = SystemMatrix::from_triple(&kappa).unwrap();
        let Eigenstructure::RealDistinct { lambda1, .. } = sys.eigenstructure() else {
            panic!()
        };
        // Eigenvector of A for λ1: (1, 2λ1 + k1).
        for c in [0.3, 2.0] {
            let z = [c, c * (2.0 * lambda1 + kappa.k1)];
            // g(x0) = z  ⇒  x1 = Ψ(z1)
            let x1 = dgf::psi(&ured, kappa.k3, z[0]).unwrap();
            let t0 = t0_exact_with(&ured, &kappa, ErrorState::new(x1, z[1]), Tolerance::new(1e-12, 1e-12)).unwrap();
            let reduced = 0.5 * single_exp_reduction(&ured, kappa.k3, lambda1, c).unwrap();
            assert_relative_eq!(t0.value, reduced, max_relative = 1e-8);
        }
    }

    #[test]
    fn single_exp_examples() {
        let ured = GeneratingFunction::ured();
        assert_eq!(single_exp_reduction(&ured, 1.0, -1.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(single_exp_reduction(&ured, 1.0, -1.0, f64::INFINITY).unwrap(), PI, max_relative = 1e-10);
        assert_relative_eq!(single_exp_reduction(&ured, 1.0, -0.5, 2.0).unwrap(), PI, max_relative = 1e-10);
        assert!(single_exp_reduction(&ured, 1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn lbar_examples() {
        assert_eq!(lbar(8f64.sqrt(), 1.0, 1.0), 1.0);
        assert_relative_eq!(lbar(1.0, 1.0, 1.0), (PI / (2.0 * 7f64.sqrt())).tanh(), epsilon = 1e-15);
        assert_relative_eq!(lbar(1.0, 1.0, 1.0), 0.532_555_197, epsilon = 1e-9);
        assert_eq!(lbar(6.0, 4.5, 1.0), 4.5);
        assert_eq!(lbar(10.0, 1.0, 2.0), 0.5);
    }

    #[test]
    fn lbar_integral_examples() {
        assert_relative_eq!(lbar_integral(8f64.sqrt(), 1.0, 1.0).unwrap(), 1.0, max_relative = 1e-6);
        assert_relative_eq!(lbar_integral(1.0, 1.0, 1.0).unwrap(), 0.532_555_197, epsilon = 1e-9);
        assert_relative_eq!(lbar_integral(10.0, 1.0, 2.0).unwrap(), 0.5, max_relative = 1e-6);
    }

    #[test]
    fn perturbed_bound_examples() {
        assert_eq!(t_perturbed_bound(1.0, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(t_perturbed_bound(1.0, 0.5, 1.0).unwrap(), 2.0);
        assert_relative_eq!(t_perturbed_bound(6.9, 1.0 / 4.5, 1.0).unwrap(), 6.9 * 4.5 / 3.5, epsilon = 1e-12);
        assert!(matches!(t_perturbed_bound(1.0, 1.0, 1.0), Err(Error::LipschitzTooLarge { .. })));
    }

    #[test]
    fn analytic_bound_examples() {
        let ured = AdmissibilityConstants::exact(PI, 1.0 / 3f64.sqrt(), 1.0);
        let exp = AdmissibilityConstants::exact(PI, 1.0, 1.0);
        let k = |k1: f64| ParamTriple::new(k1, 1.0, 1.0).unwrap();
        assert_relative_eq!(lower_bound(PI, &k(8f64.sqrt())).unwrap(), 2.0 * PI / 8f64.sqrt(), epsilon = 1e-14);
        let tuned = ParamTriple::new(6.0, 4.5, 4.182).unwrap();
        assert_relative_eq!(lower_bound(PI, &tuned).unwrap(), 2.0 * PI / (6.0 * 4.182), epsilon = 1e-14);
        let doubled = ParamTriple::new(6.0, 4.5, 2.0 * 4.182).unwrap();
        assert_relative_eq!(lower_bound(PI, &doubled).unwrap(), 0.5 * lower_bound(PI, &tuned).unwrap(), epsilon = 1e-15);

        assert_relative_eq!(
            upper_bound_ttilde(&ured, &k(8f64.sqrt())).unwrap(),
            (1.0 / 3f64.sqrt() + 6.0 * PI) / 8f64.sqrt(),
            epsilon = 1e-14
        );
        assert_relative_eq!(upper_bound_ttilde(&ured, &k(5.0)).unwrap(), 9.2746, epsilon = 1e-4);
        assert_relative_eq!(upper_bound_ttilde(&exp, &k(8f64.sqrt())).unwrap(), (1.0 + 6.0 * PI) / 8f64.sqrt(), epsilon = 1e-14);

        assert!(matches!(lower_bound(PI, &k(1.0)), Err(Error::BoundNotApplicable { .. })));
        assert!(matches!(upper_bound_ttilde(&ured, &k(1.0)), Err(Error::BoundNotApplicable { .. })));
    }

    #[test]
    fn upper_bound_continuous_at_boundary() {
        let ured = AdmissibilityConstants::exact(PI, 1.0 / 3f64.sqrt(), 1.0);
        let at = upper_bound_ttilde(&ured, &ParamTriple::new(8f64.sqrt(), 1.0, 1.0).unwrap()).unwrap();
        for eps in [1e-3, 1e-6, 1e-9] {
            let near = upper_bound_ttilde(&ured, &ParamTriple::new(8f64.sqrt() * (1.0 + eps), 1.0, 1.0).unwrap()).unwrap();
            assert!((near - at).abs() < 10.0 * eps, "eps {eps}: {near} vs {at}");
        }
    }

    fn lower_upper(dgf: &GeneratingFunction, kappa: &ParamTriple) -> (f64, f64) {
        let constants = dgf.claimed_constants().unwrap();
        (lower_bound(constants.b, kappa).unwrap(), upper_bound_ttilde(&constants, kappa).unwrap())
    }

    #[test]
    fn global_convtime_within_bounds() {
        for dgf in [GeneratingFunction::ured(), GeneratingFunction::exponential()] {
            for k1 in [8f64.sqrt(), 5.0] {
                let kappa = ParamTriple::new(k1, 1.0, 1.0).unwrap();
                let (lo, hi) = lower_upper(&dgf, &kappa);
                let g = global_convtime_numeric(&dgf, &kappa).unwrap();
                assert!(lo - 1e-4 <= g.value && g.value <= hi + 1e-4, "{} k1={k1}: {lo} {} {hi}", dgf.name(), g.value);
            }
        }
    }

    #[test]
    fn global_forms_agree() {
        let ured = GeneratingFunction::ured();
        let kappa = ParamTriple::new(5.0, 1.0, 1.0).unwrap();
        let circle = global_convtime_numeric(&ured, &kappa).unwrap();
        let pair = global_convtime_with(
            &ured,
            &kappa,
            GlobalSearch {
                form: SupremumForm::ExponentialPair,
                ..GlobalSearch::default()
            },
        )
        .unwrap();
        assert_relative_eq!(circle.value, pair.value, max_relative = 1e-5);
    }

    #[test]
    fn global_convtime_complex_case_runs() {
        let ured = GeneratingFunction::ured();
        let kappa = ParamTriple::new(1.0, 1.0, 1.0).unwrap();
        let g = global_convtime_numeric(&ured, &kappa).unwrap();
        assert!(g.value.is_finite() && g.value > 0.0);
    }

    // Oracle: composite Simpson on a long, fine uniform grid.
    fn t0_simpson(dgf: &GeneratingFunction, kappa: &ParamTriple, x0: ErrorState, horizon: f64, n: usize) -> f64 {
        let sys = SystemMatrix::from_triple(kappa).unwrap();
        let w = x0.transformed(dgf, kappa.k3);
        let f = |t: f64| 0.5 * dgf::psi_prime(dgf, kappa.k3, sys.first_component(t, w)).unwrap();
        let h = horizon / n as f64;
        let mut acc = f(0.0) + f(horizon);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn t0_tuned_gains_matches_simpson_and_bounds() {
        let ured = GeneratingFunction::ured();
        let kappa = ParamTriple::new(6.0, 4.5, 4.182).unwrap();
        let x0 = ErrorState::new(0.0, 1.0);
        let t0 = t0_exact(&ured, &kappa, x0).unwrap();
        assert_relative_eq!(t0, t0_simpson(&ured, &kappa, x0, 80.0, 400_000), max_relative = 1e-6);
        let (_, hi) = lower_upper(&ured, &kappa);
        assert!(t0 > 0.0 && t0 <= hi);
    }

    #[test]
    fn scaling_law() {
        let tol = Tolerance::new(1e-14, 1e-11);
        for dgf in [GeneratingFunction::ured(), GeneratingFunction::exponential()] {
            let kappa = ParamTriple::new(5.0, 1.0, 1.5).unwrap();
            for (x1, x2) in [(1.0, 0.0), (-0.3, 2.0), (0.05, -0.7)] {
                let base = t0_exact_with(&dgf, &kappa, ErrorState::new(x1, x2), tol).unwrap().value;
                for alpha in [0.5, 2.0] {
                    for beta in [0.5, 2.0] {
                        let scaled = ParamTriple::new(alpha * kappa.k1, alpha * alpha * kappa.k2, beta * kappa.k3).unwrap();
                        let x = ErrorState::new(x1 / (beta * beta), alpha * x2 / beta);
                        let t = t0_exact_with(&dgf, &scaled, x, tol).unwrap().value;
                        assert_relative_eq!(t, base / (alpha * beta), max_relative = 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn single_exp_identity() {
        for dgf in [GeneratingFunction::ured(), GeneratingFunction::exponential()] {
            for c in [0.1, 1.0, 10.0] {
                for lambda in [-0.5, -2.0] {
                    let k3 = 1.0;
                    let direct = quad::integrate_ray(
                        |t| dgf::psi_prime(&dgf, k3, c * (lambda * t).exp()).unwrap(),
                        0.0,
                        1.0,
                        Panels {
                            first_width: 0.5,
                            max_width: 4.0,
                            max_panels: 1000,
                        },
                        Tolerance::new(1e-13, 1e-12),
                        |t, _, _| 3.0 * c * (lambda * t).exp() / -lambda < 1e-14,
                    )
                    .unwrap()
                    .value;
                    let reduced = single_exp_reduction(&dgf, k3, lambda, c).unwrap();
                    assert_relative_eq!(direct, reduced, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn lbar_branches_agree() {
        for k1 in [0.5, 2.0, 6.0] {
            for k2 in [0.5, 2.0, 4.5] {
                let closed = lbar(k1, k2, 1.3);
                let integral = lbar_integral(k1, k2, 1.3).unwrap();
                assert_relative_eq!(closed, integral, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn homogeneous_approximation_near_origin() {
        let sqrt = GeneratingFunction::sqrt();
        let kappa = ParamTriple::new(5.0, 1.0, 1.0).unwrap();
        let tol = Tolerance::new(1e-16, 1e-11);
        for dgf in [GeneratingFunction::ured(), GeneratingFunction::exponential()] {
            let mut last = f64::INFINITY;
            for alpha in [1e-1, 1e-2, 1e-3] {
                let x0 = ErrorState::new(0.4 * alpha * alpha, -0.8 * alpha);
                let t = t0_exact_with(&dgf, &kappa, x0, tol).unwrap().value;
                let t_sta = t0_exact_with(&sqrt, &kappa, x0, tol).unwrap().value;
                let err = (t / t_sta - 1.0).abs();
                assert!(err < last, "{}: alpha {alpha} err {err} last {last}", dgf.name());
                last = err;
            }
            assert!(last < 1e-2);
        }
    }

    #[test]
    fn global_convtime_matches_brute_force() {
        let exp = GeneratingFunction::exponential();
        let kappa = ParamTriple::new(8f64.sqrt(), 1.0, 1.0).unwrap();
        let sys = SystemMatrix::from_triple(&kappa).unwrap();
        let (dt, t_lo, t_hi) = (0.005, -80.0, 40.0);
        let steps = ((t_hi - t_lo) / dt) as usize;
        let trapezoid = |th: f64| {
            let v = [th.cos(), th.sin()];
            let f = |t: f64| half_psi_prime(&exp, 1.0, sys.first_component(t, v));
            (0..steps)
                .map(|j| {
                    let t = t_lo + j as f64 * dt;
                    0.5 * dt * (f(t) + f(t + dt))
                })
                .sum::<f64>()
        };
        let brute = (0..400).map(|i| trapezoid(PI * i as f64 / 400.0)).fold(0.0, f64::max);
        let g = global_convtime_numeric(&exp, &kappa).unwrap();
        assert_relative_eq!(trapezoid(g.argmax), g.value, max_relative = 1e-5);
        assert!(brute <= g.value + 1e-4, "brute {brute} numeric {}", g.value);
    }
}

//! Forward-Euler simulation of the differentiator.
//!
//! Forward Euler does not in general preserve global stability of the
//! continuous-time differentiator; a non-finite state is reported as
//! divergence.

use std::io::Write;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgf::{self, GeneratingFunction, ParamTriple};
use crate::error::{Error, Result};

/// Identifier of the noise generator, written to output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3), stream = row index";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DifferentiatorState {
    pub y1: f64,
    pub y2: f64,
}

impl DifferentiatorState {
    pub fn new(y1: f64, y2: f64) -> Self {
        Self { y1, y2 }
    }
}

/// Test signal with its derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSpec {
    /// `f(t) = 0.75 cos t + 0.0025 sin 10t + t`, `|f̈| ≤ 1`.
    Fig1,
    /// `f(t) = (cos ωt − 1)/ω² + c t`, `|f̈| ≤ 1`.
    SlopeFamily { omega: f64, c: f64 },
    /// Samples `f(k·period)`, linearly interpolated. Without `derivative`
    /// the reference `ḟ` is the central difference of the samples.
    Custom {
        period: f64,
        samples: Vec<f64>,
        derivative: Option<Vec<f64>>,
    },
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SignalSpec::Fig1 => Ok(()),
            SignalSpec::SlopeFamily { omega, c } => {
                if *omega > 0.0 && omega.is_finite() && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("slope family needs omega > 0, got {omega}")))
                }
            }
            SignalSpec::Custom {
                period,
                samples,
                derivative,
            } => {
                if !(*period > 0.0) || samples.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "custom signal needs a positive period and at least two samples".into(),
                    ));
                }
                if derivative.as_ref().is_some_and(|d| d.len() != samples.len()) {
                    return Err(Error::InvalidParameter(
                        "custom derivative must have as many samples as the signal".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        match self {
            SignalSpec::Fig1 => 0.75 * t.cos() + 0.0025 * (10.0 * t).sin() + t,
            SignalSpec::SlopeFamily { omega, c } => ((omega * t).cos() - 1.0) / (omega * omega) + c * t,
            SignalSpec::Custom { period, samples, .. } => interpolate(samples, *period, t),
        }
    }

    pub fn f_dot(&self, t: f64) -> f64 {
        match self {
            SignalSpec::Fig1 => -0.75 * t.sin() + 0.025 * (10.0 * t).cos() + 1.0,
            SignalSpec::SlopeFamily { omega, c } => -(omega * t).sin() / omega + c,
            SignalSpec::Custom {
                period,
                samples,
                derivative,
            } => match derivative {
                Some(d) => interpolate(d, *period, t),
                None => {
                    let n = samples.len();
                    let central: Vec<f64> = (0..n)
                        .map(|i| {
                            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                            (samples[b] - samples[a]) / ((b - a) as f64 * period)
                        })
                        .collect();
                    interpolate(&central, *period, t)
                }
            },
        }
    }

    /// `f(0)`, `ḟ(0)` and the initial state `(f(0), 0)` used by the slope sweep.
    pub fn start(&self) -> (f64, f64) {
        (self.f(0.0), self.f_dot(0.0))
    }
}

fn interpolate(values: &[f64], period: f64, t: f64) -> f64 {
    let x = (t / period).max(0.0);
    let i = (x.floor() as usize).min(values.len() - 1);
    if i + 1 >= values.len() {
        return values[values.len() - 1];
    }
    let w = x - i as f64;
    values[i] * (1.0 - w) + values[i + 1] * w
}

/// Uniform measurement noise on `[−amplitude, amplitude]`, resampled every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub ts: f64,
    pub horizon: f64,
    pub conv_tol_x1: f64,
    pub conv_tol_x2: f64,
    pub noise: Option<NoiseSpec>,
    pub seed: u64,
    /// Window for `sup |x2|`; defaults to the second half of the horizon.
    pub steady_window: Option<[f64; 2]>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ts: 1e-4,
            horizon: 4.0,
            conv_tol_x1: 1e-6,
            conv_tol_x2: 1e-3,
            noise: None,
            seed: 0,
            steady_window: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ts > 0.0 && self.horizon.is_finite() && self.ts <= self.horizon) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < Ts <= horizon, got Ts = {}, horizon = {}",
                self.ts, self.horizon
            )));
        }
        if !(self.conv_tol_x1 > 0.0 && self.conv_tol_x2 > 0.0) {
            return Err(Error::InvalidParameter("convergence tolerances must be positive".into()));
        }
        if let Some(n) = self.noise {
            if !(n.amplitude >= 0.0 && n.amplitude.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "noise amplitude must be nonnegative, got {}",
                    n.amplitude
                )));
            }
        }
        let [a, b] = self.window();
        if !(a <= b) {
            return Err(Error::InvalidParameter(format!("empty steady-state window [{a}, {b}]")));
        }
        Ok(())
    }

    pub fn window(&self) -> [f64; 2] {
        self.steady_window.unwrap_or([0.5 * self.horizon, self.horizon])
    }

    fn steps(&self) -> usize {
        (self.horizon / self.ts).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimResult {
    pub times: Vec<f64>,
    pub f_series: Vec<f64>,
    pub f_dot_series: Vec<f64>,
    pub y1_series: Vec<f64>,
    pub y2_series: Vec<f64>,
    pub x1_series: Vec<f64>,
    pub x2_series: Vec<f64>,
    pub tau: Option<f64>,
    pub steady_error: f64,
    pub diverged: bool,
    /// Step at which the state became non-finite.
    pub diverged_at: Option<usize>,
}

/// One forward-Euler step of the differentiator. `ν2(0)` is taken as 0.
pub fn step(
    dgf: &GeneratingFunction,
    kappa: &ParamTriple,
    state: DifferentiatorState,
    f_meas: f64,
    ts: f64,
) -> Result<DifferentiatorState> {
    let e = f_meas - state.y1;
    let n2 = if e == 0.0 { 0.0 } else { dgf::nu2(dgf, kappa.k3, e)? };
    let next = DifferentiatorState {
        y1: state.y1 + ts * (kappa.k1 * dgf::nu1(dgf, kappa.k3, e) + state.y2),
        y2: state.y2 + ts * kappa.k2 * n2,
    };
    if next.y1.is_finite() && next.y2.is_finite() {
        Ok(next)
    } else {
        Err(Error::Diverged { step: 0, time: 0.0 })
    }
}

/// One step of the error dynamics in `(x1, x2)`, driven by the signal
/// increments `d1 = Δf − Ts ḟ` and `d2 = Δḟ` over the step.
pub fn error_step(
    dgf: &GeneratingFunction,
    kappa: &ParamTriple,
    x: [f64; 2],
    ts: f64,
    d1: f64,
    d2: f64,
) -> Result<[f64; 2]> {
    let n2 = if x[0] == 0.0 { 0.0 } else { dgf::nu2(dgf, kappa.k3, x[0])? };
    Ok([
        x[0] - ts * kappa.k1 * dgf::nu1(dgf, kappa.k3, x[0]) + ts * x[1] + d1,
        x[1] - ts * kappa.k2 * n2 + d2,
    ])
}

/// Earliest sample time after which both error bounds hold until the end.
pub fn detect_tau(times: &[f64], x1: &[f64], x2: &[f64], tol_x1: f64, tol_x2: f64) -> Option<f64> {
    let mut first = None;
    for k in (0..times.len()).rev() {
        if x1[k].abs() <= tol_x1 && x2[k].abs() <= tol_x2 {
            first = Some(k);
        } else {
            break;
        }
    }
    first.map(|k| times[k])
}

/// Simulates over the horizon; divergence truncates the series and is
/// flagged in the result.
pub fn run_lenient(
    dgf: &GeneratingFunction,
    kappa: &ParamTriple,
    signal: &SignalSpec,
    config: &SimConfig,
    init: DifferentiatorState,
) -> Result<SimResult> {
    simulate(dgf, kappa, signal, config, init, 0)
}

/// Simulates over the horizon and fails with "simulation diverged" on a
/// non-finite state.
pub fn run(
    dgf: &GeneratingFunction,
    kappa: &ParamTriple,
    signal: &SignalSpec,
    config: &SimConfig,
    init: DifferentiatorState,
) -> Result<SimResult> {
    let r = run_lenient(dgf, kappa, signal, config, init)?;
    match r.diverged_at {
        Some(step) => Err(Error::Diverged {
            step,
            time: step as f64 * config.ts,
        }),
        None => Ok(r),
    }
}

fn simulate(
    dgf: &GeneratingFunction,
    kappa: &ParamTriple,
    signal: &SignalSpec,
    config: &SimConfig,
    init: DifferentiatorState,
    stream: u64,
) -> Result<SimResult> {
    config.validate()?;
    signal.validate()?;
    let n = config.steps();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let noise = config
        .noise
        .filter(|s| s.amplitude > 0.0)
        .map(|s| Uniform::new_inclusive(-s.amplitude, s.amplitude));

    let mut r = SimResult::default();
    for v in [
        &mut r.times,
        &mut r.f_series,
        &mut r.f_dot_series,
        &mut r.y1_series,
        &mut r.y2_series,
        &mut r.x1_series,
        &mut r.x2_series,
    ] {
        v.reserve(n + 1);
    }
    let mut state = init;
    for k in 0..=n {
        let t = k as f64 * config.ts;
        let (f, fd) = (signal.f(t), signal.f_dot(t));
        r.times.push(t);
        r.f_series.push(f);
        r.f_dot_series.push(fd);
        r.y1_series.push(state.y1);
        r.y2_series.push(state.y2);
        r.x1_series.push(f - state.y1);
        r.x2_series.push(fd - state.y2);
        if k == n {
            break;
        }
        let measured = f + noise.as_ref().map_or(0.0, |u| u.sample(&mut rng));
        match step(dgf, kappa, state, measured, config.ts) {
            Ok(next) => state = next,
            Err(Error::Diverged { .. }) => {
                r.diverged = true;
                r.diverged_at = Some(k + 1);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if !r.diverged {
        r.tau = detect_tau(&r.times, &r.x1_series, &r.x2_series, config.conv_tol_x1, config.conv_tol_x2);
    }
    let [a, b] = config.window();
    r.steady_error = r
        .times
        .iter()
        .zip(&r.x2_series)
        .filter(|(t, _)| **t >= a - 1e-12 && **t <= b + 1e-12)
        .map(|(_, x)| x.abs())
        .fold(0.0, f64::max);
    if r.diverged {
        r.steady_error = f64::INFINITY;
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub c: f64,
    pub tau: Option<f64>,
    pub diverged: bool,
}

/// `n` evenly spaced slopes on `[lo, hi]`; the default sweep is 21 points on `[−5, 5]`.
pub fn slope_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Convergence time per slope `c` of `(cos ωt − 1)/ω² + c t`, starting
/// from `(y1, y2) = (f(0), 0)` so that `x1(0) = 0`, `x2(0) = c`.
pub fn sweep_slopes(
    dgf: &GeneratingFunction,
    kappa: &ParamTriple,
    omega: f64,
    slopes: &[f64],
    config: &SimConfig,
) -> Result<Vec<SlopeRow>> {
    config.validate()?;
    slopes
        .par_iter()
        .enumerate()
        .map(|(i, &c)| {
            let signal = SignalSpec::SlopeFamily { omega, c };
            let init = DifferentiatorState::new(signal.f(0.0), 0.0);
            let r = simulate(dgf, kappa, &signal, config, init, i as u64)?;
            Ok(SlopeRow {
                c,
                tau: r.tau,
                diverged: r.diverged,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub amplitude: f64,
    pub steady_err_fixed: f64,
    pub steady_err_sta: f64,
    pub diverged_fixed: bool,
    pub diverged_sta: bool,
}

/// `n` amplitudes log-spaced on `[lo, hi]`, preceded by 0.
pub fn amplitude_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    std::iter::once(0.0).chain(crate::search::log_grid(lo, hi, n)).collect()
}

/// Steady-state `sup |x2|` of a fixed-time differentiator and a reference
/// differentiator per noise amplitude. Both runs of a row see the same
/// noise sequence.
#[allow(clippy::too_many_arguments)]
pub fn noise_sweep(
    fixed: (&GeneratingFunction, &ParamTriple),
    reference: (&GeneratingFunction, &ParamTriple),
    signal: &SignalSpec,
    amplitudes: &[f64],
    config: &SimConfig,
    init: DifferentiatorState,
) -> Result<Vec<NoiseRow>> {
    if amplitudes.iter().any(|a| !(*a >= 0.0)) || amplitudes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("noise amplitudes must be nonnegative and ascending".into()));
    }
    amplitudes
        .par_iter()
        .enumerate()
        .map(|(i, &amplitude)| {
            let cfg = SimConfig {
                noise: Some(NoiseSpec { amplitude }),
                ..config.clone()
            };
            let a = simulate(fixed.0, fixed.1, signal, &cfg, init, i as u64)?;
            let b = simulate(reference.0, reference.1, signal, &cfg, init, i as u64)?;
            Ok(NoiseRow {
                amplitude,
                steady_err_fixed: a.steady_error,
                steady_err_sta: b.steady_error,
                diverged_fixed: a.diverged,
                diverged_sta: b.diverged,
            })
        })
        .collect()
}

/// Metadata written next to a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetadata {
    pub dgf: String,
    pub kappa: ParamTriple,
    pub signal: SignalSpec,
    pub config: SimConfig,
    pub seed: u64,
    pub rng: String,
    pub tau: Option<f64>,
    pub steady_error: f64,
    pub diverged: bool,
}

impl SimMetadata {
    pub fn new(dgf: &GeneratingFunction, kappa: &ParamTriple, signal: &SignalSpec, config: &SimConfig, r: &SimResult) -> Self {
        Self {
            dgf: dgf.name().to_string(),
            kappa: *kappa,
            signal: signal.clone(),
            config: config.clone(),
            seed: config.seed,
            rng: RNG_ALGORITHM.to_string(),
            tau: r.tau,
            steady_error: r.steady_error,
            diverged: r.diverged,
        }
    }
}

/// Writes the trajectory as CSV with columns `t,f,f_dot,y1,y2,x1,x2`.
/// `every` keeps every n-th sample (the last sample is always kept).
pub fn write_csv<W: Write>(r: &SimResult, every: usize, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "f", "f_dot", "y1", "y2", "x1", "x2"])?;
    let every = every.max(1);
    let last = r.times.len().saturating_sub(1);
    for k in (0..r.times.len()).filter(|k| k % every == 0 || *k == last) {
        w.write_record(
            [
                r.times[k],
                r.f_series[k],
                r.f_dot_series[k],
                r.y1_series[k],
                r.y2_series[k],
                r.x1_series[k],
                r.x2_series[k],
            ]
            .iter()
            .map(|v| v.to_string()),
        )?;
    }
    w.flush()
}

/// Gains of the worked example: URED tuned for `L = 1`, `T = 1`, `γ = 4.5`.
pub fn fig1_kappa() -> ParamTriple {
    ParamTriple {
        k1: 6.0,
        k2: 4.5,
        k3: 4.182,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ured() -> GeneratingFunction {
        GeneratingFunction::ured()
    }

    #[test]
    fn equilibrium_is_fixed() {
        let s = step(&ured(), &fig1_kappa(), DifferentiatorState::new(2.0, 0.0), 2.0, 1e-4).unwrap();
        assert_eq!(s, DifferentiatorState::new(2.0, 0.0));
    }

    #[test]
    fn single_step_by_hand() {
        let k3: f64 = 4.182;
        let phi = |x: f64| x.sqrt() + x.powf(1.5);
        let dphi = |x: f64| 0.5 / x.sqrt() + 1.5 * x.sqrt();
        let z = k3 * k3;
        let s = step(&ured(), &fig1_kappa(), DifferentiatorState::default(), 1.0, 1e-4).unwrap();
        assert_relative_eq!(s.y1, 1e-4 * 6.0 * phi(z) / k3, max_relative = 1e-14);
        assert_relative_eq!(s.y2, 1e-4 * 4.5 * 2.0 * phi(z) * dphi(z), max_relative = 1e-14);
    }

    #[test]
    fn step_is_odd() {
        let k = fig1_kappa();
        let a = step(&ured(), &k, DifferentiatorState::new(0.0, 0.3), 0.7, 1e-3).unwrap();
        let b = step(&ured(), &k, DifferentiatorState::new(0.0, -0.3), -0.7, 1e-3).unwrap();
        assert_eq!(a.y1, -b.y1);
        assert_eq!(a.y2, -b.y2);
    }

    #[test]
    fn divergence_is_reported() {
        let k = ParamTriple::new(6.0, 4.5, 4.182).unwrap();
        let cfg = SimConfig {
            ts: 0.5,
            horizon: 2000.0,
            ..SimConfig::default()
        };
        let err = run(&ured(), &k, &SignalSpec::Fig1, &cfg, DifferentiatorState::new(1e3, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Diverged { step, .. } if step > 0));
    }

    // At Ts = 1e-4 the x2 chattering floor (about 2.3·k2·Ts) sits just above the
    // default 1e-3 threshold, so detection needs a finer step to be meaningful.
    fn fine() -> SimConfig {
        SimConfig {
            ts: 5e-5,
            ..SimConfig::default()
        }
    }

    #[test]
    fn fig1_convergence_time() {
        let r = run(&ured(), &fig1_kappa(), &SignalSpec::Fig1, &fine(), DifferentiatorState::default()).unwrap();
        let tau = r.tau.unwrap();
        assert!((0.27..=0.37).contains(&tau), "tau = {tau}");
        assert!(r.steady_error < 1e-2);
        assert_eq!(r.times.len(), 80_001);
    }

    #[test]
    fn x2_floor_at_coarse_step() {
        let r = run(&ured(), &fig1_kappa(), &SignalSpec::Fig1, &SimConfig::default(), DifferentiatorState::default()).unwrap();
        assert!(r.steady_error > 1e-3 && r.steady_error < 1.1e-3, "{}", r.steady_error);
        let relaxed = SimConfig {
            conv_tol_x2: 1.5e-3,
            ..SimConfig::default()
        };
        let r = run(&ured(), &fig1_kappa(), &SignalSpec::Fig1, &relaxed, DifferentiatorState::default()).unwrap();
        assert!((0.27..=0.37).contains(&r.tau.unwrap()));
    }

    #[test]
    fn starting_converged_gives_zero_tau() {
        let s = SignalSpec::Fig1;
        let (f0, fd0) = s.start();
        let r = run(&ured(), &fig1_kappa(), &s, &fine(), DifferentiatorState::new(f0, fd0)).unwrap();
        assert_eq!(r.tau, Some(0.0));
    }

    #[test]
    fn steady_floor_shrinks_with_step() {
        let run_at = |ts: f64| {
            let cfg = SimConfig { ts, ..SimConfig::default() };
            run(&ured(), &fig1_kappa(), &SignalSpec::Fig1, &cfg, DifferentiatorState::default())
                .unwrap()
                .steady_error
        };
        assert!(run_at(1e-5) < run_at(1e-4));
    }

    #[test]
    fn step_size_robustness() {
        let tau = |ts: f64| {
            let cfg = SimConfig { ts, ..SimConfig::default() };
            run(&ured(), &fig1_kappa(), &SignalSpec::Fig1, &cfg, DifferentiatorState::default())
                .unwrap()
                .tau
                .unwrap()
        };
        let (a, b) = (tau(5e-5), tau(2.5e-5));
        assert!((a - b).abs() < 0.05 * a, "{a} vs {b}");
    }

    #[test]
    fn deterministic_with_noise() {
        let cfg = SimConfig {
            noise: Some(NoiseSpec { amplitude: 1e-3 }),
            seed: 7,
            horizon: 1.0,
            ..SimConfig::default()
        };
        let a = run(&ured(), &fig1_kappa(), &SignalSpec::Fig1, &cfg, DifferentiatorState::default()).unwrap();
        let b = run(&ured(), &fig1_kappa(), &SignalSpec::Fig1, &cfg, DifferentiatorState::default()).unwrap();
        assert_eq!(a, b);
        let other = SimConfig { seed: 8, ..cfg };
        let c = run(&ured(), &fig1_kappa(), &SignalSpec::Fig1, &other, DifferentiatorState::default()).unwrap();
        assert_ne!(a.y2_series, c.y2_series);
    }

    #[test]
    fn necessity_of_k2_above_l() {
        let k = ParamTriple::new(6.0, 0.5, 4.182).unwrap();
        let cfg = SimConfig {
            horizon: 10.0,
            ..SimConfig::default()
        };
        let r = run(&ured(), &k, &SignalSpec::Fig1, &cfg, DifferentiatorState::default()).unwrap();
        assert_eq!(r.tau, None);
    }

    #[test]
    fn error_dynamics_equivalence() {
        let dgf = ured();
        let k = fig1_kappa();
        let s = SignalSpec::Fig1;
        let ts = 1e-4;
        let mut y = DifferentiatorState::default();
        for n in 0..20_000 {
            let t = n as f64 * ts;
            let x = [s.f(t) - y.y1, s.f_dot(t) - y.y2];
            let d1 = s.f(t + ts) - s.f(t) - ts * s.f_dot(t);
            let d2 = s.f_dot(t + ts) - s.f_dot(t);
            let via_errors = error_step(&dgf, &k, x, ts, d1, d2).unwrap();
            y = step(&dgf, &k, y, s.f(t), ts).unwrap();
            let direct = [s.f(t + ts) - y.y1, s.f_dot(t + ts) - y.y2];
            assert!((via_errors[0] - direct[0]).abs() < 1e-10 && (via_errors[1] - direct[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn slope_sweep_zero_slope_is_fast() {
        let rows = sweep_slopes(&ured(), &fig1_kappa(), 1.0, &[0.0], &fine()).unwrap();
        assert!(rows[0].tau.unwrap() < 0.2);
    }

    #[test]
    fn custom_signal_matches_analytic() {
        let period = 1e-3;
        let samples: Vec<f64> = (0..=4000).map(|i| SignalSpec::Fig1.f(i as f64 * period)).collect();
        let custom = SignalSpec::Custom {
            period,
            samples,
            derivative: None,
        };
        for t in [0.1, 1.2345, 3.9] {
            assert!((custom.f(t) - SignalSpec::Fig1.f(t)).abs() < 1e-6);
            assert!((custom.f_dot(t) - SignalSpec::Fig1.f_dot(t)).abs() < 1e-5);
        }
    }

    #[test]
    fn csv_layout() {
        let cfg = SimConfig {
            horizon: 0.01,
            ..SimConfig::default()
        };
        let r = run(&ured(), &fig1_kappa(), &SignalSpec::Fig1, &cfg, DifferentiatorState::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&r, 10, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,f,f_dot,y1,y2,x1,x2"));
        assert_eq!(lines.count(), 11);
    }
}

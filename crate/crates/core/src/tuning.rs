//! Gain tuning for a prescribed convergence-time bound.
//!
//! A normalized triple `κ̃` with a verified bound `T̃` on its unperturbed
//! global convergence time is scaled to
//!
//! ```text
//! k1 = k̃1 √γ,   k2 = k̃2 γ,   k3 = k̃3 √γ / (γ − L) · T̃ / T
//! ```
//!
//! which converges within `T` for every signal with `|f̈| ≤ L < γ`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::convtime::{lbar, upper_bound_ttilde, REPEATED_RTOL};
use crate::dgf::{AdmissibilityConstants, GeneratingFunction, ParamTriple};
use crate::error::{Error, Result};

/// `k̃1` values of the reference table.
pub const TABLE1_K1: [f64; 5] = [std::f64::consts::SQRT_2 * 2.0, 5.0, 10.0, 15.0, 20.0];

/// Default tradeoff parameter `γ = 4.5·max(L, 1)`.
pub fn default_gamma(l: f64) -> f64 {
    4.5 * l.max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRequest {
    pub dgf_id: String,
    /// Lipschitz bound on `f̈`.
    pub l: f64,
    /// Prescribed convergence-time bound.
    pub t: f64,
    pub gamma: f64,
    pub normalized: ParamTriple,
    /// Verified bound on the unperturbed global convergence time of `normalized`.
    pub ttilde: f64,
    pub constants: AdmissibilityConstants,
}

impl TuningRequest {
    /// Request for a DGF with known constants, using `T̃` from the analytic
    /// upper bound and the default `γ`.
    pub fn with_upper_bound(
        dgf: &GeneratingFunction,
        constants: AdmissibilityConstants,
        normalized: ParamTriple,
        l: f64,
        t: f64,
    ) -> Result<Self> {
        Ok(Self {
            dgf_id: dgf.name().to_string(),
            l,
            t,
            gamma: default_gamma(l),
            normalized,
            ttilde: upper_bound_ttilde(&constants, &normalized)?,
            constants,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.l >= 0.0 && self.l.is_finite()) {
            return Err(Error::InvalidParameter(format!("L must be nonnegative, got {}", self.l)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParameter(format!("T must be positive, got {}", self.t)));
        }
        if !(self.ttilde > 0.0 && self.ttilde.is_finite()) {
            return Err(Error::InvalidParameter(format!("T~ must be positive, got {}", self.ttilde)));
        }
        if !(self.gamma > self.l) {
            return Err(Error::TradeoffTooSmall {
                gamma: self.gamma,
                l: self.l,
            });
        }
        let (ok, d) = is_normalized(&self.normalized, &self.constants);
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "triple ({}, {}, {}) is not normalized: Lbar = {} < 1 with D = {d}",
                self.normalized.k1,
                self.normalized.k2,
                self.normalized.k3,
                lbar(self.normalized.k1, self.normalized.k2, d)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub kappa: ParamTriple,
    /// Equals the requested `T`.
    pub guaranteed_bound: f64,
    /// `L̄` of the tuned gains (`γ` times that of the normalized triple).
    pub lbar_scaled: f64,
    /// Upper bound on `T / T̄(Φ, κ, L)` when `k̃1² ≥ 8k̃2`.
    pub tightness_ratio_bound: Option<f64>,
}

/// Whether `L̄(k1, k2, D) ≥ 1` with `D = max(constants.d, 1)`; returns the `D` used.
pub fn is_normalized(kappa: &ParamTriple, constants: &AdmissibilityConstants) -> (bool, f64) {
    let d = constants.d.max(1.0);
    (lbar(kappa.k1, kappa.k2, d) >= 1.0, d)
}

/// Scales a normalized triple to converge within `req.t`.
pub fn tune(req: &TuningRequest) -> Result<TuningResult> {
    req.validate()?;
    let n = req.normalized;
    let sg = req.gamma.sqrt();
    let kappa = ParamTriple::new(
        n.k1 * sg,
        n.k2 * req.gamma,
        n.k3 * sg / (req.gamma - req.l) * req.ttilde / req.t,
    )?;
    let d = req.constants.d.max(1.0);
    Ok(TuningResult {
        kappa,
        guaranteed_bound: req.t,
        lbar_scaled: lbar(kappa.k1, kappa.k2, d),
        tightness_ratio_bound: tightness_ratio_bound(req, req.constants.b).ok(),
    })
}

/// `((k̃1 − √(k̃1² − 8k̃2)) k̃3 T̃ / (2B)) · γ/(γ − L)`, an upper bound on the
/// ratio between the prescribed and the actual worst-case convergence time.
pub fn tightness_ratio_bound(req: &TuningRequest, b_exact: f64) -> Result<f64> {
    let n = req.normalized;
    let disc = n.discriminant();
    if disc < -REPEATED_RTOL * n.k1 * n.k1 {
        return Err(Error::BoundNotApplicable { k1: n.k1, k2: n.k2 });
    }
    if !(req.gamma > req.l) {
        return Err(Error::TradeoffTooSmall {
            gamma: req.gamma,
            l: req.l,
        });
    }
    let h = if disc <= REPEATED_RTOL * n.k1 * n.k1 { 0.0 } else { disc.sqrt() };
    let gap = 8.0 * n.k2 / (n.k1 + h);
    Ok(gap * n.k3 * req.ttilde / (2.0 * b_exact) * req.gamma / (req.gamma - req.l))
}

/// Rounds up to one decimal, ignoring floating-point noise below 1e−9.
pub fn round_up_one_decimal(x: f64) -> f64 {
    (x * 10.0 - 1e-9).ceil() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub dgf: String,
    pub k1_tilde: f64,
    pub t_tilde_raw: f64,
    pub t_tilde_rounded: f64,
}

/// `T̃` for `k̃1 ∈ {√8, 5, 10, 15, 20}`, `k̃2 = k̃3 = 1`, for both built-in
/// admissible DGFs.
pub fn generate_table1() -> Result<Vec<Table1Row>> {
    let mut rows = Vec::new();
    for dgf in [GeneratingFunction::ured(), GeneratingFunction::exponential()] {
        let constants = dgf
            .claimed_constants()
            .expect("built-in admissible DGFs carry their constants");
        for k1 in TABLE1_K1 {
            let raw = upper_bound_ttilde(&constants, &ParamTriple::new(k1, 1.0, 1.0)?)?;
            rows.push(Table1Row {
                dgf: dgf.name().to_string(),
                k1_tilde: k1,
                t_tilde_raw: raw,
                t_tilde_rounded: round_up_one_decimal(raw),
            });
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with header `dgf,k1_tilde,t_tilde_raw,t_tilde_rounded`.
pub fn write_table1_csv<W: Write>(rows: &[Table1Row], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

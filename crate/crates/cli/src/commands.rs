use serde_json::json;

use fxdiff::convtime::{self, ErrorState, GlobalSearch};
use fxdiff::dgf::{self, AdmissibilityConstants, GeneratingFunction, ParamTriple, BUILTIN_IDS};
use fxdiff::expr::{custom_dgf, CustomDgfSpec};
use fxdiff::tuning::{self, TuningRequest};

use crate::args::{CheckArgs, ConvtimeArgs, DgfArgs, TuneArgs};
use crate::error::CliError;
use crate::output::{csv_table, opt, Context, Report};

/// Built-in DGF by id, or a custom one from expressions. Warnings go to stderr.
pub fn resolve_dgf(args: &DgfArgs, default: Option<&str>) -> Result<GeneratingFunction, CliError> {
    let id = args.dgf.as_deref();
    if args.phi.is_some() && matches!(id, None | Some("custom")) {
        let spec = CustomDgfSpec {
            name: args.dgf_name.clone().unwrap_or_else(|| "custom".into()),
            phi: args.phi.clone().unwrap_or_default(),
            phi_prime: args.phi_prime.clone(),
            phi_second: args.phi_second.clone(),
            inverse: args.phi_inverse.clone(),
        };
        let (dgf, warnings) = custom_dgf(&spec).map_err(|e| CliError::Usage(format!("custom DGF: {e}")))?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        return Ok(dgf);
    }
    let id = match id.or(default) {
        Some("custom") => return Err(CliError::Usage("--dgf custom needs --phi".into())),
        Some(id) => id,
        None => return Err(CliError::Usage("no DGF given: use --dgf or --phi".into())),
    };
    GeneratingFunction::builtin(id).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown DGF '{id}' (expected one of {} or custom)",
            BUILTIN_IDS.join(", ")
        ))
    })
}

fn constants_json(c: &AdmissibilityConstants) -> serde_json::Value {
    json!({ "B": c.b, "C": c.c, "D": c.d, "D_raw": c.d_raw, "exact": c.exact })
}

pub fn check(ctx: &Context, args: CheckArgs) -> Result<(), CliError> {
    let dgf = resolve_dgf(&args.dgf, None)?;
    let report = dgf::check_dgf(&dgf);
    let admissibility = dgf::compute_admissibility(&dgf);
    let mut rows: Vec<Vec<String>> = report
        .items
        .iter()
        .map(|i| vec![i.property.label().to_string(), i.passed.to_string(), opt(i.witness), i.detail.clone()])
        .collect();
    let (admissible, constants, reason) = match &admissibility {
        Ok(c) => {
            for (name, v) in [("B", c.b), ("C", c.c), ("D", c.d)] {
                let status = if c.exact { "exact" } else { "estimated" };
                rows.push(vec![name.into(), "true".into(), v.to_string(), status.into()]);
            }
            (true, Some(constants_json(c)), None)
        }
        Err(fxdiff::Error::NotAdmissible(msg)) => (false, None, Some(format!("not admissible: {msg}"))),
        Err(e) => return Err(e.clone().into()),
    };
    rows.push(vec![
        "admissible".into(),
        admissible.to_string(),
        String::new(),
        reason.clone().unwrap_or_default(),
    ]);
    if let Some(r) = &reason {
        eprintln!("{r}");
    }
    ctx.emit(&Report {
        stem: "check".into(),
        json: json!({
            "dgf": dgf.name(),
            "dgf_properties_passed": report.passed(),
            "properties": report.items,
            "admissible": admissible,
            "constants": constants,
            "reason": reason,
        }),
        csv: csv_table(&["item", "passed", "value", "detail"], &rows)?,
    })
}

fn require(v: Option<f64>, flag: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

/// Tuning request with the defaults used by `tune` and the simulation presets.
pub fn tuning_request(
    dgf: &GeneratingFunction,
    l: f64,
    t: f64,
    gamma: Option<f64>,
    k1_tilde: Option<f64>,
    ttilde: Option<f64>,
) -> Result<TuningRequest, CliError> {
    let constants = dgf::compute_admissibility(dgf)?;
    let normalized = ParamTriple::new(k1_tilde.unwrap_or(8f64.sqrt()), 1.0, 1.0)?;
    let ttilde = match ttilde {
        Some(v) => v,
        None => tuning::round_up_one_decimal(convtime::upper_bound_ttilde(&constants, &normalized).map_err(|e| {
            CliError::Usage(format!("{e}; supply a verified bound with --ttilde"))
        })?),
    };
    Ok(TuningRequest {
        dgf_id: dgf.name().to_string(),
        l,
        t,
        gamma: gamma.unwrap_or_else(|| tuning::default_gamma(l)),
        normalized,
        ttilde,
        constants,
    })
}

pub fn tune(ctx: &Context, args: TuneArgs) -> Result<(), CliError> {
    let dgf = resolve_dgf(&args.dgf, Some("ured"))?;
    let l = require(args.l, "L")?;
    let t = require(args.t, "T")?;
    if let Some(g) = args.gamma {
        if !(g > l) {
            return Err(fxdiff::Error::TradeoffTooSmall { gamma: g, l }.into());
        }
    }
    let req = tuning_request(&dgf, l, t, args.gamma, args.k1_tilde, args.ttilde)?;
    let r = tuning::tune(&req)?;
    let k = r.kappa;
    ctx.emit(&Report {
        stem: "tune".into(),
        json: json!({ "request": req, "result": r }),
        csv: csv_table(
            &["dgf", "L", "T", "gamma", "k1_tilde", "ttilde", "k1", "k2", "k3", "lbar", "tightness_ratio_bound"],
            &[vec![
                req.dgf_id.clone(),
                l.to_string(),
                t.to_string(),
                req.gamma.to_string(),
                req.normalized.k1.to_string(),
                req.ttilde.to_string(),
                k.k1.to_string(),
                k.k2.to_string(),
                k.k3.to_string(),
                r.lbar_scaled.to_string(),
                opt(r.tightness_ratio_bound),
            ]],
        )?,
    })
}

pub fn table1(ctx: &Context) -> Result<(), CliError> {
    let rows = tuning::generate_table1()?;
    let mut buf = Vec::new();
    tuning::write_table1_csv(&rows, &mut buf)?;
    ctx.emit(&Report {
        stem: "table1".into(),
        json: serde_json::to_value(&rows)?,
        csv: String::from_utf8(buf).expect("csv output is UTF-8"),
    })
}

pub fn convtime(ctx: &Context, args: ConvtimeArgs) -> Result<(), CliError> {
    let dgf = resolve_dgf(&args.dgf, Some("ured"))?;
    let kappa = ParamTriple::new(require(args.k1, "k1")?, require(args.k2, "k2")?, require(args.k3, "k3")?)?;
    if args.global.unwrap_or(false) {
        return convtime_global(ctx, &dgf, &kappa, &args);
    }
    if args.x1.is_none() && args.x2.is_none() {
        return Err(CliError::Usage("give an initial error (--x1, --x2) or --global".into()));
    }
    let x0 = ErrorState::new(args.x1.unwrap_or(0.0), args.x2.unwrap_or(0.0));
    let t0 = convtime::t0_exact(&dgf, &kappa, x0)?;
    let (lbar, bound) = match args.l {
        Some(l) => {
            let c = dgf::compute_admissibility(&dgf)?;
            let lbar = convtime::lbar(kappa.k1, kappa.k2, c.d.max(1.0));
            let bound = convtime::t_perturbed_bound(t0, l, lbar).map_err(|_| CliError::NotGuaranteed { l, lbar })?;
            (Some(lbar), Some(bound))
        }
        None => (None, None),
    };
    ctx.emit(&Report {
        stem: "convtime".into(),
        json: json!({
            "dgf": dgf.name(),
            "kappa": kappa,
            "x0": x0,
            "t0": t0,
            "L": args.l,
            "lbar": lbar,
            "perturbed_bound": bound,
        }),
        csv: csv_table(
            &["dgf", "k1", "k2", "k3", "x1", "x2", "t0", "L", "lbar", "perturbed_bound"],
            &[vec![
                dgf.name().into(),
                kappa.k1.to_string(),
                kappa.k2.to_string(),
                kappa.k3.to_string(),
                x0.x1.to_string(),
                x0.x2.to_string(),
                t0.to_string(),
                opt(args.l),
                opt(lbar),
                opt(bound),
            ]],
        )?,
    })
}

/// Relative gap below `k1^2 = 8 k2` attributed to rounding of the inputs,
/// e.g. `--k1 2.8284` for `sqrt(8)`.
const BOUND_SNAP_RTOL: f64 = 1e-4;

fn bound_gains(kappa: &ParamTriple) -> ParamTriple {
    let edge = (8.0 * kappa.k2).sqrt();
    if kappa.k1 < edge && kappa.k1 >= edge * (1.0 - BOUND_SNAP_RTOL) {
        ParamTriple { k1: edge, ..*kappa }
    } else {
        *kappa
    }
}

fn convtime_global(ctx: &Context, dgf: &GeneratingFunction, kappa: &ParamTriple, args: &ConvtimeArgs) -> Result<(), CliError> {
    let constants = dgf::compute_admissibility(dgf)?;
    let search = GlobalSearch {
        grid_points: args.grid.unwrap_or(GlobalSearch::default().grid_points),
        ..GlobalSearch::default()
    };
    let numeric = convtime::global_convtime_with(dgf, kappa, search)?;
    let bound_kappa = bound_gains(kappa);
    let lower = convtime::lower_bound(constants.b, &bound_kappa).ok();
    let upper = convtime::upper_bound_ttilde(&constants, &bound_kappa).ok();
    let applicable = lower.is_some();
    let snapped = applicable && bound_kappa.k1 != kappa.k1;
    let note = if !applicable {
        Some("analytic bounds not applicable (k1^2 < 8 k2)".to_string())
    } else if snapped {
        Some(format!(
            "k1^2 is within rounding of 8 k2; analytic bounds evaluated at k1 = {}",
            bound_kappa.k1
        ))
    } else {
        None
    };
    if let Some(n) = &note {
        eprintln!("{n}");
    }
    let perturbed = match args.l {
        Some(l) => {
            let lbar = convtime::lbar(kappa.k1, kappa.k2, constants.d.max(1.0));
            Some(convtime::t_perturbed_bound(numeric.value, l, lbar).map_err(|_| CliError::NotGuaranteed { l, lbar })?)
        }
        None => None,
    };
    ctx.emit(&Report {
        stem: "convtime_global".into(),
        json: json!({
            "dgf": dgf.name(),
            "kappa": kappa,
            "lower_bound": lower,
            "numeric": numeric,
            "upper_bound": upper,
            "analytic_bounds_applicable": applicable,
            "bounds_k1": bound_kappa.k1,
            "note": note,
            "L": args.l,
            "perturbed_bound": perturbed,
        }),
        csv: csv_table(
            &["dgf", "k1", "k2", "k3", "lower_bound", "numeric", "upper_bound", "inner_tol", "grid_points", "perturbed_bound"],
            &[vec![
                dgf.name().into(),
                kappa.k1.to_string(),
                kappa.k2.to_string(),
                kappa.k3.to_string(),
                opt(lower),
                numeric.value.to_string(),
                opt(upper),
                numeric.inner_tol.to_string(),
                numeric.grid_points.to_string(),
                opt(perturbed),
            ]],
        )?,
    })
}

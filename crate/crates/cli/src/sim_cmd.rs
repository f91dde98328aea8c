use std::path::{Path, PathBuf};

use serde_json::json;

use fxdiff::dgf::{GeneratingFunction, ParamTriple};
use fxdiff::sim::{self, DifferentiatorState, NoiseSpec, SignalSpec, SimConfig, SimMetadata};
use fxdiff::tuning;

use crate::args::{DgfArgs, Preset, SimArgs};
use crate::commands::{resolve_dgf, tuning_request};
use crate::error::CliError;
use crate::output::{csv_table, opt, Context, Report};
use crate::plots;

pub const DEFAULT_OUT: &str = "fxdiff-out";

/// Built-in DGFs swept by the fig3 preset when no --dgf is given.
const FIG3_DGFS: [&str; 2] = ["ured", "exp"];
const FIG2_AMPLITUDES: (f64, f64, usize) = (1e-8, 1.0, 17);
const FIG3_SLOPES: (f64, f64, usize) = (-5.0, 5.0, 21);

pub fn sim(ctx: &Context, args: SimArgs) -> Result<(), CliError> {
    let dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let config = sim_config(ctx, &args);
    config.validate()?;
    match args.preset {
        Some(Preset::Fig1) => trajectory(ctx, &dir, &args, config, SignalSpec::Fig1, "fig1"),
        Some(Preset::Fig2) => fig2(ctx, &dir, &args, config),
        Some(Preset::Fig3) => fig3(ctx, &dir, &args, config),
        None => {
            let signal = custom_signal(&args)?;
            trajectory(ctx, &dir, &args, config, signal, "sim")
        }
    }
}

fn sim_config(ctx: &Context, args: &SimArgs) -> SimConfig {
    let d = SimConfig::default();
    SimConfig {
        ts: args.ts.unwrap_or(d.ts),
        horizon: args.horizon.unwrap_or(d.horizon),
        conv_tol_x1: args.tol_x1.unwrap_or(d.conv_tol_x1),
        conv_tol_x2: args.tol_x2.unwrap_or(d.conv_tol_x2),
        noise: args.noise.map(|amplitude| NoiseSpec { amplitude }),
        seed: ctx.seed,
        steady_window: None,
    }
}

/// Gains from --k1/--k2/--k3, or tuned for --L, --T (default 1 each) and --gamma.
fn gains(dgf: &GeneratingFunction, args: &SimArgs) -> Result<ParamTriple, CliError> {
    match (args.k1, args.k2, args.k3) {
        (Some(k1), Some(k2), Some(k3)) => Ok(ParamTriple::new(k1, k2, k3)?),
        (None, None, None) => {
            let l = args.l.unwrap_or(1.0);
            let t = args.t.unwrap_or(1.0);
            if let Some(g) = args.gamma {
                if !(g > l) {
                    return Err(fxdiff::Error::TradeoffTooSmall { gamma: g, l }.into());
                }
            }
            let req = tuning_request(dgf, l, t, args.gamma, None, None)?;
            Ok(tuning::tune(&req)?.kappa)
        }
        _ => Err(CliError::Usage("give all of --k1, --k2, --k3 or none".into())),
    }
}

fn custom_signal(args: &SimArgs) -> Result<SignalSpec, CliError> {
    if let Some(path) = &args.signal_file {
        let period = args
            .period
            .ok_or_else(|| CliError::Usage("--signal-file needs --period".into()))?;
        let (samples, derivative) = read_signal_file(path)?;
        let signal = SignalSpec::Custom { period, samples, derivative };
        signal.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        return Ok(signal);
    }
    let signal = match args.signal.as_deref() {
        Some("fig1") => SignalSpec::Fig1,
        Some("slope") => SignalSpec::SlopeFamily {
            omega: args.omega.unwrap_or(1.0),
            c: args.slope.unwrap_or(0.0),
        },
        Some(other) => return Err(CliError::Usage(format!("unknown signal '{other}' (expected fig1 or slope)"))),
        None => {
            return Err(CliError::Usage(
                "give --preset, --signal fig1|slope or --signal-file".into(),
            ))
        }
    };
    signal.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(signal)
}

fn read_signal_file(path: &Path) -> Result<(Vec<f64>, Option<Vec<f64>>), CliError> {
    let usage = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| usage(e.to_string()))?;
    let headers = reader.headers().map_err(|e| usage(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let f_col = col("f").ok_or_else(|| usage("missing column 'f'".into()))?;
    let d_col = col("f_dot");
    let mut samples = Vec::new();
    let mut derivative = d_col.map(|_| Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| usage(e.to_string()))?;
        let parse = |c: usize| -> Result<f64, CliError> {
            let field = record.get(c).unwrap_or("").trim();
            field
                .parse()
                .map_err(|_| usage(format!("row {}: '{field}' is not a number", i + 2)))
        };
        samples.push(parse(f_col)?);
        if let (Some(c), Some(d)) = (d_col, derivative.as_mut()) {
            d.push(parse(c)?);
        }
    }
    Ok((samples, derivative))
}

fn trajectory(
    ctx: &Context,
    dir: &Path,
    args: &SimArgs,
    config: SimConfig,
    signal: SignalSpec,
    stem: &str,
) -> Result<(), CliError> {
    let dgf = resolve_dgf(&args.dgf, Some("ured"))?;
    let kappa = gains(&dgf, args)?;
    let init = DifferentiatorState::new(args.y1.unwrap_or(0.0), args.y2.unwrap_or(0.0));
    let r = sim::run_lenient(&dgf, &kappa, &signal, &config, init)?;
    let meta = SimMetadata::new(&dgf, &kappa, &signal, &config, &r);

    let mut buf = Vec::new();
    sim::write_csv(&r, args.every.unwrap_or(1), &mut buf)?;
    ctx.write(dir, &format!("{stem}.csv"), &buf)?;
    let meta_json = json!({ "metadata": meta, "manifest": ctx.manifest });
    ctx.write(dir, &format!("{stem}_meta.json"), &(serde_json::to_string_pretty(&meta_json)? + "\n").into_bytes())?;
    ctx.write_manifest(dir)?;
    if args.plot.unwrap_or(args.preset.is_some()) {
        ctx.write(dir, &format!("{stem}.gp"), plots::trajectory(stem).as_bytes())?;
    }

    if r.diverged {
        eprintln!(
            "diverged at t = {}",
            r.diverged_at.map(|k| k as f64 * config.ts).unwrap_or(f64::NAN)
        );
    }
    print_summary(
        ctx,
        serde_json::to_value(&meta)?,
        csv_table(
            &["dgf", "k1", "k2", "k3", "tau", "steady_error", "diverged"],
            &[vec![
                meta.dgf.clone(),
                kappa.k1.to_string(),
                kappa.k2.to_string(),
                kappa.k3.to_string(),
                opt(r.tau),
                r.steady_error.to_string(),
                r.diverged.to_string(),
            ]],
        )?,
    )?;
    if r.diverged {
        return Err(CliError::AllDiverged(format!("{stem} run")));
    }
    Ok(())
}

fn fig2(ctx: &Context, dir: &Path, args: &SimArgs, config: SimConfig) -> Result<(), CliError> {
    let dgf = resolve_dgf(&args.dgf, Some("ured"))?;
    let kappa = gains(&dgf, args)?;
    let sta = GeneratingFunction::sqrt();
    let amplitudes = match &args.amplitudes {
        Some(s) => parse_list(s)?,
        None => {
            let (lo, hi, n) = FIG2_AMPLITUDES;
            sim::amplitude_grid(lo, hi, n)
        }
    };
    let init = DifferentiatorState::new(args.y1.unwrap_or(0.0), args.y2.unwrap_or(0.0));
    let config = SimConfig { noise: None, ..config };
    let rows = sim::noise_sweep((&dgf, &kappa), (&sta, &kappa), &SignalSpec::Fig1, &amplitudes, &config, init)?;

    let csv = csv_table(
        &["amplitude", "steady_err_fixed", "steady_err_sta", "diverged_fixed", "diverged_sta"],
        &rows
            .iter()
            .map(|r| {
                vec![
                    r.amplitude.to_string(),
                    r.steady_err_fixed.to_string(),
                    r.steady_err_sta.to_string(),
                    r.diverged_fixed.to_string(),
                    r.diverged_sta.to_string(),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    let meta = json!({
        "dgf_fixed": dgf.name(),
        "dgf_reference": sta.name(),
        "kappa": kappa,
        "signal": SignalSpec::Fig1,
        "config": config,
        "window": config.window(),
        "rng": sim::RNG_ALGORITHM,
        "amplitudes": amplitudes,
        "rows": rows,
    });
    write_sweep(ctx, dir, args, "fig2", &csv, &meta, plots::fig2())?;
    print_summary(ctx, meta, csv)?;
    if rows.iter().all(|r| r.diverged_fixed && r.diverged_sta) {
        return Err(CliError::AllDiverged("fig2 sweep".into()));
    }
    Ok(())
}

fn fig3(ctx: &Context, dir: &Path, args: &SimArgs, config: SimConfig) -> Result<(), CliError> {
    let dgfs: Vec<GeneratingFunction> = if has_dgf(&args.dgf) {
        vec![resolve_dgf(&args.dgf, None)?]
    } else {
        FIG3_DGFS
            .iter()
            .map(|id| GeneratingFunction::builtin(id).expect("built-in DGF"))
            .collect()
    };
    let omega = args.omega.unwrap_or(1.0);
    let slopes = match &args.slopes {
        Some(s) => parse_range(s)?,
        None => {
            let (lo, hi, n) = FIG3_SLOPES;
            sim::slope_grid(lo, hi, n)
        }
    };

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for dgf in &dgfs {
        let kappa = gains(dgf, args)?;
        let sweep = sim::sweep_slopes(dgf, &kappa, omega, &slopes, &config)?;
        for r in &sweep {
            rows.push(vec![
                dgf.name().to_string(),
                r.c.to_string(),
                opt(r.tau),
                r.diverged.to_string(),
                kappa.k1.to_string(),
                kappa.k2.to_string(),
                kappa.k3.to_string(),
            ]);
        }
        runs.push(json!({ "dgf": dgf.name(), "kappa": kappa, "rows": sweep }));
    }
    let csv = csv_table(&["dgf", "c", "tau", "diverged", "k1", "k2", "k3"], &rows)?;
    let meta = json!({
        "omega": omega,
        "slopes": slopes,
        "config": config,
        "T": args.t.unwrap_or(1.0),
        "runs": runs,
    });
    write_sweep(ctx, dir, args, "fig3", &csv, &meta, plots::fig3())?;
    print_summary(ctx, meta, csv)?;
    if rows.iter().all(|r| r[3] == "true") {
        return Err(CliError::AllDiverged("fig3 sweep".into()));
    }
    Ok(())
}

fn has_dgf(args: &DgfArgs) -> bool {
    args.dgf.is_some() || args.phi.is_some()
}

fn write_sweep(
    ctx: &Context,
    dir: &Path,
    args: &SimArgs,
    stem: &str,
    csv: &str,
    meta: &serde_json::Value,
    plot: String,
) -> Result<(), CliError> {
    ctx.write(dir, &format!("{stem}.csv"), csv.as_bytes())?;
    let meta_json = json!({ "metadata": meta, "manifest": ctx.manifest });
    ctx.write(dir, &format!("{stem}_meta.json"), &(serde_json::to_string_pretty(&meta_json)? + "\n").into_bytes())?;
    ctx.write_manifest(dir)?;
    if args.plot.unwrap_or(true) {
        ctx.write(dir, &format!("{stem}.gp"), plot.as_bytes())?;
    }
    Ok(())
}

/// Prints to stdout only; files have already been written.
fn print_summary(ctx: &Context, json: serde_json::Value, csv: String) -> Result<(), CliError> {
    let quiet = Context {
        out: None,
        format: ctx.format,
        seed: ctx.seed,
        manifest: ctx.manifest.clone(),
    };
    quiet.emit(&Report {
        stem: String::new(),
        json,
        csv,
    })
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("'{p}' is not a number in --amplitudes")))
        })
        .collect()
}

/// Parses "lo:hi:n" into `n` evenly spaced values.
fn parse_range(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("--slopes expects lo:hi:n, got '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !(lo <= hi) {
        return Err(bad());
    }
    Ok(sim::slope_grid(lo, hi, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("-1:1:3").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert!(parse_range("1:0:3").is_err());
        assert!(parse_range("0:1").is_err());
        assert_eq!(parse_list("0, 1e-3,0.1").unwrap(), vec![0.0, 1e-3, 0.1]);
        assert!(parse_list("0,x").is_err());
    }
}

//! `continuation`: run a schedule of cascade parameters toward the limit
//! system and measure how the final states approach it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fracross_core::dynamics::{continuation_study, ContinuationReport, RegParams};
use serde_json::json;

use crate::config::{load_schedule, LoadedConfig};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, RunDir};

use super::{finish_err, resolve_out_dir};

/// Which single cascade parameter varies along a schedule, if any.
fn varying_parameter(schedule: &[RegParams]) -> Option<&'static str> {
    let varies = |f: fn(&RegParams) -> f64| {
        schedule
            .windows(2)
            .any(|w| (f(&w[0]) - f(&w[1])).abs() > 0.0)
    };
    let kappa = varies(|p| p.kappa);
    let eps = varies(|p| p.eps);
    let rho = varies(|p| p.rho);
    let m = schedule.windows(2).any(|w| w[0].m != w[1].m);
    match (kappa, eps, rho, m) {
        (true, false, false, false) => Some("kappa"),
        (false, true, false, false) => Some("eps"),
        (false, false, true, false) => Some("rho"),
        (false, false, false, true) => Some("m"),
        _ => None,
    }
}

fn slope_fit(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.iter().any(|&x| x <= 0.0) || ys.iter().any(|&y| y <= 0.0) {
        return None;
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn report_csv(report: &ContinuationReport) -> String {
    let mut csv = String::from(
        "kappa,eps,rho,m,dist_l1_next,dist_l2_next,dist_l1_limit,dist_l2_limit,error\n",
    );
    let opt = |v: Option<f64>| v.map(|x| fmt_f64(x)).unwrap_or_default();
    for e in &report.entries {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(e.params.kappa),
            fmt_f64(e.params.eps),
            fmt_f64(e.params.rho),
            fmt_f64(e.params.m),
            opt(e.dist_l1_next),
            opt(e.dist_l2_next),
            opt(e.dist_l1_limit),
            opt(e.dist_l2_limit),
            e.error.clone().unwrap_or_default()
        );
    }
    csv
}

pub fn cmd_continuation(
    config_path: &Path,
    schedule_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> CliResult<PathBuf> {
    let loaded = LoadedConfig::load(config_path)?;
    let seed = seed.unwrap_or(loaded.config.seed);
    let schedule = load_schedule(schedule_path, loaded.config.beta)?;
    let base_spec = loaded.run_spec(false)?;

    let out_dir = resolve_out_dir(out, &loaded);
    let mut run_dir = RunDir::create(&out_dir, "continuation", &loaded.raw, seed)?;

    let report = match continuation_study(&base_spec, &schedule) {
        Ok(r) => r,
        Err(e @ fracross_core::Error::InvalidSchedule(_)) => {
            return finish_err(&mut run_dir, CliError::Config(e.to_string()))
        }
        Err(e) => return finish_err(&mut run_dir, CliError::Numerical(e.to_string())),
    };

    let varying = varying_parameter(&schedule);
    let slope = varying.and_then(|name| {
        let param = |p: &RegParams| match name {
            "kappa" => p.kappa,
            "eps" => p.eps,
            "rho" => p.rho,
            _ => p.m,
        };
        let pairs: Vec<(f64, f64)> = report
            .entries
            .iter()
            .filter_map(|e| e.dist_l1_limit.map(|d| (param(&e.params), d)))
            .collect();
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        slope_fit(&xs, &ys)
    });

    let summary = json!({
        "entries": report.entries.len(),
        "monotone_within_slack": report.monotone_within_slack,
        "varying_parameter": varying,
        "loglog_slope_l1_vs_parameter": slope,
        "limit": {
            "kappa": report.limit_params.kappa,
            "eps": report.limit_params.eps,
            "rho": report.limit_params.rho,
            "m": report.limit_params.m,
        },
    });

    let failed: Vec<String> = report
        .entries
        .iter()
        .filter_map(|e| e.error.clone())
        .collect();

    let write_all = |run_dir: &mut RunDir| -> CliResult<()> {
        run_dir.write("continuation.csv", report_csv(&report).as_bytes())?;
        run_dir.write(
            "continuation.json",
            serde_json::to_vec_pretty(&summary)
                .map_err(|e| CliError::Numerical(e.to_string()))?
                .as_slice(),
        )?;
        Ok(())
    };
    match write_all(&mut run_dir) {
        Ok(()) if failed.is_empty() => {
            run_dir.finish("completed");
            Ok(out_dir)
        }
        Ok(()) => {
            let msg = format!("{} member run(s) failed: {}", failed.len(), failed.join("; "));
            run_dir.finish(&format!("failed: {msg}"));
            Err(CliError::Numerical(msg))
        }
        Err(e) => finish_err(&mut run_dir, e),
    }
}

//! `twin`: weak-strong relative-entropy experiment between a base run and
//! a mass-preserving perturbation of it on a shared time grid.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fracross_core::diagnostics::twin_run_report;
use fracross_core::dynamics::{run, TimeControl};
use serde_json::json;

use crate::config::{LoadedConfig, PerturbationSpec};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, RunDir};

use super::{finish_err, numerical, resolve_out_dir};

pub fn cmd_twin(
    config_path: &Path,
    perturb_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> CliResult<PathBuf> {
    let loaded = LoadedConfig::load(config_path)?;
    let perturbation = PerturbationSpec::load(perturb_path)?;
    let seed = seed.unwrap_or(loaded.config.seed);

    let base_spec = loaded.run_spec(true)?;
    let perturbed_initial = perturbation.apply(&base_spec.initial)?;
    for (i, (a, b)) in base_spec
        .initial
        .masses()
        .iter()
        .zip(perturbed_initial.masses())
        .enumerate()
    {
        if (a - b).abs() > 1e-10 * a.abs().max(1.0) {
            return Err(CliError::Config(format!(
                "perturbation changed the mass of species {i}: {a} -> {b}"
            )));
        }
    }

    let out_dir = resolve_out_dir(out, &loaded);
    let mut run_dir = RunDir::create(&out_dir, "twin", &loaded.raw, seed)?;

    let base = match run(&base_spec) {
        Ok(t) => t,
        Err(e) => return finish_err(&mut run_dir, numerical(e)),
    };
    let mut perturbed_spec = base_spec.clone();
    perturbed_spec.initial = perturbed_initial;
    perturbed_spec.time = TimeControl::Schedule(base.dt_history.clone());
    let perturbed = match run(&perturbed_spec) {
        Ok(t) => t,
        Err(e) => return finish_err(&mut run_dir, numerical(e)),
    };

    let report = match twin_run_report(&base, &perturbed, loaded.config.twin_q2) {
        Ok(r) => r,
        Err(e) => return finish_err(&mut run_dir, numerical(e)),
    };

    let mut csv = String::from("t,H_rel,dissipation_between,grad_log_q1,envelope_integral\n");
    for s in &report.samples {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.h_rel),
            fmt_f64(s.dissipation_between),
            fmt_f64(s.grad_log_q1),
            fmt_f64(s.envelope_integral)
        );
    }
    let summary = json!({
        "q1": report.q1,
        "q2": report.q2,
        "envelope_rate": report.envelope_rate,
        "envelope_ok": report.envelope_ok,
        "monotone": report.monotone,
        "samples": report.samples.len(),
    });

    let write_all = |run_dir: &mut RunDir| -> CliResult<()> {
        run_dir.write("twin.csv", csv.as_bytes())?;
        run_dir.write(
            "twin.json",
            serde_json::to_vec_pretty(&summary)
                .map_err(|e| CliError::Numerical(e.to_string()))?
                .as_slice(),
        )?;
        Ok(())
    };
    match write_all(&mut run_dir) {
        Ok(()) => {
            run_dir.finish("completed");
            Ok(out_dir)
        }
        Err(e) => finish_err(&mut run_dir, e),
    }
}

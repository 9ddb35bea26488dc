//! `rate`: fit an exponential decay rate on the relative-entropy column
//! of a finished run's diagnostics CSV.

use std::path::Path;

use fracross_core::diagnostics::{fit_rate, RateFit};
use fracross_core::Error as CoreError;

use crate::error::{CliError, CliResult};

pub enum RateOutcome {
    Fit(RateFit),
    /// The series is at or below the floor inside the window; the
    /// trajectory has converged and no rate is resolvable.
    Converged { t: f64, value: f64 },
}

pub fn parse_window(s: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!(
            "window must look like T_A:T_B, got {s:?}"
        )));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Config(format!("window start {:?} is not a number", parts[0])))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("window end {:?} is not a number", parts[1])))?;
    if !(a < b) {
        return Err(CliError::Config(format!(
            "window start must precede its end, got {a}:{b}"
        )));
    }
    Ok((a, b))
}

/// Extract the `(t, H_rel)` series from a diagnostics CSV.
pub fn read_h_rel_series(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{} is empty", path.display())))?;
    let columns: Vec<&str> = header.split(',').collect();
    let t_idx = columns
        .iter()
        .position(|c| *c == "t")
        .ok_or_else(|| CliError::Config("CSV has no t column".into()))?;
    let h_idx = columns
        .iter()
        .position(|c| *c == "H_rel")
        .ok_or_else(|| CliError::Config("CSV has no H_rel column".into()))?;
    let mut series = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> CliResult<f64> {
            cells
                .get(idx)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "row {} of {} has no numeric column {idx}",
                        lineno + 2,
                        path.display()
                    ))
                })
        };
        series.push((parse(t_idx)?, parse(h_idx)?));
    }
    if series.is_empty() {
        return Err(CliError::Config(format!(
            "{} holds a header but no rows",
            path.display()
        )));
    }
    Ok(series)
}

pub fn cmd_rate(csv_path: &Path, window: &str) -> CliResult<RateOutcome> {
    let window = parse_window(window)?;
    let series = read_h_rel_series(csv_path)?;
    match fit_rate(&series, window) {
        Ok(fit) => Ok(RateOutcome::Fit(fit)),
        Err(CoreError::ConvergedBelowFloor { t, value }) => {
            Ok(RateOutcome::Converged { t, value })
        }
        Err(e @ CoreError::WindowTooSmall { .. }) => Err(CliError::Config(e.to_string())),
        Err(e) => Err(CliError::Numerical(e.to_string())),
    }
}

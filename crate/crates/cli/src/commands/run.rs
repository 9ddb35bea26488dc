//! `run`: integrate one configuration and write its diagnostics.

use std::path::{Path, PathBuf};

use fracross_core::dynamics;

use crate::config::LoadedConfig;
use crate::error::CliResult;
use crate::output::{diagnostics_csv, plot_script, write_trajectory_snapshots, RunDir};

use super::{finish_err, numerical, resolve_out_dir};

/// Returns the output directory on success.
pub fn cmd_run(
    config_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> CliResult<PathBuf> {
    let loaded = LoadedConfig::load(config_path)?;
    let seed = seed.unwrap_or(loaded.config.seed);
    let spec = loaded.run_spec(loaded.config.snapshots)?;
    let n_species = spec.coupling.n();

    let out_dir = resolve_out_dir(out, &loaded);
    let mut run_dir = RunDir::create(&out_dir, "run", &loaded.raw, seed)?;

    let traj = match dynamics::run(&spec) {
        Ok(traj) => traj,
        Err(e) => return finish_err(&mut run_dir, numerical(e)),
    };

    let write_all = |run_dir: &mut RunDir| -> CliResult<()> {
        run_dir.write(
            "diagnostics.csv",
            diagnostics_csv(&traj.records, n_species).as_bytes(),
        )?;
        run_dir.write("plot.py", plot_script(n_species).as_bytes())?;
        if loaded.config.snapshots {
            write_trajectory_snapshots(run_dir, &traj)?;
        }
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

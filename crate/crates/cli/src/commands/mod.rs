//! The batch commands behind the CLI subcommands.

mod continuation;
mod rate;
mod run;
mod twin;
mod verify_ops;

pub use continuation::cmd_continuation;
pub use rate::{cmd_rate, RateOutcome};
pub use run::cmd_run;
pub use twin::cmd_twin;
pub use verify_ops::cmd_verify_ops;

use std::path::{Path, PathBuf};

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};

/// Output directory precedence: `--out`, then `FRACROSS_OUT`, then the
/// config's `output_dir`, then `./fracross-out`.
pub fn resolve_out_dir(cli_out: Option<&Path>, loaded: &LoadedConfig) -> PathBuf {
    if let Some(dir) = cli_out {
        return dir.to_path_buf();
    }
    if let Ok(dir) = std::env::var("FRACROSS_OUT") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    if let Some(dir) = &loaded.config.output_dir {
        return PathBuf::from(dir);
    }
    PathBuf::from("fracross-out")
}

pub(crate) fn numerical(e: fracross_core::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

pub(crate) fn finish_err<T>(
    run_dir: &mut crate::output::RunDir,
    err: CliError,
) -> CliResult<T> {
    run_dir.finish(&format!("failed: {err}"));
    Err(err)
}

//! Run-directory outputs: the diagnostics CSV, FRX1 field snapshots with
//! JSON sidecars, the run manifest, and the plot script.
//!
//! Numeric CSV cells use the shortest decimal that round-trips the f64
//! value, so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fracross_core::diagnostics::DiagnosticsRecord;
use fracross_core::dynamics::{SpeciesState, Trajectory};
use fracross_core::{Grid, PhysicalField};
use ndarray::Array2;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"FRX1";

/// Bookkeeping for one output directory; collects the file inventory and
/// writes the manifest at the end of every termination path.
pub struct RunDir {
    pub dir: PathBuf,
    files: Vec<String>,
    config_hash: String,
    command: String,
    seed: u64,
    started_ms: u128,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    code_version: &'a str,
    command: &'a str,
    seed: u64,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    status: &'a str,
    files: &'a [String],
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

impl RunDir {
    pub fn create(dir: &Path, command: &str, config_raw: &[u8], seed: u64) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| {
            CliError::Config(format!("cannot create output directory {}: {e}", dir.display()))
        })?;
        let mut hasher = Sha256::new();
        hasher.update(config_raw);
        let config_hash = format!("sha256:{:x}", hasher.finalize());
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            config_hash,
            command: command.to_string(),
            seed,
            started_ms: now_ms(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        let mut f = std::fs::File::create(&path)
            .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))?;
        f.write_all(bytes)
            .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Write `manifest.json`; called on success and on failure alike.
    pub fn finish(&mut self, status: &str) {
        let manifest = Manifest {
            config_hash: &self.config_hash,
            code_version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            seed: self.seed,
            started_unix_ms: self.started_ms,
            finished_unix_ms: now_ms(),
            status,
            files: &self.files,
        };
        if let Ok(json) = serde_json::to_vec_pretty(&manifest) {
            let _ = std::fs::write(self.dir.join("manifest.json"), json);
        }
    }
}

/// Format an f64 as the shortest round-trip decimal.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Render the diagnostics CSV:
/// `t, dt, mass_1..n, H, D, H_rel, L1_dist, clip_l1`.
pub fn diagnostics_csv(records: &[DiagnosticsRecord], n_species: usize) -> String {
    let mut out = String::from("t,dt");
    for i in 1..=n_species {
        let _ = write!(out, ",mass_{i}");
    }
    out.push_str(",H,D,H_rel,L1_dist,clip_l1\n");
    for r in records {
        let _ = write!(out, "{},{}", fmt_f64(r.t), fmt_f64(r.dt));
        for m in &r.masses {
            let _ = write!(out, ",{}", fmt_f64(*m));
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{}",
            fmt_f64(r.entropy),
            fmt_f64(r.dissipation),
            fmt_f64(r.relative_entropy),
            fmt_f64(r.l1_distance),
            fmt_f64(r.clip_l1)
        );
    }
    out
}

/// 32-byte snapshot header: magic, dim, per-axis modes, time.
fn snapshot_header(grid: &Grid, time: f64) -> [u8; 32] {
    let mut header = [0u8; 32];
    header[0..4].copy_from_slice(SNAPSHOT_MAGIC);
    header[4..8].copy_from_slice(&(grid.dim() as u32).to_le_bytes());
    header[8..16].copy_from_slice(&(grid.resolution(0) as u64).to_le_bytes());
    let n1 = if grid.dim() == 2 {
        grid.resolution(1) as u64
    } else {
        0
    };
    header[16..24].copy_from_slice(&n1.to_le_bytes());
    header[24..32].copy_from_slice(&time.to_le_bytes());
    header
}

#[derive(Serialize)]
struct SnapshotSidecar<'a> {
    format: &'a str,
    dim: usize,
    resolution: Vec<usize>,
    extent: Vec<f64>,
    time: f64,
    species: usize,
    values_file: &'a str,
}

/// Write one species field as `<stem>.frx` plus `<stem>.json`.
pub fn write_snapshot(
    run: &mut RunDir,
    stem: &str,
    field: &PhysicalField,
    time: f64,
    species: usize,
) -> CliResult<()> {
    let grid = field.grid();
    let mut bytes = Vec::with_capacity(32 + 8 * grid.num_nodes());
    bytes.extend_from_slice(&snapshot_header(grid, time));
    for v in field.values().iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let values_file = format!("{stem}.frx");
    run.write(&values_file, &bytes)?;

    let sidecar = SnapshotSidecar {
        format: "FRX1",
        dim: grid.dim(),
        resolution: grid.resolutions().to_vec(),
        extent: grid.extents().to_vec(),
        time,
        species,
        values_file: &values_file,
    };
    let json = serde_json::to_vec_pretty(&sidecar)
        .map_err(|e| CliError::Numerical(format!("snapshot sidecar: {e}")))?;
    run.write(&format!("{stem}.json"), &json)?;
    Ok(())
}

/// Read an FRX1 snapshot onto an existing grid (bit-exact restart).
pub fn read_snapshot(path: &Path, grid: &Grid) -> CliResult<(PhysicalField, f64)> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    if bytes.len() < 32 || &bytes[0..4] != SNAPSHOT_MAGIC {
        return Err(CliError::Config(format!(
            "{} is not an FRX1 snapshot",
            path.display()
        )));
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n0 = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let n1 = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let time = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    if dim != grid.dim()
        || n0 != grid.resolution(0)
        || (dim == 2 && n1 != grid.resolution(1))
        || (dim == 1 && n1 != 0)
    {
        return Err(CliError::Config(format!(
            "snapshot {} has shape dim={dim} {n0}x{n1}, expected the configured grid",
            path.display()
        )));
    }
    let count = n0 * n1.max(1);
    if bytes.len() != 32 + 8 * count {
        return Err(CliError::Config(format!(
            "snapshot {} is truncated: {} bytes for {count} values",
            path.display(),
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[32..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let arr = Array2::from_shape_vec((n0, n1.max(1)), values)
        .map_err(|e| CliError::Config(format!("snapshot shape: {e}")))?;
    let field = PhysicalField::new(grid.clone(), arr)
        .map_err(|e| CliError::Config(format!("snapshot values: {e}")))?;
    Ok((field, time))
}

/// Write every record-time state of a trajectory as snapshots.
pub fn write_trajectory_snapshots(run: &mut RunDir, traj: &Trajectory) -> CliResult<()> {
    for (idx, state) in traj.states.iter().enumerate() {
        write_state_snapshots(run, state, idx)?;
    }
    Ok(())
}

pub fn write_state_snapshots(
    run: &mut RunDir,
    state: &SpeciesState,
    index: usize,
) -> CliResult<()> {
    for (species, field) in state.fields().iter().enumerate() {
        let stem = format!("snapshot_{index:06}_s{species}");
        write_snapshot(run, &stem, field, state.t(), species)?;
    }
    Ok(())
}

/// Plot script rendering the relative entropy on a log axis; generated
/// next to the CSV so curves can be reproduced offline.
pub fn plot_script(n_species: usize) -> String {
    let mass_cols: Vec<String> = (1..=n_species).map(|i| format!("mass_{i}")).collect();
    format!(
        r#"#!/usr/bin/env python3
"""Render diagnostics.csv: relative entropy decay on a log axis."""
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
rows = list(csv.DictReader(open(here / "diagnostics.csv")))
t = [float(r["t"]) for r in rows]
h_rel = [float(r["H_rel"]) for r in rows]
entropy = [float(r["H"]) for r in rows]

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
positive = [(ti, hi) for ti, hi in zip(t, h_rel) if hi > 0]
if positive:
    ax1.semilogy([p[0] for p in positive], [p[1] for p in positive])
ax1.set_xlabel("t")
ax1.set_ylabel("relative entropy")
ax1.set_title("decay to equilibrium")

ax2.plot(t, entropy, label="H")
for col in {mass_cols:?}:
    ax2.plot(t, [float(r[col]) for r in rows], label=col, linestyle="--")
ax2.set_xlabel("t")
ax2.legend()
ax2.set_title("entropy and masses")

fig.tight_layout()
fig.savefig(here / "decay.png", dpi=150)
print("wrote", here / "decay.png")
"#
    )
}

//! Experiment configuration: a single JSON document describing the grid,
//! the coupling, the regularization parameters, the initial profiles,
//! and the run controls.

use std::path::{Path, PathBuf};

use fracross_core::dynamics::{validate_coupling, CouplingSpec, RegParams, RunSpec, SpeciesState};
use fracross_core::{Grid, PhysicalField, SpectralField};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::read_snapshot;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub extent: Vec<f64>,
    pub resolution: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub a: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
}

/// Cascade parameters; `m: null` means no mobility truncation.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RegConfig {
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub eps: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub m: Option<f64>,
}

impl Default for RegConfig {
    fn default() -> Self {
        Self {
            kappa: 0.0,
            eps: 0.0,
            rho: 0.0,
            m: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    Constant {
        value: f64,
    },
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
        #[serde(default)]
        baseline: f64,
    },
    TwoLevel {
        low: f64,
        high: f64,
        /// Fraction of axis 0 at the low level; defaults to one half.
        #[serde(default)]
        split: Option<f64>,
    },
    Modes {
        baseline: f64,
        modes: Vec<ModeAmplitude>,
    },
    File {
        path: String,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModeAmplitude {
    pub k: Vec<usize>,
    pub amplitude: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsConfig {
    #[serde(default)]
    pub raw_normalization: bool,
    #[serde(default = "default_true")]
    pub dealias: bool,
}

fn default_true() -> bool {
    true
}

impl Default for FlagsConfig {
    fn default() -> Self {
        Self {
            raw_normalization: false,
            dealias: true,
        }
    }
}

/// Trial counts of the operator verification suite.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_fields")]
    pub fields: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_band")]
    pub band: usize,
}

fn default_fields() -> usize {
    20
}
fn default_trials() -> usize {
    100
}
fn default_band() -> usize {
    32
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            fields: default_fields(),
            trials: default_trials(),
            band: default_band(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub beta: f64,
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub reg: RegConfig,
    pub initial: Vec<InitialProfile>,
    #[serde(default)]
    pub t_final: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_out_every")]
    pub out_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    /// Write FRX1 field snapshots at every record time.
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default)]
    pub flags: FlagsConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    /// Optional override of the integrability exponent in twin reports.
    #[serde(default)]
    pub twin_q2: Option<f64>,
}

fn default_cfl() -> f64 {
    0.4
}
fn default_dt_max() -> f64 {
    0.05
}
fn default_out_every() -> usize {
    10
}

/// A loaded configuration: the parsed document, the raw bytes (hashed
/// into the manifest), and the directory it came from (for relative
/// snapshot paths).
pub struct LoadedConfig {
    pub config: SimConfig,
    pub raw: Vec<u8>,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let raw = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: SimConfig = serde_json::from_slice(&raw).map_err(|e| {
            CliError::Config(format!(
                "{} at line {} column {}",
                e,
                e.line(),
                e.column()
            ))
        })?;
        let base_dir = path
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self {
            config,
            raw,
            base_dir,
        })
    }

    pub fn grid(&self) -> CliResult<Grid> {
        Grid::new(&self.config.grid.extent, &self.config.grid.resolution).map_err(Into::into)
    }

    pub fn coupling(&self) -> CliResult<CouplingSpec> {
        let c = &self.config.coupling;
        let n = c.pi.len();
        if c.a.len() != n || c.a.iter().any(|row| row.len() != n) {
            return Err(CliError::Config(format!(
                "coupling.a must be a {n}x{n} matrix matching coupling.pi"
            )));
        }
        let mut a = ndarray::Array2::zeros((n, n));
        for (i, row) in c.a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        validate_coupling(&a, &c.pi).map_err(Into::into)
    }

    pub fn params(&self) -> CliResult<RegParams> {
        let r = &self.config.reg;
        RegParams::new(
            self.config.beta,
            r.kappa,
            r.eps,
            r.rho,
            r.m.unwrap_or(f64::INFINITY),
        )
        .map_err(Into::into)
    }

    /// Synthesize the initial state in physical space and validate
    /// nonnegativity.
    pub fn initial_state(&self, grid: &Grid) -> CliResult<SpeciesState> {
        let n = self.config.coupling.pi.len();
        if self.config.initial.len() != n {
            return Err(CliError::Config(format!(
                "{} initial profiles for {n} species",
                self.config.initial.len()
            )));
        }
        let fields = self
            .config
            .initial
            .iter()
            .enumerate()
            .map(|(i, profile)| {
                synthesize_profile(profile, grid, &self.base_dir).map_err(|e| match e {
                    CliError::Config(msg) => {
                        CliError::Config(format!("initial[{i}]: {msg}"))
                    }
                    other => other,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        SpeciesState::new(0.0, fields).map_err(|e| {
            CliError::Config(format!("initial data failed validation: {e}"))
        })
    }

    /// Assemble the run specification used by `run` and `twin`.
    pub fn run_spec(&self, store_states: bool) -> CliResult<RunSpec> {
        let grid = self.grid()?;
        let coupling = self.coupling()?;
        let params = self.params()?;
        let initial = self.initial_state(&grid)?;
        if !(self.config.t_final >= 0.0) {
            return Err(CliError::Config(format!(
                "t_final must be nonnegative, got {}",
                self.config.t_final
            )));
        }
        let mut spec = RunSpec::new(coupling, params, initial, self.config.t_final);
        spec.cfl = self.config.cfl;
        spec.dt_max = self.config.dt_max;
        spec.out_every = self.config.out_every;
        spec.dealias = self.config.flags.dealias;
        spec.raw_normalization = self.config.flags.raw_normalization;
        spec.store_states = store_states;
        Ok(spec)
    }
}

fn synthesize_profile(
    profile: &InitialProfile,
    grid: &Grid,
    base_dir: &Path,
) -> CliResult<PhysicalField> {
    match profile {
        InitialProfile::Constant { value } => {
            if !(value.is_finite() && *value >= 0.0) {
                return Err(CliError::Config(format!(
                    "constant profile must be nonnegative, got {value}"
                )));
            }
            Ok(PhysicalField::constant(grid, *value))
        }
        InitialProfile::GaussianBump {
            center,
            width,
            amplitude,
            baseline,
        } => {
            if center.len() != grid.dim() {
                return Err(CliError::Config(format!(
                    "bump center has {} coordinates on a {}d grid",
                    center.len(),
                    grid.dim()
                )));
            }
            if !(*width > 0.0) {
                return Err(CliError::Config(format!(
                    "bump width must be positive, got {width}"
                )));
            }
            let (c, w, a, b) = (center.clone(), *width, *amplitude, *baseline);
            Ok(PhysicalField::from_fn(grid, move |x| {
                let r2: f64 = x
                    .iter()
                    .zip(c.iter())
                    .map(|(xi, ci)| (xi - ci) * (xi - ci))
                    .sum();
                b + a * (-r2 / (2.0 * w * w)).exp()
            }))
        }
        InitialProfile::TwoLevel { low, high, split } => {
            let frac = split.unwrap_or(0.5);
            if !(frac > 0.0 && frac < 1.0) {
                return Err(CliError::Config(format!(
                    "two-level split must lie in (0,1), got {frac}"
                )));
            }
            let threshold = frac * grid.extent(0);
            let (lo, hi) = (*low, *high);
            Ok(PhysicalField::from_fn(grid, move |x| {
                if x[0] < threshold {
                    lo
                } else {
                    hi
                }
            }))
        }
        InitialProfile::Modes { baseline, modes } => {
            let mut hat = SpectralField::zeros(grid);
            hat.set_coeff(&vec![0; grid.dim()], baseline * grid.volume().sqrt())?;
            for mode in modes {
                if mode.k.iter().all(|&k| k == 0) {
                    return Err(CliError::Config(
                        "mode perturbations must not touch mode 0; adjust the baseline instead"
                            .into(),
                    ));
                }
                hat.set_coeff(&mode.k, mode.amplitude)
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
            Ok(hat.to_physical())
        }
        InitialProfile::File { path } => {
            let full = base_dir.join(path);
            let (field, _time) = read_snapshot(&full, grid)?;
            Ok(field)
        }
    }
}

/// Mass-preserving spectral perturbation applied on top of a state.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    /// Species index; absent means every species.
    #[serde(default)]
    pub species: Option<usize>,
    pub mode: Vec<usize>,
    pub amplitude: f64,
}

impl PerturbationSpec {
    pub fn load(path: &Path) -> CliResult<Self> {
        let raw = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_slice(&raw).map_err(|e| {
            CliError::Config(format!(
                "{} at line {} column {}",
                e,
                e.line(),
                e.column()
            ))
        })
    }

    /// Apply to a state; preserves per-species masses by construction
    /// (mode 0 is rejected) and re-validates nonnegativity.
    pub fn apply(&self, state: &SpeciesState) -> CliResult<SpeciesState> {
        if self.mode.iter().all(|&k| k == 0) {
            return Err(CliError::Config(
                "perturbation of mode 0 would change the species mass".into(),
            ));
        }
        let grid = state.grid();
        let bump = SpectralField::basis(grid, &self.mode)
            .map_err(|e| CliError::Config(e.to_string()))?
            .scaled(self.amplitude)
            .to_physical();
        let fields = state
            .fields()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let selected = self.species.map_or(true, |s| s == i);
                if selected {
                    f.zip_map(&bump, |a, b| a + b)
                } else {
                    f.clone()
                }
            })
            .collect();
        SpeciesState::new(state.t(), fields).map_err(|e| {
            CliError::Config(format!("perturbed state failed validation: {e}"))
        })
    }
}

/// Schedule file of a continuation study: an array of cascade parameter
/// entries approaching the limit system.
pub fn load_schedule(path: &Path, beta: f64) -> CliResult<Vec<RegParams>> {
    let raw = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let entries: Vec<RegConfig> = serde_json::from_slice(&raw).map_err(|e| {
        CliError::Config(format!(
            "{} at line {} column {}",
            e,
            e.line(),
            e.column()
        ))
    })?;
    entries
        .iter()
        .map(|r| {
            RegParams::new(beta, r.kappa, r.eps, r.rho, r.m.unwrap_or(f64::INFINITY))
                .map_err(Into::into)
        })
        .collect()
}

//! The cross-diffusion model: coupling validation, right-hand-side
//! assembly, IMEX time integration, and the regularization cascade.
//!
//! The evolved system for densities `u_1..u_n` is
//!
//! ```text
//! d/dt u_i = kappa Lap u_i - kappa g_rho[u_i]
//!          + div( sum_j a_ij T_M(u_i) grad P_j ),
//! P_j = (-Delta)^{-1} L_eps^a L_eps^a u_j,    a = (beta+1)/4,
//! ```
//!
//! with no-flux boundaries. The limit parameters
//! `(kappa, eps, rho, M) = (0, 0, 0, inf)` give the unregularized model,
//! where the potential multiplier collapses to `lambda^{(beta-1)/2}`.
//!
//! Time stepping is first-order IMEX: the stiff viscous part is absorbed
//! into the diagonal implicit factor `1/(1 + dt kappa lambda)`, the
//! transport and correction terms stay explicit. A spectral scheme does
//! not preserve positivity, so negatives are clipped after each step and
//! the species mass restored multiplicatively; the clipped magnitude is
//! reported, and a clip beyond 1% of the species mass aborts the step.

use ndarray::Array2;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::field::{divergence, PhysicalField, SpectralField};
use crate::fracops::{g_alpha, g_alpha_raw};
use crate::grid::Grid;

/// Relative tolerance on the detailed-balance residual.
pub const DETAILED_BALANCE_RTOL: f64 = 1e-12;
/// Negative densities beyond `CLIP_RTOL * ||u||_inf` are an error rather
/// than a clip.
pub const CLIP_RTOL: f64 = 1e-10;
/// Fraction of a species mass the positivity clip may move per step.
pub const CLIP_MASS_LIMIT: f64 = 0.01;

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
/// ascending.
fn jacobi_eigenvalues(mat: &Array2<f64>) -> Vec<f64> {
    let n = mat.nrows();
    let mut a = mat.clone();
    let scale = mat.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..128 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Validated interaction coupling: the matrix `(a_ij)`, the detailed
/// balance weights `pi_i`, and the derived entropy constants.
#[derive(Clone, Debug)]
pub struct CouplingSpec {
    a: Array2<f64>,
    pi: Vec<f64>,
    residual: f64,
    c0: f64,
    spectrum_min: f64,
}

impl CouplingSpec {
    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Worst detailed-balance defect `max_ij |pi_i a_ij - pi_j a_ji|`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Smallest eigenvalue of the symmetric matrix `(pi_i a_ij)`; the
    /// coefficient of the dissipation in the entropy inequality.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Smallest eigenvalue of `a` itself (real under detailed balance).
    pub fn spectrum_min(&self) -> f64 {
        self.spectrum_min
    }

    /// Largest row sum of `a`; a bound on the coupling strength used by
    /// the explicit stability cap.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| self.a[(i, j)]).sum())
            .fold(0.0_f64, f64::max)
    }
}

/// Validate an interaction matrix against its detailed-balance weights.
///
/// Rejects when the residual `max_ij |pi_i a_ij - pi_j a_ji|` exceeds
/// `1e-12 max|pi_i a_ij|`, and when the symmetrized matrix `(pi_i a_ij)`
/// is not positive definite. Under detailed balance `a` is similar to the
/// symmetric matrix `sqrt(pi_i/pi_j) a_ij`, so its spectrum is real and
/// lies in the right half-plane exactly when that matrix is positive
/// definite; both spectra are computed by cyclic Jacobi.
pub fn validate_coupling(a: &Array2<f64>, pi: &[f64]) -> Result<CouplingSpec> {
    let n = pi.len();
    if n == 0 || a.dim() != (n, n) {
        return Err(Error::InvalidCoupling(format!(
            "matrix is {:?} but there are {n} weights",
            a.dim()
        )));
    }
    for (i, &p) in pi.iter().enumerate() {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidCoupling(format!(
                "weight pi_{i} must be positive and finite, got {p}"
            )));
        }
    }
    for ((i, j), &v) in a.indexed_iter() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidCoupling(format!(
                "entry a[{i}][{j}] must be a nonnegative finite real, got {v}"
            )));
        }
    }

    let mut sym = Array2::zeros((n, n));
    let mut residual = 0.0_f64;
    let mut worst = (0, 0);
    let mut scale = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let left = pi[i] * a[(i, j)];
            sym[(i, j)] = left;
            scale = scale.max(left.abs());
            let defect = (left - pi[j] * a[(j, i)]).abs();
            if defect > residual {
                residual = defect;
                worst = (i, j);
            }
        }
    }
    let gate = DETAILED_BALANCE_RTOL * scale;
    if residual > gate {
        return Err(Error::DetailedBalance {
            i: worst.0,
            j: worst.1,
            residual,
            gate,
        });
    }

    let c0 = jacobi_eigenvalues(&sym)[0];
    if !(c0 > 0.0) {
        return Err(Error::SpectrumNotPositive { c0 });
    }

    // Similarity transform diag(sqrt(pi)) a diag(1/sqrt(pi)): symmetric
    // under detailed balance, with the same (real) spectrum as a.
    let mut similar = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            similar[(i, j)] = (pi[i] / pi[j]).sqrt() * a[(i, j)];
        }
    }
    let spectrum_min = jacobi_eigenvalues(&similar)[0];
    if !(spectrum_min > 0.0) {
        return Err(Error::SpectrumNotPositive { c0: spectrum_min });
    }

    Ok(CouplingSpec {
        a: a.clone(),
        pi: pi.to_vec(),
        residual,
        c0,
        spectrum_min,
    })
}

/// Parameters of the regularization cascade. The limit system is
/// `(kappa, eps, rho, M) = (0, 0, 0, inf)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegParams {
    /// Fractional order of the model, in (0, 1).
    pub beta: f64,
    /// Artificial viscosity.
    pub kappa: f64,
    /// Heat-integral cutoff of the fractional operator; 0 means exact.
    pub eps: f64,
    /// Softening of the quadratic correction; 0 recovers `g[u] = u^2 - avg`.
    pub rho: f64,
    /// Mobility truncation level; `inf` leaves the mobility at `max(u, 0)`.
    pub m: f64,
}

impl RegParams {
    pub fn new(beta: f64, kappa: f64, eps: f64, rho: f64, m: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "beta must lie in (0,1), got {beta}"
            )));
        }
        for (name, v) in [("kappa", kappa), ("eps", eps), ("rho", rho)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be a nonnegative finite real, got {v}"
                )));
            }
        }
        if !(m > 0.0) {
            return Err(Error::InvalidParams(format!(
                "truncation level must be positive (inf allowed), got {m}"
            )));
        }
        Ok(Self {
            beta,
            kappa,
            eps,
            rho,
            m,
        })
    }

    /// The unregularized model at a given fractional order.
    pub fn limit_system(beta: f64) -> Result<Self> {
        Self::new(beta, 0.0, 0.0, 0.0, f64::INFINITY)
    }

    pub fn is_limit(&self) -> bool {
        self.kappa == 0.0 && self.eps == 0.0 && self.rho == 0.0 && self.m.is_infinite()
    }

    /// Exponent of the regularized operator applied twice in the flux.
    pub fn alpha(&self) -> f64 {
        (self.beta + 1.0) / 4.0
    }
}

/// Densities of all species at one time.
#[derive(Clone, Debug)]
pub struct SpeciesState {
    t: f64,
    fields: Vec<PhysicalField>,
    masses: Vec<f64>,
}

impl SpeciesState {
    /// Validate and adopt density fields: values below `-1e-10 ||u||_inf`
    /// are an error, the remaining negatives are clipped to zero, and the
    /// per-species masses are cached from quadrature.
    pub fn new(t: f64, fields: Vec<PhysicalField>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidParams("a state needs at least one species".into()));
        }
        let grid = fields[0].grid().clone();
        let mut clipped = Vec::with_capacity(fields.len());
        for (i, field) in fields.into_iter().enumerate() {
            if field.grid() != &grid {
                return Err(Error::GridMismatch);
            }
            field.check_finite(&format!("density of species {i}"))?;
            let min = field.min_value();
            let tol = CLIP_RTOL * field.max_abs();
            if min < -tol {
                return Err(Error::NegativeDensity {
                    species: i,
                    min,
                    tol,
                });
            }
            clipped.push(if min < 0.0 {
                field.map(|v| v.max(0.0))
            } else {
                field
            });
        }
        let masses = clipped.iter().map(|f| f.integral()).collect();
        Ok(Self {
            t,
            fields: clipped,
            masses,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn n_species(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[PhysicalField] {
        &self.fields
    }

    pub fn field(&self, i: usize) -> &PhysicalField {
        &self.fields[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// The constant state carrying the same per-species masses; the
    /// equilibrium the dynamics converges to.
    pub fn equilibrium(&self) -> SpeciesState {
        let grid = self.grid();
        let volume = grid.volume();
        let fields = self
            .masses
            .iter()
            .map(|mass| PhysicalField::constant(grid, mass / volume))
            .collect();
        SpeciesState {
            t: self.t,
            fields,
            masses: self.masses.clone(),
        }
    }

    /// Largest density value over all species.
    pub fn max_density(&self) -> f64 {
        self.fields
            .iter()
            .map(|f| f.max_value())
            .fold(0.0_f64, f64::max)
    }
}

/// Zero-average quadratic correction
/// `g_rho[u] = u^2/(1+rho|u|) - avg(u^2/(1+rho|u|))`;
/// `rho = 0` gives the plain `u^2 - avg(u^2)`.
pub fn g_correction(u: &PhysicalField, rho: f64) -> PhysicalField {
    assert!(rho >= 0.0, "rho must be nonnegative, got {rho}");
    let pointwise = u.map(|v| v * v / (1.0 + rho * v.abs()));
    let mean = pointwise.mean();
    pointwise.map(|v| v - mean)
}

/// Truncated mobility `T_M(u) = min(max(u, 0), M)`; `M = inf` only floors
/// at zero.
pub fn truncate_mobility(u: &PhysicalField, m: f64) -> PhysicalField {
    u.map(|v| v.max(0.0).min(m))
}

/// Cached spectral tables of the model operators for one
/// (grid, parameters) pair. Immutable after construction.
pub struct ModelOperator {
    /// Multiplier of the potential map
    /// `(-Delta)^{-1} L_eps^a L_eps^a`: `lambda^{(beta+1)/2 - 1}
    /// g_a(eps lambda)^2`, zero at mode 0.
    potential: Array2<f64>,
    /// Eigenvalue at the dealias cutoff (or the band edge), for the
    /// explicit stability cap.
    lambda_cut: f64,
}

impl ModelOperator {
    pub fn new(grid: &Grid, params: &RegParams, raw_normalization: bool, dealias: bool) -> Self {
        let alpha = params.alpha();
        let exponent = (params.beta + 1.0) / 2.0 - 1.0;
        let (n0, n1) = (
            grid.resolution(0),
            if grid.dim() == 2 { grid.resolution(1) } else { 1 },
        );
        let mut potential = Array2::zeros((n0, n1));
        for ((k0, k1), slot) in potential.indexed_iter_mut() {
            if k0 == 0 && k1 == 0 {
                continue;
            }
            let lam = grid.eigenvalue_pair(k0, k1);
            let profile = if params.eps == 0.0 {
                1.0
            } else if raw_normalization {
                g_alpha_raw(params.eps * lam, alpha)
            } else {
                g_alpha(params.eps * lam, alpha)
            };
            *slot = lam.powf(exponent) * profile * profile;
        }
        let cut0 = if dealias { 2 * n0 / 3 } else { n0 - 1 };
        let cut1 = if grid.dim() == 2 {
            if dealias {
                2 * grid.resolution(1) / 3
            } else {
                grid.resolution(1) - 1
            }
        } else {
            0
        };
        let lambda_cut = grid.eigenvalue_pair(cut0, cut1);
        Self {
            potential,
            lambda_cut,
        }
    }

    /// Apply the cached potential multiplier.
    pub fn potential(&self, u: &SpectralField) -> SpectralField {
        let mut out = u.clone();
        out.coeffs_mut().zip_mut_with(&self.potential, |c, &m| *c *= m);
        out
    }
}

/// Assembled right-hand side of one state.
pub struct RhsEval {
    /// Spectral transforms of the current densities.
    pub spectral: Vec<SpectralField>,
    /// Explicit part `div F_i - kappa g_rho[u_i]`, mode 0 exactly zero.
    pub explicit: Vec<SpectralField>,
    /// Largest pointwise drift speed `|sum_j a_ij grad P_j|`, for CFL.
    pub max_speed: f64,
}

/// Assemble the explicit right-hand side of every species.
///
/// The viscous `kappa Lap u_i` part is not included here; the integrator
/// treats it implicitly.
pub fn assemble_rhs(
    state: &SpeciesState,
    coupling: &CouplingSpec,
    params: &RegParams,
    op: &ModelOperator,
    dealias: bool,
) -> Result<RhsEval> {
    let n = state.n_species();
    if coupling.n() != n {
        return Err(Error::InvalidCoupling(format!(
            "coupling is for {} species, state has {n}",
            coupling.n()
        )));
    }
    let grid = state.grid();
    let context = || format!("in the right-hand side at t = {}", state.t());

    let spectral: Vec<SpectralField> = state.fields().iter().map(|f| f.to_spectral()).collect();
    // Drift velocities grad P_j of every species' potential.
    let velocities: Vec<Vec<PhysicalField>> = spectral
        .iter()
        .map(|u_hat| op.potential(u_hat).gradient())
        .collect();

    let mut explicit = Vec::with_capacity(n);
    let mut max_speed = 0.0_f64;
    for i in 0..n {
        // W = sum_j a_ij grad P_j, the velocity this species drifts with.
        let mut drift: Vec<PhysicalField> = (0..grid.dim())
            .map(|_| PhysicalField::zeros(grid))
            .collect();
        for j in 0..n {
            let aij = coupling.a()[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for (axis, w) in drift.iter_mut().enumerate() {
                *w = w.zip_map(&velocities[j][axis], |acc, v| acc + aij * v);
            }
        }
        for w in &drift {
            max_speed = max_speed.max(w.max_abs());
        }

        let mobility = truncate_mobility(state.field(i), params.m);
        let flux: Vec<PhysicalField> = drift
            .iter()
            .map(|w| mobility.zip_map(w, |m, v| m * v))
            .collect();
        for f in &flux {
            if !f.is_finite() {
                return Err(Error::NumericalBlowup { context: context() });
            }
        }

        let mut div = divergence(&flux)?;
        if dealias {
            div = div.dealiased();
        }

        let mut rhs = div;
        if params.kappa > 0.0 {
            let correction = g_correction(state.field(i), params.rho).to_spectral();
            rhs = rhs.add_scaled(&correction, -params.kappa);
        }
        // Mass conservation: the explicit part never moves the mean.
        rhs.coeffs_mut()[(0, 0)] = 0.0;
        if !rhs.coeffs().iter().all(|c| c.is_finite()) {
            return Err(Error::NumericalBlowup { context: context() });
        }
        explicit.push(rhs);
    }

    Ok(RhsEval {
        spectral,
        explicit,
        max_speed,
    })
}

/// One IMEX update from a pre-assembled right-hand side.
///
/// Spectral update `(c + dt e_k) / (1 + dt kappa lambda_k)`, then clip
/// negatives in physical space and restore the species mass
/// multiplicatively. Returns the new state and the clipped L1 magnitude.
pub fn advance(
    state: &SpeciesState,
    rhs: &RhsEval,
    params: &RegParams,
    dt: f64,
) -> Result<(SpeciesState, f64)> {
    let grid = state.grid().clone();
    let w = grid.cell_volume();
    let mut fields = Vec::with_capacity(state.n_species());
    let mut clipped_total = 0.0;
    for i in 0..state.n_species() {
        let mut hat = rhs.spectral[i].add_scaled(&rhs.explicit[i], dt);
        if params.kappa > 0.0 {
            hat = hat.apply_multiplier(|lam| 1.0 / (1.0 + dt * params.kappa * lam))?;
        }
        let mut phys = hat.to_physical();
        if !phys.is_finite() {
            return Err(Error::NumericalBlowup {
                context: format!("after the IMEX update at t = {}", state.t()),
            });
        }
        if phys.min_value() < 0.0 {
            let clipped = -w * phys
                .values()
                .iter()
                .filter(|v| **v < 0.0)
                .sum::<f64>();
            let target = state.masses()[i];
            let limit = CLIP_MASS_LIMIT * target.abs().max(f64::MIN_POSITIVE);
            if clipped > limit {
                return Err(Error::PositivityFailure {
                    species: i,
                    clipped,
                    limit,
                });
            }
            phys = phys.map(|v| v.max(0.0));
            let mass_after = phys.integral();
            if mass_after > 0.0 && target > 0.0 {
                let factor = target / mass_after;
                phys = phys.map(|v| v * factor);
            }
            clipped_total += clipped;
        }
        fields.push(phys);
    }
    Ok((SpeciesState::new(state.t() + dt, fields)?, clipped_total))
}

/// How the run chooses its time steps.
#[derive(Clone, Debug)]
pub enum TimeControl {
    /// CFL and explicit-stability caps with entropy/positivity backoff:
    /// halve on a rejected step, grow by 1.2 after 20 clean steps.
    Adaptive,
    /// Fixed step, no backoff; failures surface as errors.
    FixedDt(f64),
    /// Replay an exact step sequence (shared time grids across runs).
    Schedule(Vec<f64>),
}

/// Everything a run needs besides the code.
#[derive(Clone)]
pub struct RunSpec {
    pub coupling: CouplingSpec,
    pub params: RegParams,
    pub initial: SpeciesState,
    pub t_final: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub out_every: usize,
    pub time: TimeControl,
    pub dealias: bool,
    pub raw_normalization: bool,
    /// Keep state snapshots at record times (needed by twin reports and
    /// snapshot output).
    pub store_states: bool,
}

impl RunSpec {
    pub fn new(
        coupling: CouplingSpec,
        params: RegParams,
        initial: SpeciesState,
        t_final: f64,
    ) -> Self {
        Self {
            coupling,
            params,
            initial,
            t_final,
            cfl: 0.4,
            dt_max: 0.05,
            out_every: 10,
            time: TimeControl::Adaptive,
            dealias: true,
            raw_normalization: false,
            store_states: false,
        }
    }
}

/// Output of a completed run.
pub struct Trajectory {
    pub coupling: CouplingSpec,
    pub params: RegParams,
    pub records: Vec<DiagnosticsRecord>,
    /// Cumulative `sum_m D(t_m) dt_m` at each record (right endpoints).
    pub dissipation_integral: Vec<f64>,
    /// States at record times when `store_states` was set.
    pub states: Vec<SpeciesState>,
    pub dt_history: Vec<f64>,
    pub final_state: SpeciesState,
    /// Constant equilibrium built from the initial masses.
    pub equilibrium: SpeciesState,
    pub total_clipped: f64,
}

impl Trajectory {
    /// (t, relative entropy) series for rate fitting.
    pub fn h_rel_series(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .map(|r| (r.t, r.relative_entropy))
            .collect()
    }
}

/// Integrate a run specification to `t_final`.
///
/// Deterministic: identical specifications produce identical trajectories.
pub fn run(spec: &RunSpec) -> Result<Trajectory> {
    if !(spec.t_final >= 0.0 && spec.t_final.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "t_final must be a nonnegative finite real, got {}",
            spec.t_final
        )));
    }
    if !(spec.cfl > 0.0) || !(spec.dt_max > 0.0) || spec.out_every == 0 {
        return Err(Error::InvalidParams(
            "cfl, dt_max must be positive and out_every at least 1".into(),
        ));
    }
    if let TimeControl::FixedDt(dt) = spec.time {
        if !(dt > 0.0) {
            return Err(Error::InvalidParams(format!(
                "fixed time step must be positive, got {dt}"
            )));
        }
    }

    let grid = spec.initial.grid().clone();
    let op = ModelOperator::new(&grid, &spec.params, spec.raw_normalization, spec.dealias);
    let equilibrium = spec.initial.equilibrium();

    let mut state = spec.initial.clone();
    let mut records = Vec::new();
    let mut diss_integral = Vec::new();
    let mut states = Vec::new();
    let mut dt_history = Vec::new();

    let mut entropy = diagnostics::entropy(&state, &spec.coupling)?;
    let mut cum_dissipation = 0.0;
    let mut total_clipped = 0.0;
    let mut clip_since_record = 0.0;

    let record = |state: &SpeciesState, dt: f64, clip: f64, states: &mut Vec<SpeciesState>|
     -> Result<DiagnosticsRecord> {
        let rec = DiagnosticsRecord {
            t: state.t(),
            dt,
            masses: state.masses().to_vec(),
            entropy: diagnostics::entropy(state, &spec.coupling)?,
            dissipation: diagnostics::dissipation(state, spec.params.beta),
            relative_entropy: diagnostics::relative_entropy(state, &equilibrium, &spec.coupling)?,
            l1_distance: diagnostics::l1_distance(state, &equilibrium)?,
            clip_l1: clip,
        };
        if spec.store_states {
            states.push(state.clone());
        }
        Ok(rec)
    };

    records.push(record(&state, 0.0, 0.0, &mut states)?);
    diss_integral.push(0.0);

    let mut dt_soft = f64::INFINITY;
    let mut clean_streak: usize = 0;
    let mut schedule_pos: usize = 0;
    let mut steps_since_record: usize = 0;
    let end_guard = 1e-12 * spec.t_final.max(1.0);

    while state.t() < spec.t_final - end_guard {
        let rhs = assemble_rhs(&state, &spec.coupling, &spec.params, &op, spec.dealias)?;

        // Static caps: CFL against the drift speed, explicit stability
        // against the fractional transport stiffness, and dt_max.
        let umax = state.max_density();
        let stiffness = op.lambda_cut.powf((1.0 + spec.params.beta) / 2.0)
            * spec.coupling.max_row_sum()
            * umax
            + 2.0 * spec.params.kappa * umax;
        let dt_cap = spec
            .dt_max
            .min(if rhs.max_speed > 0.0 {
                spec.cfl * grid.min_spacing() / rhs.max_speed
            } else {
                f64::INFINITY
            })
            .min(if stiffness > 0.0 {
                1.8 / stiffness
            } else {
                f64::INFINITY
            });

        let remaining = spec.t_final - state.t();
        let (mut dt, adaptive) = match &spec.time {
            TimeControl::Adaptive => (dt_soft.min(dt_cap).min(remaining), true),
            TimeControl::FixedDt(fixed) => (fixed.min(remaining), false),
            TimeControl::Schedule(seq) => {
                let dt = *seq.get(schedule_pos).ok_or(Error::TimeStepUnderflow {
                    t: state.t(),
                    dt: 0.0,
                })?;
                schedule_pos += 1;
                (dt, false)
            }
        };

        loop {
            if !(dt > end_guard) {
                return Err(Error::TimeStepUnderflow { t: state.t(), dt });
            }
            match advance(&state, &rhs, &spec.params, dt) {
                Ok((candidate, clipped)) => {
                    let h_new = diagnostics::entropy(&candidate, &spec.coupling)?;
                    let tol = 1e-8 * (1.0 + entropy.abs());
                    if adaptive && h_new > entropy + tol {
                        dt *= 0.5;
                        dt_soft = dt;
                        clean_streak = 0;
                        continue;
                    }
                    state = candidate;
                    entropy = h_new;
                    cum_dissipation +=
                        diagnostics::dissipation(&state, spec.params.beta) * dt;
                    total_clipped += clipped;
                    clip_since_record += clipped;
                    dt_history.push(dt);
                    if adaptive {
                        clean_streak += 1;
                        if dt_soft.is_infinite() {
                            dt_soft = dt;
                        }
                        if clean_streak >= 20 {
                            dt_soft *= 1.2;
                            clean_streak = 0;
                        }
                    }
                    break;
                }
                Err(Error::PositivityFailure { .. }) if adaptive => {
                    dt *= 0.5;
                    dt_soft = dt;
                    clean_streak = 0;
                }
                Err(e) => return Err(e),
            }
        }

        steps_since_record += 1;
        let finished = state.t() >= spec.t_final - end_guard;
        if steps_since_record == spec.out_every || finished {
            records.push(record(
                &state,
                *dt_history.last().unwrap(),
                clip_since_record,
                &mut states,
            )?);
            diss_integral.push(cum_dissipation);
            clip_since_record = 0.0;
            steps_since_record = 0;
        }
    }

    Ok(Trajectory {
        coupling: spec.coupling.clone(),
        params: spec.params,
        records,
        dissipation_integral: diss_integral,
        states,
        dt_history,
        final_state: state,
        equilibrium,
        total_clipped,
    })
}

/// One entry of a continuation study.
#[derive(Clone, Debug)]
pub struct ContinuationEntry {
    pub params: RegParams,
    /// Failure annotation when this member run did not complete.
    pub error: Option<String>,
    /// Distances to the next schedule entry's final state.
    pub dist_l1_next: Option<f64>,
    pub dist_l2_next: Option<f64>,
    /// Distances to the limit-system final state.
    pub dist_l1_limit: Option<f64>,
    pub dist_l2_limit: Option<f64>,
}

/// Report of a parameter-continuation study toward the limit system.
#[derive(Clone, Debug)]
pub struct ContinuationReport {
    pub entries: Vec<ContinuationEntry>,
    pub limit_params: RegParams,
    /// Distances to the limit are non-increasing along the schedule
    /// within 10% slack.
    pub monotone_within_slack: bool,
}

/// Run every schedule entry plus the limit system and measure the final
/// state distances along the schedule.
///
/// The schedule must approach the limit monotonically: `kappa`, `eps`,
/// `rho` non-increasing and `M` non-decreasing.
pub fn continuation_study(base: &RunSpec, schedule: &[RegParams]) -> Result<ContinuationReport> {
    if schedule.is_empty() {
        return Err(Error::InvalidSchedule("the schedule is empty".into()));
    }
    for params in schedule {
        if (params.beta - base.params.beta).abs() > 1e-15 {
            return Err(Error::InvalidSchedule(format!(
                "beta must stay fixed along the schedule ({} vs {})",
                params.beta, base.params.beta
            )));
        }
    }
    for (idx, pair) in schedule.windows(2).enumerate() {
        let (p, q) = (&pair[0], &pair[1]);
        let toward_limit = q.kappa <= p.kappa && q.eps <= p.eps && q.rho <= p.rho && q.m >= p.m;
        if !toward_limit {
            return Err(Error::InvalidSchedule(format!(
                "entries {idx} -> {} move away from the limit system",
                idx + 1
            )));
        }
    }

    let limit_params = RegParams::limit_system(base.params.beta)?;
    let mut limit_spec = base.clone();
    limit_spec.params = limit_params;
    limit_spec.store_states = false;
    let limit_final = run(&limit_spec)?.final_state;

    let mut finals: Vec<Option<SpeciesState>> = Vec::with_capacity(schedule.len());
    let mut errors: Vec<Option<String>> = Vec::with_capacity(schedule.len());
    for params in schedule {
        let mut member = base.clone();
        member.params = *params;
        member.store_states = false;
        match run(&member) {
            Ok(traj) => {
                finals.push(Some(traj.final_state));
                errors.push(None);
            }
            Err(e) => {
                finals.push(None);
                errors.push(Some(e.to_string()));
            }
        }
    }

    let mut entries = Vec::with_capacity(schedule.len());
    for (i, params) in schedule.iter().enumerate() {
        let (mut l1n, mut l2n, mut l1l, mut l2l) = (None, None, None, None);
        if let Some(state) = &finals[i] {
            if let Some(Some(next)) = finals.get(i + 1) {
                l1n = Some(diagnostics::l1_distance(state, next)?);
                l2n = Some(diagnostics::l2_distance(state, next)?);
            }
            l1l = Some(diagnostics::l1_distance(state, &limit_final)?);
            l2l = Some(diagnostics::l2_distance(state, &limit_final)?);
        }
        entries.push(ContinuationEntry {
            params: *params,
            error: errors[i].clone(),
            dist_l1_next: l1n,
            dist_l2_next: l2n,
            dist_l1_limit: l1l,
            dist_l2_limit: l2l,
        });
    }

    let limit_distances: Vec<f64> = entries.iter().filter_map(|e| e.dist_l1_limit).collect();
    let monotone_within_slack = limit_distances
        .windows(2)
        .all(|w| w[1] <= 1.1 * w[0] + 1e-300);

    Ok(ContinuationReport {
        entries,
        limit_params,
        monotone_within_slack,
    })
}

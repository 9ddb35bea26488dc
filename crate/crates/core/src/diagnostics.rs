//! Entropy-method diagnostics: the Lyapunov functional, its dissipation,
//! relative entropy against a reference, the Csiszar-Kullback-Pinsker
//! bound, the fractional Poincare ratio, and exponential-rate fitting.
//!
//! All integrals are midpoint quadrature over collocation nodes with the
//! convention `0 log 0 = 0`. Relative-entropy integrands are evaluated in
//! the cancellation-free form `v phi(u/v)` with
//! `phi(r) = r log r - r + 1 = r log1p(r-1) - (r-1)`, which stays accurate
//! down to `|u - v| ~ 1e-13 v`.

use crate::dynamics::{CouplingSpec, SpeciesState, Trajectory};
use crate::error::{Error, Result};
use crate::field::SpectralField;

/// One diagnostics sample of a running trajectory.
#[derive(Clone, Debug)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    /// Per-species mass, `int u_i`.
    pub masses: Vec<f64>,
    /// Entropy `H = sum_i pi_i int u_i log u_i`.
    pub entropy: f64,
    /// Dissipation `D = sum_i sum_{k!=0} lambda_k^{(1+beta)/2} c_k^2`.
    pub dissipation: f64,
    /// Relative entropy against the reference state.
    pub relative_entropy: f64,
    /// `sum_i ||u_i - ref_i||_{L1}`.
    pub l1_distance: f64,
    /// Mass clipped to restore positivity since the previous record.
    pub clip_l1: f64,
}

/// Exponential decay rate fitted on a window.
#[derive(Clone, Copy, Debug)]
pub struct RateFit {
    pub window: (f64, f64),
    /// `C` in `H(t) ~ H(t_a) exp(-C (t - t_a))`.
    pub rate: f64,
    /// Goodness of fit of the log-linear regression, in [0, 1].
    pub r2: f64,
    pub samples: usize,
}

fn check_densities(state: &SpeciesState) -> Result<()> {
    for (i, field) in state.fields().iter().enumerate() {
        let min = field.min_value();
        let tol = 1e-10 * field.max_abs();
        if min < -tol {
            return Err(Error::NegativeDensity {
                species: i,
                min,
                tol,
            });
        }
    }
    Ok(())
}

/// Entropy `H[u] = sum_i pi_i int u_i log u_i`, with `0 log 0 = 0`.
pub fn entropy(state: &SpeciesState, coupling: &CouplingSpec) -> Result<f64> {
    check_densities(state)?;
    let w = state.grid().cell_volume();
    let mut total = 0.0;
    for (field, &pi) in state.fields().iter().zip(coupling.pi()) {
        let sum: f64 = field
            .values()
            .iter()
            .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
            .sum();
        total += pi * w * sum;
    }
    Ok(total)
}

/// Primitive of the truncated mobility inverse:
/// `h_M(v) = v log v - v` below the truncation level and its quadratic
/// continuation `M log M - M + (v-M) log M + (v-M)^2/(2M)` above it.
pub fn h_truncated(v: f64, m: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    if v <= m {
        v * v.ln() - v
    } else {
        let excess = v - m;
        m * m.ln() - m + excess * m.ln() + excess * excess / (2.0 * m)
    }
}

/// Truncated entropy `H_M[u] = sum_i pi_i int h_M(u_i)`.
///
/// As `M -> inf` this tends to `H[u] - sum_i pi_i mass_i`; use
/// [`entropy_truncated_comparable`] to add the mass offset back.
pub fn entropy_truncated(state: &SpeciesState, coupling: &CouplingSpec, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::InvalidParams(format!(
            "truncation level must be positive, got {m}"
        )));
    }
    check_densities(state)?;
    let w = state.grid().cell_volume();
    let mut total = 0.0;
    for (field, &pi) in state.fields().iter().zip(coupling.pi()) {
        let sum: f64 = field.values().iter().map(|&v| h_truncated(v, m)).sum();
        total += pi * w * sum;
    }
    Ok(total)
}

/// `H_M + sum_i pi_i mass_i`, directly comparable with [`entropy`].
pub fn entropy_truncated_comparable(
    state: &SpeciesState,
    coupling: &CouplingSpec,
    m: f64,
) -> Result<f64> {
    let h_m = entropy_truncated(state, coupling, m)?;
    let offset: f64 = state
        .masses()
        .iter()
        .zip(coupling.pi())
        .map(|(mass, pi)| pi * mass)
        .sum();
    Ok(h_m + offset)
}

/// Squared seminorm `sum_{k != 0} lambda_k^r c_k^2` of one field.
pub fn sobolev_seminorm_sq(field: &SpectralField, r: f64) -> f64 {
    let grid = field.grid();
    let n1 = if grid.dim() == 2 { grid.resolution(1) } else { 1 };
    let mut sum = 0.0;
    for k0 in 0..grid.resolution(0) {
        for k1 in 0..n1 {
            if k0 == 0 && k1 == 0 {
                continue;
            }
            let c = field.coeffs()[(k0, k1)];
            if c == 0.0 {
                continue;
            }
            sum += grid.eigenvalue_pair(k0, k1).powf(r) * c * c;
        }
    }
    sum
}

/// Entropy dissipation
/// `D = sum_i || grad (-Delta)^{-(1-beta)/4} u_i ||^2
///    = sum_i sum_{k != 0} lambda_k^{(1+beta)/2} c_k^2`.
///
/// Nonnegative, and zero exactly when every species is constant.
pub fn dissipation(state: &SpeciesState, beta: f64) -> f64 {
    let r = (1.0 + beta) / 2.0;
    state
        .fields()
        .iter()
        .map(|f| sobolev_seminorm_sq(&f.to_spectral(), r))
        .sum()
}

/// Cancellation-free `u log(u/v) - u + v` for `u >= 0`, `v > 0`.
fn rel_entropy_term(u: f64, v: f64) -> f64 {
    let r = u / v;
    if r < 1e-300 {
        return v;
    }
    let d = r - 1.0;
    v * (r * d.ln_1p() - d)
}

/// Relative entropy
/// `H[u|v] = sum_i pi_i int (u_i log(u_i/v_i) - u_i + v_i) >= 0`.
///
/// The reference must be positive wherever the state is.
pub fn relative_entropy(
    state: &SpeciesState,
    reference: &SpeciesState,
    coupling: &CouplingSpec,
) -> Result<f64> {
    if state.grid() != reference.grid() {
        return Err(Error::GridMismatch);
    }
    check_densities(state)?;
    check_densities(reference)?;
    let w = state.grid().cell_volume();
    let mut total = 0.0;
    for (i, (uf, vf)) in state
        .fields()
        .iter()
        .zip(reference.fields().iter())
        .enumerate()
    {
        let pi = coupling.pi()[i];
        let mut sum = 0.0;
        for (node, (&u, &v)) in uf.values().iter().zip(vf.values().iter()).enumerate() {
            let u = u.max(0.0);
            let v = v.max(0.0);
            if v == 0.0 {
                if u > 0.0 {
                    return Err(Error::AbsoluteContinuity {
                        species: i,
                        node,
                        value: u,
                    });
                }
                continue;
            }
            sum += rel_entropy_term(u, v);
        }
        total += pi * w * sum;
    }
    Ok(total.max(0.0))
}

/// `sum_i ||u_i - ref_i||_{L1}`.
pub fn l1_distance(state: &SpeciesState, reference: &SpeciesState) -> Result<f64> {
    if state.grid() != reference.grid() {
        return Err(Error::GridMismatch);
    }
    let w = state.grid().cell_volume();
    Ok(state
        .fields()
        .iter()
        .zip(reference.fields().iter())
        .map(|(uf, vf)| {
            w * uf
                .values()
                .iter()
                .zip(vf.values().iter())
                .map(|(u, v)| (u - v).abs())
                .sum::<f64>()
        })
        .sum())
}

/// `sqrt(sum_i ||u_i - ref_i||_{L2}^2)`.
pub fn l2_distance(state: &SpeciesState, reference: &SpeciesState) -> Result<f64> {
    if state.grid() != reference.grid() {
        return Err(Error::GridMismatch);
    }
    let w = state.grid().cell_volume();
    Ok(state
        .fields()
        .iter()
        .zip(reference.fields().iter())
        .map(|(uf, vf)| {
            w * uf
                .values()
                .iter()
                .zip(vf.values().iter())
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt())
}

/// Per-species sides of the Csiszar-Kullback-Pinsker inequality.
#[derive(Clone, Debug)]
pub struct CkpReport {
    /// `||u_i - ref_i||_{L1}^2`.
    pub lhs: Vec<f64>,
    /// `2 mass_i KL_i` with `KL_i = int (u_i log(u_i/ref_i) - u_i + ref_i)`.
    pub rhs: Vec<f64>,
    pub ok: bool,
}

/// Check `||u_i - ref_i||_{L1}^2 <= 2 mass_i KL_i` species by species.
///
/// Requires matching per-species masses within 1e-10 relative. A small
/// additive tolerance `1e-12 (1 + mass)^2` absorbs the quadrature
/// round-off floor when both sides vanish.
pub fn ckp_check(
    state: &SpeciesState,
    reference: &SpeciesState,
    coupling: &CouplingSpec,
) -> Result<CkpReport> {
    if state.grid() != reference.grid() {
        return Err(Error::GridMismatch);
    }
    for (i, (mu, mv)) in state
        .masses()
        .iter()
        .zip(reference.masses().iter())
        .enumerate()
    {
        let scale = mu.abs().max(mv.abs()).max(f64::MIN_POSITIVE);
        if (mu - mv).abs() > 1e-10 * scale {
            return Err(Error::MassMismatch {
                tol: 1e-10,
                detail: format!("species {i}: {mu} vs {mv}"),
            });
        }
    }
    let w = state.grid().cell_volume();
    let n = state.n_species();
    let mut lhs = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    let mut ok = true;
    for i in 0..n {
        let uf = &state.fields()[i];
        let vf = &reference.fields()[i];
        let l1: f64 = w * uf
            .values()
            .iter()
            .zip(vf.values().iter())
            .map(|(u, v)| (u - v).abs())
            .sum::<f64>();
        let mut kl = 0.0;
        for (node, (&u, &v)) in uf.values().iter().zip(vf.values().iter()).enumerate() {
            let u = u.max(0.0);
            let v = v.max(0.0);
            if v == 0.0 {
                if u > 0.0 {
                    return Err(Error::AbsoluteContinuity {
                        species: i,
                        node,
                        value: u,
                    });
                }
                continue;
            }
            kl += rel_entropy_term(u, v);
        }
        kl *= w;
        let mass = state.masses()[i];
        let l = l1 * l1;
        let r = 2.0 * mass * kl;
        if l > r + 1e-12 * (1.0 + mass) * (1.0 + mass) {
            ok = false;
        }
        lhs.push(l);
        rhs.push(r);
    }
    let _ = coupling; // weights do not enter the per-species inequality
    Ok(CkpReport { lhs, rhs, ok })
}

/// Rayleigh quotient of the fractional Dirichlet form,
/// `||grad (-Delta)^{(r-1)/2} u||^2 / ||u||^2 = sum lambda^r c^2 / sum c^2`
/// on zero-mean `u`; always at least `lambda_1^r`, with equality exactly
/// on the first eigenspace.
pub fn poincare_ratio(u: &SpectralField, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParams(format!(
            "fractional order must lie in (0,1), got {r}"
        )));
    }
    if !u.is_zero_mean() {
        return Err(Error::NotZeroMean { coeff: u.mode0() });
    }
    let norm_sq: f64 = {
        let z = u.zero_mean();
        let n = z.l2_norm();
        n * n
    };
    if norm_sq == 0.0 {
        return Err(Error::InvalidParams(
            "Poincare ratio of the zero field".into(),
        ));
    }
    Ok(sobolev_seminorm_sq(u, r) / norm_sq)
}

/// Least-squares exponential rate of a positive series on a time window.
///
/// A series with zero variance in the window fits `rate = 0` with
/// `r2 = 1` by convention.
pub fn fit_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (a, b) = window;
    let samples: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= a && *t <= b)
        .collect();
    if samples.len() < 10 {
        return Err(Error::WindowTooSmall {
            a,
            b,
            found: samples.len(),
            need: 10,
        });
    }
    for &(t, h) in &samples {
        if !(h > 0.0) {
            return Err(Error::ConvergedBelowFloor { t, value: h });
        }
    }
    let n = samples.len() as f64;
    let mean_t = samples.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_y = samples.iter().map(|(_, h)| h.ln()).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(t, h) in &samples {
        let dx = t - mean_t;
        let dy = h.ln() - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if syy == 0.0 {
        return Ok(RateFit {
            window,
            rate: 0.0,
            r2: 1.0,
            samples: samples.len(),
        });
    }
    let slope = sxy / sxx;
    let r2 = ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0);
    Ok(RateFit {
        window,
        rate: -slope,
        r2,
        samples: samples.len(),
    })
}

/// One sample of the weak-strong comparison between two trajectories.
#[derive(Clone, Debug)]
pub struct TwinSample {
    pub t: f64,
    /// Relative entropy `H[u|v]` between the trajectories.
    pub h_rel: f64,
    /// `sum_i sum_{k!=0} lambda_k^{(1+beta)/2} (c_k(u_i) - c_k(v_i))^2`.
    pub dissipation_between: f64,
    /// `sum_i ||grad log v_i||_{L^{q2}}^{q1}`, the envelope integrand.
    pub grad_log_q1: f64,
    /// Running integral of the envelope integrand up to this sample.
    pub envelope_integral: f64,
}

/// Report of the twin-run relative-entropy experiment.
#[derive(Clone, Debug)]
pub struct TwinReport {
    pub samples: Vec<TwinSample>,
    pub q1: f64,
    pub q2: f64,
    /// Fitted constant `C` of the envelope
    /// `H(t) <= H(0) exp(C int_0^t sum_i ||grad log v_i||^{q1})`.
    pub envelope_rate: f64,
    /// Every sample lies below the fitted envelope.
    pub envelope_ok: bool,
    /// The relative entropy is non-increasing sample to sample.
    pub monotone: bool,
}

/// Track `H[u|v]`, the dissipation between solutions, and the integrability
/// quantities of the reference trajectory along a shared time grid.
///
/// `q2` defaults to the smallest integer exceeding `2d/(1+beta)`; `q1`
/// follows from `q1 = 2(d+1+beta)/(1+beta-2d/q2)`. The norms are reported,
/// not asserted.
pub fn twin_run_report(
    base: &Trajectory,
    perturbed: &Trajectory,
    q2_override: Option<f64>,
) -> Result<TwinReport> {
    if base.coupling.n() != perturbed.coupling.n() {
        return Err(Error::TrajectoryMismatch("a species count".into()));
    }
    if (base.params.beta - perturbed.params.beta).abs() > 0.0 {
        return Err(Error::TrajectoryMismatch("a fractional order".into()));
    }
    if base.states.len() != perturbed.states.len() || base.states.is_empty() {
        return Err(Error::TrajectoryMismatch(
            "sampled time grid (lengths differ or empty)".into(),
        ));
    }
    let beta = base.params.beta;
    let dim = base.states[0].grid().dim() as f64;
    let q2 = match q2_override {
        Some(q) => {
            if !(q > 2.0 * dim / (1.0 + beta)) {
                return Err(Error::InvalidParams(format!(
                    "q2 = {q} must exceed 2d/(1+beta) = {}",
                    2.0 * dim / (1.0 + beta)
                )));
            }
            q
        }
        None => (2.0 * dim / (1.0 + beta)).floor() + 1.0,
    };
    let q1 = 2.0 * (dim + 1.0 + beta) / (1.0 + beta - 2.0 * dim / q2);

    let r = (1.0 + beta) / 2.0;
    let mut samples: Vec<TwinSample> = Vec::with_capacity(base.states.len());
    let mut integral = 0.0;
    let mut prev_t = f64::NAN;
    let mut prev_gq = 0.0;
    for (us, vs) in base.states.iter().zip(perturbed.states.iter()) {
        if (us.t() - vs.t()).abs() > 1e-12 * (1.0 + us.t().abs()) {
            return Err(Error::TrajectoryMismatch(format!(
                "time stamp ({} vs {})",
                us.t(),
                vs.t()
            )));
        }
        if us.grid() != vs.grid() {
            return Err(Error::GridMismatch);
        }
        let h_rel = relative_entropy(us, vs, &base.coupling)?;
        let mut diss = 0.0;
        let mut grad_log_q1 = 0.0;
        for (uf, vf) in us.fields().iter().zip(vs.fields().iter()) {
            let diff = uf.to_spectral().add_scaled(&vf.to_spectral(), -1.0);
            diss += sobolev_seminorm_sq(&diff, r);

            let log_v = vf.map(|x| x.max(1e-300).ln());
            let grads = log_v.to_spectral().gradient();
            let mut magnitude = grads[0].map(|g| g * g);
            for g in grads.iter().skip(1) {
                magnitude = magnitude.zip_map(g, |acc, gg| acc + gg * gg);
            }
            let norm_q2 = magnitude.map(f64::sqrt).lp_norm(q2);
            grad_log_q1 += norm_q2.powf(q1);
        }
        if prev_t.is_finite() {
            integral += 0.5 * (grad_log_q1 + prev_gq) * (us.t() - prev_t);
        }
        prev_t = us.t();
        prev_gq = grad_log_q1;
        samples.push(TwinSample {
            t: us.t(),
            h_rel,
            dissipation_between: diss,
            grad_log_q1,
            envelope_integral: integral,
        });
    }

    let h0 = samples[0].h_rel;
    let mut rate: f64 = 0.0;
    if h0 > 1e-300 {
        for s in samples.iter().skip(1) {
            if s.envelope_integral > 0.0 && s.h_rel > 1e-300 {
                rate = rate.max((s.h_rel / h0).ln() / s.envelope_integral);
            }
        }
    }
    let envelope_ok = samples.iter().all(|s| {
        if h0 <= 1e-300 {
            s.h_rel <= 1e-14
        } else {
            s.h_rel <= h0 * (rate * s.envelope_integral).exp() * (1.0 + 1e-9) + 1e-300
        }
    });
    let monotone = samples
        .windows(2)
        .all(|w| w[1].h_rel <= w[0].h_rel + 1e-12 + 1e-9 * w[0].h_rel);

    Ok(TwinReport {
        samples,
        q1,
        q2,
        envelope_rate: rate,
        envelope_ok,
        monotone,
    })
}

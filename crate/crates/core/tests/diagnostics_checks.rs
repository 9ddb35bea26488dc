//! Entropy functionals, CKP inequality, Poincare ratio, and rate fitting
//! against closed forms and quadrature oracles.

mod common;

use std::f64::consts::PI;

use fracross_core::diagnostics::{
    ckp_check, dissipation, entropy, entropy_truncated, entropy_truncated_comparable, fit_rate,
    h_truncated, poincare_ratio, relative_entropy,
};
use fracross_core::dynamics::{validate_coupling, CouplingSpec, SpeciesState};
use fracross_core::{Error, Grid, PhysicalField, SpectralField};
use ndarray::array;
use rand::Rng;

use common::{adaptive_simpson, rng};

fn single_species() -> CouplingSpec {
    validate_coupling(&array![[1.0]], &[1.0]).unwrap()
}

fn unit_grid(n: usize) -> Grid {
    Grid::new_1d(1.0, n).unwrap()
}

fn state_of(field: PhysicalField) -> SpeciesState {
    SpeciesState::new(0.0, vec![field]).unwrap()
}

#[test]
fn entropy_closed_forms() {
    let coupling = single_species();

    // u == 1 integrates to zero entropy on any domain
    let grid = Grid::new_1d(2.3, 32).unwrap();
    let ones = state_of(PhysicalField::constant(&grid, 1.0));
    assert!(entropy(&ones, &coupling).unwrap().abs() < 1e-14);

    // constant c = e on |Omega| = pi gives pi * e
    let grid_pi = Grid::new_1d(PI, 32).unwrap();
    let e_state = state_of(PhysicalField::constant(&grid_pi, std::f64::consts::E));
    let got = entropy(&e_state, &coupling).unwrap();
    assert!((got - PI * std::f64::consts::E).abs() < 1e-12);

    // two-level 0/2 on half of a unit domain: (1/2) * 2 log 2 = log 2
    let grid1 = unit_grid(32);
    let two = state_of(PhysicalField::from_fn(&grid1, |x| {
        if x[0] < 0.5 {
            0.0
        } else {
            2.0
        }
    }));
    let got = entropy(&two, &coupling).unwrap();
    assert!((got - 2.0_f64.ln()).abs() < 1e-13);
}

#[test]
fn entropy_rejects_deep_negative_values() {
    // bypass the state constructor to hit the diagnostic gate
    let grid = unit_grid(32);
    let ok = state_of(PhysicalField::constant(&grid, 1.0));
    let coupling = single_species();
    assert!(entropy(&ok, &coupling).is_ok());
    // SpeciesState::new would reject this too; diagnostics double-check
    // because trajectories may be assembled from external files.
    let bad = PhysicalField::from_fn(&grid, |x| if x[0] < 0.5 { -1.0 } else { 2.0 });
    assert!(SpeciesState::new(0.0, vec![bad]).is_err());
}

/// Double-quadrature oracle for the truncated entropy primitive:
/// integrate by parts once, then evaluate both remaining 1D integrals by
/// adaptive Simpson with no knowledge of any antiderivative.
fn h_truncated_oracle(v: f64, m: f64) -> f64 {
    let inv_mob = |s: f64| 1.0 / s.min(m);
    let outer = adaptive_simpson(&|s: f64| s * inv_mob(s), 1e-12, v, 1e-12);
    let inner = adaptive_simpson(&inv_mob, 1.0, v, 1e-12);
    v * inner - outer
}

#[test]
fn truncated_entropy_matches_double_quadrature() {
    let m = 3.0;
    for v in [0.4, 1.0, 2.0, 3.0, 4.5, 6.0] {
        let want = h_truncated_oracle(v, m);
        let got = h_truncated(v, m);
        assert!(
            (got - want).abs() <= 1e-9 * (1.0 + want.abs()),
            "v = {v}: {got} vs oracle {want}"
        );
    }
}

#[test]
fn truncated_entropy_examples() {
    let coupling = single_species();
    let grid = unit_grid(32);

    // u == 2M on |Omega| = 1: h_M(2M) = 2 M log M - M/2
    let m = 3.0;
    let state = state_of(PhysicalField::constant(&grid, 2.0 * m));
    let got = entropy_truncated(&state, &coupling, m).unwrap();
    let want = 2.0 * m * m.ln() - m / 2.0;
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");

    // u == 0 has zero truncated entropy
    let zero = state_of(PhysicalField::constant(&grid, 0.0));
    assert_eq!(entropy_truncated(&zero, &coupling, m).unwrap(), 0.0);

    // below the truncation level the mass offset reconciles H_M with H
    let grid_pi = Grid::new_1d(PI, 48).unwrap();
    let mut r = rng(3);
    let u = common::random_density(&grid_pi, 1.5, 0.5, &mut r);
    let state = state_of(u);
    let h = entropy(&state, &coupling).unwrap();
    let h_m = entropy_truncated_comparable(&state, &coupling, 50.0).unwrap();
    assert!((h - h_m).abs() <= 1e-12 * (1.0 + h.abs()), "{h} vs {h_m}");
    // and the same identity holds at M = infinity
    let h_inf = entropy_truncated_comparable(&state, &coupling, f64::INFINITY).unwrap();
    assert!((h - h_inf).abs() <= 1e-12 * (1.0 + h.abs()));
}

#[test]
fn dissipation_closed_forms() {
    let grid = Grid::new_1d(PI, 32).unwrap();
    let constant = state_of(PhysicalField::constant(&grid, 2.0));
    assert_eq!(dissipation(&constant, 0.5), 0.0);

    let mut hat = SpectralField::zeros(&grid);
    hat.set_coeff(&[0], 2.0 * PI.sqrt()).unwrap();
    hat.set_coeff(&[1], 1.0).unwrap();
    let state = state_of(hat.to_physical());
    for beta in [0.25, 0.5, 0.75] {
        let d = dissipation(&state, beta);
        assert!((d - 1.0).abs() < 1e-12, "beta {beta}: {d}"); // lambda_1 = 1
    }

    let mut hat = SpectralField::zeros(&grid);
    hat.set_coeff(&[0], 2.0 * PI.sqrt()).unwrap();
    hat.set_coeff(&[2], 1.0).unwrap();
    let state = state_of(hat.to_physical());
    let d = dissipation(&state, 0.5);
    let want = 4.0_f64.powf(0.75); // 2 sqrt(2)
    assert!((d - want).abs() < 1e-12, "{d} vs {want}");
}

#[test]
fn relative_entropy_closed_forms_and_bounds() {
    let coupling = single_species();
    let grid = unit_grid(32);

    let u = state_of(PhysicalField::constant(&grid, 2.0));
    let v = state_of(PhysicalField::constant(&grid, 1.0));
    assert_eq!(relative_entropy(&u, &u, &coupling).unwrap(), 0.0);
    let got = relative_entropy(&u, &v, &coupling).unwrap();
    let want = 2.0 * 2.0_f64.ln() - 1.0;
    assert!((got - want).abs() < 1e-13, "{got} vs {want}");

    // against its own mean, relative entropy dominates the CKP quotient
    let mut r = rng(5);
    let grid_pi = Grid::new_1d(PI, 64).unwrap();
    let u = SpeciesState::new(0.0, vec![common::random_density(&grid_pi, 1.0, 0.7, &mut r)])
        .unwrap();
    let eq = u.equilibrium();
    let h_rel = relative_entropy(&u, &eq, &coupling).unwrap();
    let l1 = fracross_core::diagnostics::l1_distance(&u, &eq).unwrap();
    let mass = u.masses()[0];
    assert!(l1 * l1 <= 2.0 * mass * h_rel + 1e-12);
}

#[test]
fn relative_entropy_absolute_continuity_error() {
    let coupling = single_species();
    let grid = unit_grid(32);
    let u = state_of(PhysicalField::constant(&grid, 1.0));
    let v = state_of(PhysicalField::from_fn(&grid, |x| {
        if x[0] < 0.5 {
            0.0
        } else {
            2.0
        }
    }));
    assert!(matches!(
        relative_entropy(&u, &v, &coupling),
        Err(Error::AbsoluteContinuity { .. })
    ));
}

#[test]
fn ckp_two_level_example_and_sweep() {
    let coupling = single_species();
    let grid = unit_grid(32);
    let u = state_of(PhysicalField::from_fn(&grid, |x| {
        if x[0] < 0.5 {
            0.0
        } else {
            2.0
        }
    }));
    let v = state_of(PhysicalField::constant(&grid, 1.0));
    let report = ckp_check(&u, &v, &coupling).unwrap();
    assert!((report.lhs[0] - 1.0).abs() < 1e-12);
    assert!((report.rhs[0] - 2.0 * 2.0_f64.ln()).abs() < 1e-12);
    assert!(report.ok);

    // trivial equality case
    let report = ckp_check(&v, &v, &coupling).unwrap();
    assert_eq!(report.lhs[0], 0.0);
    assert_eq!(report.rhs[0], 0.0);
    assert!(report.ok);

    // mass mismatch is a hard error
    let w = state_of(PhysicalField::constant(&grid, 1.5));
    assert!(matches!(
        ckp_check(&u, &w, &coupling),
        Err(Error::MassMismatch { .. })
    ));

    // 100 random states against their equilibria
    let grid_pi = Grid::new_1d(PI, 64).unwrap();
    let mut r = rng(2024);
    for trial in 0..100 {
        let baseline = r.gen_range(0.5..2.0);
        let amp = r.gen_range(0.1..0.9) * baseline;
        let state = SpeciesState::new(
            0.0,
            vec![common::random_density(&grid_pi, baseline, amp, &mut r)],
        )
        .unwrap();
        let eq = state.equilibrium();
        let report = ckp_check(&state, &eq, &coupling).unwrap();
        assert!(report.ok, "trial {trial}: lhs {:?} rhs {:?}", report.lhs, report.rhs);
    }
}

#[test]
fn poincare_ratio_eigenfunctions_and_sweep() {
    let grid = Grid::new_1d(PI, 64).unwrap();
    let psi1 = SpectralField::basis(&grid, &[1]).unwrap();
    for r_exp in [0.25, 0.5, 0.75] {
        let ratio = poincare_ratio(&psi1, r_exp).unwrap();
        assert!((ratio - 1.0).abs() <= 1e-12, "ratio {ratio}");
    }
    let psi2 = SpectralField::basis(&grid, &[2]).unwrap();
    let ratio = poincare_ratio(&psi2, 0.5).unwrap();
    assert!((ratio - 2.0).abs() < 1e-13);

    let lambda_1 = grid.lambda_1();
    let mut r = rng(31);
    for _ in 0..100 {
        let u = common::random_band_limited(&grid, 40, &mut r);
        for r_exp in [0.25, 0.5, 0.75] {
            let ratio = poincare_ratio(&u, r_exp).unwrap();
            assert!(ratio >= lambda_1.powf(r_exp) - 1e-10, "ratio {ratio}");
        }
    }
}

#[test]
fn poincare_ratio_domain_errors() {
    let grid = Grid::new_1d(PI, 32).unwrap();
    let zero = SpectralField::zeros(&grid);
    assert!(poincare_ratio(&zero, 0.5).is_err());
    let mut with_mean = SpectralField::zeros(&grid);
    with_mean.set_coeff(&[0], 1.0).unwrap();
    with_mean.set_coeff(&[1], 1.0).unwrap();
    assert!(matches!(
        poincare_ratio(&with_mean, 0.5),
        Err(Error::NotZeroMean { .. })
    ));
}

#[test]
fn rate_fit_exact_noisy_and_degenerate() {
    // exact exponential
    let series: Vec<(f64, f64)> = (0..50)
        .map(|i| {
            let t = i as f64 * 0.1;
            (t, (-3.0 * t).exp())
        })
        .collect();
    let fit = fit_rate(&series, (0.0, 5.0)).unwrap();
    assert!((fit.rate - 3.0).abs() <= 1e-9, "rate {}", fit.rate);
    assert!(fit.r2 > 1.0 - 1e-12);

    // 1% multiplicative noise
    let mut r = rng(7);
    let noisy: Vec<(f64, f64)> = (0..200)
        .map(|i| {
            let t = i as f64 * 0.05;
            (t, (-3.0 * t).exp() * (1.0 + 0.01 * r.gen_range(-1.0..1.0)))
        })
        .collect();
    let fit = fit_rate(&noisy, (0.0, 10.0)).unwrap();
    assert!((fit.rate - 3.0).abs() <= 0.1, "rate {}", fit.rate);

    // constant series: zero rate, perfect fit by convention
    let flat: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 2.0)).collect();
    let fit = fit_rate(&flat, (0.0, 20.0)).unwrap();
    assert_eq!(fit.rate, 0.0);
    assert_eq!(fit.r2, 1.0);

    // error paths
    assert!(matches!(
        fit_rate(&series, (0.0, 0.5)),
        Err(Error::WindowTooSmall { .. })
    ));
    let with_zero: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 0.0)).collect();
    assert!(matches!(
        fit_rate(&with_zero, (0.0, 20.0)),
        Err(Error::ConvergedBelowFloor { .. })
    ));
}

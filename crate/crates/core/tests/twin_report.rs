//! Twin-run relative-entropy reporting across shared time grids.

mod common;

use std::f64::consts::PI;

use fracross_core::diagnostics::twin_run_report;
use fracross_core::dynamics::{
    run, validate_coupling, RegParams, RunSpec, SpeciesState, TimeControl,
};
use fracross_core::{Grid, PhysicalField, SpectralField};
use ndarray::array;

fn base_spec(store: bool) -> RunSpec {
    let grid = Grid::new_1d(PI, 48).unwrap();
    let coupling = validate_coupling(&array![[2.0, 1.0], [1.0, 2.0]], &[1.0, 1.0]).unwrap();
    let params = RegParams::limit_system(0.5).unwrap();
    let bump = |center: f64| {
        PhysicalField::from_fn(&grid, move |x| {
            2.0 + 0.6 * (-(x[0] - center) * (x[0] - center) / 0.25).exp()
        })
    };
    let initial = SpeciesState::new(0.0, vec![bump(1.2), bump(1.9)]).unwrap();
    let mut spec = RunSpec::new(coupling, params, initial, 0.2);
    spec.store_states = store;
    spec.out_every = 4;
    spec
}

#[test]
fn identical_trajectories_have_zero_relative_entropy() {
    let spec = base_spec(true);
    let a = run(&spec).unwrap();
    let b = run(&spec).unwrap();
    let report = twin_run_report(&a, &b, None).unwrap();
    assert!(report.samples.iter().all(|s| s.h_rel == 0.0));
    assert!(report.envelope_ok);
    assert!(report.monotone);
    assert_eq!(report.envelope_rate, 0.0);
    // 1D at beta = 1/2: q2 is the smallest integer above 2/(3/2) = 4/3
    assert_eq!(report.q2, 2.0);
    let want_q1 = 2.0 * (1.0 + 1.5) / (1.5 - 1.0);
    assert!((report.q1 - want_q1).abs() < 1e-12);
}

#[test]
fn perturbed_twin_stays_below_envelope() {
    let spec = base_spec(true);
    let base = run(&spec).unwrap();

    // replay the base time grid on a mass-preserving perturbation
    let mut perturbed_spec = base_spec(true);
    perturbed_spec.time = TimeControl::Schedule(base.dt_history.clone());
    let mut mode2 = SpectralField::basis(perturbed_spec.initial.grid(), &[2]).unwrap();
    mode2 = mode2.scaled(1e-3);
    let fields: Vec<PhysicalField> = perturbed_spec
        .initial
        .fields()
        .iter()
        .map(|f| f.zip_map(&mode2.to_physical(), |a, b| a + b))
        .collect();
    perturbed_spec.initial = SpeciesState::new(0.0, fields).unwrap();
    let perturbed = run(&perturbed_spec).unwrap();

    for (mu, mv) in base
        .final_state
        .masses()
        .iter()
        .zip(perturbed.final_state.masses())
    {
        assert!((mu - mv).abs() <= 1e-10 * mu);
    }

    let report = twin_run_report(&base, &perturbed, None).unwrap();
    assert!(report.samples[0].h_rel > 0.0);
    assert!(report.envelope_ok);
    assert!(report.samples.iter().all(|s| s.h_rel.is_finite()));
    assert!(report
        .samples
        .windows(2)
        .all(|w| w[1].envelope_integral >= w[0].envelope_integral));
}

#[test]
fn mismatched_time_grids_are_rejected() {
    let spec = base_spec(true);
    let a = run(&spec).unwrap();
    let mut other = base_spec(true);
    other.t_final = 0.1;
    let b = run(&other).unwrap();
    assert!(twin_run_report(&a, &b, None).is_err());
}

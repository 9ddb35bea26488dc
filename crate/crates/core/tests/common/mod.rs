//! Shared helpers for the integration tests: seeded random fields and
//! independent numerical oracles (adaptive Simpson, high-order finite
//! differences).

#![allow(dead_code)]

use fracross_core::{Grid, PhysicalField, SpectralField};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random band-limited spectral field: uniform coefficients on modes with
/// `1 <= k_a <= kmax` (zero mean by construction).
pub fn random_band_limited(grid: &Grid, kmax: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut field = SpectralField::zeros(grid);
    if grid.dim() == 1 {
        for k in 1..=kmax.min(grid.resolution(0) - 1) {
            field.set_coeff(&[k], rng.gen_range(-1.0..1.0)).unwrap();
        }
    } else {
        for k0 in 0..=kmax.min(grid.resolution(0) - 1) {
            for k1 in 0..=kmax.min(grid.resolution(1) - 1) {
                if k0 == 0 && k1 == 0 {
                    continue;
                }
                field
                    .set_coeff(&[k0, k1], rng.gen_range(-1.0..1.0))
                    .unwrap();
            }
        }
    }
    field
}

/// Random field over every mode, with a mean offset.
pub fn random_full(grid: &Grid, mean: f64, amp: f64, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut field = SpectralField::zeros(grid);
    let (n0, n1) = (grid.resolution(0), if grid.dim() == 2 { grid.resolution(1) } else { 1 });
    for k0 in 0..n0 {
        for k1 in 0..n1 {
            if k0 == 0 && k1 == 0 {
                continue;
            }
            let k: Vec<usize> = if grid.dim() == 1 { vec![k0] } else { vec![k0, k1] };
            field.set_coeff(&k, amp * rng.gen_range(-1.0..1.0)).unwrap();
        }
    }
    let c0 = mean * grid.volume().sqrt();
    if grid.dim() == 1 {
        field.set_coeff(&[0], c0).unwrap();
    } else {
        field.set_coeff(&[0, 0], c0).unwrap();
    }
    field
}

/// Random nonnegative density: baseline plus decaying random modes,
/// clipped nonnegative in physical space.
pub fn random_density(grid: &Grid, baseline: f64, amp: f64, rng: &mut ChaCha8Rng) -> PhysicalField {
    let mut field = SpectralField::zeros(grid);
    let kmax = 8.min(grid.resolution(0) - 1);
    if grid.dim() == 1 {
        for k in 1..=kmax {
            let decay = 1.0 / (1.0 + (k * k) as f64);
            field
                .set_coeff(&[k], amp * decay * rng.gen_range(-1.0..1.0))
                .unwrap();
        }
        field.set_coeff(&[0], baseline * grid.volume().sqrt()).unwrap();
    } else {
        for k0 in 0..=kmax {
            for k1 in 0..=kmax.min(grid.resolution(1) - 1) {
                if k0 == 0 && k1 == 0 {
                    continue;
                }
                let decay = 1.0 / (1.0 + (k0 * k0 + k1 * k1) as f64);
                field
                    .set_coeff(&[k0, k1], amp * decay * rng.gen_range(-1.0..1.0))
                    .unwrap();
            }
        }
        field.set_coeff(&[0, 0], baseline * grid.volume().sqrt()).unwrap();
    }
    field.to_physical().map(|v| v.max(0.0))
}

/// Relative L2 distance between two spectral fields.
pub fn rel_l2(a: &SpectralField, b: &SpectralField) -> f64 {
    let diff = a.add_scaled(b, -1.0);
    let denom = b.l2_norm().max(f64::MIN_POSITIVE);
    diff.l2_norm() / denom
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

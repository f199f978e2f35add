//! Deterministic low-discrepancy samples of the unit sphere `S²ⁿ⁻¹ ⊂ ℂⁿ`.
//!
//! Points come from an additive recurrence in `[0,1)²ⁿ` (the generalized
//! golden-ratio sequence), shifted by a seeded random offset, pushed through
//! Box–Muller to a complex Gaussian and normalized.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::ComplexVector;

fn generalized_golden_ratio(dim: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (dim as f64 + 1.0));
    }
    x
}

/// `count` unit vectors of `ℂⁿ`; identical output for identical `(n, count, seed)`.
pub fn sphere_sample(n: usize, count: usize, seed: u64) -> Vec<ComplexVector> {
    let dim = 2 * n;
    let phi = generalized_golden_ratio(dim);
    let alphas: Vec<f64> = (1..=dim).map(|i| phi.powi(-(i as i32)).fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();

    (0..count)
        .map(|idx| {
            let u: Vec<f64> = alphas
                .iter()
                .zip(&shift)
                .map(|(a, s)| (s + a * (idx as f64 + 1.0)).fract())
                .collect();
            let entries: Vec<Complex64> = (0..n)
                .map(|j| {
                    let u1 = u[2 * j].max(f64::MIN_POSITIVE);
                    let r = (-2.0 * u1.ln()).sqrt();
                    Complex64::from_polar(r, 2.0 * PI * u[2 * j + 1])
                })
                .collect();
            let v = ComplexVector::from_complex(&entries);
            // A zero draw is impossible in practice; fall back to e₁ to keep the count.
            v.normalized().unwrap_or_else(|_| ComplexVector::basis(n, 0))
        })
        .collect()
}

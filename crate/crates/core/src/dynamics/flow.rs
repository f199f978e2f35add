//! Time-`T` flows of catalog Hamiltonians, with their differentials.
//!
//! Convention: `ι_{X_H} ω = −dH` for `ω = Σ dxⱼ ∧ dyⱼ`, which gives
//! `X_H = i·∇H`. With this sign `H = π‖z‖²` generates `z ↦ e^{2iπt} z`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{HamiltonianTerm, ResonantJet};
use crate::error::{Error, Result};
use crate::geometry::{diagonal_rotation_matrix, ComplexVector};

/// Hard cap on RK4 substeps for one flow evaluation.
pub const MAX_SUBSTEPS: usize = 10_000_000;

/// Substep policy of the fixed-step RK4 integrator used for resonant terms.
///
/// A flow of duration `T` is split into
/// `max(min_substeps, ⌈|T| / max_step⌉)` equal substeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    pub min_substeps: usize,
    pub max_step: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            min_substeps: 1000,
            max_step: 1e-3,
        }
    }
}

impl IntegratorSettings {
    pub fn substeps(&self, duration: f64) -> Result<usize> {
        let by_step = (duration.abs() / self.max_step).ceil();
        if !by_step.is_finite() || by_step > MAX_SUBSTEPS as f64 {
            return Err(Error::numeric(
                format!("flow of duration {duration} needs more than {MAX_SUBSTEPS} substeps"),
                duration,
            ));
        }
        let n = self.min_substeps.max(by_step as usize).max(1);
        if n > MAX_SUBSTEPS {
            return Err(Error::numeric(
                format!("substep count {n} exceeds the cap {MAX_SUBSTEPS}"),
                duration,
            ));
        }
        Ok(n)
    }
}

/// Time-`duration` flow of `term` at `z`, together with its differential.
pub fn flow_step(
    term: &HamiltonianTerm,
    duration: f64,
    z: &ComplexVector,
    integrator: &IntegratorSettings,
) -> Result<(ComplexVector, DMatrix<f64>)> {
    check_input(term, z)?;
    match term {
        HamiltonianTerm::Diagonal { coefficients } => {
            let angles = diagonal_angles(coefficients, duration);
            let m = diagonal_rotation_matrix(&angles);
            let img = ComplexVector::from_dvector(&m * z.as_dvector());
            Ok((img, m))
        }
        HamiltonianTerm::Resonant { .. } => {
            let steps = integrator.substeps(duration)?;
            let mut jet = ResonantJet::new(term).expect("resonant");
            let (x, y) = rk4_with_variation(&mut jet, z.as_slice(), duration, steps);
            check_finite(&x, duration)?;
            let dim = x.len();
            Ok((ComplexVector::from_reals(x), DMatrix::from_row_slice(dim, dim, &y)))
        }
    }
}

/// Time-`duration` flow of `term` at `z` without the differential.
pub fn flow_point(
    term: &HamiltonianTerm,
    duration: f64,
    z: &ComplexVector,
    integrator: &IntegratorSettings,
) -> Result<ComplexVector> {
    check_input(term, z)?;
    match term {
        HamiltonianTerm::Diagonal { coefficients } => {
            let angles = diagonal_angles(coefficients, duration);
            Ok(ComplexVector::from_dvector(
                diagonal_rotation_matrix(&angles) * z.as_dvector(),
            ))
        }
        HamiltonianTerm::Resonant { .. } => {
            let steps = integrator.substeps(duration)?;
            let mut jet = ResonantJet::new(term).expect("resonant");
            let x = rk4_point(&mut jet, z.as_slice(), duration, steps);
            check_finite(&x, duration)?;
            Ok(ComplexVector::from_reals(x))
        }
    }
}

pub(crate) fn diagonal_angles(coefficients: &[f64], duration: f64) -> Vec<f64> {
    coefficients.iter().map(|c| 2.0 * PI * c * duration).collect()
}

fn check_input(term: &HamiltonianTerm, z: &ComplexVector) -> Result<()> {
    if term.dim() != z.dim() {
        return Err(Error::domain(format!(
            "Hamiltonian on ℂ^{} evaluated at a point of ℂ^{}",
            term.dim(),
            z.dim()
        )));
    }
    if z.norm() == 0.0 {
        return Err(Error::domain("Hamiltonian flows are only defined on ℂⁿ \\ 0"));
    }
    Ok(())
}

fn check_finite(x: &[f64], duration: f64) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric("RK4 integration produced a non-finite state", duration))
    }
}

/// `out ← J v` (multiplication by `i` on interleaved pairs).
#[inline]
fn apply_j(v: &[f64], out: &mut [f64]) {
    for k in 0..v.len() / 2 {
        out[2 * k] = -v[2 * k + 1];
        out[2 * k + 1] = v[2 * k];
    }
}

fn rk4_point(jet: &mut ResonantJet, x0: &[f64], duration: f64, steps: usize) -> Vec<f64> {
    let dim = x0.len();
    let h = duration / steps as f64;
    let mut x = x0.to_vec();
    let mut tmp = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut k = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];

    for _ in 0..steps {
        for stage in 0..4 {
            let c = match stage {
                0 => 0.0,
                1 | 2 => 0.5 * h,
                _ => h,
            };
            if stage == 0 {
                tmp.copy_from_slice(&x);
            } else {
                for i in 0..dim {
                    tmp[i] = x[i] + c * k[stage - 1][i];
                }
            }
            jet.gradient(&tmp, &mut g);
            apply_j(&g, &mut k[stage]);
        }
        for i in 0..dim {
            x[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    }
    x
}

/// RK4 on the augmented system `ẋ = J∇H(x)`, `Ẏ = J·Hess H(x)·Y`, `Y(0) = I`.
/// Returns the final point and the row-major differential.
fn rk4_with_variation(jet: &mut ResonantJet, x0: &[f64], duration: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let dim = x0.len();
    let len = dim + dim * dim;
    let h = duration / steps as f64;

    let mut state = vec![0.0; len];
    state[..dim].copy_from_slice(x0);
    for i in 0..dim {
        state[dim + i * dim + i] = 1.0;
    }
    let mut tmp = vec![0.0; len];
    let mut g = vec![0.0; dim];
    let mut hess = vec![0.0; dim * dim];
    let mut hy = vec![0.0; dim * dim];
    let mut k: Vec<Vec<f64>> = (0..4).map(|_| vec![0.0; len]).collect();

    for _ in 0..steps {
        for stage in 0..4 {
            let c = match stage {
                0 => 0.0,
                1 | 2 => 0.5 * h,
                _ => h,
            };
            if stage == 0 {
                tmp.copy_from_slice(&state);
            } else {
                let (prev, _) = k.split_at(stage);
                let kp = &prev[stage - 1];
                for i in 0..len {
                    tmp[i] = state[i] + c * kp[i];
                }
            }
            jet.gradient_hessian(&tmp[..dim], &mut g, &mut hess);
            let ks = &mut k[stage];
            apply_j(&g, &mut ks[..dim]);
            // hy = Hess · Y
            let y = &tmp[dim..];
            for r in 0..dim {
                for col in 0..dim {
                    let mut acc = 0.0;
                    for m in 0..dim {
                        acc += hess[r * dim + m] * y[m * dim + col];
                    }
                    hy[r * dim + col] = acc;
                }
            }
            // Ẏ = J · hy, row pairs (2q, 2q+1) ↦ (−row_{2q+1}, row_{2q}).
            let ky = &mut ks[dim..];
            for q in 0..dim / 2 {
                for col in 0..dim {
                    ky[(2 * q) * dim + col] = -hy[(2 * q + 1) * dim + col];
                    ky[(2 * q + 1) * dim + col] = hy[(2 * q) * dim + col];
                }
            }
        }
        for i in 0..len {
            state[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    }
    let y = state.split_off(dim);
    (state, y)
}

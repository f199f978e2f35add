use nalgebra::{DMatrix, DVector};

use crate::error::Result;

/// Settings of the damped Newton iteration shared by both solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonSettings {
    pub max_iter: usize,
    /// Convergence threshold on the system norm.
    pub tol: f64,
    /// Smallest Armijo step before giving up.
    pub min_step: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            max_iter: 100,
            tol: 1e-10,
            min_step: 1.0 / 1024.0 / 1024.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub residual: f64,
    pub converged: bool,
    /// System norm before each iteration, and after the last one.
    pub history: Vec<f64>,
}

const ARMIJO_C: f64 = 1e-4;

/// Damped Newton for a square system, with Armijo backtracking on `½‖F‖²`.
///
/// Steps use the SVD pseudo-inverse, so Jacobians that are singular along a
/// family of solutions still yield the minimum-norm correction. `project` is
/// applied after each accepted step (for instance a renormalization).
pub(crate) fn damped_newton<S, P>(
    x0: DVector<f64>,
    settings: &NewtonSettings,
    mut system: S,
    project: P,
) -> NewtonOutcome
where
    S: FnMut(&DVector<f64>, bool) -> Result<(DVector<f64>, Option<DMatrix<f64>>)>,
    P: Fn(DVector<f64>) -> DVector<f64>,
{
    let mut x = x0;
    let mut history = Vec::new();
    let fail = |x: DVector<f64>, history: Vec<f64>, residual: f64| NewtonOutcome {
        x,
        residual,
        converged: false,
        history,
    };

    let (mut f, mut jac) = match system(&x, true) {
        Ok(v) => v,
        Err(_) => return fail(x, history, f64::INFINITY),
    };
    for _ in 0..settings.max_iter {
        let norm = f.norm();
        history.push(norm);
        if norm <= settings.tol {
            return NewtonOutcome {
                x,
                residual: norm,
                converged: true,
                history,
            };
        }
        let j = jac.take().expect("jacobian requested");
        let svd = j.svd(true, true);
        let smax = svd.singular_values.max();
        let step = match svd.solve(&f, 1e-13 * smax.max(f64::MIN_POSITIVE)) {
            Ok(s) => -s,
            Err(_) => return fail(x, history, norm),
        };
        if !step.iter().all(|v| v.is_finite()) {
            return fail(x, history, norm);
        }

        let merit = 0.5 * norm * norm;
        let mut lambda = 1.0;
        let accepted = loop {
            let trial = project(&x + &step * lambda);
            if let Ok((ft, _)) = system(&trial, false) {
                let nt = ft.norm();
                if nt.is_finite() && 0.5 * nt * nt <= (1.0 - 2.0 * ARMIJO_C * lambda) * merit {
                    break Some(trial);
                }
            }
            lambda *= 0.5;
            if lambda < settings.min_step {
                break None;
            }
        };
        let Some(next) = accepted else {
            return fail(x, history, norm);
        };
        x = next;
        match system(&x, true) {
            Ok((fx, jx)) => {
                f = fx;
                jac = jx;
            }
            Err(_) => return fail(x, history, f64::INFINITY),
        }
    }
    let norm = f.norm();
    history.push(norm);
    NewtonOutcome {
        converged: norm <= settings.tol,
        x,
        residual: norm,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_nonlinear_system_quadratically() {
        // x² + y² = 4, x = y.
        let out = damped_newton(
            DVector::from_vec(vec![3.0, 0.5]),
            &NewtonSettings::default(),
            |x, jac| {
                let f = DVector::from_vec(vec![x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]]);
                let j = jac.then(|| DMatrix::from_row_slice(2, 2, &[2.0 * x[0], 2.0 * x[1], 1.0, -1.0]));
                Ok((f, j))
            },
            |x| x,
        );
        assert!(out.converged);
        assert!((out.x[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(out.history.len() < 10);
    }

    #[test]
    fn handles_a_curve_of_solutions() {
        // x² + y² = 1 as a single equation padded with a zero row: singular Jacobian.
        let out = damped_newton(
            DVector::from_vec(vec![2.0, 1.0]),
            &NewtonSettings::default(),
            |x, jac| {
                let f = DVector::from_vec(vec![x[0] * x[0] + x[1] * x[1] - 1.0, 0.0]);
                let j = jac.then(|| DMatrix::from_row_slice(2, 2, &[2.0 * x[0], 2.0 * x[1], 0.0, 0.0]));
                Ok((f, j))
            },
            |x| x,
        );
        assert!(out.converged);
        assert!((out.x.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reports_failure_without_panicking() {
        let out = damped_newton(
            DVector::from_vec(vec![1.0]),
            &NewtonSettings::default(),
            |x, jac| {
                Ok((
                    DVector::from_vec(vec![x[0] * x[0] + 1.0]),
                    jac.then(|| DMatrix::from_element(1, 1, 2.0 * x[0])),
                ))
            },
            |x| x,
        );
        assert!(!out.converged);
    }
}

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::dynamics::Factor;
use crate::error::{Error, Result};
use crate::geometry::{complex_structure, ComplexVector};

/// Default relative tolerance of the midpoint solve.
pub const ELEMENTARY_TOL: f64 = 1e-12;
/// Default iteration budget of the midpoint solve.
pub const ELEMENTARY_MAX_ITER: usize = 50;

/// `q_t(w) = −tan(πt)‖w‖²`, the generating function of `δ_t: z ↦ e^{−2iπt} z`.
pub fn q_eval(t: f64, w: &ComplexVector) -> Result<f64> {
    check_rotation_time(t)?;
    Ok(-(PI * t).tan() * w.norm_squared())
}

/// `∇q_t(w) = −2 tan(πt) w`.
pub fn q_grad(t: f64, w: &ComplexVector) -> Result<ComplexVector> {
    check_rotation_time(t)?;
    Ok(w.scale(-2.0 * (PI * t).tan()))
}

fn check_rotation_time(t: f64) -> Result<()> {
    if t.abs() < 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!("q_t is only defined for |t| < 1/2, got t = {t}")))
    }
}

/// Gradient field `G = ∇f` of one factor at a midpoint `w`, with the witness
/// `z` solving `w = (z + σ(z))/2`.
#[derive(Clone, Debug)]
pub struct ElementaryEval {
    pub gradient: ComplexVector,
    pub witness: ComplexVector,
    /// `dG(w) = 2J(I − Dσ)(I + Dσ)⁻¹`, when requested.
    pub jacobian: Option<DMatrix<f64>>,
}

/// The elementary generating function of a C¹-small factor `σ`.
#[derive(Clone, Debug)]
pub struct ElementaryGF {
    sigma: Factor,
    tol: f64,
    max_iter: usize,
}

impl ElementaryGF {
    pub fn new(sigma: Factor) -> Self {
        ElementaryGF {
            sigma,
            tol: ELEMENTARY_TOL,
            max_iter: ELEMENTARY_MAX_ITER,
        }
    }

    pub fn with_newton(mut self, tol: f64, max_iter: usize) -> Self {
        self.tol = tol;
        self.max_iter = max_iter;
        self
    }

    pub fn sigma(&self) -> &Factor {
        &self.sigma
    }

    /// Newton on `z ↦ (z + σ(z))/2 − w` from `z₀ = w`.
    /// Returns `(z, σ(z), Dσ(z))`.
    fn solve_midpoint(&self, w: &ComplexVector) -> Result<(ComplexVector, ComplexVector, DMatrix<f64>)> {
        let scale = 1.0 + w.norm();
        let mut z = w.clone();
        let mut last = f64::INFINITY;
        for _ in 0..=self.max_iter {
            let (sz, d) = self.sigma.apply_with_differential(&z)?;
            let mid = (&z + &sz).scale(0.5);
            let res = &mid - w;
            last = res.norm();
            if last <= self.tol * scale {
                return Ok((z, sz, d));
            }
            let dim = d.nrows();
            let jac = (DMatrix::<f64>::identity(dim, dim) + &d) * 0.5;
            let step = jac
                .lu()
                .solve(res.as_dvector())
                .ok_or_else(|| Error::numeric("singular midpoint Jacobian: factor is not C¹-small", last))?;
            z = ComplexVector::from_dvector(z.as_dvector() - step);
            if !z.is_finite() {
                break;
            }
        }
        Err(Error::numeric(
            format!(
                "midpoint solve for {} did not converge in {} iterations; decrease θ",
                self.sigma.describe(),
                self.max_iter
            ),
            last,
        ))
    }

    /// `G(w) = i(z − σ(z))` and the witness `z`.
    pub fn gradient(&self, w: &ComplexVector) -> Result<(ComplexVector, ComplexVector)> {
        let e = self.evaluate(w, false)?;
        Ok((e.gradient, e.witness))
    }

    pub fn evaluate(&self, w: &ComplexVector, with_jacobian: bool) -> Result<ElementaryEval> {
        let dim = 2 * w.dim();
        if w.norm() == 0.0 {
            // G is 1-homogeneous, so G(0) = 0; the Jacobian is not defined there.
            return Ok(ElementaryEval {
                gradient: ComplexVector::zeros(w.dim()),
                witness: w.clone(),
                jacobian: with_jacobian.then(|| DMatrix::zeros(dim, dim)),
            });
        }
        let (z, sz, d) = self.solve_midpoint(w)?;
        let gradient = (&z - &sz).mul_i();
        let jacobian = if with_jacobian {
            Some(cayley_jacobian(&d)?)
        } else {
            None
        };
        Ok(ElementaryEval {
            gradient,
            witness: z,
            jacobian,
        })
    }

    /// `f(w) = ½⟨G(w), w⟩` (Euler's identity for 2-homogeneous `f`).
    pub fn value(&self, w: &ComplexVector) -> Result<f64> {
        let (g, _) = self.gradient(w)?;
        Ok(0.5 * g.dot(w))
    }

    /// `‖dG − dGᵀ‖ / ‖dG‖` at `w`; zero for a symplectic factor.
    pub fn symmetry_residual(&self, w: &ComplexVector) -> Result<f64> {
        let dg = self.evaluate(w, true)?.jacobian.expect("requested");
        let norm = dg.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        Ok((&dg - dg.transpose()).norm() / norm)
    }
}

/// `2J(I − D)(I + D)⁻¹`.
pub(crate) fn cayley_jacobian(d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = d.nrows();
    let id = DMatrix::<f64>::identity(dim, dim);
    let plus = &id + d;
    let minus = &id - d;
    // Solve (I + D)ᵀ Xᵀ = (I − D)ᵀ for X = (I − D)(I + D)⁻¹.
    let xt = plus
        .transpose()
        .lu()
        .solve(&minus.transpose())
        .ok_or_else(|| Error::numeric("I + Dσ is singular", 0.0))?;
    Ok(complex_structure(dim / 2) * xt.transpose() * 2.0)
}

/// `(−2 tan(πt)) · I`, the constant Jacobian of `∇q_t`.
pub(crate) fn rotation_gradient_factor(t: f64) -> f64 {
    -2.0 * (PI * t).tan()
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genfun::{GFProblem, GeneratingChain};
use crate::geometry::ComplexVector;

/// Relative symmetry tolerance of [`quadratic_index`].
pub const SYMMETRY_TOL: f64 = 1e-6;
/// Eigenvalues below this fraction of the largest count as zero.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Number of negative eigenvalues of a nondegenerate symmetric matrix.
pub fn quadratic_index(h: &DMatrix<f64>) -> Result<usize> {
    if !h.is_square() {
        return Err(Error::domain(format!(
            "{}×{} matrix is not square",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.nrows() == 0 {
        return Ok(0);
    }
    let scale = h.norm().max(1.0);
    let asym = (h - h.transpose()).norm();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::domain(format!("matrix is not symmetric: ‖H − Hᵀ‖ = {asym:.3e}")));
    }
    let sym = (h + h.transpose()) * 0.5;
    let ev = sym.symmetric_eigenvalues();
    let largest = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let smallest = ev.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if smallest <= DEGENERACY_TOL * largest {
        return Err(Error::numeric(
            format!(
                "quadratic form is degenerate: smallest |eigenvalue| = {smallest:.3e} \
                 (largest {largest:.3e}); move t off a time-shift"
            ),
            smallest,
        ));
    }
    Ok(ev.iter().filter(|&&v| v < 0.0).count())
}

/// Index of `F_{t0}`, `F_{t1}` and the jump between them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexJump {
    pub index_t0: usize,
    pub index_t1: usize,
    pub jump: i64,
}

/// `i(Hess F_{t1}) − i(Hess F_{t0})` for a factorization by linear maps,
/// where `F_t` is a quadratic form.
pub fn index_jump(problem: &GFProblem, t0: f64, t1: f64) -> Result<IndexJump> {
    if !problem.is_linear() {
        return Err(Error::Unsupported(
            "the index jump is computed only for linear factorizations".into(),
        ));
    }
    // The Hessian of a quadratic form is the same at every chain; pick one
    // with no vanishing midpoint.
    let ones = ComplexVector::from_reals(vec![1.0; 2 * problem.n()]);
    let chain = GeneratingChain::constant(&ones, problem.chain_len());
    let index = |t: f64| -> Result<usize> {
        let h = problem.hessian(t, &chain)?;
        quadratic_index(&h).map_err(|e| match e {
            Error::Numeric { message, residual } => Error::Numeric {
                message: format!("at t = {t}: {message}"),
                residual,
            },
            other => other,
        })
    };
    let index_t0 = index(t0)?;
    let index_t1 = index(t1)?;
    Ok(IndexJump {
        index_t0,
        index_t1,
        jump: index_t1 as i64 - index_t0 as i64,
    })
}

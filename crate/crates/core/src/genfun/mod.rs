//! Generating functions: elementary `f_j` of C¹-small factors, the rotation
//! term `q_t`, and the assembled `F_t` on `(ℂⁿ)^{m+7}`.

mod chain;
mod elementary;
mod problem;

pub use chain::GeneratingChain;
pub use elementary::{q_eval, q_grad, ElementaryEval, ElementaryGF, ELEMENTARY_MAX_ITER, ELEMENTARY_TOL};
pub use problem::{
    assemble_f, grad_f, hessian_f, rotation_part, ChainFixedPoint, EvalRequest, GFEval, GFProblem, ROTATION_BLOCKS,
    T_DOMAIN,
};

//! Mod-`p` cohomology of lens spaces and the counting arithmetic behind the
//! `2n` bound: cup products, the Bockstein, category-weight lower bounds,
//! quadratic indices and index jumps of `F_t`.

mod bounds;
mod index;
mod ring;

pub use bounds::{cat_lens, ls_bound, shift_bound, IndexWindow};
pub use index::{index_jump, quadratic_index, IndexJump, DEGENERACY_TOL, SYMMETRY_TOL};
pub use ring::{bockstein, check_ring, class_mul, cwgt_lower, RingClass, RingElement};

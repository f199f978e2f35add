//! Translated points of `ℤ/kℤ`-equivariant contactomorphisms of the standard
//! contact sphere, studied through generating functions.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: `ℂⁿ` vectors, the contact form, Reeb flow and lens action.
//! * [`dynamics`]: homogeneous Hamiltonian lifts and their C¹-small factors.
//! * [`genfun`]: the generating function `F_t` on chains of `(ℂⁿ)^{m+7}`.
//! * [`solve`]: two translated-point solvers and the time-shift spectrum.
//! * [`cohomology`]: mod-`p` lens-space cohomology, category weights and the
//!   counting arithmetic that turns index jumps into time-shift bounds.

pub mod cohomology;
pub mod dynamics;
pub mod error;
pub mod genfun;
pub mod geometry;
pub mod sampling;
pub mod solve;

pub use error::{Error, Result};

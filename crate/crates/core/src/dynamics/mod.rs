//! Equivariant 2-homogeneous Hamiltonians on `ℂⁿ \ 0`, their flows, the
//! homogeneous lift `Φ` of a contact isotopy, and its splitting into
//! C¹-small factors.

mod factor;
mod flow;
mod hamiltonian;
mod lift;

pub use factor::{
    deviation_from_identity, factorize, factorize_with, FactorList, DEFAULT_FACTOR_SAMPLE, MAX_SUBDIVISION,
};
pub use flow::{flow_point, flow_step, IntegratorSettings, MAX_SUBSTEPS};
pub use hamiltonian::HamiltonianTerm;
pub use lift::{build_lift, build_lift_with, conformal_factor, Factor, HomogeneousMap, IsotopyStep, MapInvariants};

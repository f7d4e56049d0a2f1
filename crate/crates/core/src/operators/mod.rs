//! Discrete differential operators and the nonlinear terms of the coupled
//! system, plus the interchangeable forms of the stress and transport terms.

mod stencil;
mod strategy;

pub use stencil::{
    advect_director, advect_scalar, advect_velocity, advect_velocity_skew, director_rhs,
    divergence, elastic_force_direct, elastic_force_identity, elastic_force_identity_solenoidal,
    grad_tensor, gradient, laplacian_director, laplacian_mac, laplacian_scalar, tension,
    GradTensor, Laplacian,
};
pub use strategy::{
    advection_registry, elastic_registry, Advection, Convective, DirectStress, ElasticStress,
    IdentityStress, SkewSymmetric,
};

pub(crate) use stencil::laplacian_raw;

#[cfg(test)]
mod tests;

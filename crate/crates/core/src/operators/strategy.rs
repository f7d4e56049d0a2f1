use std::sync::Arc;

use super::stencil;
use crate::grid::{DirectorField, MacVectorField};
use crate::registry::Registry;

/// One algebraic form of the elastic force -div(grad d (.) grad d).
pub trait ElasticStress: Send + Sync {
    fn name(&self) -> &'static str;
    fn force(&self, d: &DirectorField) -> MacVectorField;
}

/// Divergence of the assembled Gram matrix.
#[derive(Clone, Copy, Debug, Default)]
pub struct DirectStress;

/// -grad(|grad d|^2/2) - (grad d)^T lap d.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityStress;

impl ElasticStress for DirectStress {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn force(&self, d: &DirectorField) -> MacVectorField {
        stencil::elastic_force_direct(d)
    }
}

impl ElasticStress for IdentityStress {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn force(&self, d: &DirectorField) -> MacVectorField {
        stencil::elastic_force_identity(d)
    }
}

/// Transport terms (u . grad) u and (u . grad) d.
pub trait Advection: Send + Sync {
    fn name(&self) -> &'static str;
    fn momentum(&self, u: &MacVectorField) -> MacVectorField;
    fn director(&self, u: &MacVectorField, d: &DirectorField) -> DirectorField;
}

/// Non-conservative u . grad form with centred differences.
#[derive(Clone, Copy, Debug, Default)]
pub struct Convective;

/// Skew-symmetric momentum transport; the director keeps the centred
/// u . grad form, which pairs exactly with the identity-form stress.
#[derive(Clone, Copy, Debug, Default)]
pub struct SkewSymmetric;

impl Advection for Convective {
    fn name(&self) -> &'static str {
        "convective"
    }

    fn momentum(&self, u: &MacVectorField) -> MacVectorField {
        stencil::advect_velocity(u, u)
    }

    fn director(&self, u: &MacVectorField, d: &DirectorField) -> DirectorField {
        stencil::advect_director(u, d)
    }
}

impl Advection for SkewSymmetric {
    fn name(&self) -> &'static str {
        "skew"
    }

    fn momentum(&self, u: &MacVectorField) -> MacVectorField {
        stencil::advect_velocity_skew(u, u)
    }

    fn director(&self, u: &MacVectorField, d: &DirectorField) -> DirectorField {
        stencil::advect_director(u, d)
    }
}

pub type ElasticFactory = fn() -> Arc<dyn ElasticStress>;
pub type AdvectionFactory = fn() -> Arc<dyn Advection>;

fn direct() -> Arc<dyn ElasticStress> {
    Arc::new(DirectStress)
}

fn identity() -> Arc<dyn ElasticStress> {
    Arc::new(IdentityStress)
}

fn convective() -> Arc<dyn Advection> {
    Arc::new(Convective)
}

fn skew() -> Arc<dyn Advection> {
    Arc::new(SkewSymmetric)
}

pub fn elastic_registry() -> Registry<ElasticFactory> {
    Registry::new("elastic form")
        .with("direct", direct as ElasticFactory)
        .with("identity", identity)
}

pub fn advection_registry() -> Registry<AdvectionFactory> {
    Registry::new("advection form")
        .with("convective", convective as AdvectionFactory)
        .with("skew", skew)
}

//! Reference bases, quadrature, global spaces, and discrete fields.

pub mod assembly;
mod field;
pub mod hrot;
pub mod quadrature;
pub mod reference;
mod space;

pub use field::{
    error_squared, integrate, interpolate_discontinuous, interpolate_scalar, interpolate_vector, is_interior,
    DiscreteField, FieldValue, OVERSAMPLING,
};
pub use quadrature::{gauss_legendre, triangle_rule, QuadratureRule};
pub use space::{Bc, DofLocation, FESpace, Family, Tabulation};

use std::sync::Arc;

use crate::error::Result;
use crate::mesh::Mesh;

/// Builds a space on `mesh`.
pub fn build_space(mesh: &Arc<Mesh>, family: Family, bc: Bc) -> Result<Arc<FESpace>> {
    FESpace::new(mesh.clone(), family, bc)
}

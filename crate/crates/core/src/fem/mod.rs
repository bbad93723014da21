//! Conforming P1 finite elements on triangle meshes.

pub mod assembly;
pub mod extension;
pub mod field;
pub mod flux;
pub mod io;
pub mod locate;
pub mod mesh;
pub mod mesher;
pub mod sparse;

pub use assembly::{
    apply_stiffness, assemble, boundary_load, constant_coefficients, divergence_load, element_coefficients, solve,
    source_load, DofMap, DofSlot, LinearSystem,
};
pub use extension::{extend_into_holes, extend_with};
pub use field::{error_norms, region_norm, FemField, NormKind, Weight};
pub use flux::{conormal_flux, tangential_gradient, BoundaryFunction};
pub use locate::PointLocator;
pub use mesh::{Region, Tiling, TriMesh, VertexKind};
pub use mesher::{mesh_domain, mesh_domain_for, mesh_rectangle, mesh_unit_cell, mesh_unit_cell_for};
pub use sparse::{pcg, pcg_from, CgOptions, CgReport, CsrMatrix};

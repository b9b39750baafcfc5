//! Q1 finite elements on uniform grids of the unit square.

mod assembly;
mod mesh;

pub use assembly::{assemble_operators, graetz_velocity, FemOperators};
pub use mesh::{
    build_mesh, element_row_subdomain, BoundarySpec, DirichletSegment, Edge, Mesh, MeshSpec,
    ProblemFamily,
};

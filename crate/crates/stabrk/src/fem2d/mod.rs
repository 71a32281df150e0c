//! P1 finite elements on triangulated planar domains: mesh generation with
//! local refinement, stiffness/lumped-mass assembly, and the fast/slow
//! operator splitting driven by the refined zone.

pub mod assemble;
pub mod mesh;

pub use assemble::{assemble_heat, DiscreteHeatSystem, Forcing};
pub use mesh::{lshape_mesh, unit_square_mesh, Mesh};

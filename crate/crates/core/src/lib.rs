//! Gradient-robust mixed finite elements for nearly incompressible linear
//! elasticity on structured rectangular meshes.
//!
//! The displacement/pressure pair is `Q_k x DGP_{k-1}` (or `Q_k x Q_{k-1}`).
//! The gradient-robust variant evaluates the load against the BDM_k
//! interpolant of each test function, which removes the influence of
//! gradient forces on the discrete displacement as `lambda -> infinity`.

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod fe_basis;
pub mod linsolve;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod reconstruction;

pub use error::{Error, Result};
pub use fe_basis::{build_space, DiscreteField, FunctionSpace, SpaceKind};
pub use mesh::{Mesh, Point};

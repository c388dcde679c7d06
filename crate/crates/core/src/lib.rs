//! Mixed finite volume discretization of `-div(Lambda grad u) = f` on
//! general convex polygonal meshes of the unit square.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod par;
pub mod problem;
pub mod scheme;
pub mod solver;

pub use error::{Error, ErrorCategory, Result};

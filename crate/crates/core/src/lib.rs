pub mod bounds;
pub mod condition;
pub mod cones;
pub mod error;
pub mod integral_geometry;
pub mod numerics;
pub mod regularizers;
pub mod solvers;
pub mod statdim;

pub use cones::{ConeRep, L1Pattern, PreparedCone, Projection};
pub use error::{Error, Result};
pub use numerics::{Estimate, Matrix, SeededStream, Vector};

//! Simplicial finite element library for H(curl)/H(div)-conforming
//! (quasi-)interpolation of vector fields with low Sobolev regularity,
//! together with a study harness that measures convergence rates and the
//! effectivity of localized interpolation error bounds, and a curl-curl
//! Maxwell solver with strong or Nitsche boundary conditions.

pub mod elements;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod interpolation;
pub mod maxwell;
pub mod mesh;
pub mod norms;
pub mod quadrature;
pub mod sparse;
pub mod study;
pub mod vtk;

pub use error::FemError;
pub use fields::{AnalyticField, VectorField};
pub use interpolation::{FeFunction, Space, SpaceFamily};
pub use mesh::SimplicialMesh;
pub use study::{run_study, StudyConfig, StudyReport};

//! Numerical laboratory for the Dirichlet problem in periodically perforated
//! domains: domain construction, a finite-difference Poisson solver,
//! capacity correctors, the Schrödinger intermediate problem and trial-based
//! estimates of the `W^{1,p}` bounding constants.
//!
//! Everything numeric is generic over [`scalar::Real`]; the aliases below fix
//! the scalar to `f64`.

pub mod constants_lab;
pub mod correctors;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod intermediate;
pub mod linsolve;
pub mod scalar;
pub mod snapshot;
pub mod sparse;
pub mod sweeps;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Domain = geometry::PerforatedDomain<f64>;
pub type Shape = geometry::HoleShape<f64>;
pub type Plan = geometry::HolePlan<f64>;
pub type OuterBox = geometry::AxisBox<f64>;
pub type Mask = grid::GridMask<f64>;
pub type Faces = grid::FaceField<f64>;
pub type Profile = correctors::HoleProfile<f64>;
pub type Profiles = correctors::ProfileSet<f64>;
pub type Corrector = correctors::CorrectorField<f64>;
pub type Potential = intermediate::PotentialField<f64>;
pub type Csr = sparse::CsrMatrix<f64>;

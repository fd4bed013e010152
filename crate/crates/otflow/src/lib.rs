//! Dynamic optimal transport and entropy gradient flows on discretized
//! compact manifolds.
//!
//! The crate computes L2-Wasserstein distances and geodesics through the
//! dynamic (kinetic-action) formulation, evolves positive densities under
//! nonlinear diffusion semigroups, and turns the chain of inequalities
//! linking curvature bounds, Evolution Variational Inequalities, and
//! displacement convexity of entropy functionals into executable checks.
//!
//! Start with the runnable programs in `examples/`; each one exercises a
//! single capability end to end. The `otflow` binary exposes the same
//! operations as subcommands producing JSON reports.

pub mod cli;
pub mod density;
pub mod diffusion;
pub mod entropy;
pub mod error;
pub mod evi;
pub mod field;
pub(crate) mod linalg;
pub mod manifold;
pub mod report;
pub mod transport;

pub use density::DensityField;
pub use entropy::EntropyModel;
pub use error::{Error, Result};
pub use field::{ScalarField, VectorField};
pub use manifold::{build_grid, ManifoldGrid, ManifoldKind, ManifoldSpec};
pub use report::CheckReport;

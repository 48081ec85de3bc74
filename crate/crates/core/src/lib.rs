//! Overlapping domain-splitting time integration for the linear acoustic wave
//! equation discretized with mass-lumped continuous P1 finite elements.
//!
//! One domain-splitting step predicts Dirichlet data on the artificial
//! subdomain boundaries with an explicit leapfrog step, advances every
//! overlapping subdomain with an independent Crank–Nicolson solve and glues
//! the local results back together by nodal averaging. The global
//! Crank–Nicolson and leapfrog integrators are provided as references, along
//! with the experiment harness used to study stability and convergence.

// `!(x > 0.0)` is used on purpose so that NaN fails the check; index loops
// read more naturally than zipped iterators when several arrays are involved
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod decomposition;
pub mod error;
pub mod fem;

pub mod harness;
pub mod integrators;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod quadrature;

pub use decomposition::{AveragingPlan, Decomposition};
pub use error::{Error, Result};
pub use fem::{DiscreteOperators, State};
pub use integrators::{Scheme, StepContext};
pub use linalg::{CgConfig, SparseMatrix};
pub use mesh::{NodeAdjacency, SimplicialMesh};
pub use problems::ProblemSpec;

/// A point in the computational domain. 1D meshes leave the second entry at 0.
pub type Point = [f64; 2];

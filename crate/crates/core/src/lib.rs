//! Interior penalty discontinuous Galerkin (IPDG) solver for the Poisson
//! problem on general polygonal meshes.
//!
//! The pieces, bottom up:
//!
//! - [`mesh`]: polygonal meshes with interface extraction (hanging nodes
//!   included), the hybrid and dual-hexagonal generators, and a shape audit.
//! - [`quadrature`]: Gaussian rules on triangles, polygons and segments.
//! - [`poly_space`]: scaled-monomial bases, the discontinuous space and L2 projection.
//! - [`assembly`]: the SIPG/IIPG/NIPG bilinear form, as a sparse system and
//!   as a matrix-free evaluation.
//! - [`solver`]: block-Jacobi preconditioned CG and BiCGStab.
//! - [`analysis`]: error norms, rate fitting and theory-constant surrogates.
//! - [`study`] and [`plot`]: convergence studies, result files and SVG output.

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod mesh;
pub mod plot;
pub mod poly_space;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod study;

pub use analysis::{errors, fit_rates, inverse_constant, penalty_threshold, ConvergenceReport, ErrorTriple};
pub use assembly::{apply_bilinear, assemble, DGParams, Delta, SparseSystem};
pub use error::{Error, Result};
pub use mesh::{audit_shape, build_mesh, generate_dual_hex, generate_hybrid, Mesh, Point, ShapeReport};
pub use poly_space::{l2_project, DiscreteFunction, DofMap, LocalBasis};
pub use problems::{ExactSolution, Problem};
pub use solver::{solve, SolveReport};
pub use study::{run_convergence, solve_problem, Family, StudyConfig};

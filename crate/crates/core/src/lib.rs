//! Local discontinuous Galerkin solver for singularly perturbed
//! convection-diffusion problems
//!
//! ```text
//! -eps (u_xx + u_yy) + a(x, y) u_x + b(x, y) u = f   in (0, 1)^2,   u = 0 on the boundary,
//! ```
//!
//! on layer-adapted tensor-product meshes (Shishkin, Bakhvalov-Shishkin,
//! Bakhvalov), with the tools needed for convergence studies: Gauss-Radau
//! projections, energy-norm error measurement and rate tables.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod errors;
pub mod mesh;
pub mod norms;
pub mod problem;
pub mod projection;
pub mod quadrature;
pub mod solver;
pub mod study;

pub use assembly::{assemble, DofMap, Field, LdgSystem, PenaltyParams, SolutionTriple};
pub use basis::{BasisQuantity, DgSpace, Element};
pub use error::{Error, Result};
pub use errors::{compute_errors, ErrorReport};
pub use mesh::{build_mesh, transition_params, MeshFamily, MeshParams, Region, TensorMesh};
pub use norms::{energy_norm, weighted_l2_norm, Difference, ExactField, TripleField};
pub use problem::{
    validate_coefficient_condition, Coefficients, ExactSolution, FnCoefficients, ManufacturedSolution,
    PolynomialSolution,
};
pub use projection::{
    moment_residual, project_1d, project_2d, project_solution, projection_error_report, LocalPoly, ProjectedField,
    Projection1d, Projection2d, ProjectionErrorReport,
};
pub use quadrature::{gauss_legendre, GaussRule};
pub use solver::{factor, solve_system, FactorStats, Factorization};
pub use study::{
    grid_dump, rate, run_convergence, run_convergence_with, run_projection_rates, run_regime_study, run_robustness,
    solve_manufactured, RateMode, RateTable, Solved, StudyConfig, TableRow, ERROR_METRICS,
};

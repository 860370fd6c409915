//! Minimization-based finite elements for the complex Helmholtz equation
//! `-div(rho^{-1} grad P) - (omega^2 / kappa) P = 0` in lossy media.
//!
//! The complex problem is rewritten as the minimization of a positive definite
//! quadratic functional over a real scalar field and a real vector field. Its
//! discretization with bilinear elements gives a symmetric positive definite
//! block system that is solved with block-Jacobi preconditioned CG.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Breakdown errors carry the last iterate and the full report.
#![allow(clippy::result_large_err)]

pub mod assembly;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod materials;
pub mod solver;
pub mod verify;

pub use assembly::{
    assemble_dirichlet, assemble_robin, brute_force_matrix, brute_force_system, BlockSystem,
    Boundary, DirichletData, DofLayout, Mode, RobinData,
};
pub use error::{Error, Result};
pub use grid::{build_grid, BasisId, BasisKind, Grid, Point, QuadratureRule};
pub use materials::{
    check_coercivity, dissipation_at, l_eigenvalues_diagonal, quadrature_points, rescale,
    suggest_rescale, CoercivityReport, DissipationTensors, Inclusion, MaterialField, RescaleSearch,
};
pub use solver::{
    condition_estimates, helmholtz_residual, solve_dirichlet, solve_dirichlet_mode,
    solve_dirichlet_rescaled, solve_robin, solve_robin_mode, ConditionEstimates, FieldSolution,
    ModeSolution, RobinBoundary, SolverOptions,
};
pub use verify::{
    convergence_study, oracle_fields, vnorm_error, AnalyticSolution, ConvergenceRow,
    ConvergenceStudy, ErrorMeasure, ErrorPair, VNormError,
};

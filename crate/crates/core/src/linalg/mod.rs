//! Sparse symmetric storage and Krylov solvers.

pub mod cg;
pub mod ic0;
pub mod lanczos;
pub mod precond;
pub mod sparse;

pub use cg::{
    cg, pcg, pcg_with, Breakdown, IdentityPreconditioner, JacobiPreconditioner, LinalgError,
    LinearOperator, PcgOptions, Preconditioner, SolveReport,
};
pub use ic0::{ic0, Ic0Factor, Ic0Failure};
pub use lanczos::{extremal_eigs, EigEstimate};
pub use precond::{BlockJacobi, InnerSolve};
pub use sparse::{CsrMatrix, SparseSym};

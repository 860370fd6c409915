//! Shared fixtures for the benchmarks.

use lossy_helmholtz::{
    build_grid, oracle_fields, DirichletData, Grid, Inclusion, MaterialField, RobinData,
    SolverOptions,
};
use num_complex::Complex64;

/// Manufactured Dirichlet problem on an `n x n` grid.
pub fn reference_problem(n: usize) -> (Grid, MaterialField, DirichletData) {
    let ex = oracle_fields();
    (
        build_grid(n, false).unwrap(),
        ex.material(),
        ex.dirichlet_data(),
    )
}

/// Periodic disc scatterer with impedance boundaries at `y = 0, 1`.
pub fn disc_scene(n: usize) -> (Grid, MaterialField, RobinData) {
    let kappa = Complex64::new(1.0, -0.011);
    let material = MaterialField::inclusion(
        (Complex64::new(1.0, 0.011), kappa),
        (Complex64::new(2.0, 0.011), kappa),
        Inclusion::Disc {
            center: [0.5, 0.5],
            radius: 0.2,
        },
        10.0,
    );
    let robin =
        RobinData::constant(Complex64::new(-1.0, 0.333), Complex64::new(0.0, 3.33)).unwrap();
    (build_grid(n, true).unwrap(), material, robin)
}

/// Serial solves so timings do not depend on the thread scheduler.
pub fn serial() -> SolverOptions {
    SolverOptions {
        parallel: false,
        ..SolverOptions::default()
    }
}

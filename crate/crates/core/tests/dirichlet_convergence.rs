//! The reference plane-wave problem converges at second order in the squared
//! V-norm, in both halves of the split.

use lossy_helmholtz::verify::{fit_rate, table_error};
use lossy_helmholtz::*;

#[test]
fn squared_error_rate_is_two() {
    let ex = oracle_fields();
    let measures = [
        ErrorMeasure::Squared(ErrorPair::RealPrimal),
        ErrorMeasure::Squared(ErrorPair::ImagPrimal),
        ErrorMeasure::Norm(ErrorPair::Complex),
    ];
    let mut points = vec![Vec::new(); measures.len()];
    for n in [12, 24, 48] {
        let g = build_grid(n, false).unwrap();
        let s = solve_dirichlet(
            &g,
            &ex.material(),
            &ex.dirichlet_data(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(s.converged());
        for (pts, m) in points.iter_mut().zip(measures) {
            pts.push((g.h(), table_error(&s, &ex, 480, m)));
        }
    }
    let rates: Vec<f64> = points.iter().map(|p| fit_rate(p).unwrap()).collect();
    assert!((1.8..2.3).contains(&rates[0]), "{rates:?}");
    assert!((1.8..2.3).contains(&rates[1]), "{rates:?}");
    assert!((0.9..1.2).contains(&rates[2]), "{rates:?}");
}

#[test]
fn study_matches_individual_solves() {
    let ex = oracle_fields();
    let opts = SolverOptions::default();
    let study = convergence_study(&ex, &[10, 20], 200, &opts, ErrorMeasure::default()).unwrap();
    let g = build_grid(20, false).unwrap();
    let s = solve_dirichlet(&g, &ex.material(), &ex.dirichlet_data(), &opts).unwrap();
    assert_eq!(
        study.rows[1].vnorm_error,
        table_error(&s, &ex, 200, ErrorMeasure::default())
    );
    // both rows are below the fit threshold
    assert_eq!(study.rate, None);
}

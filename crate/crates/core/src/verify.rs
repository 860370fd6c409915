//! Manufactured solution, V-norm error evaluation and convergence studies.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::assembly::DirichletData;
use crate::error::Result;
use crate::grid::{build_grid, Grid, Point};
use crate::materials::MaterialField;
use crate::solver::{solve_dirichlet, FieldSolution, SolverOptions};

/// Plane wave `P = exp(a x + b y)` in a homogeneous isotropic medium, with the
/// Dirichlet lifts `Re P + s_r sin(pi x) sin(pi y)` and `Im P + s_i sin(pi x) sin(pi y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSolution {
    pub rho: Complex64,
    pub kappa: Complex64,
    pub omega: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub lift_re: f64,
    pub lift_im: f64,
}

/// `P = e^{2ix - 3y}` with `rho = (-5+5i) I`, `kappa = 4 - 4i`, `omega = 2`.
pub fn oracle_fields() -> AnalyticSolution {
    AnalyticSolution {
        rho: Complex64::new(-5.0, 5.0),
        kappa: Complex64::new(4.0, -4.0),
        omega: 2.0,
        a: Complex64::new(0.0, 2.0),
        b: Complex64::new(-3.0, 0.0),
        lift_re: 1.0,
        lift_im: 3.0,
    }
}

impl AnalyticSolution {
    pub fn material(&self) -> MaterialField {
        MaterialField::constant(self.rho, self.kappa, self.omega)
    }

    pub fn p(&self, x: Point) -> Complex64 {
        (self.a * x[0] + self.b * x[1]).exp()
    }

    pub fn grad_p(&self, x: Point) -> [Complex64; 2] {
        let p = self.p(x);
        [self.a * p, self.b * p]
    }

    /// `v = (-i / omega) rho^{-1} grad P`.
    pub fn v(&self, x: Point) -> [Complex64; 2] {
        let c = -Complex64::i() / (self.omega * self.rho);
        let g = self.grad_p(x);
        [c * g[0], c * g[1]]
    }

    /// Divergence of `v` computed from `v` itself.
    pub fn div_v(&self, x: Point) -> Complex64 {
        let c = -Complex64::i() / (self.omega * self.rho);
        c * (self.a * self.a + self.b * self.b) * self.p(x)
    }

    /// Gradient of `v`: `[[d1 v1, d2 v1], [d1 v2, d2 v2]]`.
    pub fn grad_v(&self, x: Point) -> [[Complex64; 2]; 2] {
        let v = self.v(x);
        [
            [self.a * v[0], self.b * v[0]],
            [self.a * v[1], self.b * v[1]],
        ]
    }

    /// `-div(rho^{-1} grad P) - (omega^2 / kappa) P`; zero for an exact solution.
    pub fn residual(&self, x: Point) -> Complex64 {
        let lap = (self.a * self.a + self.b * self.b) * self.p(x);
        -lap / self.rho - self.omega * self.omega / self.kappa * self.p(x)
    }

    pub fn dirichlet_data(&self) -> DirichletData {
        let (re, im) = (*self, *self);
        DirichletData::new(
            move |x| re.lifted(x, re.lift_re, |z| z.re),
            move |x| im.lifted(x, im.lift_im, |z| z.im),
        )
    }

    fn lifted(&self, x: Point, s: f64, part: fn(Complex64) -> f64) -> (f64, [f64; 2]) {
        let p = self.p(x);
        let g = self.grad_p(x);
        let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
        let (cx, cy) = ((PI * x[0]).cos(), (PI * x[1]).cos());
        (
            part(p) + s * sx * sy,
            [part(g[0]) + s * PI * cx * sy, part(g[1]) + s * PI * sx * cy],
        )
    }

    /// The exact fields sampled at the nodes of `grid`.
    pub fn nodal(&self, grid: &Grid) -> FieldSolution {
        FieldSolution::from_fn(grid, self.omega, |x| self.p(x), |x| self.v(x))
    }
}

/// Which unknowns enter the error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorPair {
    /// `(P', v'')`.
    RealPrimal,
    /// `(P'', v')`.
    ImagPrimal,
    /// All of `(P, v)`.
    Complex,
}

/// Squared pieces of the V-norm of an error, `||e_P||_{H1}^2 + ||e_v||_{H(div)}^2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VNormError {
    pub p_l2_sq: f64,
    pub p_grad_sq: f64,
    pub v_l2_sq: f64,
    pub v_div_sq: f64,
}

impl VNormError {
    pub fn squared(&self) -> f64 {
        self.p_l2_sq + self.p_grad_sq + self.v_l2_sq + self.v_div_sq
    }

    pub fn norm(&self) -> f64 {
        self.squared().sqrt()
    }
}

/// Trapezoidal weight of lattice line `i` of `m` lines over `[0, 1]`.
fn trapezoid(i: usize, m: usize) -> f64 {
    let h = 1.0 / (m - 1) as f64;
    if i == 0 || i + 1 == m {
        0.5 * h
    } else {
        h
    }
}

/// Bilinear interpolant of nodal values in one cell, with its exact gradient.
fn interpolate(values: [f64; 4], xi: f64, eta: f64, h: f64) -> (f64, [f64; 2]) {
    // values at (0,0), (0,1), (1,0), (1,1) as (d_row, d_col)
    let [v00, v01, v10, v11] = values;
    let v = v00 * (1.0 - xi) * (1.0 - eta)
        + v01 * xi * (1.0 - eta)
        + v10 * (1.0 - xi) * eta
        + v11 * xi * eta;
    let dx = ((v01 - v00) * (1.0 - eta) + (v11 - v10) * eta) / h;
    let dy = ((v10 - v00) * (1.0 - xi) + (v11 - v01) * xi) / h;
    (v, [dx, dy])
}

/// Values and first derivatives of `(P, v)` at a point, split into real and
/// imaginary parts: `p[part] = (value, grad)`, `v[part][d] = (value, grad)`.
struct Sample {
    p: [(f64, [f64; 2]); 2],
    v: [[(f64, [f64; 2]); 2]; 2],
}

fn sample_exact(exact: &AnalyticSolution, pt: Point) -> Sample {
    let p = exact.p(pt);
    let gp = exact.grad_p(pt);
    let v = exact.v(pt);
    let gv = exact.grad_v(pt);
    let part = |z: Complex64, k: usize| if k == 0 { z.re } else { z.im };
    let mut s = Sample {
        p: [(0.0, [0.0; 2]); 2],
        v: [[(0.0, [0.0; 2]); 2]; 2],
    };
    for k in 0..2 {
        s.p[k] = (part(p, k), [part(gp[0], k), part(gp[1], k)]);
        for d in 0..2 {
            s.v[k][d] = (part(v[d], k), [part(gv[d][0], k), part(gv[d][1], k)]);
        }
    }
    s
}

fn sample_field(field: &FieldSolution, cell: (usize, usize, f64, f64)) -> Sample {
    let n = field.grid.n();
    let h = field.grid.h();
    let (ct, cj, xi, eta) = cell;
    let ks = [
        ct * n + cj,
        ct * n + cj + 1,
        (ct + 1) * n + cj,
        (ct + 1) * n + cj + 1,
    ];
    let at = |f: &dyn Fn(usize) -> f64| {
        interpolate([f(ks[0]), f(ks[1]), f(ks[2]), f(ks[3])], xi, eta, h)
    };
    let mut s = Sample {
        p: [(0.0, [0.0; 2]); 2],
        v: [[(0.0, [0.0; 2]); 2]; 2],
    };
    s.p[0] = at(&|k| field.p_re[k]);
    s.p[1] = at(&|k| field.p_im[k]);
    for d in 0..2 {
        s.v[0][d] = at(&|k| field.v_re[k][d]);
        s.v[1][d] = at(&|k| field.v_im[k][d]);
    }
    s
}

fn accumulate(out: &mut VNormError, w: f64, a: &Sample, b: &Sample, pair: ErrorPair) {
    // whether (real, imaginary) parts of P and of v enter
    let (p_parts, v_parts) = match pair {
        ErrorPair::RealPrimal => ([true, false], [false, true]),
        ErrorPair::ImagPrimal => ([false, true], [true, false]),
        ErrorPair::Complex => ([true, true], [true, true]),
    };
    for k in 0..2 {
        if p_parts[k] {
            let e = a.p[k].0 - b.p[k].0;
            let ex = a.p[k].1[0] - b.p[k].1[0];
            let ey = a.p[k].1[1] - b.p[k].1[1];
            out.p_l2_sq += w * e * e;
            out.p_grad_sq += w * (ex * ex + ey * ey);
        }
        if v_parts[k] {
            let mut div = 0.0;
            for d in 0..2 {
                let e = a.v[k][d].0 - b.v[k][d].0;
                out.v_l2_sq += w * e * e;
                div += a.v[k][d].1[d] - b.v[k][d].1[d];
            }
            out.v_div_sq += w * div * div;
        }
    }
}

fn trapezoid_sum(eval_n: usize, mut f: impl FnMut(Point, f64)) {
    let m = eval_n.max(2);
    for iy in 0..m {
        let y = iy as f64 / (m - 1) as f64;
        let wy = trapezoid(iy, m);
        for ix in 0..m {
            let x = ix as f64 / (m - 1) as f64;
            f([x, y], wy * trapezoid(ix, m));
        }
    }
}

/// V-norm error of the bilinear interpolant of `field` against `exact`,
/// integrated with the composite trapezoidal rule on an `eval_n x eval_n`
/// lattice. Derivatives of the numerical field are the exact piecewise
/// derivatives of its interpolant.
pub fn vnorm_error(
    field: &FieldSolution,
    exact: &AnalyticSolution,
    eval_n: usize,
    pair: ErrorPair,
) -> VNormError {
    let mut out = VNormError::default();
    trapezoid_sum(eval_n, |pt, w| {
        let a = sample_field(field, field.grid.locate(pt));
        accumulate(&mut out, w, &a, &sample_exact(exact, pt), pair);
    });
    out
}

/// V-norm distance between the interpolants of two nodal fields.
pub fn vnorm_distance(
    a: &FieldSolution,
    b: &FieldSolution,
    eval_n: usize,
    pair: ErrorPair,
) -> VNormError {
    let mut out = VNormError::default();
    trapezoid_sum(eval_n, |pt, w| {
        let sa = sample_field(a, a.grid.locate(pt));
        let sb = sample_field(b, b.grid.locate(pt));
        accumulate(&mut out, w, &sa, &sb, pair);
    });
    out
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub vnorm_error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log(error)` against `log(h)` over converged
    /// rows with `N >= 30`.
    pub rate: Option<f64>,
}

/// Smallest `N` that enters the rate fit.
pub const FIT_MIN_N: usize = 30;

/// Least-squares slope of `log e` against `log h`; `None` with fewer than two points.
pub fn fit_rate(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Error measure reported in convergence tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorMeasure {
    /// `||e||_V^2` of the chosen pair.
    Squared(ErrorPair),
    /// `||e||_V` of the chosen pair.
    Norm(ErrorPair),
}

impl ErrorMeasure {
    pub fn evaluate(&self, e: &VNormError) -> f64 {
        match self {
            ErrorMeasure::Squared(_) => e.squared(),
            ErrorMeasure::Norm(_) => e.norm(),
        }
    }

    pub fn pair(&self) -> ErrorPair {
        match *self {
            ErrorMeasure::Squared(p) | ErrorMeasure::Norm(p) => p,
        }
    }
}

impl Default for ErrorMeasure {
    fn default() -> Self {
        ErrorMeasure::Squared(ErrorPair::RealPrimal)
    }
}

pub fn table_error(
    field: &FieldSolution,
    exact: &AnalyticSolution,
    eval_n: usize,
    measure: ErrorMeasure,
) -> f64 {
    measure.evaluate(&vnorm_error(field, exact, eval_n, measure.pair()))
}

/// Solves the manufactured problem for every `N` and fits the rate.
pub fn convergence_study(
    exact: &AnalyticSolution,
    ns: &[usize],
    eval_n: usize,
    opts: &SolverOptions,
    measure: ErrorMeasure,
) -> Result<ConvergenceStudy> {
    let material = exact.material();
    let data = exact.dirichlet_data();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = build_grid(n, false)?;
        let sol = solve_dirichlet(&grid, &material, &data, opts)?;
        rows.push(ConvergenceRow {
            n,
            h: grid.h(),
            vnorm_error: table_error(&sol, exact, eval_n, measure),
            converged: sol.converged(),
        });
    }
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.converged && r.n >= FIT_MIN_N)
        .map(|r| (r.h, r.vnorm_error))
        .collect();
    Ok(ConvergenceStudy {
        rate: fit_rate(&fit),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn manufactured_solution_is_exact() {
        let ex = oracle_fields();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            assert!(ex.residual(x).norm() <= 1e-10, "{x:?}");
        }
    }

    #[test]
    fn oracle_values() {
        let ex = oracle_fields();
        assert_eq!(ex.p([0.0, 0.0]), Complex64::new(1.0, 0.0));
        let x = [0.25, 0.6];
        let p = ex.p(x);
        let g = ex.grad_p(x);
        assert!((g[0] - Complex64::new(0.0, 2.0) * p).norm() < 1e-15);
        assert!((g[1] + 3.0 * p).norm() < 1e-15);
        let rho = Complex64::new(-5.0, 5.0);
        let expect = -Complex64::i() / 2.0 / rho * Complex64::new(0.0, 2.0) * p;
        assert!((ex.v(x)[0] - expect).norm() < 1e-15);
        // div v = (i omega / kappa) P
        let div = Complex64::i() * 2.0 / Complex64::new(4.0, -4.0) * p;
        assert!((ex.div_v(x) - div).norm() < 1e-10);
    }

    #[test]
    fn lifts_match_on_boundary() {
        let ex = oracle_fields();
        let d = ex.dirichlet_data();
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            for x in [[t, 0.0], [t, 1.0], [0.0, t], [1.0, t]] {
                assert!((d.psi_r(x).0 - ex.p(x).re).abs() < 1e-15);
                assert!((d.psi_i(x).0 - ex.p(x).im).abs() < 1e-15);
            }
        }
        // the lifts differ from P inside
        assert!((d.psi_i([0.5, 0.5]).0 - ex.p([0.5, 0.5]).im - 3.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_error_is_first_order_in_norm() {
        let ex = oracle_fields();
        let e1 = vnorm_error(
            &ex.nodal(&build_grid(11, false).unwrap()),
            &ex,
            401,
            ErrorPair::Complex,
        )
        .norm();
        let e2 = vnorm_error(
            &ex.nodal(&build_grid(21, false).unwrap()),
            &ex,
            401,
            ErrorPair::Complex,
        )
        .norm();
        let rate = (e1 / e2).log2();
        assert!((rate - 1.0).abs() < 0.1, "{rate}");
    }

    #[test]
    fn distance_is_a_norm() {
        let g = build_grid(6, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut random = || {
            let vals: Vec<f64> = (0..6 * g.node_count())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let mut f = FieldSolution::zeros(&g, 1.0);
            for k in 0..g.node_count() {
                f.p_re[k] = vals[6 * k];
                f.p_im[k] = vals[6 * k + 1];
                f.v_re[k] = [vals[6 * k + 2], vals[6 * k + 3]];
                f.v_im[k] = [vals[6 * k + 4], vals[6 * k + 5]];
            }
            f
        };
        let (a, b, c) = (random(), random(), random());
        for pair in [
            ErrorPair::RealPrimal,
            ErrorPair::ImagPrimal,
            ErrorPair::Complex,
        ] {
            assert_eq!(vnorm_distance(&a, &a, 101, pair).squared(), 0.0);
            let ab = vnorm_distance(&a, &b, 101, pair).norm();
            let bc = vnorm_distance(&b, &c, 101, pair).norm();
            let ac = vnorm_distance(&a, &c, 101, pair).norm();
            assert!(ac <= ab + bc + 1e-12);
            assert!(ab > 0.0);
        }
    }

    #[test]
    fn pairs_split_the_complex_error() {
        let ex = oracle_fields();
        let f = ex.nodal(&build_grid(9, false).unwrap());
        let re = vnorm_error(&f, &ex, 201, ErrorPair::RealPrimal).squared();
        let im = vnorm_error(&f, &ex, 201, ErrorPair::ImagPrimal).squared();
        let all = vnorm_error(&f, &ex, 201, ErrorPair::Complex).squared();
        assert!((re + im - all).abs() <= 1e-12 * all);
    }

    #[test]
    fn rate_fit() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.02, 0.01]
            .iter()
            .map(|&h| (h, 3.0 * h * h))
            .collect();
        assert!((fit_rate(&pts).unwrap() - 2.0).abs() < 1e-12);
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(h, e)| (h, 17.0 * e)).collect();
        assert!((fit_rate(&scaled).unwrap() - fit_rate(&pts).unwrap()).abs() < 1e-12);
        assert_eq!(fit_rate(&pts[..1]), None);
    }

    #[test]
    fn repeated_sizes_give_identical_rows() {
        let ex = oracle_fields();
        let study = convergence_study(
            &ex,
            &[8, 8],
            60,
            &SolverOptions::default(),
            ErrorMeasure::default(),
        )
        .unwrap();
        assert_eq!(study.rows[0], study.rows[1]);
        assert_eq!(study.rate, None);
    }
}

//! Two complementary SPD solves recombined into the complex field.

use std::thread;

use log::warn;
use nalgebra::Vector2;
use num_complex::Complex64;

use crate::assembly::{
    assemble_dirichlet, assemble_robin, BlockSystem, DirichletData, Mode, RobinData,
};
use crate::error::Result;
use crate::grid::{Grid, Point};
use crate::linalg::{
    extremal_eigs, pcg_with, BlockJacobi, EigEstimate, IdentityPreconditioner, InnerSolve,
    LinalgError, PcgOptions, Preconditioner, SolveReport,
};
use crate::materials::{rescale, MaterialField};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// Outer iteration cap; `None` means `10 * sqrt(unknowns)`.
    pub maxit: Option<usize>,
    /// Block-Jacobi preconditioning (plain CG when off).
    pub precondition: bool,
    pub inner: InnerSolve,
    pub flexible: bool,
    /// Run the two formulations on separate threads. Results do not depend on it.
    pub parallel: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            maxit: None,
            precondition: true,
            inner: InnerSolve::default(),
            flexible: false,
            parallel: true,
        }
    }
}

impl SolverOptions {
    pub fn maxit_for(&self, unknowns: usize) -> usize {
        self.maxit
            .unwrap_or_else(|| (10.0 * (unknowns as f64).sqrt()).ceil() as usize)
    }
}

/// Solves an assembled system. Breakdown and non-convergence are logged and
/// surface as `converged = false` with the last iterate.
pub fn solve_system(sys: &BlockSystem, opts: &SolverOptions) -> (Vec<f64>, SolveReport) {
    let n = sys.matrix.n();
    let mut pcg_opts = PcgOptions::new(opts.tol, opts.maxit_for(n));
    pcg_opts.flexible = opts.flexible;
    let result = if opts.precondition {
        let m = BlockJacobi::new(&sys.matrix, &sys.offsets(), opts.inner);
        pcg_with(&sys.matrix, &sys.rhs, &m, &pcg_opts)
    } else {
        pcg_with(&sys.matrix, &sys.rhs, &IdentityPreconditioner, &pcg_opts)
    };
    match result {
        Ok((x, rep)) => {
            if !rep.converged {
                warn!(
                    "{:?} solve stopped after {} iterations at relative residual {:.3e}",
                    sys.mode,
                    rep.iterations,
                    rep.final_residual()
                );
            }
            (x, rep)
        }
        Err(LinalgError::Breakdown { reason, x, report }) => {
            warn!("{:?} solve broke down: {reason:?}", sys.mode);
            (x, report)
        }
        Err(e) => panic!("{e}"),
    }
}

/// Lanczos condition estimates of `A` and of `M^{-1} A` (with near-exact block solves).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionEstimates {
    pub plain: EigEstimate,
    pub preconditioned: EigEstimate,
}

pub fn condition_estimates(sys: &BlockSystem, steps: usize) -> ConditionEstimates {
    let plain = extremal_eigs(&sys.matrix, None, steps);
    let m = BlockJacobi::new(&sys.matrix, &sys.offsets(), InnerSolve::tight());
    let preconditioned = extremal_eigs(&sys.matrix, Some(&m as &dyn Preconditioner), steps);
    ConditionEstimates {
        plain,
        preconditioned,
    }
}

/// Nodal values of one formulation: the scalar field (boundary included) and
/// the vector field at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub mode: Mode,
    pub scalar: Vec<f64>,
    pub vector: Vec<[f64; 2]>,
    pub report: SolveReport,
}

fn expand(
    grid: &Grid,
    sys: &BlockSystem,
    x: &[f64],
    lift: Option<&DirichletData>,
) -> (Vec<f64>, Vec<[f64; 2]>) {
    let n = grid.n();
    let [ns, nv, _] = sys.sizes();
    let mut scalar = vec![0.0; n * n];
    let mut vector = vec![[0.0; 2]; n * n];
    for row in 0..n {
        for col in 0..n {
            let k = row * n + col;
            let base = match lift {
                Some(d) => d.split(sys.mode).0(grid.node_coord(row, col)).0,
                None => 0.0,
            };
            scalar[k] = base + sys.layout.scalar_dof(row, col).map_or(0.0, |s| x[s]);
            let v = sys.layout.vector_dof(row, col);
            vector[k] = [x[ns + v], x[ns + nv + v]];
        }
    }
    (scalar, vector)
}

/// One Dirichlet formulation.
pub fn solve_dirichlet_mode(
    grid: &Grid,
    material: &MaterialField,
    data: &DirichletData,
    mode: Mode,
    opts: &SolverOptions,
) -> Result<ModeSolution> {
    let sys = assemble_dirichlet(grid, material, data, mode)?;
    let (x, report) = solve_system(&sys, opts);
    let (scalar, vector) = expand(grid, &sys, &x, Some(data));
    Ok(ModeSolution {
        mode,
        scalar,
        vector,
        report,
    })
}

/// One Robin formulation.
pub fn solve_robin_mode(
    grid: &Grid,
    material: &MaterialField,
    robin: &RobinData,
    mode: Mode,
    opts: &SolverOptions,
) -> Result<ModeSolution> {
    let sys = assemble_robin(grid, material, robin, mode)?;
    let (x, report) = solve_system(&sys, opts);
    let (scalar, vector) = expand(grid, &sys, &x, None);
    Ok(ModeSolution {
        mode,
        scalar,
        vector,
        report,
    })
}

fn both_modes<F>(opts: &SolverOptions, f: F) -> Result<(ModeSolution, ModeSolution)>
where
    F: Fn(Mode) -> Result<ModeSolution> + Sync,
{
    if opts.parallel {
        thread::scope(|s| {
            let im = s.spawn(|| f(Mode::ImagPrimal));
            let re = f(Mode::RealPrimal);
            Ok((re?, im.join().expect("solver thread panicked")?))
        })
    } else {
        Ok((f(Mode::RealPrimal)?, f(Mode::ImagPrimal)?))
    }
}

/// Recovered boundary quantities at one (node, edge) pair of a Robin solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinBoundaryRecord {
    pub row: usize,
    pub col: usize,
    pub normal: [f64; 2],
    /// `(P', v''.n)` from the `(P', v'')` solve.
    pub primal: [f64; 2],
    /// `(v'.n, P'')` from the Robin identity.
    pub recovered: [f64; 2],
    /// `(v'.n, P'')` from the `(P'', v')` solve.
    pub solved: [f64; 2],
    /// `|M1 primal + M2 recovered - g|`.
    pub identity_residual: f64,
}

/// Boundary dual recovery of a Robin solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinBoundary {
    pub records: Vec<RobinBoundaryRecord>,
}

impl RobinBoundary {
    pub fn max_identity_residual(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.identity_residual)
            .fold(0.0, f64::max)
    }

    /// Largest gap between recovered and independently solved `(v'.n, P'')`.
    pub fn max_formulation_gap(&self) -> f64 {
        self.records
            .iter()
            .map(|r| {
                (r.recovered[0] - r.solved[0])
                    .abs()
                    .max((r.recovered[1] - r.solved[1]).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Complex nodal fields on an `N x N` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub grid: Grid,
    pub omega: f64,
    pub p_re: Vec<f64>,
    pub p_im: Vec<f64>,
    pub v_re: Vec<[f64; 2]>,
    pub v_im: Vec<[f64; 2]>,
    pub reports: Vec<(Mode, SolveReport)>,
    pub robin: Option<RobinBoundary>,
}

impl FieldSolution {
    /// Samples closures at the nodes (no solve). Useful for injecting exact fields.
    pub fn from_fn<F, G>(grid: &Grid, omega: f64, p: F, v: G) -> Self
    where
        F: Fn(Point) -> Complex64,
        G: Fn(Point) -> [Complex64; 2],
    {
        let n = grid.n();
        let mut out = Self::zeros(grid, omega);
        for row in 0..n {
            for col in 0..n {
                let k = row * n + col;
                let x = grid.node_coord(row, col);
                let pv = p(x);
                let vv = v(x);
                out.p_re[k] = pv.re;
                out.p_im[k] = pv.im;
                out.v_re[k] = [vv[0].re, vv[1].re];
                out.v_im[k] = [vv[0].im, vv[1].im];
            }
        }
        out
    }

    pub fn zeros(grid: &Grid, omega: f64) -> Self {
        let nn = grid.node_count();
        Self {
            grid: grid.clone(),
            omega,
            p_re: vec![0.0; nn],
            p_im: vec![0.0; nn],
            v_re: vec![[0.0; 2]; nn],
            v_im: vec![[0.0; 2]; nn],
            reports: Vec::new(),
            robin: None,
        }
    }

    fn from_modes(grid: &Grid, omega: f64, re: ModeSolution, im: ModeSolution) -> Self {
        Self {
            grid: grid.clone(),
            omega,
            p_re: re.scalar,
            p_im: im.scalar,
            // (P', v'') and (P'', v')
            v_re: im.vector,
            v_im: re.vector,
            reports: vec![(re.mode, re.report), (im.mode, im.report)],
            robin: None,
        }
    }

    /// Field from one formulation only; the other half stays zero.
    pub fn from_single(grid: &Grid, omega: f64, sol: ModeSolution) -> Self {
        let mut out = Self::zeros(grid, omega);
        match sol.mode {
            Mode::RealPrimal => {
                out.p_re = sol.scalar;
                out.v_im = sol.vector;
            }
            Mode::ImagPrimal => {
                out.p_im = sol.scalar;
                out.v_re = sol.vector;
            }
        }
        out.reports.push((sol.mode, sol.report));
        out
    }

    pub fn p(&self, row: usize, col: usize) -> Complex64 {
        let k = row * self.grid.n() + col;
        Complex64::new(self.p_re[k], self.p_im[k])
    }

    pub fn v(&self, row: usize, col: usize) -> [Complex64; 2] {
        let k = row * self.grid.n() + col;
        [
            Complex64::new(self.v_re[k][0], self.v_im[k][0]),
            Complex64::new(self.v_re[k][1], self.v_im[k][1]),
        ]
    }

    /// Every solve reached its tolerance.
    pub fn converged(&self) -> bool {
        self.reports.iter().all(|(_, r)| r.converged)
    }

    /// Multiplies the vector field by a complex constant.
    pub fn scale_v(&mut self, c: Complex64) {
        for k in 0..self.v_re.len() {
            for d in 0..2 {
                let z = Complex64::new(self.v_re[k][d], self.v_im[k][d]) * c;
                self.v_re[k][d] = z.re;
                self.v_im[k][d] = z.im;
            }
        }
    }
}

/// Dirichlet problem: `(P', v'')` and `(P'', v')` solves recombined.
pub fn solve_dirichlet(
    grid: &Grid,
    material: &MaterialField,
    data: &DirichletData,
    opts: &SolverOptions,
) -> Result<FieldSolution> {
    let (re, im) = both_modes(opts, |mode| {
        solve_dirichlet_mode(grid, material, data, mode, opts)
    })?;
    Ok(FieldSolution::from_modes(grid, material.omega(), re, im))
}

/// Solves with the equation multiplied by `c = r e^{i theta}` and maps the
/// vector field back (`v` scales by `c` under the rescaling).
pub fn solve_dirichlet_rescaled(
    grid: &Grid,
    material: &MaterialField,
    data: &DirichletData,
    r: f64,
    theta: f64,
    opts: &SolverOptions,
) -> Result<FieldSolution> {
    let scaled = rescale(material, r, theta)?;
    let mut sol = solve_dirichlet(grid, &scaled, data, opts)?;
    sol.scale_v(Complex64::from_polar(r, theta).inv());
    Ok(sol)
}

/// Robin problem `P + a v.n = g`, with the boundary dual pair recovered from
/// the `(P', v'')` solve through the Robin identity.
pub fn solve_robin(
    grid: &Grid,
    material: &MaterialField,
    robin: &RobinData,
    opts: &SolverOptions,
) -> Result<FieldSolution> {
    if robin.a().re >= 0.0 {
        warn!("Re(a) >= 0: Robin system may be indefinite");
    }
    let (re, im) = both_modes(opts, |mode| {
        solve_robin_mode(grid, material, robin, mode, opts)
    })?;
    let mut sol = FieldSolution::from_modes(grid, material.omega(), re, im);
    sol.robin = Some(recover_boundary(&sol, robin));
    Ok(sol)
}

fn robin_nodes(grid: &Grid) -> Vec<(usize, usize, [f64; 2])> {
    let n = grid.n();
    let last = n - 1;
    let cols = if grid.periodic_x() { n - 1 } else { n };
    let mut out = Vec::new();
    for col in 0..cols {
        out.push((0, col, [0.0, -1.0]));
    }
    for col in 0..cols {
        out.push((last, col, [0.0, 1.0]));
    }
    if !grid.periodic_x() {
        for row in 0..n {
            out.push((row, 0, [-1.0, 0.0]));
        }
        for row in 0..n {
            out.push((row, last, [1.0, 0.0]));
        }
    }
    out
}

fn recover_boundary(sol: &FieldSolution, robin: &RobinData) -> RobinBoundary {
    let (m1, m2, m2_inv, kernel) = (robin.m1(), robin.m2(), robin.m2_inv(), robin.kernel());
    let n = sol.grid.n();
    let records = robin_nodes(&sol.grid)
        .into_iter()
        .map(|(row, col, normal)| {
            let k = row * n + col;
            let dotn = |v: [f64; 2]| v[0] * normal[0] + v[1] * normal[1];
            let g = robin.g(sol.grid.node_coord(row, col));
            let g = Vector2::new(g.re, g.im);
            let primal = Vector2::new(sol.p_re[k], dotn(sol.v_im[k]));
            let recovered = m2_inv * g - kernel * primal;
            let residual = (m1 * primal + m2 * recovered - g).abs().max();
            RobinBoundaryRecord {
                row,
                col,
                normal,
                primal: [primal[0], primal[1]],
                recovered: [recovered[0], recovered[1]],
                solved: [dotn(sol.v_re[k]), sol.p_im[k]],
                identity_residual: residual,
            }
        })
        .collect();
    RobinBoundary { records }
}

/// Max over interior nodes of the second-order finite-difference residual
/// `|-div(rho^{-1} grad P) - (omega^2 / kappa) P|` of the nodal field.
pub fn helmholtz_residual(
    field: &FieldSolution,
    material: &MaterialField,
    grid: &Grid,
) -> Result<f64> {
    let n = grid.n();
    let h = grid.h();
    let omega = material.omega();
    let p = |row: usize, col: usize| field.p(row, col);
    // central first differences; only called where both neighbours exist
    let px = |row: usize, col: usize| (p(row, col + 1) - p(row, col - 1)) / (2.0 * h);
    let py = |row: usize, col: usize| (p(row + 1, col) - p(row - 1, col)) / (2.0 * h);
    let mut worst: f64 = 0.0;
    for row in 1..n - 1 {
        for col in 1..n - 1 {
            let x = grid.node_coord(row, col);
            let inv = |dx: f64, dy: f64| material.rho_inverse([x[0] + dx, x[1] + dy]);
            let pc = p(row, col);
            let (e, w) = (inv(0.5 * h, 0.0)?, inv(-0.5 * h, 0.0)?);
            let (nth, sth) = (inv(0.0, 0.5 * h)?, inv(0.0, -0.5 * h)?);
            let mut div = (e[(0, 0)] * (p(row, col + 1) - pc) - w[(0, 0)] * (pc - p(row, col - 1)))
                / (h * h)
                + (nth[(1, 1)] * (p(row + 1, col) - pc) - sth[(1, 1)] * (pc - p(row - 1, col)))
                    / (h * h);
            // mixed terms need a one-node margin for the nested differences
            if col >= 2 && col + 2 < n && row >= 2 && row + 2 < n {
                let (ie, iw) = (inv(h, 0.0)?, inv(-h, 0.0)?);
                let (inn, is) = (inv(0.0, h)?, inv(0.0, -h)?);
                div += (ie[(0, 1)] * py(row, col + 1) - iw[(0, 1)] * py(row, col - 1)) / (2.0 * h)
                    + (inn[(1, 0)] * px(row + 1, col) - is[(1, 0)] * px(row - 1, col)) / (2.0 * h);
            }
            let r = -div - omega * omega / material.kappa(x) * pc;
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}

//! Galerkin assembly of the symmetric block system.
//!
//! Unknowns are ordered `(scalar | vector-x | vector-y)`, giving
//!
//! ```text
//!     [ A1  A4  A6 ]
//! A = [ A4  A2  A5 ]
//!     [ A6  A5  A3 ]
//! ```
//!
//! At a quadrature point each basis function contributes a 6-vector that is
//! paired through `R` (first four slots) and `K` (last two):
//!
//! ```text
//! psi   : [ dx psi, dy psi,       0,       0 | omega psi,       0 ]
//! phi_1 : [      0,      0, -w psi,       0 |         0, -dx psi ] * s
//! phi_2 : [      0,      0,       0, -w psi |         0, -dy psi ] * s
//! ```
//!
//! with `s = +1` for the `(P', v'')` formulation and `s = -1` for `(P'', v')`,
//! which flips exactly the cross blocks `A4` and `A6`.

use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{
    eval_basis, gauss_legendre_unit, shape_functions, tent, BasisId, BasisValue, Grid, Point,
    QuadratureRule, LOCAL_NODES,
};
use crate::linalg::{CsrMatrix, SparseSym};
use crate::materials::{
    check_coercivity, dissipation_at, quadrature_points, CoercivityReport, MaterialField,
};

/// Which half of the complex field the scalar unknown carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Unknowns `(P', v'')`.
    RealPrimal,
    /// Unknowns `(P'', v')`.
    ImagPrimal,
}

impl Mode {
    pub fn sigma(self) -> f64 {
        match self {
            Mode::RealPrimal => 1.0,
            Mode::ImagPrimal => -1.0,
        }
    }
}

/// Real scalar function returning `(value, gradient)`.
pub type ScalarField = Arc<dyn Fn(Point) -> (f64, [f64; 2]) + Send + Sync>;

/// Dirichlet data: `psi_r` fixes `P'` on the boundary and `psi_i` fixes `P''`.
/// Both are evaluated exactly at quadrature points, so their interior values
/// act as the lifting functions.
#[derive(Clone)]
pub struct DirichletData {
    psi_r: ScalarField,
    psi_i: ScalarField,
}

impl std::fmt::Debug for DirichletData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletData").finish_non_exhaustive()
    }
}

impl DirichletData {
    pub fn new<F, G>(psi_r: F, psi_i: G) -> Self
    where
        F: Fn(Point) -> (f64, [f64; 2]) + Send + Sync + 'static,
        G: Fn(Point) -> (f64, [f64; 2]) + Send + Sync + 'static,
    {
        Self {
            psi_r: Arc::new(psi_r),
            psi_i: Arc::new(psi_i),
        }
    }

    pub fn zero() -> Self {
        Self::new(|_| (0.0, [0.0, 0.0]), |_| (0.0, [0.0, 0.0]))
    }

    /// Constant boundary values.
    pub fn constant(value: Complex64) -> Self {
        Self::new(
            move |_| (value.re, [0.0, 0.0]),
            move |_| (value.im, [0.0, 0.0]),
        )
    }

    pub fn psi_r(&self, p: Point) -> (f64, [f64; 2]) {
        (self.psi_r)(p)
    }

    pub fn psi_i(&self, p: Point) -> (f64, [f64; 2]) {
        (self.psi_i)(p)
    }

    /// `(primary, dual)`: the component imposed on the scalar unknown and the
    /// one that enters through the boundary integral.
    pub fn split(&self, mode: Mode) -> (&ScalarField, &ScalarField) {
        match mode {
            Mode::RealPrimal => (&self.psi_r, &self.psi_i),
            Mode::ImagPrimal => (&self.psi_i, &self.psi_r),
        }
    }
}

/// Robin data for `P + a v.n = g`.
#[derive(Clone)]
pub struct RobinData {
    a: Complex64,
    g: Arc<dyn Fn(Point) -> Complex64 + Send + Sync>,
}

impl std::fmt::Debug for RobinData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RobinData")
            .field("a", &self.a)
            .finish_non_exhaustive()
    }
}

impl RobinData {
    pub fn new<F>(a: Complex64, g: F) -> Result<Self>
    where
        F: Fn(Point) -> Complex64 + Send + Sync + 'static,
    {
        if a.re == 0.0 || !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::SingularRobin(format!(
                "Re(a) = {} makes M2 singular",
                a.re
            )));
        }
        Ok(Self { a, g: Arc::new(g) })
    }

    pub fn constant(a: Complex64, g: Complex64) -> Result<Self> {
        Self::new(a, move |_| g)
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn g(&self, p: Point) -> Complex64 {
        (self.g)(p)
    }

    /// `M1 = [[1, -a''], [0, a']]`.
    pub fn m1(&self) -> Matrix2<f64> {
        Matrix2::new(1.0, -self.a.im, 0.0, self.a.re)
    }

    /// `M2 = [[a', 0], [a'', 1]]`.
    pub fn m2(&self) -> Matrix2<f64> {
        Matrix2::new(self.a.re, 0.0, self.a.im, 1.0)
    }

    /// `M2^{-1} = (1/a') [[1, 0], [-a'', a']]`.
    pub fn m2_inv(&self) -> Matrix2<f64> {
        Matrix2::new(1.0, 0.0, -self.a.im, self.a.re) / self.a.re
    }

    /// `M2^{-1} M1 = (1/a') [[1, -a''], [-a'', |a|^2]]`, symmetric by construction.
    pub fn kernel(&self) -> Matrix2<f64> {
        let (ar, ai) = (self.a.re, self.a.im);
        Matrix2::new(1.0, -ai, -ai, ar * ar + ai * ai) / ar
    }

    /// Data vector of the formulation: `(g', g'')` for `(P', v'')` and the
    /// components of `-i g` for `(P'', v')`.
    pub fn data(&self, p: Point, mode: Mode) -> Vector2<f64> {
        let g = self.g(p);
        match mode {
            Mode::RealPrimal => Vector2::new(g.re, g.im),
            Mode::ImagPrimal => Vector2::new(g.im, -g.re),
        }
    }
}

/// Boundary treatment of an assembly.
#[derive(Debug, Clone, Copy)]
pub enum Boundary<'a> {
    Dirichlet(&'a DirichletData),
    Robin(&'a RobinData),
}

/// Map from grid nodes to unknown numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct DofLayout {
    n: usize,
    periodic_x: bool,
    scalar: Vec<Option<usize>>,
    vector: Vec<usize>,
    n_scalar: usize,
    n_vector: usize,
}

impl DofLayout {
    /// Interior scalar nodes, all vector nodes.
    pub fn dirichlet(grid: &Grid) -> Result<Self> {
        if grid.periodic_x() {
            return Err(Error::Unsupported(
                "periodic lateral boundaries are only available with Robin conditions".into(),
            ));
        }
        let n = grid.n();
        let mut scalar = vec![None; n * n];
        for row in 1..n - 1 {
            for col in 1..n - 1 {
                scalar[row * n + col] = Some((row - 1) * (n - 2) + col - 1);
            }
        }
        let vector = (0..n * n).collect();
        Ok(Self {
            n,
            periodic_x: false,
            scalar,
            vector,
            n_scalar: (n - 2) * (n - 2),
            n_vector: n * n,
        })
    }

    /// Every node carries a scalar unknown. With a periodic grid the last
    /// column is identified with the first.
    pub fn robin(grid: &Grid) -> Self {
        let n = grid.n();
        let cols = if grid.periodic_x() { n - 1 } else { n };
        let mut vector = vec![0; n * n];
        for row in 0..n {
            for col in 0..n {
                vector[row * n + col] = row * cols + col % cols;
            }
        }
        Self {
            n,
            periodic_x: grid.periodic_x(),
            scalar: vector.iter().map(|&k| Some(k)).collect(),
            vector,
            n_scalar: n * cols,
            n_vector: n * cols,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn periodic_x(&self) -> bool {
        self.periodic_x
    }

    pub fn scalar_dof(&self, row: usize, col: usize) -> Option<usize> {
        self.scalar[row * self.n + col]
    }

    pub fn vector_dof(&self, row: usize, col: usize) -> usize {
        self.vector[row * self.n + col]
    }

    /// `(scalar, vector-x, vector-y)` block sizes.
    pub fn sizes(&self) -> [usize; 3] {
        [self.n_scalar, self.n_vector, self.n_vector]
    }

    pub fn offsets(&self) -> [usize; 4] {
        let s = self.n_scalar;
        let v = self.n_vector;
        [0, s, s + v, s + 2 * v]
    }

    pub fn total(&self) -> usize {
        self.n_scalar + 2 * self.n_vector
    }

    /// Representative node `(row, col)` of each scalar unknown, in unknown order.
    pub fn scalar_nodes(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(usize::MAX, usize::MAX); self.n_scalar];
        for row in 0..self.n {
            for col in (0..self.n).rev() {
                if let Some(k) = self.scalar_dof(row, col) {
                    out[k] = (row, col);
                }
            }
        }
        out
    }

    /// Representative node of each vector unknown, in unknown order.
    pub fn vector_nodes(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(usize::MAX, usize::MAX); self.n_vector];
        for row in 0..self.n {
            for col in (0..self.n).rev() {
                out[self.vector_dof(row, col)] = (row, col);
            }
        }
        out
    }
}

/// Assembled linear system `matrix * alpha = rhs`.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub layout: DofLayout,
    pub mode: Mode,
    pub omega: f64,
    /// Volume matrix `A`.
    pub volume: CsrMatrix,
    /// Robin surface matrix `B`, if any.
    pub surface: Option<CsrMatrix>,
    /// `A` or `A - omega B`.
    pub matrix: SparseSym,
    pub rhs: Vec<f64>,
    pub coercivity: CoercivityReport,
}

impl BlockSystem {
    pub fn offsets(&self) -> [usize; 4] {
        self.layout.offsets()
    }

    pub fn sizes(&self) -> [usize; 3] {
        self.layout.sizes()
    }

    /// Block `(i, j)` of the system matrix, `i, j` in `0..3`.
    pub fn block(&self, i: usize, j: usize) -> CsrMatrix {
        let o = self.offsets();
        self.matrix.submatrix(o[i], o[i + 1], o[j], o[j + 1])
    }

    /// `A_k` for `k = 1..=6` as laid out in the block form.
    pub fn volume_block(&self, k: usize) -> CsrMatrix {
        let (i, j) = block_position(k);
        let o = self.offsets();
        self.volume.submatrix(o[i], o[i + 1], o[j], o[j + 1])
    }

    /// `B_k` for `k = 1..=6`.
    pub fn surface_block(&self, k: usize) -> Option<CsrMatrix> {
        let (i, j) = block_position(k);
        let o = self.offsets();
        self.surface
            .as_ref()
            .map(|b| b.submatrix(o[i], o[i + 1], o[j], o[j + 1]))
    }

    /// `b_1`, `b_2` or `b_3` for `i = 0, 1, 2`.
    pub fn rhs_part(&self, i: usize) -> &[f64] {
        let o = self.offsets();
        &self.rhs[o[i]..o[i + 1]]
    }
}

fn block_position(k: usize) -> (usize, usize) {
    match k {
        1 => (0, 0),
        2 => (1, 1),
        3 => (2, 2),
        4 => (0, 1),
        5 => (1, 2),
        6 => (0, 2),
        _ => panic!("block index {k} outside 1..=6"),
    }
}

type Six = (Vector4<f64>, Vector2<f64>);

fn scalar_six(value: f64, grad: [f64; 2], omega: f64) -> Six {
    (
        Vector4::new(grad[0], grad[1], 0.0, 0.0),
        Vector2::new(omega * value, 0.0),
    )
}

/// Vector basis function pointing along `axis` with the given scalar profile.
fn vector_six(axis: usize, value: f64, div: f64, omega: f64, sigma: f64) -> Six {
    let mut r = Vector4::zeros();
    r[2 + axis] = -sigma * omega * value;
    (r, Vector2::new(0.0, -sigma * div))
}

fn pair(u: &Six, r: &Matrix4<f64>, k: &Matrix2<f64>, v: &Six) -> f64 {
    u.0.dot(&(r * v.0)) + u.1.dot(&(k * v.1))
}

/// Volume matrix and rhs, accumulated cell by cell in row-major order.
fn assemble_volume(
    grid: &Grid,
    material: &MaterialField,
    layout: &DofLayout,
    mode: Mode,
    dirichlet: Option<&DirichletData>,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let n = grid.n();
    let h = grid.h();
    let omega = material.omega();
    let sigma = mode.sigma();
    let rule = QuadratureRule::assembly();
    let [ns, nv, _] = layout.sizes();
    let total = layout.total();
    let mut triplets = Vec::with_capacity((n - 1) * (n - 1) * 144);
    let mut rhs = vec![0.0; total];

    for ct in 0..n - 1 {
        for cj in 0..n - 1 {
            // global index of the 12 local functions (scalar, phi_1, phi_2)
            let mut dofs = [None; 12];
            for (a, &(dr, dc)) in LOCAL_NODES.iter().enumerate() {
                let (row, col) = (ct + dr, cj + dc);
                dofs[a] = layout.scalar_dof(row, col);
                let v = layout.vector_dof(row, col);
                dofs[4 + a] = Some(ns + v);
                dofs[8 + a] = Some(ns + nv + v);
            }
            let mut local = [[0.0f64; 12]; 12];
            let mut local_b = [0.0f64; 12];
            for (q, &wq) in rule.points.iter().zip(&rule.weights) {
                let p = grid.map_from_reference(ct, cj, q[0], q[1]);
                let t = dissipation_at(material, p)?;
                let wt = wq * h * h;
                let shapes = shape_functions(q[0], q[1], h);
                let mut six: [Six; 12] = [(Vector4::zeros(), Vector2::zeros()); 12];
                for (a, &(v, g)) in shapes.iter().enumerate() {
                    six[a] = scalar_six(v, g, omega);
                    six[4 + a] = vector_six(0, v, g[0], omega, sigma);
                    six[8 + a] = vector_six(1, v, g[1], omega, sigma);
                }
                let tw: Vec<Six> = six.iter().map(|s| (t.r * s.0, t.k * s.1)).collect();
                for i in 0..12 {
                    if dofs[i].is_none() {
                        continue;
                    }
                    for j in i..12 {
                        if dofs[j].is_none() {
                            continue;
                        }
                        local[i][j] += wt * (six[i].0.dot(&tw[j].0) + six[i].1.dot(&tw[j].1));
                    }
                }
                if let Some(data) = dirichlet {
                    let (primary, dual) = data.split(mode);
                    let (pv, pg) = primary(p);
                    let lift = scalar_six(pv, pg, omega);
                    let (dv, dg) = dual(p);
                    for i in 0..12 {
                        if dofs[i].is_none() {
                            continue;
                        }
                        let mut b = -pair(&six[i], &t.r, &t.k, &lift);
                        if i >= 4 {
                            let (a, axis) = ((i - 4) % 4, (i - 4) / 4);
                            let (v, g) = shapes[a];
                            b -= omega * (dg[axis] * v + dv * g[axis]);
                        }
                        local_b[i] += wt * b;
                    }
                }
            }
            for i in 0..12 {
                let Some(gi) = dofs[i] else { continue };
                rhs[gi] += local_b[i];
                for j in 0..12 {
                    let Some(gj) = dofs[j] else { continue };
                    let v = if j >= i { local[i][j] } else { local[j][i] };
                    triplets.push((gi, gj, v));
                }
            }
        }
    }
    Ok((CsrMatrix::from_triplets(total, total, &triplets), rhs))
}

/// A boundary edge segment: its two end nodes and the outward normal.
struct Edge {
    nodes: [(usize, usize); 2],
    normal: [f64; 2],
}

fn boundary_edges(grid: &Grid) -> Vec<Edge> {
    let n = grid.n();
    let last = n - 1;
    let mut edges = Vec::new();
    for c in 0..last {
        edges.push(Edge {
            nodes: [(0, c), (0, c + 1)],
            normal: [0.0, -1.0],
        });
    }
    for c in 0..last {
        edges.push(Edge {
            nodes: [(last, c), (last, c + 1)],
            normal: [0.0, 1.0],
        });
    }
    if !grid.periodic_x() {
        for r in 0..last {
            edges.push(Edge {
                nodes: [(r, 0), (r + 1, 0)],
                normal: [-1.0, 0.0],
            });
        }
        for r in 0..last {
            edges.push(Edge {
                nodes: [(r, last), (r + 1, last)],
                normal: [1.0, 0.0],
            });
        }
    }
    edges
}

/// Surface matrix `B` and the Robin rhs.
fn assemble_surface(
    grid: &Grid,
    layout: &DofLayout,
    robin: &RobinData,
    mode: Mode,
    omega: f64,
) -> (CsrMatrix, Vec<f64>) {
    let h = grid.h();
    let sigma = mode.sigma();
    let kernel = robin.kernel();
    let m2_inv = robin.m2_inv();
    let [ns, nv, _] = layout.sizes();
    let total = layout.total();
    let (xs, ws) = gauss_legendre_unit(2);
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; total];

    for e in boundary_edges(grid) {
        let p0 = grid.node_coord(e.nodes[0].0, e.nodes[0].1);
        let p1 = grid.node_coord(e.nodes[1].0, e.nodes[1].1);
        // local functions: scalar at both ends, then phi_1, then phi_2
        let mut dofs = [0usize; 6];
        for (a, &(row, col)) in e.nodes.iter().enumerate() {
            dofs[a] = layout
                .scalar_dof(row, col)
                .expect("Robin layout has boundary scalars");
            let v = layout.vector_dof(row, col);
            dofs[2 + a] = ns + v;
            dofs[4 + a] = ns + nv + v;
        }
        let mut local = [[0.0f64; 6]; 6];
        let mut local_b = [0.0f64; 6];
        for (&s, &w) in xs.iter().zip(&ws) {
            let p = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
            let hat = [1.0 - s, s];
            let mut u = [Vector2::zeros(); 6];
            for a in 0..2 {
                u[a] = Vector2::new(hat[a], 0.0);
                u[2 + a] = Vector2::new(0.0, sigma * hat[a] * e.normal[0]);
                u[4 + a] = Vector2::new(0.0, sigma * hat[a] * e.normal[1]);
            }
            let wt = w * h;
            let gdata = m2_inv * robin.data(p, mode);
            for i in 0..6 {
                for j in i..6 {
                    local[i][j] += wt * u[i].dot(&(kernel * u[j]));
                }
                local_b[i] -= omega * wt * u[i].dot(&gdata);
            }
        }
        for i in 0..6 {
            rhs[dofs[i]] += local_b[i];
            for j in 0..6 {
                let v = if j >= i { local[i][j] } else { local[j][i] };
                if v != 0.0 {
                    triplets.push((dofs[i], dofs[j], v));
                }
            }
        }
    }
    (CsrMatrix::from_triplets(total, total, &triplets), rhs)
}

fn wrap_symmetric(m: CsrMatrix) -> Result<SparseSym> {
    SparseSym::new(m).map_err(Error::Unsupported)
}

/// Dirichlet system on the interior scalar unknowns.
pub fn assemble_dirichlet(
    grid: &Grid,
    material: &MaterialField,
    data: &DirichletData,
    mode: Mode,
) -> Result<BlockSystem> {
    let layout = DofLayout::dirichlet(grid)?;
    let coercivity = check_coercivity(material, &quadrature_points(grid));
    let (volume, rhs) = assemble_volume(grid, material, &layout, mode, Some(data))?;
    Ok(BlockSystem {
        layout,
        mode,
        omega: material.omega(),
        matrix: wrap_symmetric(volume.clone())?,
        volume,
        surface: None,
        rhs,
        coercivity,
    })
}

/// Robin system `(A - omega B) alpha = b`; scalar unknowns include the boundary.
pub fn assemble_robin(
    grid: &Grid,
    material: &MaterialField,
    robin: &RobinData,
    mode: Mode,
) -> Result<BlockSystem> {
    let layout = DofLayout::robin(grid);
    let coercivity = check_coercivity(material, &quadrature_points(grid));
    if robin.a().re >= 0.0 {
        warn!(
            "Re(a) = {} >= 0: the Robin form is not guaranteed coercive",
            robin.a().re
        );
    }
    let omega = material.omega();
    let (volume, mut rhs) = assemble_volume(grid, material, &layout, mode, None)?;
    let (surface, surface_rhs) = assemble_surface(grid, &layout, robin, mode, omega);
    for (b, s) in rhs.iter_mut().zip(&surface_rhs) {
        *b += s;
    }
    let matrix = wrap_symmetric(volume.add_scaled(-omega, &surface))?;
    Ok(BlockSystem {
        layout,
        mode,
        omega,
        volume,
        surface: Some(surface),
        matrix,
        rhs,
        coercivity,
    })
}

/// Assembles whichever boundary treatment is requested.
pub fn assemble(
    grid: &Grid,
    material: &MaterialField,
    boundary: Boundary<'_>,
    mode: Mode,
) -> Result<BlockSystem> {
    match boundary {
        Boundary::Dirichlet(d) => assemble_dirichlet(grid, material, d, mode),
        Boundary::Robin(r) => assemble_robin(grid, material, r, mode),
    }
}

const ORACLE_MAX_N: usize = 8;
const ORACLE_ORDER: usize = 5;

#[derive(Debug, Clone, Copy)]
enum OracleKind {
    Scalar,
    Vector(usize),
}

/// Dense matrix and rhs computed entry by entry from the weak form with 5x5
/// Gauss quadrature, evaluating every basis function through [`eval_basis`].
/// Refuses `N > 8`.
pub fn brute_force_system(
    grid: &Grid,
    material: &MaterialField,
    boundary: Boundary<'_>,
    mode: Mode,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = grid.n();
    if n > ORACLE_MAX_N {
        return Err(Error::OracleTooLarge(format!("N = {n} > {ORACLE_MAX_N}")));
    }
    let layout = match boundary {
        Boundary::Dirichlet(_) => DofLayout::dirichlet(grid)?,
        Boundary::Robin(_) => DofLayout::robin(grid),
    };
    let omega = material.omega();
    let sigma = mode.sigma();
    let total = layout.total();

    let mut basis: Vec<(OracleKind, usize, usize)> = Vec::with_capacity(total);
    basis.extend(
        layout
            .scalar_nodes()
            .into_iter()
            .map(|(r, c)| (OracleKind::Scalar, r, c)),
    );
    for axis in 0..2 {
        basis.extend(
            layout
                .vector_nodes()
                .into_iter()
                .map(|(r, c)| (OracleKind::Vector(axis), r, c)),
        );
    }
    let eval = |kind: OracleKind, row: usize, col: usize, p: Point| -> Result<BasisValue> {
        match (kind, boundary) {
            (OracleKind::Scalar, Boundary::Dirichlet(_)) => {
                let k = (row - 1) * (n - 2) + col;
                eval_basis(BasisId::scalar(k), grid, p)
            }
            (OracleKind::Scalar, Boundary::Robin(_)) => {
                let (value, gradient) = tent(grid, row, col, p);
                Ok(BasisValue::Scalar { value, gradient })
            }
            (OracleKind::Vector(0), _) => eval_basis(BasisId::vector_x(row * n + col + 1), grid, p),
            (OracleKind::Vector(_), _) => eval_basis(BasisId::vector_y(row * n + col + 1), grid, p),
        }
    };
    let six_of = |v: &BasisValue, kind: OracleKind| -> Six {
        match (*v, kind) {
            (BasisValue::Scalar { value, gradient }, _) => scalar_six(value, gradient, omega),
            (BasisValue::Vector { value, divergence }, OracleKind::Vector(axis)) => {
                vector_six(axis, value[axis], divergence, omega, sigma)
            }
            _ => unreachable!(),
        }
    };

    let mut a = DMatrix::zeros(total, total);
    let mut b = DVector::zeros(total);
    let rule = QuadratureRule::gauss(ORACLE_ORDER);
    let h = grid.h();
    for ct in 0..n - 1 {
        for cj in 0..n - 1 {
            for (q, &wq) in rule.points.iter().zip(&rule.weights) {
                let p = grid.map_from_reference(ct, cj, q[0], q[1]);
                let t = dissipation_at(material, p)?;
                let wt = wq * h * h;
                let mut active = Vec::new();
                for (idx, &(kind, row, col)) in basis.iter().enumerate() {
                    let v = eval(kind, row, col, p)?;
                    let nonzero = match v {
                        BasisValue::Scalar { value, gradient } => {
                            value != 0.0 || gradient != [0.0, 0.0]
                        }
                        BasisValue::Vector { value, divergence } => {
                            value != [0.0, 0.0] || divergence != 0.0
                        }
                    };
                    if nonzero {
                        active.push((idx, v, six_of(&v, kind)));
                    }
                }
                for (i, _, si) in &active {
                    for (j, _, sj) in &active {
                        a[(*i, *j)] += wt * pair(si, &t.r, &t.k, sj);
                    }
                }
                if let Boundary::Dirichlet(data) = boundary {
                    let (primary, dual) = data.split(mode);
                    let (pv, pg) = primary(p);
                    let lift = scalar_six(pv, pg, omega);
                    let (dv, dg) = dual(p);
                    for (i, v, si) in &active {
                        let mut bi = -pair(si, &t.r, &t.k, &lift);
                        if let BasisValue::Vector { value, divergence } = v {
                            bi -= omega * (dg[0] * value[0] + dg[1] * value[1] + dv * divergence);
                        }
                        b[*i] += wt * bi;
                    }
                }
            }
        }
    }

    if let Boundary::Robin(robin) = boundary {
        let kernel = robin.kernel();
        let m2_inv = robin.m2_inv();
        let (xs, ws) = gauss_legendre_unit(ORACLE_ORDER);
        for e in boundary_edges(grid) {
            let p0 = grid.node_coord(e.nodes[0].0, e.nodes[0].1);
            let p1 = grid.node_coord(e.nodes[1].0, e.nodes[1].1);
            for (&s, &w) in xs.iter().zip(&ws) {
                let p = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
                let wt = w * h;
                let mut active = Vec::new();
                for (idx, &(kind, row, col)) in basis.iter().enumerate() {
                    let u = match eval(kind, row, col, p)? {
                        BasisValue::Scalar { value, .. } => Vector2::new(value, 0.0),
                        BasisValue::Vector { value, .. } => Vector2::new(
                            0.0,
                            sigma * (value[0] * e.normal[0] + value[1] * e.normal[1]),
                        ),
                    };
                    if u != Vector2::zeros() {
                        active.push((idx, u));
                    }
                }
                let gdata = m2_inv * robin.data(p, mode);
                for (i, ui) in &active {
                    for (j, uj) in &active {
                        a[(*i, *j)] -= omega * wt * ui.dot(&(kernel * uj));
                    }
                    b[*i] -= omega * wt * ui.dot(&gdata);
                }
            }
        }
    }
    Ok((a, b))
}

/// Matrix part of [`brute_force_system`].
pub fn brute_force_matrix(
    grid: &Grid,
    material: &MaterialField,
    boundary: Boundary<'_>,
    mode: Mode,
) -> Result<DMatrix<f64>> {
    brute_force_system(grid, material, boundary, mode).map(|(a, _)| a)
}

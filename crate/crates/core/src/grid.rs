//! Structured unit-square mesh with piecewise-bilinear ("tent") basis functions.
//!
//! Nodes sit at `((j-1)h, (t-1)h)` for `t, j = 1..N` with `h = 1/(N-1)`. The
//! index maps use the 1-based `(t, j)` numbering of the method: `t` counts rows
//! (the `y` direction) and `j` counts columns (the `x` direction). Everything
//! that works with storage offsets (`row`, `col`, cell indices) is 0-based.

use crate::error::{Error, Result};

/// A point in the closed unit square.
pub type Point = [f64; 2];

/// Uniform `N x N` node lattice on `[0, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
    periodic_x: bool,
}

impl Grid {
    pub fn new(n: usize, periodic_x: bool) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!("N = {n}, need N >= 3")));
        }
        Ok(Self {
            n,
            h: 1.0 / (n - 1) as f64,
            periodic_x,
        })
    }

    /// Nodes per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn periodic_x(&self) -> bool {
        self.periodic_x
    }

    pub fn node_count(&self) -> usize {
        self.n * self.n
    }

    pub fn interior_node_count(&self) -> usize {
        (self.n - 2) * (self.n - 2)
    }

    pub fn cells_per_side(&self) -> usize {
        self.n - 1
    }

    /// Coordinate of lattice line `i` (0-based). Exact at both ends.
    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            1.0
        } else {
            i as f64 / (self.n - 1) as f64
        }
    }

    /// Coordinates `(x, y)` of the node in 0-based `row` (y) and `col` (x).
    pub fn node_coord(&self, row: usize, col: usize) -> Point {
        [self.coord(col), self.coord(row)]
    }

    /// Row-major node offset, `row * N + col`.
    pub fn node_offset(&self, row: usize, col: usize) -> usize {
        row * self.n + col
    }

    pub fn is_boundary_node(&self, row: usize, col: usize) -> bool {
        let last = self.n - 1;
        row == 0 || row == last || (!self.periodic_x && (col == 0 || col == last))
    }

    /// Cell containing `p`, clamped so that points on the far edges belong to the
    /// last cell. Returns `(cell_row, cell_col, xi, eta)` with the local
    /// reference coordinates in `[0, 1]`.
    pub fn locate(&self, p: Point) -> (usize, usize, f64, f64) {
        let cells = self.n - 1;
        let locate_1d = |v: f64| {
            let s = v / self.h;
            let c = (s.floor().max(0.0) as usize).min(cells - 1);
            (c, s - c as f64)
        };
        let (cj, xi) = locate_1d(p[0]);
        let (ct, eta) = locate_1d(p[1]);
        (ct, cj, xi, eta)
    }

    /// Maps reference coordinates of a cell to physical ones (`F(x) = h x + x_l`).
    pub fn map_from_reference(&self, cell_row: usize, cell_col: usize, xi: f64, eta: f64) -> Point {
        [
            self.coord(cell_col) + self.h * xi,
            self.coord(cell_row) + self.h * eta,
        ]
    }
}

/// Builds the grid; fails for `N < 3`.
pub fn build_grid(n: usize, periodic_x: bool) -> Result<Grid> {
    Grid::new(n, periodic_x)
}

/// 1-based flat index of an interior scalar node, `k = (t-2)(N-2) + j - 1`.
pub fn scalar_interior_index(t: usize, j: usize, n: usize) -> Result<usize> {
    if n < 3 || t < 2 || j < 2 || t > n - 1 || j > n - 1 {
        return Err(Error::OutOfRange(format!(
            "scalar node (t={t}, j={j}) is not interior for N={n}"
        )));
    }
    Ok((t - 2) * (n - 2) + j - 1)
}

/// 1-based flat index of a vector node, `k = (t-1)N + j`.
pub fn vector_index(t: usize, j: usize, n: usize) -> Result<usize> {
    if t < 1 || j < 1 || t > n || j > n {
        return Err(Error::OutOfRange(format!(
            "vector node (t={t}, j={j}) outside 1..={n}"
        )));
    }
    Ok((t - 1) * n + j)
}

/// Inverse of [`scalar_interior_index`]: returns 1-based `(t, j)`.
pub fn scalar_interior_node(k: usize, n: usize) -> Result<(usize, usize)> {
    let m = n.saturating_sub(2);
    if k < 1 || k > m * m {
        return Err(Error::OutOfRange(format!("scalar index {k} for N={n}")));
    }
    Ok(((k - 1) / m + 2, (k - 1) % m + 2))
}

/// Inverse of [`vector_index`]: returns 1-based `(t, j)`.
pub fn vector_node(k: usize, n: usize) -> Result<(usize, usize)> {
    if k < 1 || k > n * n {
        return Err(Error::OutOfRange(format!("vector index {k} for N={n}")));
    }
    Ok(((k - 1) / n + 1, (k - 1) % n + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// `psi_k`, scalar tent on an interior node.
    Scalar,
    /// `phi_1k = (tent, 0)`.
    VectorX,
    /// `phi_2k = (0, tent)`.
    VectorY,
}

/// A basis function identified by kind and its 1-based flat index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisId {
    pub kind: BasisKind,
    pub index: usize,
}

impl BasisId {
    pub fn scalar(index: usize) -> Self {
        Self {
            kind: BasisKind::Scalar,
            index,
        }
    }

    pub fn vector_x(index: usize) -> Self {
        Self {
            kind: BasisKind::VectorX,
            index,
        }
    }

    pub fn vector_y(index: usize) -> Self {
        Self {
            kind: BasisKind::VectorY,
            index,
        }
    }

    /// 0-based `(row, col)` of the supporting node.
    pub fn node(&self, n: usize) -> Result<(usize, usize)> {
        let (t, j) = match self.kind {
            BasisKind::Scalar => scalar_interior_node(self.index, n)?,
            BasisKind::VectorX | BasisKind::VectorY => vector_node(self.index, n)?,
        };
        Ok((t - 1, j - 1))
    }
}

/// Value of a basis function together with the derivative the weak form needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisValue {
    Scalar { value: f64, gradient: [f64; 2] },
    Vector { value: [f64; 2], divergence: f64 },
}

/// Tent on the node `(row, col)` and its gradient. Zero outside the support box.
/// On periodic grids the first column also carries the image tent at `x = 1`.
pub fn tent(grid: &Grid, row: usize, col: usize, p: Point) -> (f64, [f64; 2]) {
    let (v, g) = tent_single(grid, grid.coord(col), grid.coord(row), p);
    if grid.periodic_x() && col == 0 {
        let (vi, gi) = tent_single(grid, 1.0, grid.coord(row), p);
        return (v + vi, [g[0] + gi[0], g[1] + gi[1]]);
    }
    (v, g)
}

fn tent_single(grid: &Grid, xc: f64, yc: f64, p: Point) -> (f64, [f64; 2]) {
    let h = grid.h();
    let sx = (p[0] - xc) / h;
    let sy = (p[1] - yc) / h;
    if sx.abs() >= 1.0 || sy.abs() >= 1.0 {
        return (0.0, [0.0, 0.0]);
    }
    let fx = 1.0 - sx.abs();
    let fy = 1.0 - sy.abs();
    // One-sided derivative at the node itself: take the left/lower piece.
    let dx = if sx > 0.0 { -1.0 / h } else { 1.0 / h };
    let dy = if sy > 0.0 { -1.0 / h } else { 1.0 / h };
    (fx * fy, [dx * fy, fx * dy])
}

/// Evaluates a basis function at `p`.
pub fn eval_basis(b: BasisId, grid: &Grid, p: Point) -> Result<BasisValue> {
    let (row, col) = b.node(grid.n())?;
    let (value, gradient) = tent(grid, row, col, p);
    Ok(match b.kind {
        BasisKind::Scalar => BasisValue::Scalar { value, gradient },
        BasisKind::VectorX => BasisValue::Vector {
            value: [value, 0.0],
            divergence: gradient[0],
        },
        BasisKind::VectorY => BasisValue::Vector {
            value: [0.0, value],
            divergence: gradient[1],
        },
    })
}

/// Bilinear shape functions of the reference cell, local node order
/// `(0,0), (0,1), (1,0), (1,1)` as `(d_row, d_col)`.
pub const LOCAL_NODES: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Values and physical gradients of the four local shape functions at
/// reference point `(xi, eta)` of a cell with spacing `h`.
pub fn shape_functions(xi: f64, eta: f64, h: f64) -> [(f64, [f64; 2]); 4] {
    let mut out = [(0.0, [0.0, 0.0]); 4];
    for (a, &(dr, dc)) in LOCAL_NODES.iter().enumerate() {
        let (fx, dfx) = if dc == 1 { (xi, 1.0) } else { (1.0 - xi, -1.0) };
        let (fy, dfy) = if dr == 1 {
            (eta, 1.0)
        } else {
            (1.0 - eta, -1.0)
        };
        out[a] = (fx * fy, [dfx * fy / h, fx * dfy / h]);
    }
    out
}

/// Gauss-Legendre nodes and weights on `(0, 1)`.
pub fn gauss_legendre_unit(order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w): (Vec<f64>, Vec<f64>) = match order {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt();
            let a = ((3.0 - 2.0 * s) / 7.0).sqrt();
            let b = ((3.0 + 2.0 * s) / 7.0).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let s = 2.0 * (10.0f64 / 7.0).sqrt();
            let a = (5.0 - s).sqrt() / 3.0;
            let b = (5.0 + s).sqrt() / 3.0;
            let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, 128.0 / 225.0, wa, wb])
        }
        _ => panic!("Gauss-Legendre order {order} not tabulated (1..=5)"),
    };
    (
        x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
        w.iter().map(|v| 0.5 * v).collect(),
    )
}

/// Tensor-product quadrature on the reference cell `(0, 1)^2`; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `order x order` Gauss rule, exact for degree `2*order - 1` per direction.
    pub fn gauss(order: usize) -> Self {
        let (x, w) = gauss_legendre_unit(order);
        let mut points = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for (yi, wy) in x.iter().zip(&w) {
            for (xi, wx) in x.iter().zip(&w) {
                points.push([*xi, *yi]);
                weights.push(wx * wy);
            }
        }
        Self { points, weights }
    }

    /// The assembly rule: 2x2 Gauss.
    pub fn assembly() -> Self {
        Self::gauss(2)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn smallest_grid() {
        let g = build_grid(3, false).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.interior_node_count(), 1);
    }

    #[test]
    fn table_spacings() {
        assert_relative_eq!(build_grid(30, false).unwrap().h(), 0.0345, epsilon = 5e-5);
        assert_relative_eq!(build_grid(100, false).unwrap().h(), 0.0101, epsilon = 5e-5);
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(matches!(build_grid(2, false), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn spacing_spans_unit_interval() {
        for n in 3..200 {
            let g = build_grid(n, false).unwrap();
            assert!((g.h() * (n - 1) as f64 - 1.0).abs() <= 4.0 * f64::EPSILON);
            assert_eq!(g.coord(n - 1), 1.0);
        }
    }

    #[test]
    fn node_coordinates() {
        let g = build_grid(5, false).unwrap();
        assert_eq!(g.node_coord(2, 3), [0.75, 0.5]);
    }

    #[test]
    fn index_examples() {
        assert_eq!(scalar_interior_index(2, 2, 5).unwrap(), 1);
        assert_eq!(scalar_interior_index(3, 4, 5).unwrap(), 6);
        for n in 3..12 {
            assert_eq!(
                scalar_interior_index(n - 1, n - 1, n).unwrap(),
                (n - 2) * (n - 2)
            );
            assert_eq!(vector_index(1, 1, n).unwrap(), 1);
            assert_eq!(vector_index(n, n, n).unwrap(), n * n);
        }
        assert_eq!(vector_index(2, 3, 4).unwrap(), 7);
    }

    #[test]
    fn index_errors() {
        assert!(scalar_interior_index(1, 2, 5).is_err());
        assert!(scalar_interior_index(2, 5, 5).is_err());
        assert!(vector_index(0, 1, 5).is_err());
        assert!(vector_index(1, 6, 5).is_err());
    }

    #[test]
    fn index_maps_are_bijections() {
        for n in 3..=10 {
            let mut seen = vec![false; (n - 2) * (n - 2) + 1];
            for t in 2..n {
                for j in 2..n {
                    let k = scalar_interior_index(t, j, n).unwrap();
                    assert!(!seen[k]);
                    seen[k] = true;
                    assert_eq!(scalar_interior_node(k, n).unwrap(), (t, j));
                }
            }
            assert!(seen[1..].iter().all(|&s| s));

            let mut seen = vec![false; n * n + 1];
            for t in 1..=n {
                for j in 1..=n {
                    let k = vector_index(t, j, n).unwrap();
                    assert!(!seen[k]);
                    seen[k] = true;
                    assert_eq!(vector_node(k, n).unwrap(), (t, j));
                }
            }
            assert!(seen[1..].iter().all(|&s| s));
        }
    }

    #[test]
    fn cardinal_interpolation() {
        let g = build_grid(6, false).unwrap();
        let k = scalar_interior_index(3, 4, 6).unwrap();
        for row in 0..6 {
            for col in 0..6 {
                let p = g.node_coord(row, col);
                let BasisValue::Scalar { value, .. } =
                    eval_basis(BasisId::scalar(k), &g, p).unwrap()
                else {
                    unreachable!()
                };
                if (row, col) == (2, 3) {
                    assert_eq!(value, 1.0);
                } else {
                    assert!(value.abs() < 1e-14, "({row}, {col}): {value}");
                }
            }
        }
    }

    #[test]
    fn vector_divergence_is_partial_of_tent() {
        let g = build_grid(5, false).unwrap();
        let p = [0.3, 0.6];
        let k = vector_index(3, 2, 5).unwrap();
        let (_, grad) = tent(&g, 2, 1, p);
        match eval_basis(BasisId::vector_x(k), &g, p).unwrap() {
            BasisValue::Vector { divergence, .. } => assert_eq!(divergence, grad[0]),
            _ => unreachable!(),
        }
        match eval_basis(BasisId::vector_y(k), &g, p).unwrap() {
            BasisValue::Vector { divergence, .. } => assert_eq!(divergence, grad[1]),
            _ => unreachable!(),
        }
    }

    /// Oracle: 5x5 Gauss over each of the four support cells.
    fn integrate_over_support(
        g: &Grid,
        row: usize,
        col: usize,
        f: impl Fn(f64, [f64; 2]) -> f64,
    ) -> f64 {
        let q = QuadratureRule::gauss(5);
        let mut total = 0.0;
        for ct in row.saturating_sub(1)..=row.min(g.n() - 2) {
            for cj in col.saturating_sub(1)..=col.min(g.n() - 2) {
                for (pt, w) in q.points.iter().zip(&q.weights) {
                    let p = g.map_from_reference(ct, cj, pt[0], pt[1]);
                    let (v, gr) = tent(g, row, col, p);
                    total += w * g.h() * g.h() * f(v, gr);
                }
            }
        }
        total
    }

    #[test]
    fn tent_derivative_energy_is_four_thirds() {
        for n in [4, 7, 30] {
            let g = build_grid(n, false).unwrap();
            let e = integrate_over_support(&g, 1, 2, |_, gr| gr[0] * gr[0]);
            assert_relative_eq!(e, 4.0 / 3.0, epsilon = 1e-12);
            let m = integrate_over_support(&g, 1, 2, |v, _| v * v);
            assert_relative_eq!(m, 4.0 * g.h() * g.h() / 9.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        for o in 1..=5 {
            let q = QuadratureRule::gauss(o);
            assert_relative_eq!(q.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn assembly_rule_exact_to_cubic() {
        let q = QuadratureRule::assembly();
        for a in 0..=3 {
            for b in 0..=3 {
                let num: f64 = q
                    .points
                    .iter()
                    .zip(&q.weights)
                    .map(|(p, w)| w * p[0].powi(a) * p[1].powi(b))
                    .sum();
                let exact = 1.0 / ((a + 1) * (b + 1)) as f64;
                assert!((num - exact).abs() <= 1e-13, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn periodic_first_column_wraps() {
        let g = build_grid(5, true).unwrap();
        let (v, _) = tent(&g, 2, 0, [1.0, 0.5]);
        assert_eq!(v, 1.0);
        let (v, _) = tent(&g, 2, 0, [0.9, 0.5]);
        assert_relative_eq!(v, 0.6, epsilon = 1e-14);
        assert!(!g.is_boundary_node(2, 0));
        assert!(g.is_boundary_node(0, 2));
    }

    #[test]
    fn locate_clamps_far_edges() {
        let g = build_grid(5, false).unwrap();
        let (ct, cj, xi, eta) = g.locate([1.0, 1.0]);
        assert_eq!((ct, cj), (3, 3));
        assert_relative_eq!(xi, 1.0);
        assert_relative_eq!(eta, 1.0);
    }

    proptest::proptest! {
        #[test]
        fn partition_of_unity(n in 3usize..12, x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let g = build_grid(n, false).unwrap();
            let mut s = 0.0;
            for row in 0..n {
                for col in 0..n {
                    s += tent(&g, row, col, [x, y]).0;
                }
            }
            proptest::prop_assert!((s - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn cell_quadrature_exact(a in 0i32..=3, b in 0i32..=3, ct in 0usize..5, cj in 0usize..5) {
            let g = build_grid(6, false).unwrap();
            let q = QuadratureRule::assembly();
            let h = g.h();
            let num: f64 = q.points.iter().zip(&q.weights).map(|(pt, w)| {
                let p = g.map_from_reference(ct, cj, pt[0], pt[1]);
                w * h * h * p[0].powi(a) * p[1].powi(b)
            }).sum();
            let (x0, y0) = (g.coord(cj), g.coord(ct));
            let prim = |v0: f64, e: i32| ((v0 + h).powi(e + 1) - v0.powi(e + 1)) / (e + 1) as f64;
            let exact = prim(x0, a) * prim(y0, b);
            proptest::prop_assert!((num - exact).abs() <= 1e-13);
        }
    }
}

//! Complex material coefficients and the real dissipation tensors built from them.
//!
//! With `r = -rho^{-1}` and `k = kappa^{-1}` the weak form uses
//!
//! ```text
//! R = [ r'' + r' (r'')^{-1} r'   r' (r'')^{-1} ]      K = [ k'' + k'^2/k''   k'/k'' ]
//!     [ (r'')^{-1} r'            (r'')^{-1}    ]          [ k'/k''           1/k''  ]
//! ```
//!
//! acting on `(grad P', -omega v'')` and `(omega P', -div v'')`. Both are symmetric
//! positive definite exactly when `Im rho > 0` and `Im kappa < 0`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use log::warn;
use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, Point, QuadratureRule};

pub type DensityFn = Arc<dyn Fn(Point) -> Matrix2<Complex64> + Send + Sync>;
pub type ModulusFn = Arc<dyn Fn(Point) -> Complex64 + Send + Sync>;

/// Region used by the inclusion constructor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inclusion {
    Disc {
        center: Point,
        radius: f64,
    },
    /// Segment from `start` to `end` thickened to total width `width`.
    Bar {
        start: Point,
        end: Point,
        width: f64,
    },
}

impl Inclusion {
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Inclusion::Disc { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy <= radius * radius
            }
            Inclusion::Bar { start, end, width } => {
                let d = [end[0] - start[0], end[1] - start[1]];
                let len2 = d[0] * d[0] + d[1] * d[1];
                let w = [p[0] - start[0], p[1] - start[1]];
                let s = if len2 > 0.0 {
                    ((w[0] * d[0] + w[1] * d[1]) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let q = [start[0] + s * d[0] - p[0], start[1] + s * d[1] - p[1]];
                (q[0] * q[0] + q[1] * q[1]).sqrt() <= 0.5 * width
            }
        }
    }
}

/// Density `rho(x)` (complex 2x2), bulk modulus `kappa(x)` and frequency `omega`.
#[derive(Clone)]
pub struct MaterialField {
    rho: DensityFn,
    kappa: ModulusFn,
    omega: f64,
}

impl fmt::Debug for MaterialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaterialField")
            .field("omega", &self.omega)
            .finish_non_exhaustive()
    }
}

pub fn isotropic(c: Complex64) -> Matrix2<Complex64> {
    Matrix2::new(c, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), c)
}

impl MaterialField {
    pub fn new(rho: DensityFn, kappa: ModulusFn, omega: f64) -> Self {
        Self { rho, kappa, omega }
    }

    /// Spatially constant, isotropic density.
    pub fn constant(rho: Complex64, kappa: Complex64, omega: f64) -> Self {
        Self::constant_tensor(isotropic(rho), kappa, omega)
    }

    pub fn constant_tensor(rho: Matrix2<Complex64>, kappa: Complex64, omega: f64) -> Self {
        Self::new(Arc::new(move |_| rho), Arc::new(move |_| kappa), omega)
    }

    /// Isotropic material from pointwise closures.
    pub fn from_fn<F, G>(rho: F, kappa: G, omega: f64) -> Self
    where
        F: Fn(Point) -> Complex64 + Send + Sync + 'static,
        G: Fn(Point) -> Complex64 + Send + Sync + 'static,
    {
        Self::new(Arc::new(move |p| isotropic(rho(p))), Arc::new(kappa), omega)
    }

    /// Background material with a different isotropic material inside `region`.
    pub fn inclusion(
        background: (Complex64, Complex64),
        inside: (Complex64, Complex64),
        region: Inclusion,
        omega: f64,
    ) -> Self {
        Self::from_fn(
            move |p| {
                if region.contains(p) {
                    inside.0
                } else {
                    background.0
                }
            },
            move |p| {
                if region.contains(p) {
                    inside.1
                } else {
                    background.1
                }
            },
            omega,
        )
    }

    /// Piecewise constant per grid cell; `values[cell_row * (N-1) + cell_col]`
    /// holds `(rho, kappa)`.
    pub fn cell_table(
        grid: &Grid,
        values: Vec<(Complex64, Complex64)>,
        omega: f64,
    ) -> Result<Self> {
        let cells = grid.cells_per_side();
        if values.len() != cells * cells {
            return Err(Error::InvalidGrid(format!(
                "cell table has {} entries, grid has {} cells",
                values.len(),
                cells * cells
            )));
        }
        let table = Arc::new(values);
        let g = grid.clone();
        let lookup = move |p: Point| {
            let (ct, cj, _, _) = g.locate(p);
            ct * (g.n() - 1) + cj
        };
        let (t1, l1) = (table.clone(), lookup.clone());
        Ok(Self::from_fn(
            move |p| t1[l1(p)].0,
            move |p| table[lookup(p)].1,
            omega,
        ))
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn rho(&self, p: Point) -> Matrix2<Complex64> {
        (self.rho)(p)
    }

    pub fn kappa(&self, p: Point) -> Complex64 {
        (self.kappa)(p)
    }

    /// `rho^{-1}` at `p`.
    pub fn rho_inverse(&self, p: Point) -> Result<Matrix2<Complex64>> {
        self.rho(p)
            .try_inverse()
            .ok_or_else(|| Error::DegenerateMaterial {
                x: p[0],
                y: p[1],
                reason: "rho is singular".into(),
            })
    }

    /// Diagonal entries of `Z = diag(-rho^{-1}, omega^2 / kappa)`.
    pub fn z_entries(&self, p: Point) -> Result<[Complex64; 3]> {
        let r = -self.rho_inverse(p)?;
        let kappa = self.kappa(p);
        if kappa.norm() == 0.0 {
            return Err(degenerate(p, "kappa is zero"));
        }
        Ok([r[(0, 0)], r[(1, 1)], self.omega * self.omega / kappa])
    }
}

fn degenerate(p: Point, reason: &str) -> Error {
    Error::DegenerateMaterial {
        x: p[0],
        y: p[1],
        reason: reason.into(),
    }
}

fn split(m: &Matrix2<Complex64>) -> (Matrix2<f64>, Matrix2<f64>) {
    (m.map(|c| c.re), m.map(|c| c.im))
}

/// Real symmetric tensors entering the quadratic functional at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationTensors {
    /// Acts on `(grad P', -omega v'')`.
    pub r: Matrix4<f64>,
    /// Acts on `(omega P', -div v'')`.
    pub k: Matrix2<f64>,
}

impl DissipationTensors {
    /// Builds the tensors from `r = -rho^{-1}` and `k = 1/kappa`.
    pub fn from_coefficients(r: Matrix2<Complex64>, k: Complex64) -> Option<Self> {
        let (rp, rpp) = split(&r);
        let rpp_sym = 0.5 * (rpp + rpp.transpose());
        let rpp_inv = rpp_sym.try_inverse()?;
        if k.im == 0.0 {
            return None;
        }
        let a = rpp_sym + rp * rpp_inv * rp;
        let b = rp * rpp_inv;
        let c = rpp_inv * rp;
        let mut big = Matrix4::zeros();
        big.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
        big.fixed_view_mut::<2, 2>(0, 2).copy_from(&b);
        big.fixed_view_mut::<2, 2>(2, 0).copy_from(&c);
        big.fixed_view_mut::<2, 2>(2, 2).copy_from(&rpp_inv);
        let big = 0.5 * (big + big.transpose());

        let (kp, kpp) = (k.re, k.im);
        let off = kp / kpp;
        let small = Matrix2::new(kpp + kp * kp / kpp, off, off, 1.0 / kpp);
        Some(Self { r: big, k: small })
    }

    pub fn is_positive_definite(&self) -> bool {
        self.r.cholesky().is_some() && self.k.cholesky().is_some()
    }
}

/// Evaluates `R` and `K` at `p`.
pub fn dissipation_at(m: &MaterialField, p: Point) -> Result<DissipationTensors> {
    let r = -m.rho_inverse(p)?;
    let kappa = m.kappa(p);
    if kappa.norm() == 0.0 {
        return Err(degenerate(p, "kappa is zero"));
    }
    let k = kappa.inv();
    if k.im == 0.0 {
        return Err(degenerate(p, "Im(1/kappa) is zero"));
    }
    DissipationTensors::from_coefficients(r, k)
        .ok_or_else(|| degenerate(p, "Im(-1/rho) is singular"))
}

/// Coercivity bounds `Im rho > alpha I` and `Im kappa < -beta` over a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityReport {
    pub alpha: f64,
    pub beta: f64,
    pub satisfied: bool,
}

pub fn check_coercivity(m: &MaterialField, samples: &[Point]) -> CoercivityReport {
    let mut alpha = f64::INFINITY;
    let mut beta = f64::INFINITY;
    for &p in samples {
        let (_, im) = split(&m.rho(p));
        let sym = 0.5 * (im + im.transpose());
        let min_eig = sym.symmetric_eigenvalues().min();
        alpha = alpha.min(min_eig);
        beta = beta.min(-m.kappa(p).im);
    }
    let report = CoercivityReport {
        alpha,
        beta,
        satisfied: alpha > 0.0 && beta > 0.0,
    };
    if !report.satisfied && !samples.is_empty() {
        warn!(
            "material violates coercivity bounds (alpha = {alpha:.4e}, beta = {beta:.4e}); \
             the system may be indefinite"
        );
    }
    report
}

/// Assembly quadrature points of every cell: the natural coercivity sample.
pub fn quadrature_points(grid: &Grid) -> Vec<Point> {
    let q = QuadratureRule::assembly();
    let cells = grid.cells_per_side();
    let mut pts = Vec::with_capacity(cells * cells * q.len());
    for ct in 0..cells {
        for cj in 0..cells {
            for pt in &q.points {
                pts.push(grid.map_from_reference(ct, cj, pt[0], pt[1]));
            }
        }
    }
    pts
}

/// The two eigenvalues `(lambda_min, lambda_max)` of the 2x2 block of the
/// functional's tensor generated by one diagonal entry `c` of `Z`.
///
/// With `a = 1/c' + c''^2/c' + c'` and `b = 2 c''/c'` the eigenvalues are
/// `(-a +- sqrt(a^2 - b^2)) / (-b)`. Dividing through by `b` gives the form used
/// here, which stays finite as `c' -> 0` where it reduces to `{c'', 1/c''}`.
/// The two eigenvalues always multiply to one.
pub fn l_eigenvalues_diagonal(c: Complex64) -> Result<(f64, f64)> {
    if c.im <= 0.0 || !c.im.is_finite() || !c.re.is_finite() {
        return Err(Error::NonDissipative(format!("Im(c) = {} <= 0", c.im)));
    }
    // a / b
    let half_trace = (1.0 + c.im * c.im + c.re * c.re) / (2.0 * c.im);
    let disc = (half_trace * half_trace - 1.0).max(0.0).sqrt();
    let hi = half_trace + disc;
    Ok((1.0 / hi, hi))
}

/// Ratio `max lambda / min lambda` over a set of `Z` entries, infinite if any
/// entry is not dissipative.
pub fn lambda_spread(entries: &[Complex64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &c in entries {
        match l_eigenvalues_diagonal(c) {
            Ok((a, b)) => {
                lo = lo.min(a);
                hi = hi.max(b);
            }
            Err(_) => return f64::INFINITY,
        }
    }
    if entries.is_empty() {
        return 1.0;
    }
    hi / lo
}

/// Multiplies the equation by `r e^{i theta}`, which replaces `Z` by
/// `r e^{i theta} Z`: `rho -> rho / c` and `kappa -> kappa / c`.
pub fn rescale(m: &MaterialField, r: f64, theta: f64) -> Result<MaterialField> {
    if !(r > 0.0) || !r.is_finite() || !theta.is_finite() {
        return Err(Error::Unsupported(format!("rescale needs r > 0, got {r}")));
    }
    let c = Complex64::from_polar(r, theta);
    let inv = c.inv();
    let rho = m.rho.clone();
    let kappa = m.kappa.clone();
    Ok(MaterialField::new(
        Arc::new(move |p| rho(p) * inv),
        Arc::new(move |p| kappa(p) * inv),
        m.omega,
    ))
}

/// Grid resolution of [`suggest_rescale`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleSearch {
    pub theta_samples: usize,
    pub r_samples: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for RescaleSearch {
    fn default() -> Self {
        Self {
            theta_samples: 360,
            r_samples: 41,
            r_min: 1e-2,
            r_max: 1e2,
        }
    }
}

impl RescaleSearch {
    pub fn thetas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.theta_samples).map(|i| 2.0 * PI * i as f64 / self.theta_samples as f64)
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        let (lo, hi) = (self.r_min.log10(), self.r_max.log10());
        let m = self.r_samples.max(2) - 1;
        (0..self.r_samples).map(move |i| {
            let e = lo + (hi - lo) * i as f64 / m as f64;
            // keep exact decades exact
            if (e - e.round()).abs() < 1e-12 {
                10f64.powi(e.round() as i32)
            } else {
                10f64.powf(e)
            }
        })
    }
}

/// Distinct `Z` entries over the samples (ties collapse, order preserved).
pub fn sampled_z_entries(m: &MaterialField, samples: &[Point]) -> Result<Vec<Complex64>> {
    let mut out: Vec<Complex64> = Vec::new();
    for &p in samples {
        for c in m.z_entries(p)? {
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Chooses `(r, theta)` so that `r e^{i theta} Z` is as close to `iI` as the
/// search grid allows, measured by the eigenvalue spread of the tensor.
/// Returns the first minimizer in `(theta, r)` scan order.
pub fn suggest_rescale(
    m: &MaterialField,
    samples: &[Point],
    search: &RescaleSearch,
) -> Result<(f64, f64)> {
    let entries = sampled_z_entries(m, samples)?;
    let mut best = (f64::INFINITY, 1.0, 0.0);
    let mut scaled = vec![Complex64::new(0.0, 0.0); entries.len()];
    for theta in search.thetas() {
        let rot = Complex64::from_polar(1.0, theta);
        for r in search.radii() {
            for (s, c) in scaled.iter_mut().zip(&entries) {
                *s = c * rot * r;
            }
            let spread = lambda_spread(&scaled);
            if spread < best.0 {
                best = (spread, r, theta);
            }
        }
    }
    Ok((best.1, best.2))
}

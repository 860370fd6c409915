//! Zero-fill incomplete Cholesky factorization.

use log::debug;

use super::sparse::CsrMatrix;

/// Lower-triangular factor `L` with `L L^T ~ A + shift * diag(A)` on the
/// sparsity pattern of `A`. Each row stores its diagonal entry last.
#[derive(Debug, Clone)]
pub struct Ic0Factor {
    l: CsrMatrix,
    shift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("incomplete Cholesky hit a non-positive pivot in row {row} after {attempts} shifts")]
pub struct Ic0Failure {
    pub row: usize,
    pub attempts: usize,
}

const MAX_SHIFTS: usize = 10;
const FIRST_SHIFT: f64 = 1e-8;

/// Factors `a`. On a non-positive pivot the diagonal is scaled by `1 + tau`
/// with `tau = 1e-8, 2e-8, ...` for up to ten retries.
pub fn ic0(a: &CsrMatrix) -> Result<Ic0Factor, Ic0Failure> {
    assert_eq!(a.nrows(), a.ncols(), "ic0 needs a square matrix");
    let mut row = match factor(a, 0.0) {
        Ok(l) => return Ok(Ic0Factor { l, shift: 0.0 }),
        Err(r) => r,
    };
    let mut tau = FIRST_SHIFT;
    for _ in 0..MAX_SHIFTS {
        match factor(a, tau) {
            Ok(l) => {
                debug!("ic0 succeeded with diagonal shift {tau:e}");
                return Ok(Ic0Factor { l, shift: tau });
            }
            Err(r) => row = r,
        }
        tau *= 2.0;
    }
    Err(Ic0Failure {
        row,
        attempts: MAX_SHIFTS,
    })
}

fn factor(a: &CsrMatrix, shift: f64) -> Result<CsrMatrix, usize> {
    let n = a.nrows();
    let mut row_ptr = vec![0usize; n + 1];
    let mut cols: Vec<usize> = Vec::with_capacity(a.nnz() / 2 + n);
    let mut vals: Vec<f64> = Vec::with_capacity(a.nnz() / 2 + n);
    let mut work = vec![0.0f64; n];
    let mut diag = vec![0.0f64; n];

    for i in 0..n {
        let (acols, avals) = a.row(i);
        let start = cols.len();
        let mut aii = 0.0;
        for (&c, &v) in acols.iter().zip(avals) {
            if c < i {
                cols.push(c);
                vals.push(0.0);
                work[c] = v;
            } else if c == i {
                aii = v * (1.0 + shift);
            }
        }
        // strictly lower entries of row i, ascending
        for p in start..cols.len() {
            let k = cols[p];
            let (lo, hi) = (row_ptr[k], row_ptr[k + 1] - 1); // skip diagonal of row k
            let mut s = work[k];
            for q in lo..hi {
                // every m < k on row i's pattern is already final
                s -= work[cols[q]] * vals[q];
            }
            let lik = s / diag[k];
            vals[p] = lik;
            work[k] = lik;
        }
        // `work` now holds L_ik on the pattern; compute the pivot
        let mut d = aii;
        d -= vals[start..].iter().map(|l| l * l).sum::<f64>();
        for &c in &cols[start..] {
            work[c] = 0.0;
        }
        if !(d > 0.0) {
            return Err(i);
        }
        let lii = d.sqrt();
        cols.push(i);
        vals.push(lii);
        diag[i] = lii;
        row_ptr[i + 1] = cols.len();
    }
    Ok(CsrMatrix::from_raw(n, n, row_ptr, cols, vals))
}

impl Ic0Factor {
    pub fn factor(&self) -> &CsrMatrix {
        &self.l
    }

    /// Diagonal shift that was needed (0 when the plain factorization worked).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Solves `L L^T z = r`.
    pub fn solve_into(&self, r: &[f64], z: &mut [f64]) {
        let n = self.l.nrows();
        z.copy_from_slice(r);
        for i in 0..n {
            let (cols, vals) = self.l.row(i);
            let last = cols.len() - 1;
            let mut s = z[i];
            for p in 0..last {
                s -= vals[p] * z[cols[p]];
            }
            z[i] = s / vals[last];
        }
        for i in (0..n).rev() {
            let (cols, vals) = self.l.row(i);
            let last = cols.len() - 1;
            z[i] /= vals[last];
            let zi = z[i];
            for p in 0..last {
                z[cols[p]] -= vals[p] * zi;
            }
        }
    }
}

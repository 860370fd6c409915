//! Block-Jacobi preconditioner `M = diag(A1, A2, A3)` applied by inner PCG.

use std::sync::atomic::{AtomicBool, Ordering};

use log::warn;

use super::cg::{pcg_with, JacobiPreconditioner, LinalgError, PcgOptions, Preconditioner};
use super::ic0::{ic0, Ic0Factor};
use super::sparse::CsrMatrix;

/// Accuracy of each inner block solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSolve {
    pub tol: f64,
    pub maxit: usize,
}

impl Default for InnerSolve {
    fn default() -> Self {
        Self {
            tol: 1e-2,
            maxit: 50,
        }
    }
}

impl InnerSolve {
    /// Near-exact block solves, for spectral diagnostics.
    pub fn tight() -> Self {
        Self {
            tol: 1e-10,
            maxit: 2000,
        }
    }
}

#[derive(Debug, Clone)]
enum BlockFactor {
    Ic0(Ic0Factor),
    Diagonal(JacobiPreconditioner),
}

impl Preconditioner for BlockFactor {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> usize {
        match self {
            BlockFactor::Ic0(f) => f.apply(r, z),
            BlockFactor::Diagonal(d) => d.apply(r, z),
        }
    }
}

#[derive(Debug, Clone)]
struct Block {
    start: usize,
    matrix: CsrMatrix,
    factor: BlockFactor,
}

/// Solves `M z = r` block by block, each with IC(0)-preconditioned CG.
#[derive(Debug)]
pub struct BlockJacobi {
    blocks: Vec<Block>,
    dim: usize,
    inner: InnerSolve,
    warned: AtomicBool,
}

impl BlockJacobi {
    /// `offsets` delimits the diagonal blocks, e.g. `[0, n1, n1 + n2, n]`.
    pub fn new(a: &CsrMatrix, offsets: &[usize], inner: InnerSolve) -> Self {
        assert!(offsets.len() >= 2 && offsets[0] == 0);
        assert_eq!(*offsets.last().unwrap(), a.nrows());
        let blocks = offsets
            .windows(2)
            .map(|w| {
                let matrix = a.submatrix(w[0], w[1], w[0], w[1]);
                let factor = match ic0(&matrix) {
                    Ok(f) => BlockFactor::Ic0(f),
                    Err(e) => {
                        warn!("block {}..{}: {e}; using diagonal scaling", w[0], w[1]);
                        BlockFactor::Diagonal(JacobiPreconditioner::new(&matrix))
                    }
                };
                Block {
                    start: w[0],
                    matrix,
                    factor,
                }
            })
            .collect();
        Self {
            blocks,
            dim: a.nrows(),
            inner,
            warned: AtomicBool::new(false),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inner(&self) -> InnerSolve {
        self.inner
    }

    /// True when every block got an incomplete Cholesky factor.
    pub fn all_ic0(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| matches!(b.factor, BlockFactor::Ic0(_)))
    }
}

impl Preconditioner for BlockJacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> usize {
        let opts = PcgOptions::new(self.inner.tol, self.inner.maxit);
        let mut total = 0;
        for b in &self.blocks {
            let n = b.matrix.nrows();
            let rb = &r[b.start..b.start + n];
            let (x, rep) = match pcg_with(&b.matrix, rb, &b.factor, &opts) {
                Ok(v) => v,
                Err(LinalgError::Breakdown { x, report, .. }) => (x, report),
                Err(e) => panic!("block solve: {e}"),
            };
            if !rep.converged && !self.warned.swap(true, Ordering::Relaxed) {
                warn!(
                    "inner block solve stopped at relative residual {:.2e} (tol {:.0e})",
                    rep.final_residual(),
                    self.inner.tol
                );
            }
            total += rep.iterations;
            z[b.start..b.start + n].copy_from_slice(&x);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_blocks_give_identity() {
        let a = CsrMatrix::identity(7);
        let m = BlockJacobi::new(&a, &[0, 2, 5, 7], InnerSolve::default());
        let r = vec![1.0, -2.0, 3.0, 4.0, 0.5, -0.25, 8.0];
        let mut z = vec![0.0; 7];
        m.apply(&r, &mut z);
        assert_eq!(z, r);
    }

    #[test]
    fn diagonal_blocks_divide() {
        let d = [2.0, 4.0, 5.0, 8.0];
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        let a = CsrMatrix::from_triplets(4, 4, &t);
        let m = BlockJacobi::new(&a, &[0, 1, 3, 4], InnerSolve::default());
        let mut z = vec![0.0; 4];
        m.apply(&[1.0, 1.0, 1.0, 1.0], &mut z);
        for (zi, di) in z.iter().zip(d) {
            assert!((zi - 1.0 / di).abs() < 1e-15);
        }
    }

    #[test]
    fn off_diagonal_blocks_are_ignored() {
        let a = CsrMatrix::from_dense(&[
            vec![4.0, 1.0, 9.0],
            vec![1.0, 3.0, 9.0],
            vec![9.0, 9.0, 2.0],
        ]);
        let m = BlockJacobi::new(&a, &[0, 2, 3], InnerSolve::tight());
        let mut z = vec![0.0; 3];
        m.apply(&[1.0, 2.0, 4.0], &mut z);
        assert!((z[0] - 1.0 / 11.0).abs() < 1e-10);
        assert!((z[1] - 7.0 / 11.0).abs() < 1e-10);
        assert!((z[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tight_application_is_linear() {
        let n = 12;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let m = BlockJacobi::new(&a, &[0, 5, 12], InnerSolve::tight());
        let y: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let w: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let comb: Vec<f64> = y.iter().zip(&w).map(|(a, b)| 2.5 * a + b).collect();
        let (mut py, mut pw, mut pc) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        m.apply(&y, &mut py);
        m.apply(&w, &mut pw);
        m.apply(&comb, &mut pc);
        for i in 0..n {
            assert!((pc[i] - (2.5 * py[i] + pw[i])).abs() < 1e-8);
        }
    }
}

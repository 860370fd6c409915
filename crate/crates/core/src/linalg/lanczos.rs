//! Lanczos estimates of extremal eigenvalues.
//!
//! With a preconditioner `M` the recurrence runs in the `M`-inner product and
//! the Ritz values approximate the spectrum of `M^{-1} A` (equivalently of
//! `M^{-1/2} A M^{-1/2}`), without forming either operator.

use nalgebra::DMatrix;

use super::cg::{LinearOperator, Preconditioner};
use super::sparse::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Lanczos steps actually taken.
    pub steps: usize,
    /// The recurrence stopped before `n_iter` steps, either because an
    /// invariant subspace was found or because `M` was not positive.
    pub early_stop: bool,
}

impl EigEstimate {
    pub fn condition(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

/// Deterministic start vector (splitmix64 hashed to `[-1, 1)`).
fn start_vector(n: usize) -> Vec<f64> {
    let mut s: u64 = 0x9E37_79B9_7F4A_7C15;
    (0..n)
        .map(|_| {
            s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect()
}

/// Runs up to `n_iter` Lanczos steps and returns the extreme Ritz values.
pub fn extremal_eigs<A: LinearOperator + ?Sized>(
    a: &A,
    precond: Option<&dyn Preconditioner>,
    n_iter: usize,
) -> EigEstimate {
    let n = a.dim();
    let apply_m = |r: &[f64], z: &mut [f64]| match precond {
        Some(m) => {
            m.apply(r, z);
        }
        None => z.copy_from_slice(r),
    };

    // w_j = M q_j is kept alongside q_j so M itself is never applied.
    let mut w = start_vector(n);
    let mut q = vec![0.0; n];
    apply_m(&w, &mut q);
    let b0 = dot(&w, &q);
    if !(b0 > 0.0) {
        return EigEstimate {
            lambda_min: f64::NAN,
            lambda_max: f64::NAN,
            steps: 0,
            early_stop: true,
        };
    }
    let b0 = b0.sqrt();
    w.iter_mut().for_each(|v| *v /= b0);
    q.iter_mut().for_each(|v| *v /= b0);

    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w_prev = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut early_stop = false;
    let mut scale: f64 = 0.0;

    for j in 0..n_iter.min(n) {
        a.apply(&q, &mut u);
        if j > 0 {
            let b = betas[j - 1];
            for (ui, wi) in u.iter_mut().zip(&w_prev) {
                *ui -= b * wi;
            }
        }
        let alpha = dot(&q, &u);
        for (ui, wi) in u.iter_mut().zip(&w) {
            *ui -= alpha * wi;
        }
        alphas.push(alpha);
        scale = scale.max(alpha.abs());
        if j + 1 == n_iter.min(n) {
            break;
        }
        apply_m(&u, &mut z);
        let bb = dot(&u, &z);
        if !(bb > (1e-14 * scale).powi(2)) {
            early_stop = true;
            break;
        }
        let beta = bb.sqrt();
        scale = scale.max(beta);
        betas.push(beta);
        std::mem::swap(&mut w_prev, &mut w);
        for i in 0..n {
            w[i] = u[i] / beta;
            q[i] = z[i] / beta;
        }
    }

    let k = alphas.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j || j + 1 == i {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    let ev = t.symmetric_eigenvalues();
    EigEstimate {
        lambda_min: ev.iter().copied().fold(f64::INFINITY, f64::min),
        lambda_max: ev.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        steps: k,
        early_stop,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cg::JacobiPreconditioner;
    use crate::linalg::sparse::CsrMatrix;

    fn diag(values: &[f64]) -> CsrMatrix {
        let t: Vec<_> = values.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        CsrMatrix::from_triplets(values.len(), values.len(), &t)
    }

    #[test]
    fn identity_spectrum() {
        let e = extremal_eigs(&CsrMatrix::identity(30), None, 10);
        assert!((e.lambda_min - 1.0).abs() < 1e-12);
        assert!((e.lambda_max - 1.0).abs() < 1e-12);
        assert!(e.early_stop);
    }

    #[test]
    fn diagonal_one_to_ten() {
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let e = extremal_eigs(&diag(&d), None, 20);
        assert!((e.lambda_min - 1.0).abs() < 1e-6, "{e:?}");
        assert!((e.lambda_max - 10.0).abs() < 1e-6, "{e:?}");
    }

    #[test]
    fn jacobi_on_diagonal_matrix_is_perfect() {
        let d: Vec<f64> = (1..=50).map(|i| f64::from(i) * 3.0).collect();
        let a = diag(&d);
        let m = JacobiPreconditioner::new(&a);
        let e = extremal_eigs(&a, Some(&m), 20);
        assert!((e.lambda_min - 1.0).abs() < 1e-10);
        assert!((e.lambda_max - 1.0).abs() < 1e-10);
    }

    #[test]
    fn start_vector_is_deterministic_and_bounded() {
        let a = start_vector(100);
        assert_eq!(a, start_vector(100));
        assert!(a.iter().all(|v| (-1.0..1.0).contains(v)));
    }
}

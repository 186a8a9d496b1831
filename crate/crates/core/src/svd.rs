//! One-sided Jacobi singular value decomposition.
//!
//! Rank decisions on data matrices need singular values that are accurate to
//! working precision even when the matrix is exactly rank deficient. The
//! Hestenes iteration orthogonalizes columns pairwise and delivers that.

use nalgebra::DMatrix;

use crate::Scalar;

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(σ) Vᵀ` with `σ` sorted in descending order.
///
/// For an `m × n` input with `m ≥ n`, `U` is `m × n` and `V` is the complete
/// `n × n` orthogonal factor. For `m < n` the roles are swapped through the
/// transpose, so `U` is `m × m` and `V` is `n × m`.
#[derive(Debug, Clone)]
pub struct Svd<T: Scalar> {
    pub u: DMatrix<T>,
    pub sigma: Vec<T>,
    pub v: DMatrix<T>,
}

impl<T: Scalar> Svd<T> {
    pub fn new(a: &DMatrix<T>) -> Self {
        let (m, n) = a.shape();
        if m == 0 || n == 0 {
            return Self {
                u: DMatrix::zeros(m, 0),
                sigma: Vec::new(),
                v: DMatrix::zeros(n, 0),
            };
        }
        if m < n {
            let t = jacobi(&a.transpose());
            return Self {
                u: t.v,
                sigma: t.sigma,
                v: t.u,
            };
        }
        jacobi(a)
    }

    pub fn recompose(&self) -> DMatrix<T> {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.transpose()
    }
}

fn jacobi<T: Scalar>(a: &DMatrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<T>::identity(n, n);
    let eps = T::machine_eps();
    let two = T::lit(2.0);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n.saturating_sub(1) {
            for j in i + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for k in 0..m {
                    let (x, y) = (w[(k, i)], w[(k, j)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (two * gamma);
                let sign = if zeta >= T::zero() {
                    T::one()
                } else {
                    -T::one()
                };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let (x, y) = (w[(k, i)], w[(k, j)]);
                    w[(k, i)] = c * x - s * y;
                    w[(k, j)] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (v[(k, i)], v[(k, j)]);
                    v[(k, i)] = c * x - s * y;
                    v[(k, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<T> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        norms[y]
            .partial_cmp(&norms[x])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut u = DMatrix::zeros(m, n);
    let mut vs = DMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let floor = norms[order[0]] * eps * T::from_usize_lossy(m.max(n));
    let mut solid = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        // directions at rounding level are not reliably orthogonal
        solid.push(s > floor && s > T::zero());
        if solid[dst] {
            u.set_column(dst, &(w.column(src) / s));
        }
        vs.set_column(dst, &v.column(src));
    }
    complete_columns(&mut u, &solid);
    Svd { u, sigma, v: vs }
}

// Columns of U belonging to negligible singular values are filled with an
// orthonormal completion so that U always has orthonormal columns.
fn complete_columns<T: Scalar>(u: &mut DMatrix<T>, solid: &[bool]) {
    let m = u.nrows();
    for j in 0..u.ncols() {
        if solid[j] {
            continue;
        }
        for e in 0..m {
            let mut cand = nalgebra::DVector::<T>::zeros(m);
            cand[e] = T::one();
            for k in 0..u.ncols() {
                if k == j || (k > j && !solid[k]) {
                    continue;
                }
                let proj = u.column(k).dot(&cand);
                cand -= u.column(k) * proj;
            }
            let nrm = cand.norm();
            if nrm > T::lit(0.5) {
                u.set_column(j, &(cand / nrm));
                break;
            }
        }
    }
}

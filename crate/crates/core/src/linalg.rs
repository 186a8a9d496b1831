//! Dense linear-algebra helpers built on SVD.
//!
//! Every rank decision in the crate goes through [`rank_threshold`], so one
//! tolerance policy governs the decomposition, the data tests and the subspace
//! machinery alike.

use nalgebra::{Complex, DMatrix, DVector};

use crate::svd::Svd;
use crate::Scalar;

/// Multiplier applied to `max(rows, cols) · ε · σ_max` to obtain the rank cut-off.
pub const RANK_TOL_FACTOR: f64 = 1.0;

/// Singular values below this threshold are treated as zero.
pub fn rank_threshold<T: Scalar>(rows: usize, cols: usize, sigma_max: T) -> T {
    T::lit(RANK_TOL_FACTOR) * T::from_usize_lossy(rows.max(cols)) * T::machine_eps() * sigma_max
}

/// Singular values in descending order. Empty for degenerate shapes.
pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> Vec<T> {
    Svd::new(m).sigma
}

/// Numerical rank with the shared tolerance policy.
pub fn rank<T: Scalar>(m: &DMatrix<T>) -> usize {
    let sv = singular_values(m);
    count_above(&sv, m.nrows(), m.ncols())
}

fn count_above<T: Scalar>(sv: &[T], rows: usize, cols: usize) -> usize {
    let Some(&smax) = sv.first() else { return 0 };
    if smax <= T::zero() {
        return 0;
    }
    let tol = rank_threshold(rows, cols, smax);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of the column space (`rows × rank`).
pub fn orth<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let svd = Svd::new(m);
    let smax = svd.sigma.first().copied().unwrap_or(T::zero());
    let tol = rank_threshold(m.nrows(), m.ncols(), smax);
    orth_from(&svd, m.nrows(), tol)
}

/// Orthonormal basis of the column space, discarding singular values `≤ tol`.
pub fn orth_abs<T: Scalar>(m: &DMatrix<T>, tol: T) -> DMatrix<T> {
    orth_from(&Svd::new(m), m.nrows(), tol)
}

fn orth_from<T: Scalar>(svd: &Svd<T>, rows: usize, tol: T) -> DMatrix<T> {
    let keep = svd.sigma.iter().take_while(|&&s| s > tol).count();
    if keep == 0 {
        return DMatrix::zeros(rows, 0);
    }
    svd.u.columns(0, keep).into_owned()
}

/// Orthonormal basis of the right kernel (`cols × nullity`).
pub fn null_space<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    null_space_inner(m, None)
}

/// Right kernel, counting singular values `≤ tol` as zero.
pub fn null_space_abs<T: Scalar>(m: &DMatrix<T>, tol: T) -> DMatrix<T> {
    null_space_inner(m, Some(tol))
}

fn null_space_inner<T: Scalar>(m: &DMatrix<T>, abs_tol: Option<T>) -> DMatrix<T> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if rows == 0 {
        return DMatrix::identity(cols, cols);
    }
    // pad to at least square so that V is complete
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = Svd::new(&padded);
    let smax = svd.sigma.first().copied().unwrap_or(T::zero());
    let tol = abs_tol.unwrap_or_else(|| rank_threshold(rows, cols, smax));
    let rank = svd.sigma.iter().take_while(|&&s| s > tol).count();
    svd.v.columns(rank, cols - rank).into_owned()
}

/// Moore–Penrose pseudoinverse with the shared truncation.
pub fn pinv<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let (rows, cols) = m.shape();
    let svd = Svd::new(m);
    let smax = svd.sigma.first().copied().unwrap_or(T::zero());
    let mut out = DMatrix::zeros(cols, rows);
    if smax <= T::zero() {
        return out;
    }
    let tol = rank_threshold(rows, cols, smax);
    for (i, &s) in svd.sigma.iter().enumerate() {
        if s > tol {
            out += (svd.v.column(i) * svd.u.column(i).transpose()) * (T::one() / s);
        }
    }
    out
}

/// Picks the listed columns of `m`.
pub fn select_columns<T: Scalar>(m: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    let mut out = DMatrix::zeros(m.nrows(), idx.len());
    for (j, &i) in idx.iter().enumerate() {
        out.set_column(j, &m.column(i));
    }
    out
}

pub fn vstack<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let cols = blocks.iter().map(|b| b.ncols()).max().unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert!(
            b.nrows() == 0 || b.ncols() == cols,
            "vstack column mismatch"
        );
        if b.nrows() > 0 {
            out.view_mut((r, 0), b.shape()).copy_from(*b);
        }
        r += b.nrows();
    }
    out
}

pub fn hstack<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let rows = blocks.iter().map(|b| b.nrows()).max().unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert!(b.ncols() == 0 || b.nrows() == rows, "hstack row mismatch");
        if b.ncols() > 0 {
            out.view_mut((0, c), b.shape()).copy_from(*b);
        }
        c += b.ncols();
    }
    out
}

pub fn block_diag<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        if b.nrows() > 0 && b.ncols() > 0 {
            out.view_mut((r, c), b.shape()).copy_from(*b);
        }
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// `I_k ⊗ m`.
pub fn kron_identity<T: Scalar>(k: usize, m: &DMatrix<T>) -> DMatrix<T> {
    let blocks: Vec<&DMatrix<T>> = std::iter::repeat_n(m, k).collect();
    block_diag(&blocks)
}

pub fn mat_pow<T: Scalar>(m: &DMatrix<T>, k: usize) -> DMatrix<T> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// `[b, a b, …, a^{k-1} b]`.
pub fn krylov<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, k: usize) -> DMatrix<T> {
    let mut blocks = Vec::with_capacity(k);
    let mut cur = b.clone();
    for _ in 0..k {
        blocks.push(cur.clone());
        cur = a * &cur;
    }
    let refs: Vec<&DMatrix<T>> = blocks.iter().collect();
    if refs.is_empty() {
        return DMatrix::zeros(a.nrows(), 0);
    }
    hstack(&refs)
}

/// `[c; c a; …; c a^{k-1}]`.
pub fn observability<T: Scalar>(a: &DMatrix<T>, c: &DMatrix<T>, k: usize) -> DMatrix<T> {
    let mut blocks = Vec::with_capacity(k);
    let mut cur = c.clone();
    for _ in 0..k {
        blocks.push(cur.clone());
        cur = &cur * a;
    }
    let refs: Vec<&DMatrix<T>> = blocks.iter().collect();
    if refs.is_empty() {
        return DMatrix::zeros(0, a.ncols());
    }
    vstack(&refs)
}

pub fn frobenius<T: Scalar>(m: &DMatrix<T>) -> T {
    m.norm()
}

pub fn max_abs<T: Scalar>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

pub fn vec_max_abs<T: Scalar>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Eigenvalues of a real square matrix. Empty for a 0×0 input.
pub fn eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Vec<Complex<T>> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Concatenates a sequence of equally sized vectors into one column.
pub fn concat<T: Scalar>(parts: &[DVector<T>]) -> DVector<T> {
    let len: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = DVector::zeros(len);
    let mut k = 0;
    for p in parts {
        out.rows_mut(k, p.len()).copy_from(p);
        k += p.len();
    }
    out
}

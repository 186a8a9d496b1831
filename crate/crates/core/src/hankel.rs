//! Block-Hankel matrices and persistency of excitation.
//!
//! All data matrices use one addressing scheme, `(start, depth, cols)`:
//! block row `i`, column `j` holds `w[start + i + j]`. In that scheme
//! `H_L(w)` is `hankel(w, L, 0, len − L + 1)` and the shifted pair of the
//! controllability test is `start = 1` against `start = 0` with equal `cols`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::Scalar;

/// Materialized block-Hankel matrix together with its addressing.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelView<T: Scalar> {
    pub dim: usize,
    pub start: usize,
    pub depth: usize,
    pub cols: usize,
    pub matrix: DMatrix<T>,
}

impl<T: Scalar> HankelView<T> {
    /// Sample `w[start + i + j]` as stored in block row `i`, column `j`.
    pub fn entry(&self, i: usize, j: usize) -> DVector<T> {
        self.matrix
            .view((i * self.dim, j), (self.dim, 1))
            .column(0)
            .into_owned()
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }
}

/// Block-Hankel matrix of `depth` block rows and `cols` columns starting at `start`.
pub fn hankel<T: Scalar>(
    w: &[DVector<T>],
    depth: usize,
    start: usize,
    cols: usize,
) -> Result<HankelView<T>> {
    if depth == 0 || cols == 0 {
        return Err(Error::OutOfRange(format!(
            "depth {depth} and cols {cols} must be positive"
        )));
    }
    if start + depth + cols - 1 > w.len() {
        return Err(Error::OutOfRange(format!(
            "start {start} + depth {depth} + cols {cols} − 1 exceeds length {}",
            w.len()
        )));
    }
    let dim = w[start].len();
    if w[start..start + depth + cols - 1]
        .iter()
        .any(|v| v.len() != dim)
    {
        return Err(Error::DimensionMismatch(
            "samples of unequal dimension".into(),
        ));
    }
    let mut matrix = DMatrix::zeros(dim * depth, cols);
    for j in 0..cols {
        for i in 0..depth {
            matrix
                .view_mut((i * dim, j), (dim, 1))
                .copy_from(&w[start + i + j]);
        }
    }
    Ok(HankelView {
        dim,
        start,
        depth,
        cols,
        matrix,
    })
}

/// `H_L(w)` with the maximal number of columns.
pub fn hankel_full<T: Scalar>(w: &[DVector<T>], depth: usize) -> Result<HankelView<T>> {
    if depth == 0 || depth > w.len() {
        return Err(Error::OutOfRange(format!(
            "depth {depth} for length {}",
            w.len()
        )));
    }
    hankel(w, depth, 0, w.len() - depth + 1)
}

/// Largest `L` with `rank H_L(u) = m L`; zero when even `L = 1` fails.
pub fn persistency_order<T: Scalar>(u: &[DVector<T>]) -> usize {
    let Some(first) = u.first() else { return 0 };
    let m = first.len();
    if m == 0 {
        return 0;
    }
    let mut order = 0;
    // full row rank needs at least m L columns
    for depth in 1..=u.len() {
        let cols = u.len() - depth + 1;
        if cols < m * depth {
            break;
        }
        match hankel(u, depth, 0, cols) {
            Ok(h) if linalg::rank(&h.matrix) == m * depth => order = depth,
            _ => break,
        }
    }
    order
}

/// `true` when `u` is persistently exciting of order `depth`.
pub fn is_persistently_exciting<T: Scalar>(u: &[DVector<T>], depth: usize) -> bool {
    let Some(first) = u.first() else {
        return depth == 0;
    };
    match hankel_full(u, depth) {
        Ok(h) => linalg::rank(&h.matrix) == first.len() * depth,
        Err(_) => depth == 0,
    }
}

/// Length of the window on which both `u` and `y` are defined.
///
/// `u` may carry the full input of a run (length `T`) while `y` only covers
/// the validity window (`T − s + 1`); the common window is `y.len()`.
pub fn common_window<T: Scalar>(u: &[DVector<T>], y: &[DVector<T>]) -> Result<usize> {
    if y.len() > u.len() {
        return Err(Error::WindowMismatch(format!(
            "outputs cover {} samples but inputs only {}",
            y.len(),
            u.len()
        )));
    }
    Ok(y.len())
}

/// `[H(u); H(y)]` over the common window, `depth` block rows from `start`.
///
/// `cols = None` takes every column that fits, so `T = 100`, `s = 2`,
/// `L = 14` yields `99 − 14 + 1 = 86` columns at `start = 0`.
pub fn stack_io<T: Scalar>(
    u: &[DVector<T>],
    y: &[DVector<T>],
    depth: usize,
    start: usize,
    cols: Option<usize>,
) -> Result<DMatrix<T>> {
    let window = common_window(u, y)?;
    let cols = match cols {
        Some(c) => c,
        None => (window + 1)
            .checked_sub(start + depth)
            .filter(|&c| c > 0)
            .ok_or_else(|| {
                Error::WindowMismatch(format!("window {window} too short for depth {depth}"))
            })?,
    };
    if start + depth + cols > window + 1 {
        return Err(Error::WindowMismatch(format!(
            "columns {cols} from start {start} exceed window {window}"
        )));
    }
    let hu = hankel(&u[..window], depth, start, cols)?;
    let hy = hankel(&y[..window], depth, start, cols)?;
    Ok(linalg::vstack(&[&hu.matrix, &hy.matrix]))
}

/// The pair `(stack at 0, stack at 1)` with equal shapes, `window − L` columns each.
pub fn shifted_pair<T: Scalar>(
    u: &[DVector<T>],
    y: &[DVector<T>],
    depth: usize,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let window = common_window(u, y)?;
    let cols = window
        .checked_sub(depth)
        .filter(|&c| c > 0)
        .ok_or_else(|| {
            Error::WindowMismatch(format!(
                "window {window} too short for shifted depth {depth}"
            ))
        })?;
    Ok((
        stack_io(u, y, depth, 0, Some(cols))?,
        stack_io(u, y, depth, 1, Some(cols))?,
    ))
}

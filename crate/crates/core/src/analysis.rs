//! Data-driven controllability and observability tests, and the model-based
//! rank conditions they are checked against.
//!
//! The data tests are sufficient conditions only: a failed rank condition is
//! reported as [`Status::Inconclusive`], never as a negative result.
//!
//! Matrix addressing (see [`crate::hankel`]): with `w` samples in the common
//! window, the shifted pair uses `window − L` columns at starts 1 and 0; the
//! observability tests use `stack_io(u, y, L, 0, None)`.

use std::fmt;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hankel::{common_window, shifted_pair, stack_io};
use crate::linalg;
use crate::pencil::{pencil_rank, Pencil, PencilRank};
use crate::system::QuasiWeierstrass;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Confirmed,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Confirmed => "confirmed",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// Outcome of one data-driven rank test.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict<T: Scalar> {
    pub status: Status,
    pub achieved_rank: usize,
    pub required_rank: usize,
    /// Examined `λ` with the rank found there; empty for the observability tests.
    pub witness_lambdas: Vec<(Complex<T>, usize)>,
    pub horizon: usize,
}

impl<T: Scalar> Verdict<T> {
    pub fn confirmed(&self) -> bool {
        self.status == Status::Confirmed
    }

    fn from_rank(achieved: usize, required: usize, horizon: usize) -> Self {
        let status = if achieved == required {
            Status::Confirmed
        } else {
            Status::Inconclusive
        };
        Self {
            status,
            achieved_rank: achieved,
            required_rank: required,
            witness_lambdas: Vec::new(),
            horizon,
        }
    }

    fn from_pencils(pencils: &[PencilRank<T>], required: usize, horizon: usize) -> Self {
        let ok = pencils
            .iter()
            .all(|p| p.normal_rank == required && p.exceptional.is_empty());
        let achieved = pencils.iter().map(|p| p.min_rank()).min().unwrap_or(0);
        let witness_lambdas = pencils
            .iter()
            .flat_map(|p| p.probes.iter().copied())
            .collect();
        Self {
            status: if ok {
                Status::Confirmed
            } else {
                Status::Inconclusive
            },
            achieved_rank: achieved,
            required_rank: required,
            witness_lambdas,
            horizon,
        }
    }
}

/// Structural dimensions assumed known a priori.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub q: usize,
    pub r: usize,
    pub s: usize,
    pub m: usize,
}

impl Dims {
    pub fn n(&self) -> usize {
        self.q + self.r
    }

    pub fn of<T: Scalar>(qw: &QuasiWeierstrass<T>) -> Self {
        Self {
            q: qw.q(),
            r: qw.r(),
            s: qw.s(),
            m: qw.m(),
        }
    }
}

fn check_dims<T: Scalar>(u: &[DVector<T>], dims: &Dims) -> Result<()> {
    match u.first() {
        Some(v) if v.len() == dims.m => Ok(()),
        Some(v) => Err(Error::DimensionMismatch(format!(
            "input dimension {} but m = {}",
            v.len(),
            dims.m
        ))),
        None => Err(Error::DataTooShort("empty input".into())),
    }
}

fn pair<T: Scalar>(
    u: &[DVector<T>],
    y: &[DVector<T>],
    l: usize,
    required: usize,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    if l == 0 {
        return Err(Error::HorizonTooShort { l, min: 1 });
    }
    let window = common_window(u, y)?;
    if window <= l || window - l < required {
        return Err(Error::DataTooShort(format!(
            "{window} samples give {} shifted columns, rank {required} needs at least as many",
            window.saturating_sub(l)
        )));
    }
    shifted_pair(u, y, l)
}

fn stack0<T: Scalar>(
    u: &[DVector<T>],
    y: &[DVector<T>],
    l: usize,
    required: usize,
) -> Result<DMatrix<T>> {
    let window = common_window(u, y)?;
    if window + 1 < l + required {
        return Err(Error::DataTooShort(format!(
            "{window} samples give fewer than {required} columns at depth {l}"
        )));
    }
    stack_io(u, y, l, 0, None)
}

/// Shifted-pair rank test for R-controllability: `rank(S1 − λ S0) = m(L+s−1)+q` for all `λ`.
pub fn test_r_controllable<T: Scalar>(
    u: &[DVector<T>],
    y: &[DVector<T>],
    l: usize,
    dims: &Dims,
) -> Result<Verdict<T>> {
    check_dims(u, dims)?;
    let required = dims.m * (l + dims.s - 1) + dims.q;
    let (s0, s1) = pair(u, y, l, required)?;
    Ok(Verdict::from_pencils(&[pencil_rank(&s1, &s0)], required, l))
}

/// Forward and backward pencils both of rank `mL + n` for all `λ`.
pub fn test_c_controllable<T: Scalar>(
    u: &[DVector<T>],
    y: &[DVector<T>],
    l: usize,
    dims: &Dims,
) -> Result<Verdict<T>> {
    check_dims(u, dims)?;
    let required = dims.m * l + dims.n();
    let (s0, s1) = pair(u, y, l, required)?;
    Ok(Verdict::from_pencils(
        &[pencil_rank(&s1, &s0), pencil_rank(&s0, &s1)],
        required,
        l,
    ))
}

/// `rank [H_L(u); H_L(y)] = m(L+s−1)+q`, for `L ≥ q`.
pub fn test_r_observable<T: Scalar>(
    u: &[DVector<T>],
    y: &[DVector<T>],
    l: usize,
    dims: &Dims,
) -> Result<Verdict<T>> {
    check_dims(u, dims)?;
    if l < dims.q.max(1) {
        return Err(Error::HorizonTooShort {
            l,
            min: dims.q.max(1),
        });
    }
    let required = dims.m * (l + dims.s - 1) + dims.q;
    let st = stack0(u, y, l, required)?;
    Ok(Verdict::from_rank(linalg::rank(&st), required, l))
}

/// `rank [H_L(u); H_L(y)] = n + mL`, for `L ≥ max(q, r)`.
pub fn test_c_observable<T: Scalar>(
    u: &[DVector<T>],
    y: &[DVector<T>],
    l: usize,
    dims: &Dims,
) -> Result<Verdict<T>> {
    check_dims(u, dims)?;
    let min = dims.q.max(dims.r).max(1);
    if l < min {
        return Err(Error::HorizonTooShort { l, min });
    }
    let required = dims.n() + dims.m * l;
    let st = stack0(u, y, l, required)?;
    Ok(Verdict::from_rank(linalg::rank(&st), required, l))
}

/// Which data-driven test to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    RControllable,
    CControllable,
    RObservable,
    CObservable,
}

impl Property {
    pub const ALL: [Property; 4] = [
        Property::RControllable,
        Property::CControllable,
        Property::RObservable,
        Property::CObservable,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Property::RControllable => "r_controllable",
            Property::CControllable => "c_controllable",
            Property::RObservable => "r_observable",
            Property::CObservable => "c_observable",
        }
    }

    pub fn test<T: Scalar>(
        &self,
        u: &[DVector<T>],
        y: &[DVector<T>],
        l: usize,
        dims: &Dims,
    ) -> Result<Verdict<T>> {
        match self {
            Property::RControllable => test_r_controllable(u, y, l, dims),
            Property::CControllable => test_c_controllable(u, y, l, dims),
            Property::RObservable => test_r_observable(u, y, l, dims),
            Property::CObservable => test_c_observable(u, y, l, dims),
        }
    }

    pub fn oracle<T: Scalar>(&self, qw: &QuasiWeierstrass<T>) -> bool {
        match self {
            Property::RControllable => oracle_r_controllable(qw),
            Property::CControllable => oracle_c_controllable(qw),
            Property::RObservable => oracle_r_observable(qw),
            Property::CObservable => oracle_c_observable(qw),
        }
    }

    /// Smallest horizon the test accepts.
    pub fn min_horizon(&self, dims: &Dims) -> usize {
        match self {
            Property::RControllable | Property::CControllable => 1,
            Property::RObservable => dims.q.max(1),
            Property::CObservable => dims.q.max(dims.r).max(1),
        }
    }
}

/// Result of running one test over a range of horizons.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep<T: Scalar> {
    /// Verdict at each horizon tried, in order.
    pub verdicts: Vec<Verdict<T>>,
    /// Horizons skipped because the data was too short.
    pub too_short: Vec<usize>,
    /// `true` when every horizon up to the cap was tried without confirmation.
    pub exhausted: bool,
}

impl<T: Scalar> Sweep<T> {
    pub fn confirmed_at(&self) -> Option<usize> {
        self.verdicts
            .iter()
            .find(|v| v.confirmed())
            .map(|v| v.horizon)
    }

    pub fn last(&self) -> Option<&Verdict<T>> {
        self.verdicts.last()
    }
}

/// Tries `L` from `max(1, q)` (or the test's own minimum) to `n + s`,
/// stopping at the first confirmation.
pub fn sweep<T: Scalar>(
    prop: Property,
    u: &[DVector<T>],
    y: &[DVector<T>],
    dims: &Dims,
) -> Result<Sweep<T>> {
    let lo = prop.min_horizon(dims).max(dims.q.max(1));
    let hi = (dims.n() + dims.s).max(lo);
    let mut out = Sweep {
        verdicts: Vec::new(),
        too_short: Vec::new(),
        exhausted: false,
    };
    for l in lo..=hi {
        match prop.test(u, y, l, dims) {
            Ok(v) => {
                let done = v.confirmed();
                out.verdicts.push(v);
                if done {
                    return Ok(out);
                }
            }
            Err(Error::DataTooShort(_)) => out.too_short.push(l),
            Err(e) => return Err(e),
        }
    }
    out.exhausted = true;
    Ok(out)
}

fn kalman_full<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> bool {
    let n = a.nrows();
    n == 0 || linalg::rank(&linalg::krylov(a, b, n)) == n
}

fn observable_full<T: Scalar>(a: &DMatrix<T>, c: &DMatrix<T>) -> bool {
    let n = a.nrows();
    n == 0 || linalg::rank(&linalg::observability(a, c, n)) == n
}

/// `rank [B1, A1 B1, …, A1^{q−1} B1] = q`.
pub fn oracle_r_controllable<T: Scalar>(qw: &QuasiWeierstrass<T>) -> bool {
    kalman_full(qw.a1(), qw.b1())
}

/// Slow Kalman rank `q` and fast rank `rank [B2, N B2, …, N^{r−1} B2] = r`.
pub fn oracle_c_controllable<T: Scalar>(qw: &QuasiWeierstrass<T>) -> bool {
    kalman_full(qw.a1(), qw.b1()) && kalman_full(qw.nil(), qw.b2())
}

/// `rank [C1; C1 A1; …; C1 A1^{q−1}] = q`.
pub fn oracle_r_observable<T: Scalar>(qw: &QuasiWeierstrass<T>) -> bool {
    observable_full(qw.a1(), qw.c1())
}

/// Slow observability rank `q` and fast rank `rank [C2; C2 N; …; C2 N^{r−1}] = r`.
pub fn oracle_c_observable<T: Scalar>(qw: &QuasiWeierstrass<T>) -> bool {
    observable_full(qw.a1(), qw.c1()) && observable_full(qw.nil(), qw.c2())
}

/// Eigenvalue-wise rank conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pbh {
    /// `rank [A1 − λI, B1] = q` at every eigenvalue of `A1`.
    pub slow_controllable: bool,
    /// `rank [N − λI, B2] = r` at `λ = 0`, the only eigenvalue of `N`.
    pub fast_controllable: bool,
    /// `rank [A1 − λI; C1] = q` at every eigenvalue of `A1`.
    pub slow_observable: bool,
    /// `rank [N − λI; C2] = r` at `λ = 0`.
    pub fast_observable: bool,
}

impl Pbh {
    pub fn r_controllable(&self) -> bool {
        self.slow_controllable
    }

    pub fn c_controllable(&self) -> bool {
        self.slow_controllable && self.fast_controllable
    }

    pub fn r_observable(&self) -> bool {
        self.slow_observable
    }

    pub fn c_observable(&self) -> bool {
        self.slow_observable && self.fast_observable
    }
}

// rank [A − λI, B] = n at every given λ, each refined onto the nearest true
// drop of the pencil before the rank is taken.
fn pbh_at<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, lambdas: &[Complex<T>]) -> bool {
    let n = a.nrows();
    if n == 0 {
        return true;
    }
    let m1 = linalg::hstack(&[a, b]);
    let eye = DMatrix::identity(n, n);
    let m0 = linalg::hstack(&[&eye, &DMatrix::zeros(n, b.ncols())]);
    let pen = Pencil::raw(m1, m0);
    lambdas
        .iter()
        .all(|&lam| crate::pencil::refine(&pen, lam, n).1 == n)
}

/// PBH tests at the eigenvalues of `A1` (slow) and at `λ = 0` (fast).
pub fn oracle_pbh<T: Scalar>(qw: &QuasiWeierstrass<T>) -> Pbh {
    let eig: Vec<Complex<T>> = linalg::eigenvalues(qw.a1())
        .into_iter()
        .filter(|l| l.im >= T::zero())
        .collect();
    let zero = [Complex::new(T::zero(), T::zero())];
    let (a1t, c1t) = (qw.a1().transpose(), qw.c1().transpose());
    let (nt, c2t) = (qw.nil().transpose(), qw.c2().transpose());
    Pbh {
        slow_controllable: pbh_at(qw.a1(), qw.b1(), &eig),
        fast_controllable: pbh_at(qw.nil(), qw.b2(), &zero),
        slow_observable: pbh_at(&a1t, &c1t, &eig),
        fast_observable: pbh_at(&nt, &c2t, &zero),
    }
}

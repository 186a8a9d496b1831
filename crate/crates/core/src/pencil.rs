//! Rank of a matrix pencil `M1 − λ M0` over all complex `λ`.
//!
//! The normal rank is read off at a few seeded real probes. The rank can only
//! drop at the finite eigenvalues of the pencil's regular part; those are
//! located through a square compression and then refined on the full pencil
//! with a Rayleigh-quotient iteration so that the drop is visible at working
//! precision.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::svd::Svd;
use crate::Scalar;

pub const PROBE_SEED: u64 = 0x9e37_79b9;
pub const NORMAL_PROBES: usize = 3;
const REFINE_STEPS: usize = 6;
// σ_ρ / σ_max below which a candidate is refined before its rank is trusted
const SUSPECT: f64 = 1e-6;

/// Result of [`pencil_rank`].
#[derive(Debug, Clone, PartialEq)]
pub struct PencilRank<T: Scalar> {
    pub normal_rank: usize,
    /// `λ` with the rank found there, for `λ` where it is below the normal rank.
    pub exceptional: Vec<(Complex<T>, usize)>,
    /// Every `λ` that was examined, with its rank.
    pub probes: Vec<(Complex<T>, usize)>,
}

impl<T: Scalar> PencilRank<T> {
    /// Smallest rank over every examined `λ`.
    pub fn min_rank(&self) -> usize {
        self.probes
            .iter()
            .map(|p| p.1)
            .min()
            .unwrap_or(self.normal_rank)
            .min(self.normal_rank)
    }
}

// [[Re, −Im], [Im, Re]]: a real matrix whose singular values are those of
// Re + i Im, each repeated twice.
fn embed<T: Scalar>(re: &DMatrix<T>, im: &DMatrix<T>) -> DMatrix<T> {
    let neg = -im;
    let top = linalg::hstack(&[re, &neg]);
    let bot = linalg::hstack(&[im, re]);
    linalg::vstack(&[&top, &bot])
}

fn at<T: Scalar>(m1: &DMatrix<T>, m0: &DMatrix<T>, lam: Complex<T>) -> (DMatrix<T>, DMatrix<T>) {
    (m1 - m0 * lam.re, m0 * (-lam.im))
}

fn cabs<T: Scalar>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

fn is_real<T: Scalar>(lam: Complex<T>) -> bool {
    lam.im == T::zero()
}

/// Rank of `M1 − λ M0` at a single complex `λ`, with the shared tolerance.
pub fn rank_at<T: Scalar>(m1: &DMatrix<T>, m0: &DMatrix<T>, lam: Complex<T>) -> usize {
    let (re, im) = at(m1, m0, lam);
    if is_real(lam) {
        return linalg::rank(&re);
    }
    linalg::rank(&embed(&re, &im)) / 2
}

// Singular triple number `idx` (0-based) of the complex matrix, as
// (σ, u_re, u_im, v_re, v_im), together with the rank of the matrix.
type Triple<T> = (T, DVector<T>, DVector<T>, DVector<T>, DVector<T>);

/// Pencil halves with the shape that sets the rank tolerance. After an
/// isometric compression the halves are smaller than that shape.
pub(crate) struct Pencil<T: Scalar> {
    m1: DMatrix<T>,
    m0: DMatrix<T>,
    tol_shape: (usize, usize),
}

impl<T: Scalar> Pencil<T> {
    pub(crate) fn raw(m1: DMatrix<T>, m0: DMatrix<T>) -> Self {
        let tol_shape = m1.shape();
        Self { m1, m0, tol_shape }
    }

    // Restricts to the column space of [M1 M0] and the row space of
    // [M1; M0]; every M1 − λ M0 keeps its singular values.
    fn compressed(m1: &DMatrix<T>, m0: &DMatrix<T>) -> Self {
        let tol_shape = m1.shape();
        let left = linalg::orth(&linalg::hstack(&[m1, m0]));
        let right = linalg::orth(&linalg::hstack(&[&m1.transpose(), &m0.transpose()]));
        let lt = left.transpose();
        Self {
            m1: &lt * m1 * &right,
            m0: &lt * m0 * &right,
            tol_shape,
        }
    }
}

fn examine_at<T: Scalar>(
    p: &Pencil<T>,
    lam: Complex<T>,
    idx: usize,
) -> (usize, T, Option<Triple<T>>) {
    let (re, im) = at(&p.m1, &p.m0, lam);
    let (rows, cols) = re.shape();
    let (tr, tc) = p.tol_shape;
    if is_real(lam) {
        let svd = Svd::new(&re);
        let rank = count(&svd.sigma, tr, tc);
        let smax = svd.sigma.first().copied().unwrap_or(T::zero());
        let t = (idx < svd.sigma.len()).then(|| {
            let (u, v) = (
                svd.u.column(idx).into_owned(),
                svd.v.column(idx).into_owned(),
            );
            (
                svd.sigma[idx],
                u,
                DVector::zeros(rows),
                v,
                DVector::zeros(cols),
            )
        });
        return (rank, smax, t);
    }
    let svd = Svd::new(&embed(&re, &im));
    let rank = count(&svd.sigma, 2 * tr, 2 * tc) / 2;
    let smax = svd.sigma.first().copied().unwrap_or(T::zero());
    let k = 2 * idx;
    let t = (k < svd.sigma.len()).then(|| {
        let u = svd.u.column(k);
        let v = svd.v.column(k);
        (
            svd.sigma[k],
            u.rows(0, rows).into_owned(),
            u.rows(rows, rows).into_owned(),
            v.rows(0, cols).into_owned(),
            v.rows(cols, cols).into_owned(),
        )
    });
    (rank, smax, t)
}

fn count<T: Scalar>(sv: &[T], rows: usize, cols: usize) -> usize {
    let Some(&smax) = sv.first() else { return 0 };
    if smax <= T::zero() {
        return 0;
    }
    let tol = linalg::rank_threshold(rows, cols, smax);
    sv.iter().filter(|&&x| x > tol).count()
}

// uᴴ X v for real X and complex u, v.
fn bilinear<T: Scalar>(x: &DMatrix<T>, t: &Triple<T>) -> Complex<T> {
    let (_, ur, ui, vr, vi) = t;
    let xr = x * vr;
    let xi = x * vi;
    let re = ur.dot(&xr) + ui.dot(&xi);
    let im = ur.dot(&xi) - ui.dot(&xr);
    Complex::new(re, im)
}

/// Rank of the pencil near `start`. When the `ρ`-th singular value is small
/// the point is moved by Rayleigh-quotient steps toward the nearest `λ` where
/// it vanishes; the smallest rank met on the way is returned with its `λ`.
pub(crate) fn refine<T: Scalar>(
    p: &Pencil<T>,
    start: Complex<T>,
    rho: usize,
) -> (Complex<T>, usize) {
    let (m1, m0) = (&p.m1, &p.m0);
    let mut lam = start;
    let mut best = (start, usize::MAX);
    for _ in 0..REFINE_STEPS {
        let (rank, smax, t) = examine_at(p, lam, rho - 1);
        if rank < best.1 {
            best = (lam, rank);
        }
        let Some(t) = t else { break };
        if rank < rho || t.0 > T::lit(SUSPECT) * smax {
            break;
        }
        let den = bilinear(m0, &t);
        if cabs(den) <= T::machine_eps() * linalg::frobenius(m0) {
            break;
        }
        let mut next = bilinear(m1, &t) / den;
        if next.im.abs() <= T::lit(1e3) * T::machine_eps() * (T::one() + next.re.abs()) {
            next.im = T::zero();
        }
        if !(next.re.is_finite() && next.im.is_finite()) || next == lam {
            break;
        }
        lam = next;
    }
    best
}

/// Candidate drop points: eigenvalues of the pencil compressed onto the
/// dominant singular subspaces of `M1 − λ0 M0`.
fn candidates<T: Scalar>(p: &Pencil<T>, lam0: T, rho: usize) -> Vec<Complex<T>> {
    let (m1, m0) = (&p.m1, &p.m0);
    let svd = Svd::new(&(m1 - m0 * lam0));
    if rho == 0 || svd.sigma.len() < rho || svd.sigma[rho - 1] == T::zero() {
        return Vec::new();
    }
    let u = svd.u.columns(0, rho);
    let v = svd.v.columns(0, rho);
    // (A − λ0 B) = Σ_ρ, so the eigenvalues θ of Σ_ρ⁻¹ B give λ = λ0 + 1/θ
    let mut k = u.transpose() * m0 * v;
    for i in 0..rho {
        let inv = T::one() / svd.sigma[i];
        k.row_mut(i).scale_mut(inv);
    }
    let floor = T::lit(16.0) * T::machine_eps() * linalg::frobenius(&k);
    let mut out: Vec<Complex<T>> = linalg::eigenvalues(&k)
        .into_iter()
        .filter(|th| cabs(*th) > floor)
        .map(|th| Complex::new(lam0, T::zero()) + Complex::new(T::one(), T::zero()) / th)
        .filter(|l| l.im >= T::zero())
        .collect();
    out.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

/// Normal rank of `M1 − λ M0` and every finite `λ` at which it drops.
pub fn pencil_rank<T: Scalar>(m1: &DMatrix<T>, m0: &DMatrix<T>) -> PencilRank<T> {
    assert_eq!(m1.shape(), m0.shape(), "pencil halves differ in shape");
    let pen = Pencil::compressed(m1, m0);
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let draws: Vec<T> = (0..NORMAL_PROBES)
        .map(|_| T::lit(rng.random_range(-2.0..2.0)))
        .collect();
    let mut probes: Vec<(Complex<T>, usize)> = draws
        .iter()
        .map(|&l| {
            let c = Complex::new(l, T::zero());
            (c, examine_at(&pen, c, 0).0)
        })
        .collect();
    let (best, normal_rank) = probes
        .iter()
        .max_by_key(|p| p.1)
        .map(|p| (p.0.re, p.1))
        .unwrap_or((T::zero(), 0));

    let mut exceptional: Vec<(Complex<T>, usize)> = probes
        .iter()
        .filter(|p| p.1 < normal_rank)
        .copied()
        .collect();
    for cand in candidates(&pen, best, normal_rank) {
        let (lam, rk) = refine(&pen, cand, normal_rank);
        probes.push((lam, rk));
        if rk < normal_rank {
            exceptional.push((lam, rk));
        }
    }
    PencilRank {
        normal_rank,
        exceptional,
        probes,
    }
}

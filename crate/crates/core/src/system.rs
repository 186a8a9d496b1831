//! Descriptor systems `E x(k+1) = A x(k) + B u(k)`, `y = C x + D u`, and their
//! quasi-Weierstraß decomposition into a slow (causal) and a fast (nilpotent)
//! subsystem.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, block_diag, hstack, null_space_abs, orth_abs, vstack};
use crate::Scalar;

const REGULARITY_SEED: u64 = 0x5eed_d35c;

/// Subspace steps of the Wong iteration drop singular values below
/// `WONG_TOL_FACTOR · n · ε · max(‖E‖, ‖A‖)`.
pub const WONG_TOL_FACTOR: f64 = 1e4;

/// Regular descriptor system `(E, A, B, C, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSystem<T: Scalar> {
    e: DMatrix<T>,
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
    lambda_star: T,
}

impl<T: Scalar> DescriptorSystem<T> {
    /// Validates dimensions and certifies regularity of the pencil `(E, A)`.
    ///
    /// The pencil is probed at `0, ±1, ±2`, a real grid of `2n + 1` points on
    /// `[-3, 3]` and one seeded uniform draw. A regular pencil is singular at no
    /// more than `n` values of λ, so at least one probe is nonsingular. The best
    /// conditioned probe is kept as the certificate `λ*`.
    pub fn new(
        e: DMatrix<T>,
        a: DMatrix<T>,
        b: DMatrix<T>,
        c: DMatrix<T>,
        d: DMatrix<T>,
    ) -> Result<Self> {
        let n = e.nrows();
        let m = b.ncols();
        let p = c.nrows();
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "state dimension must be positive".into(),
            ));
        }
        let checks = [
            (e.shape(), (n, n), "E"),
            (a.shape(), (n, n), "A"),
            (b.shape(), (n, m), "B"),
            (c.shape(), (p, n), "C"),
            (d.shape(), (p, m), "D"),
        ];
        for (got, want, name) in checks {
            if got != want {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        let lambda_star = certify_regular(&e, &a)?;
        Ok(Self {
            e,
            a,
            b,
            c,
            d,
            lambda_star,
        })
    }

    pub fn e(&self) -> &DMatrix<T> {
        &self.e
    }
    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }
    /// State dimension `n`.
    pub fn n(&self) -> usize {
        self.e.nrows()
    }
    /// Input dimension `m`.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    /// Output dimension `p`.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }
    /// A λ with `det(λE − A) ≠ 0`.
    pub fn lambda_star(&self) -> T {
        self.lambda_star
    }

    pub fn quasi_weierstrass(&self) -> Result<QuasiWeierstrass<T>> {
        quasi_weierstrass(self)
    }

    /// Largest absolute entry across all five matrices, at least one.
    pub fn scale(&self) -> T {
        [&self.e, &self.a, &self.b, &self.c, &self.d]
            .iter()
            .fold(T::one(), |acc, m| acc.max(linalg::max_abs(m)))
    }
}

fn pencil_rank<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>, lambda: T) -> (usize, T) {
    let m = e * lambda - a;
    let sv = linalg::singular_values(&m);
    let r = linalg::rank(&m);
    let cond = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > T::zero() => lo / hi,
        _ => T::zero(),
    };
    (r, cond)
}

fn certify_regular<T: Scalar>(e: &DMatrix<T>, a: &DMatrix<T>) -> Result<T> {
    let n = e.nrows();
    let mut probes: Vec<f64> = vec![0.0, 1.0, -1.0, 2.0, -2.0];
    let pts = 2 * n + 1;
    for j in 0..pts {
        probes.push(-3.0 + 6.0 * j as f64 / (pts - 1).max(1) as f64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(REGULARITY_SEED);
    probes.push(rng.random_range(-3.0..3.0));

    let mut best: Option<(T, T)> = None;
    for &lam in &probes {
        let lam = T::lit(lam);
        let (r, cond) = pencil_rank(e, a, lam);
        if r == n && best.is_none_or(|(_, c)| cond > c) {
            best = Some((lam, cond));
        }
    }
    best.map(|(l, _)| l).ok_or(Error::SingularPencil)
}

/// Quasi-Weierstraß form `S E P = diag(I_q, N)`, `S A P = diag(A1, I_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiWeierstrass<T: Scalar> {
    a1: DMatrix<T>,
    nil: DMatrix<T>,
    b1: DMatrix<T>,
    b2: DMatrix<T>,
    c1: DMatrix<T>,
    c2: DMatrix<T>,
    d: DMatrix<T>,
    s_mat: DMatrix<T>,
    p_mat: DMatrix<T>,
    s_index: usize,
}

impl<T: Scalar> QuasiWeierstrass<T> {
    /// Builds a decomposition directly from its blocks with `S = P = I`.
    pub fn from_blocks(
        a1: DMatrix<T>,
        nil: DMatrix<T>,
        b1: DMatrix<T>,
        b2: DMatrix<T>,
        c1: DMatrix<T>,
        c2: DMatrix<T>,
        d: DMatrix<T>,
    ) -> Result<Self> {
        let n = a1.nrows() + nil.nrows();
        Self::with_transforms(
            a1,
            nil,
            b1,
            b2,
            c1,
            c2,
            d,
            DMatrix::identity(n, n),
            DMatrix::identity(n, n),
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_transforms(
        a1: DMatrix<T>,
        nil: DMatrix<T>,
        b1: DMatrix<T>,
        b2: DMatrix<T>,
        c1: DMatrix<T>,
        c2: DMatrix<T>,
        d: DMatrix<T>,
        s_mat: DMatrix<T>,
        p_mat: DMatrix<T>,
    ) -> Result<Self> {
        let q = a1.nrows();
        let r = nil.nrows();
        let m = d.ncols();
        let p = d.nrows();
        let n = q + r;
        let checks = [
            (a1.shape(), (q, q), "A1"),
            (nil.shape(), (r, r), "N"),
            (b1.shape(), (q, m), "B1"),
            (b2.shape(), (r, m), "B2"),
            (c1.shape(), (p, q), "C1"),
            (c2.shape(), (p, r), "C2"),
            (s_mat.shape(), (n, n), "S"),
            (p_mat.shape(), (n, n), "P"),
        ];
        for (got, want, name) in checks {
            if got != want {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "state dimension must be positive".into(),
            ));
        }
        let s_index = nilpotency_index(&nil)?;
        Ok(Self {
            a1,
            nil,
            b1,
            b2,
            c1,
            c2,
            d,
            s_mat,
            p_mat,
            s_index,
        })
    }

    pub fn a1(&self) -> &DMatrix<T> {
        &self.a1
    }
    /// Nilpotent block `N` of the fast subsystem.
    pub fn nil(&self) -> &DMatrix<T> {
        &self.nil
    }
    pub fn b1(&self) -> &DMatrix<T> {
        &self.b1
    }
    pub fn b2(&self) -> &DMatrix<T> {
        &self.b2
    }
    pub fn c1(&self) -> &DMatrix<T> {
        &self.c1
    }
    pub fn c2(&self) -> &DMatrix<T> {
        &self.c2
    }
    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }
    /// Left transform `S`.
    pub fn s_mat(&self) -> &DMatrix<T> {
        &self.s_mat
    }
    /// Right transform `P`; physical state `x = P z`.
    pub fn p_mat(&self) -> &DMatrix<T> {
        &self.p_mat
    }
    /// Slow dimension.
    pub fn q(&self) -> usize {
        self.a1.nrows()
    }
    /// Fast dimension.
    pub fn r(&self) -> usize {
        self.nil.nrows()
    }
    /// Nilpotency index (1 when the fast part is empty).
    pub fn s(&self) -> usize {
        self.s_index
    }
    pub fn n(&self) -> usize {
        self.q() + self.r()
    }
    pub fn m(&self) -> usize {
        self.d.ncols()
    }
    pub fn p(&self) -> usize {
        self.d.nrows()
    }

    /// Maps the decomposition back to `(E, A, B, C, D)` in physical coordinates.
    pub fn reconstruct(&self) -> Result<DescriptorSystem<T>> {
        let s_inv = self
            .s_mat
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("S".into()))?;
        let p_inv = self
            .p_mat
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("P".into()))?;
        let (ee, aa) = self.canonical_pencil();
        let e = &s_inv * ee * &p_inv;
        let a = &s_inv * aa * &p_inv;
        let b = &s_inv * vstack(&[&self.b1, &self.b2]);
        let c = hstack(&[&self.c1, &self.c2]) * &p_inv;
        DescriptorSystem::new(e, a, b, c, self.d.clone())
    }

    /// `(diag(I_q, N), diag(A1, I_r))`.
    pub fn canonical_pencil(&self) -> (DMatrix<T>, DMatrix<T>) {
        let iq = DMatrix::identity(self.q(), self.q());
        let ir = DMatrix::identity(self.r(), self.r());
        (block_diag(&[&iq, &self.nil]), block_diag(&[&self.a1, &ir]))
    }

    /// The system in its own coordinates (`S = P = I`).
    pub fn canonical_system(&self) -> Result<DescriptorSystem<T>> {
        let (e, a) = self.canonical_pencil();
        DescriptorSystem::new(
            e,
            a,
            vstack(&[&self.b1, &self.b2]),
            hstack(&[&self.c1, &self.c2]),
            self.d.clone(),
        )
    }

    /// Relative residuals of the four defining identities against `sys`.
    pub fn residuals(&self, sys: &DescriptorSystem<T>) -> DecompositionResiduals<T> {
        let (ee, aa) = self.canonical_pencil();
        let sp = |m: &DMatrix<T>| &self.s_mat * m * &self.p_mat;
        let rel = |num: T, den: T| num / den.max(T::one());
        let sn = linalg::frobenius(&self.s_mat).max(T::one());
        let pn = linalg::frobenius(&self.p_mat).max(T::one());
        let nil_pow = linalg::frobenius(&linalg::mat_pow(&self.nil, self.s_index));
        DecompositionResiduals {
            e: rel(
                linalg::frobenius(&(sp(sys.e()) - ee)),
                sn * pn * linalg::frobenius(sys.e()),
            ),
            a: rel(
                linalg::frobenius(&(sp(sys.a()) - aa)),
                sn * pn * linalg::frobenius(sys.a()),
            ),
            b: rel(
                linalg::frobenius(&(&self.s_mat * sys.b() - vstack(&[&self.b1, &self.b2]))),
                sn * linalg::frobenius(sys.b()),
            ),
            c: rel(
                linalg::frobenius(&(sys.c() * &self.p_mat - hstack(&[&self.c1, &self.c2]))),
                pn * linalg::frobenius(sys.c()),
            ),
            nilpotent: nil_pow,
        }
    }
}

/// Residuals reported by [`QuasiWeierstrass::residuals`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionResiduals<T> {
    pub e: T,
    pub a: T,
    pub b: T,
    pub c: T,
    pub nilpotent: T,
}

impl<T: Scalar> DecompositionResiduals<T> {
    pub fn max(&self) -> T {
        self.e
            .max(self.a)
            .max(self.b)
            .max(self.c)
            .max(self.nilpotent)
    }
}

/// Preimage `{x : M x ∈ Im(U)}` for an orthonormal `U`.
fn preimage<T: Scalar>(m: &DMatrix<T>, u: &DMatrix<T>, tol: T) -> DMatrix<T> {
    let n = m.nrows();
    if u.ncols() == n {
        return DMatrix::identity(m.ncols(), m.ncols());
    }
    let proj = DMatrix::identity(n, n) - u * u.transpose();
    null_space_abs(&(proj * m), tol)
}

// Absolute cut-off for subspace steps on a pencil with reference norm `scale`.
fn wong_tolerance<T: Scalar>(n: usize, scale: T) -> T {
    T::lit(WONG_TOL_FACTOR) * T::from_usize_lossy(n) * T::machine_eps() * scale
}

/// Computes the quasi-Weierstraß form through the Wong sequences
/// `V_{i+1} = A⁻¹(E V_i)` (from `V_0 = ℝⁿ`) and `W_{i+1} = E⁻¹(A W_i)`
/// (from `W_0 = {0}`). With `P = [V*, W*]` and `S = [E V*, A W*]⁻¹` the pencil
/// becomes block diagonal.
pub fn quasi_weierstrass<T: Scalar>(sys: &DescriptorSystem<T>) -> Result<QuasiWeierstrass<T>> {
    let n = sys.n();
    let (e, a) = (sys.e(), sys.a());

    let scale = linalg::frobenius(e).max(linalg::frobenius(a));
    let tol = wong_tolerance(n, scale);
    let mut v = DMatrix::<T>::identity(n, n);
    let mut converged = false;
    for _ in 0..=n {
        let next = preimage(a, &orth_abs(&(e * &v), tol), tol);
        let done = next.ncols() == v.ncols();
        v = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure(n + 1));
    }

    let mut w = DMatrix::<T>::zeros(n, 0);
    converged = false;
    for _ in 0..=n {
        let next = preimage(e, &orth_abs(&(a * &w), tol), tol);
        let done = next.ncols() == w.ncols();
        w = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure(n + 1));
    }

    let q = v.ncols();
    let r = w.ncols();
    if q + r != n {
        return Err(Error::ConvergenceFailure(n + 1));
    }

    let p_mat = hstack(&[&v, &w]);
    let s_mat = hstack(&[&(e * &v), &(a * &w)])
        .try_inverse()
        .ok_or_else(|| Error::Singular("[E V*, A W*]".into()))?;

    let sap = &s_mat * a * &p_mat;
    let sep = &s_mat * e * &p_mat;
    let sb = &s_mat * sys.b();
    let cp = sys.c() * &p_mat;
    let m = sys.m();
    let p = sys.p();

    let a1 = sap.view((0, 0), (q, q)).into_owned();
    let mut nil = sep.view((q, q), (r, r)).into_owned();
    clean_nilpotent(&mut nil);
    let b1 = sb.view((0, 0), (q, m)).into_owned();
    let b2 = sb.view((q, 0), (r, m)).into_owned();
    let c1 = cp.view((0, 0), (p, q)).into_owned();
    let c2 = cp.view((0, q), (p, r)).into_owned();

    QuasiWeierstrass::with_transforms(a1, nil, b1, b2, c1, c2, sys.d().clone(), s_mat, p_mat)
}

// Entries at rounding level are flushed so that N^s vanishes to working precision.
fn clean_nilpotent<T: Scalar>(nil: &mut DMatrix<T>) {
    let scale = linalg::max_abs(nil).max(T::one());
    let tol = T::lit(64.0) * T::machine_eps() * scale * T::from_usize_lossy(nil.nrows().max(1));
    for x in nil.iter_mut() {
        if x.abs() <= tol {
            *x = T::zero();
        }
    }
}

/// Smallest `s ≥ 1` with `N^s = 0` within tolerance (`s = 1` for an empty block).
pub fn nilpotency_index<T: Scalar>(nil: &DMatrix<T>) -> Result<usize> {
    let r = nil.nrows();
    if nil.ncols() != r {
        return Err(Error::DimensionMismatch(
            "nilpotent block must be square".into(),
        ));
    }
    if r == 0 {
        return Ok(1);
    }
    let scale = linalg::frobenius(nil).max(T::one());
    let base = T::lit(1e3) * T::machine_eps() * T::from_usize_lossy(r);
    let mut pow = nil.clone();
    let mut scale_pow = scale;
    for s in 1..=r {
        if linalg::frobenius(&pow) <= base * scale_pow {
            return Ok(s);
        }
        pow = &pow * nil;
        scale_pow *= scale;
    }
    Err(Error::NotNilpotent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn identity_e_is_regular() {
        let sys = DescriptorSystem::<f64>::new(
            DMatrix::identity(3, 3),
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 3),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(sys.lambda_star() != 0.0);
    }

    #[test]
    fn zero_pencil_is_singular() {
        let r = DescriptorSystem::new(
            m(1, 1, &[0.0]),
            m(1, 1, &[0.0]),
            m(1, 1, &[1.0]),
            m(1, 1, &[1.0]),
            m(1, 1, &[0.0]),
        );
        assert_eq!(r.unwrap_err(), Error::SingularPencil);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let r = DescriptorSystem::new(
            DMatrix::<f64>::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn standard_system_has_empty_fast_part() {
        let a = m(2, 2, &[0.5, 1.0, 0.0, 0.3]);
        let sys = DescriptorSystem::<f64>::new(
            DMatrix::identity(2, 2),
            a,
            m(2, 1, &[0.0, 1.0]),
            m(1, 2, &[1.0, 0.0]),
            m(1, 1, &[0.0]),
        )
        .unwrap();
        let qw = sys.quasi_weierstrass().unwrap();
        assert_eq!((qw.q(), qw.r(), qw.s()), (2, 0, 1));
        let mut ev: Vec<f64> = linalg::eigenvalues(qw.a1()).iter().map(|c| c.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - 0.3).abs() < 1e-12 && (ev[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pure_fast_pencil() {
        // E = [[0,1],[0,0]], A = I
        let sys = DescriptorSystem::new(
            m(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::identity(2, 2),
            m(2, 1, &[0.0, 1.0]),
            m(1, 2, &[1.0, 0.0]),
            m(1, 1, &[0.0]),
        )
        .unwrap();
        let qw = sys.quasi_weierstrass().unwrap();
        assert_eq!((qw.q(), qw.r(), qw.s()), (0, 2, 2));
        // direct check of S E P = N, S A P = I
        let sep = qw.s_mat() * sys.e() * qw.p_mat();
        let sap = qw.s_mat() * sys.a() * qw.p_mat();
        assert!((sep - qw.nil()).norm() < 1e-12);
        assert!((sap - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(qw.nil().norm() > 0.5);
        assert!((qw.nil() * qw.nil()).norm() < 1e-12);
    }

    #[test]
    fn nilpotency_examples() {
        assert_eq!(nilpotency_index(&DMatrix::<f64>::zeros(3, 3)).unwrap(), 1);
        let shift = m(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(nilpotency_index(&shift).unwrap(), 3);
        assert_eq!(nilpotency_index(&DMatrix::<f64>::zeros(0, 0)).unwrap(), 1);
        assert_eq!(
            nilpotency_index(&DMatrix::<f64>::identity(2, 2)).unwrap_err(),
            Error::NotNilpotent
        );
    }

    #[test]
    fn reconstruct_identity_decomposition() {
        let qw = QuasiWeierstrass::from_blocks(
            m(1, 1, &[0.9]),
            DMatrix::zeros(0, 0),
            m(1, 1, &[1.0]),
            DMatrix::zeros(0, 1),
            m(1, 1, &[2.0]),
            DMatrix::zeros(1, 0),
            m(1, 1, &[0.0]),
        )
        .unwrap();
        let sys = qw.reconstruct().unwrap();
        assert_eq!(sys.e(), &DMatrix::identity(1, 1));
        assert_eq!(sys.a(), &m(1, 1, &[0.9]));
        assert_eq!(sys.c(), &m(1, 1, &[2.0]));
    }

    #[test]
    fn decomposition_in_single_precision() {
        let sys = DescriptorSystem::<f32>::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let qw = sys.quasi_weierstrass().unwrap();
        assert_eq!((qw.q(), qw.r(), qw.s()), (1, 1, 1));
        assert!(qw.residuals(&sys).max() < 1e-5);
    }
}

//! Seeded random descriptor systems with planted structure.
//!
//! Used by the test suites and the CLI fixtures. Controllability and
//! observability defects are planted exactly in the quasi-Weierstraß
//! coordinates, so the model-based oracles see exact zero patterns.

use nalgebra::DMatrix;
use rand::Rng;

use crate::linalg;
use crate::system::{DescriptorSystem, QuasiWeierstrass};

/// Shape and planted properties of a random instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub q: usize,
    pub r: usize,
    /// Nilpotency index of the fast block (ignored when `r = 0`).
    pub s: usize,
    pub m: usize,
    pub p: usize,
    /// Number of slow directions no input reaches.
    pub slow_uncontrollable: usize,
    /// Number of slow directions invisible at the output.
    pub slow_unobservable: usize,
    /// Cut the input from one Jordan block of `N`.
    pub fast_uncontrollable: bool,
    /// Hide one Jordan block of `N` from the output.
    pub fast_unobservable: bool,
    /// Apply random (non-orthogonal) coordinate changes inside the slow and fast blocks.
    pub mix_coordinates: bool,
}

impl GenSpec {
    pub fn new(q: usize, r: usize, s: usize, m: usize, p: usize) -> Self {
        Self {
            q,
            r,
            s: if r == 0 { 1 } else { s.clamp(1, r) },
            m,
            p,
            slow_uncontrollable: 0,
            slow_unobservable: 0,
            fast_uncontrollable: false,
            fast_unobservable: false,
            mix_coordinates: true,
        }
    }

    pub fn n(&self) -> usize {
        self.q + self.r
    }
}

pub fn uniform_matrix<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// `I + scale · U(-1, 1)`, rejected until its condition number is below 1e3.
pub fn well_conditioned<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DMatrix<f64> {
    loop {
        let m = DMatrix::identity(n, n) + uniform_matrix(rng, n, n, -scale, scale);
        let sv = linalg::singular_values(&m);
        if n == 0 || sv[n - 1] > sv[0] * 1e-3 {
            return m;
        }
    }
}

/// Random matrix rescaled to spectral radius `rho`.
pub fn with_spectral_radius<R: Rng>(rng: &mut R, n: usize, rho: f64) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let m = uniform_matrix(rng, n, n, -1.0, 1.0);
    let cur = linalg::eigenvalues(&m)
        .iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    if cur < 1e-6 {
        return DMatrix::identity(n, n) * rho;
    }
    m * (rho / cur)
}

/// Jordan block sizes for a nilpotent matrix of size `r` and index `s`.
pub fn jordan_sizes(r: usize, s: usize) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut left = r;
    while left > 0 {
        let k = left.min(s);
        sizes.push(k);
        left -= k;
    }
    sizes
}

fn jordan_nilpotent(sizes: &[usize]) -> DMatrix<f64> {
    let r: usize = sizes.iter().sum();
    let mut nil = DMatrix::zeros(r, r);
    let mut off = 0;
    for &k in sizes {
        for i in 0..k.saturating_sub(1) {
            nil[(off + i, off + i + 1)] = 1.0;
        }
        off += k;
    }
    nil
}

/// Random quasi-Weierstraß form with the planted properties of `spec`.
pub fn random_qw<R: Rng>(rng: &mut R, spec: &GenSpec) -> QuasiWeierstrass<f64> {
    let GenSpec { q, r, m, p, .. } = *spec;
    let s = if r == 0 { 1 } else { spec.s.clamp(1, r) };

    // slow part: [g1 | g2 (uncontrollable) | g3 (unobservable)]
    let unc = spec.slow_uncontrollable.min(q);
    let uno = spec.slow_unobservable.min(q - unc);
    let g1 = q - unc - uno;
    let mut a1 = DMatrix::zeros(q, q);
    for (off, k) in [(0, g1), (g1, unc), (g1 + unc, uno)] {
        let rho = rng.random_range(0.5..0.95);
        let blk = with_spectral_radius(rng, k, rho);
        a1.view_mut((off, off), (k, k)).copy_from(&blk);
    }
    // g2 may drive g1; g1 may drive g3
    if unc > 0 && g1 > 0 {
        let cpl = uniform_matrix(rng, g1, unc, -0.3, 0.3);
        a1.view_mut((0, g1), (g1, unc)).copy_from(&cpl);
    }
    if uno > 0 && g1 > 0 {
        let cpl = uniform_matrix(rng, uno, g1, -0.3, 0.3);
        a1.view_mut((g1 + unc, 0), (uno, g1)).copy_from(&cpl);
    }
    let mut b1 = uniform_matrix(rng, q, m, -1.0, 1.0);
    for i in g1..g1 + unc {
        b1.row_mut(i).fill(0.0);
    }
    let mut c1 = uniform_matrix(rng, p, q, -1.0, 1.0);
    for j in g1 + unc..q {
        c1.column_mut(j).fill(0.0);
    }

    // fast part
    let sizes = jordan_sizes(r, s);
    let mut nil = jordan_nilpotent(&sizes);
    let mut b2 = uniform_matrix(rng, r, m, -1.0, 1.0);
    let mut c2 = uniform_matrix(rng, p, r, -1.0, 1.0);
    if r > 0 && spec.fast_uncontrollable {
        let k = sizes[0];
        for i in 0..k {
            b2.row_mut(i).fill(0.0);
        }
    }
    if r > 0 && spec.fast_unobservable {
        let k = *sizes.last().unwrap();
        for j in r - k..r {
            c2.column_mut(j).fill(0.0);
        }
    }
    let d = uniform_matrix(rng, p, m, -0.5, 0.5);

    if spec.mix_coordinates {
        let ts = well_conditioned(rng, q, 0.3);
        let ts_inv = ts.clone().try_inverse().expect("conditioned");
        a1 = &ts * a1 * &ts_inv;
        b1 = &ts * b1;
        c1 *= &ts_inv;
        let tf = well_conditioned(rng, r, 0.3);
        let tf_inv = tf.clone().try_inverse().expect("conditioned");
        nil = &tf * nil * &tf_inv;
        b2 = &tf * b2;
        c2 *= &tf_inv;
    }

    QuasiWeierstrass::from_blocks(a1, nil, b1, b2, c1, c2, d).expect("consistent blocks")
}

/// Random descriptor system in physical coordinates together with the exact
/// decomposition it was generated from.
pub fn random_descriptor<R: Rng>(
    rng: &mut R,
    spec: &GenSpec,
) -> (DescriptorSystem<f64>, QuasiWeierstrass<f64>) {
    let qw = random_qw(rng, spec);
    let n = spec.n();
    let s_mat = well_conditioned(rng, n, 0.5);
    let p_mat = well_conditioned(rng, n, 0.5);
    let truth = QuasiWeierstrass::with_transforms(
        qw.a1().clone(),
        qw.nil().clone(),
        qw.b1().clone(),
        qw.b2().clone(),
        qw.c1().clone(),
        qw.c2().clone(),
        qw.d().clone(),
        s_mat,
        p_mat,
    )
    .expect("consistent blocks");
    let sys = truth.reconstruct().expect("invertible transforms");
    (sys, truth)
}

/// Random `GenSpec` with `1 ≤ n ≤ max_n` and mixed slow/fast split.
pub fn random_spec<R: Rng>(rng: &mut R, max_n: usize, max_m: usize, max_p: usize) -> GenSpec {
    let n = rng.random_range(1..=max_n);
    let r = rng.random_range(0..=n);
    let s = if r == 0 { 1 } else { rng.random_range(1..=r) };
    let m = rng.random_range(1..=max_m);
    let p = rng.random_range(1..=max_p);
    GenSpec::new(n - r, r, s, m, p)
}

/// I.i.d. uniform input sequence on `[-1, 1]^m`.
pub fn random_input<R: Rng>(rng: &mut R, m: usize, len: usize) -> Vec<nalgebra::DVector<f64>> {
    (0..len)
        .map(|_| nalgebra::DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)))
        .collect()
}

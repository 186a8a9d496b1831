//! Trajectory generation for descriptor systems in quasi-Weierstraß
//! coordinates.
//!
//! The slow states follow the usual forward recursion. The fast states depend
//! on future inputs, `z2(k) = −Σ_{j<s} N^j B2 u(k+j)`, so an input of length
//! `T` determines states and outputs only on `0..=T−s`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, vec_max_abs};
use crate::system::{DescriptorSystem, QuasiWeierstrass};
use crate::Scalar;

/// Input/state/output samples of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Scalar> {
    /// Inputs `u(0..T)`.
    pub u: Vec<DVector<T>>,
    /// Slow states `z1(0..=T−s)`.
    pub z1: Vec<DVector<T>>,
    /// Fast states `z2(0..=T−s)`.
    pub z2: Vec<DVector<T>>,
    /// Outputs `y(0..=T−s)`.
    pub y: Vec<DVector<T>>,
    /// Physical states `x = P z`, filled by [`Trajectory::with_states`].
    pub x: Option<Vec<DVector<T>>>,
    /// Nilpotency index of the generating system.
    pub s: usize,
}

impl<T: Scalar> Trajectory<T> {
    /// Number of input samples `T`.
    pub fn input_len(&self) -> usize {
        self.u.len()
    }

    /// Number of samples with defined states and outputs, `T − s + 1`.
    pub fn valid_len(&self) -> usize {
        self.y.len()
    }

    /// Inputs restricted to the validity window.
    pub fn valid_inputs(&self) -> &[DVector<T>] {
        &self.u[..self.valid_len()]
    }

    /// Stacked `[z1; z2]` samples.
    pub fn z(&self) -> Vec<DVector<T>> {
        self.z1
            .iter()
            .zip(&self.z2)
            .map(|(a, b)| linalg::concat(&[a.clone(), b.clone()]))
            .collect()
    }

    /// Materializes `x(k) = P z(k)`.
    pub fn with_states(mut self, qw: &QuasiWeierstrass<T>) -> Self {
        let p = qw.p_mat();
        self.x = Some(self.z().iter().map(|z| p * z).collect());
        self
    }

    /// Largest absolute value over inputs and outputs, at least one.
    pub fn scale(&self) -> T {
        self.u
            .iter()
            .chain(&self.y)
            .chain(self.x.iter().flatten())
            .fold(T::one(), |acc, v| acc.max(vec_max_abs(v)))
    }
}

/// Simulates from the slow initial value `z1_0`; `z2(0)` is forced by the input.
pub fn simulate<T: Scalar>(
    qw: &QuasiWeierstrass<T>,
    z1_0: &DVector<T>,
    u: &[DVector<T>],
) -> Result<Trajectory<T>> {
    let s = qw.s();
    let len = u.len();
    if len < s {
        return Err(Error::TooShort { len, s });
    }
    if z1_0.len() != qw.q() {
        return Err(Error::DimensionMismatch(format!(
            "initial slow state has length {}, expected {}",
            z1_0.len(),
            qw.q()
        )));
    }
    if let Some(bad) = u.iter().position(|v| v.len() != qw.m()) {
        return Err(Error::DimensionMismatch(format!(
            "input sample {bad} has wrong length"
        )));
    }
    let valid = len - s + 1;

    let mut z1 = Vec::with_capacity(valid);
    let mut cur = z1_0.clone();
    for k in 0..valid {
        z1.push(cur.clone());
        if k + 1 < valid {
            cur = qw.a1() * &cur + qw.b1() * &u[k];
        }
    }

    // N^j B2 for j < s
    let mut markov = Vec::with_capacity(s);
    let mut nb = qw.b2().clone();
    for _ in 0..s {
        markov.push(nb.clone());
        nb = qw.nil() * nb;
    }
    let z2: Vec<DVector<T>> = (0..valid)
        .map(|k| {
            let mut acc = DVector::zeros(qw.r());
            for (j, nb) in markov.iter().enumerate() {
                acc -= nb * &u[k + j];
            }
            acc
        })
        .collect();

    let y = (0..valid)
        .map(|k| qw.c1() * &z1[k] + qw.c2() * &z2[k] + qw.d() * &u[k])
        .collect();

    Ok(Trajectory {
        u: u.to_vec(),
        z1,
        z2,
        y,
        x: None,
        s,
    })
}

/// Terminal-anchored fast recursion
/// `z2(k) = N^{L−k} z2(L) − Σ_{j<L−k} N^j B2 u(k+j)` for `k = 0..=L`.
pub fn simulate_fast_backward<T: Scalar>(
    qw: &QuasiWeierstrass<T>,
    z2_terminal: &DVector<T>,
    u: &[DVector<T>],
    horizon: usize,
) -> Result<Vec<DVector<T>>> {
    if u.len() < horizon {
        return Err(Error::TooShort {
            len: u.len(),
            s: horizon,
        });
    }
    if z2_terminal.len() != qw.r() {
        return Err(Error::DimensionMismatch(
            "terminal fast state length".into(),
        ));
    }
    let mut out = vec![DVector::zeros(qw.r()); horizon + 1];
    out[horizon] = z2_terminal.clone();
    // N z2(k+1) = z2(k) + B2 u(k)  ⇒  z2(k) = N z2(k+1) − B2 u(k)
    for k in (0..horizon).rev() {
        out[k] = qw.nil() * &out[k + 1] - qw.b2() * &u[k];
    }
    Ok(out)
}

/// Pointwise residual of `E x(k+1) = A x(k) + B u(k)` and `y = C x + D u`.
pub fn residual<T: Scalar>(sys: &DescriptorSystem<T>, traj: &Trajectory<T>) -> Result<T> {
    let x = traj.x.as_ref().ok_or(Error::MissingStates)?;
    let valid = traj.valid_len();
    if x.len() != valid {
        return Err(Error::DimensionMismatch(
            "state and output lengths differ".into(),
        ));
    }
    let mut worst = T::zero();
    for k in 0..valid {
        if k + 1 < valid {
            let r = sys.e() * &x[k + 1] - sys.a() * &x[k] - sys.b() * &traj.u[k];
            worst = worst.max(vec_max_abs(&r));
        }
        let r = &traj.y[k] - sys.c() * &x[k] - sys.d() * &traj.u[k];
        worst = worst.max(vec_max_abs(&r));
    }
    Ok(worst)
}

//! Convex quadratic programs solved by operator splitting.
//!
//! Problem form: minimize `½ xᵀ P x + qᵀ x` subject to `l ≤ A x ≤ u`, with
//! equality rows expressed as `l_i = u_i`. The iteration is the usual ADMM
//! splitting with a cached Cholesky factor of `P + σI + Aᵀ diag(ρ) A`,
//! over-relaxation and occasional step-size rebalancing.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct QpSettings {
    pub eps_abs: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub sigma: f64,
    pub relax: f64,
    /// Iterations between residual checks and step-size updates.
    pub check_every: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        QpSettings {
            eps_abs: 1e-6,
            max_iter: 20_000,
            rho: 0.1,
            sigma: 1e-6,
            relax: 1.6,
            check_every: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Qp<T: Scalar> {
    pub p: DMatrix<T>,
    pub q: DVector<T>,
    pub a: DMatrix<T>,
    pub l: DVector<T>,
    pub u: DVector<T>,
}

impl<T: Scalar> Qp<T> {
    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn objective(&self, x: &DVector<T>) -> T {
        (x.transpose() * &self.p * x)[(0, 0)] * T::lit(0.5) + self.q.dot(x)
    }

    /// Largest violation of `l ≤ A x ≤ u`.
    pub fn violation(&self, x: &DVector<T>) -> T {
        let ax = &self.a * x;
        let mut worst = T::zero();
        for i in 0..ax.len() {
            worst = worst.max(self.l[i] - ax[i]).max(ax[i] - self.u[i]);
        }
        worst
    }

    fn check(&self) -> Result<()> {
        let n = self.n();
        let k = self.a.nrows();
        if self.p.shape() != (n, n) || self.a.ncols() != n || self.l.len() != k || self.u.len() != k
        {
            return Err(Error::ShapeMismatch("QP data of inconsistent sizes".into()));
        }
        if (0..k).any(|i| self.l[i] > self.u[i]) {
            return Err(Error::ShapeMismatch("lower bound above upper bound".into()));
        }
        Ok(())
    }
}

/// Primal/dual iterate kept between solves.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart<T: Scalar> {
    pub x: DVector<T>,
    pub z: DVector<T>,
    pub y: DVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution<T: Scalar> {
    pub x: DVector<T>,
    /// `A x` projected onto `[l, u]`.
    pub z: DVector<T>,
    /// Constraint multipliers.
    pub y: DVector<T>,
    pub iterations: usize,
    pub primal_residual: T,
    pub dual_residual: T,
    pub converged: bool,
    /// The iterate was replaced by an exact solve on the detected active set.
    pub polished: bool,
}

impl<T: Scalar> QpSolution<T> {
    pub fn kkt_residual(&self) -> T {
        self.primal_residual.max(self.dual_residual)
    }

    pub fn warm(&self) -> WarmStart<T> {
        WarmStart {
            x: self.x.clone(),
            z: self.z.clone(),
            y: self.y.clone(),
        }
    }
}

fn clamp<T: Scalar>(v: T, lo: T, hi: T) -> T {
    v.max(lo).min(hi)
}

struct Kernel<T: Scalar> {
    rho: DVector<T>,
    chol: Cholesky<T, Dyn>,
}

fn factor<T: Scalar>(qp: &Qp<T>, sigma: T, rho_base: T) -> Result<Kernel<T>> {
    let k = qp.a.nrows();
    let rho = DVector::from_fn(k, |i, _| {
        if qp.l[i] == qp.u[i] {
            rho_base * T::lit(1e3)
        } else {
            rho_base
        }
    });
    let mut ra = qp.a.clone();
    for (i, mut row) in ra.row_iter_mut().enumerate() {
        row *= rho[i];
    }
    let mut m = &qp.p + qp.a.transpose() * ra;
    for i in 0..qp.n() {
        m[(i, i)] += sigma;
    }
    let chol = Cholesky::new(m)
        .ok_or_else(|| Error::Singular("QP linear system is not positive definite".into()))?;
    Ok(Kernel { rho, chol })
}

/// Runs the splitting iteration. A run that hits `max_iter` is returned with
/// `converged = false` and its last iterate.
pub fn solve_qp<T: Scalar>(
    qp: &Qp<T>,
    settings: &QpSettings,
    warm: Option<&WarmStart<T>>,
) -> Result<QpSolution<T>> {
    qp.check()?;
    let (n, k) = (qp.n(), qp.a.nrows());
    let sigma = T::lit(settings.sigma);
    let relax = T::lit(settings.relax);
    let eps = T::lit(settings.eps_abs);
    let mut rho_base = T::lit(settings.rho);
    let mut kernel = factor(qp, sigma, rho_base)?;

    let (mut x, mut z, mut y) = match warm {
        Some(w) if w.x.len() == n && w.z.len() == k && w.y.len() == k => {
            (w.x.clone(), w.z.clone(), w.y.clone())
        }
        _ => (DVector::zeros(n), DVector::zeros(k), DVector::zeros(k)),
    };
    let at = qp.a.transpose();
    let (mut prim, mut dual) = (T::lit(f64::MAX), T::lit(f64::MAX));
    let mut iterations = 0;
    while iterations < settings.max_iter {
        iterations += 1;
        let rhs = &x * sigma - &qp.q + &at * (z.component_mul(&kernel.rho) - &y);
        let xt = kernel.chol.solve(&rhs);
        let zt = &qp.a * &xt;
        x = &xt * relax + &x * (T::one() - relax);
        let zr = &zt * relax + &z * (T::one() - relax);
        for i in 0..k {
            z[i] = clamp(zr[i] + y[i] / kernel.rho[i], qp.l[i], qp.u[i]);
        }
        y += (&zr - &z).component_mul(&kernel.rho);

        if iterations % settings.check_every == 0 || iterations == settings.max_iter {
            let ax = &qp.a * &x;
            let px = &qp.p * &x;
            let aty = &at * &y;
            prim = (&ax - &z).amax();
            dual = (&px + &qp.q + &aty).amax();
            if prim <= eps && dual <= eps {
                break;
            }
            // rebalance primal and dual progress
            let pn = prim / ax.amax().max(z.amax()).max(T::lit(1e-12));
            let dn = dual
                / px.amax()
                    .max(aty.amax())
                    .max(qp.q.amax())
                    .max(T::lit(1e-12));
            let ratio = (pn / dn.max(T::lit(1e-30))).sqrt();
            if ratio > T::lit(5.0) || ratio < T::lit(0.2) {
                let new_rho = clamp(rho_base * ratio, T::lit(1e-6), T::lit(1e6));
                if new_rho != rho_base {
                    rho_base = new_rho;
                    kernel = factor(qp, sigma, rho_base)?;
                }
            }
        }
    }
    let mut sol = QpSolution {
        x,
        z,
        y,
        iterations,
        primal_residual: prim,
        dual_residual: dual,
        converged: prim <= eps && dual <= eps,
        polished: false,
    };
    if sol.converged {
        if let Some(p) = polish(qp, &sol) {
            if p.primal_residual <= sol.primal_residual.max(eps)
                && p.dual_residual <= sol.dual_residual.max(eps)
            {
                sol = p;
            }
        }
    }
    Ok(sol)
}

/// Solves the equality-constrained problem on the active set guessed from
/// the ADMM iterate, with a small regularization removed by refinement.
fn polish<T: Scalar>(qp: &Qp<T>, sol: &QpSolution<T>) -> Option<QpSolution<T>> {
    let (n, k) = (qp.n(), qp.a.nrows());
    let mut act = Vec::new();
    let mut target = Vec::new();
    for i in 0..k {
        if qp.l[i] == qp.u[i] || sol.z[i] - qp.l[i] < -sol.y[i] {
            act.push(i);
            target.push(qp.l[i]);
        } else if qp.u[i] - sol.z[i] < sol.y[i] {
            act.push(i);
            target.push(qp.u[i]);
        }
    }
    let na = act.len();
    let delta = T::lit(1e-9);
    let mut kkt = DMatrix::zeros(n + na, n + na);
    kkt.view_mut((0, 0), (n, n)).copy_from(&qp.p);
    for (j, &i) in act.iter().enumerate() {
        for c in 0..n {
            kkt[(n + j, c)] = qp.a[(i, c)];
            kkt[(c, n + j)] = qp.a[(i, c)];
        }
    }
    let exact = kkt.clone();
    for d in 0..n {
        kkt[(d, d)] += delta;
    }
    for d in n..n + na {
        kkt[(d, d)] -= delta;
    }
    let lu = kkt.lu();
    let mut rhs = DVector::zeros(n + na);
    rhs.rows_mut(0, n).copy_from(&(-&qp.q));
    for (j, t) in target.iter().enumerate() {
        rhs[n + j] = *t;
    }
    let mut sv = lu.solve(&rhs)?;
    for _ in 0..5 {
        let r = &rhs - &exact * &sv;
        sv += lu.solve(&r)?;
    }
    let x = sv.rows(0, n).into_owned();
    let mut y = DVector::zeros(k);
    for (j, &i) in act.iter().enumerate() {
        y[i] = sv[n + j];
        // a bound multiplier of the wrong sign means the active set guess was wrong
        let wrong = if qp.l[i] == qp.u[i] {
            false
        } else if target[j] == qp.l[i] {
            y[i] > T::zero()
        } else {
            y[i] < T::zero()
        };
        if wrong {
            return None;
        }
    }
    let ax = &qp.a * &x;
    let z = DVector::from_fn(k, |i, _| clamp(ax[i], qp.l[i], qp.u[i]));
    let primal_residual = (&ax - &z).amax();
    let dual_residual = (&qp.p * &x + &qp.q + qp.a.transpose() * &y).amax();
    Some(QpSolution {
        x,
        z,
        y,
        iterations: sol.iterations,
        primal_residual,
        dual_residual,
        converged: true,
        polished: true,
    })
}

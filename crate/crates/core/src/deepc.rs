//! Online data-enabled predictive control.
//!
//! The controller first excites the plant with i.i.d. uniform inputs, freezes
//! the record `(u_{[0,T−s]}, y_{[0,T−s]})` and from then on solves, at every
//! step, a QP over `(α, û, ŷ)`: the past window and the predictions must equal
//! `[H_{N+L}(u); H_{N+L}(y)] α`, the cost tracks a setpoint, and `û` stays in
//! a box. Internally `α` is replaced by coordinates in an orthonormal basis
//! of the data matrix's range; the logged `α` is the minimum-norm one.
//!
//! A descriptor plant's output `y(t)` needs the inputs up to `t + s − 1`. The
//! loop therefore keeps `s − 1` committed inputs ahead of the measurement:
//! each solve pins `û(t..t+s−2)` to the committed values and commits the next
//! one, `û(t+s−1)`. For `s = 1` this is the usual receding-horizon loop.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis;
use crate::error::{Error, Result};
use crate::hankel::{hankel, is_persistently_exciting};
use crate::linalg::{self, kron_identity};
use crate::qp::{solve_qp, Qp, QpSettings, WarmStart};
use crate::svd::Svd;
use crate::system::QuasiWeierstrass;
use crate::Scalar;

/// Reseeds tried after the first excitation attempt.
pub const MAX_RESEEDS: usize = 3;

/// Multiplier on the shared rank threshold when choosing the data basis.
pub const BASIS_TOL_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DeePCConfig<T: Scalar> {
    /// Past-window length `N`.
    pub n_past: usize,
    /// Prediction horizon `L`.
    pub horizon: usize,
    /// Online data length `T`.
    pub t_data: usize,
    /// Last time step of the run, `K`.
    pub k_total: usize,
    pub q_weight: DMatrix<T>,
    pub r_weight: DMatrix<T>,
    pub u_box: Vec<(T, T)>,
    pub terminal_enabled: bool,
    pub alpha_reg: T,
    pub qp: QpSettings,
    pub seed: u64,
    /// `δ` in the excitation order `N + L + δ + s − 1`; `None` means `q`.
    pub delta: Option<usize>,
}

impl<T: Scalar> DeePCConfig<T> {
    pub fn m(&self) -> usize {
        self.r_weight.nrows()
    }

    pub fn p(&self) -> usize {
        self.q_weight.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, p) = (self.m(), self.p());
        if !self.q_weight.is_square() || !self.r_weight.is_square() {
            return Err(Error::Config("Q and R must be square".into()));
        }
        for (name, w) in [("Q", &self.q_weight), ("R", &self.r_weight)] {
            if linalg::max_abs(&(w - w.transpose()))
                > T::lit(1e-12) * linalg::max_abs(w).max(T::one())
            {
                return Err(Error::Config(format!("{name} is not symmetric")));
            }
            let min_eig = w
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .fold(T::lit(f64::MAX), |a, &b| a.min(b));
            if min_eig < -T::lit(1e-12) * linalg::max_abs(w).max(T::one()) {
                return Err(Error::Config(format!(
                    "{name} is not positive semidefinite"
                )));
            }
        }
        if self.u_box.len() != m {
            return Err(Error::Config(format!(
                "u_box has {} channels, R has {m}",
                self.u_box.len()
            )));
        }
        if self.u_box.iter().any(|(lo, hi)| lo > hi) {
            return Err(Error::Config("u_box lower bound above upper bound".into()));
        }
        if self.horizon == 0 || self.n_past == 0 || p == 0 || m == 0 {
            return Err(Error::Config("N, L, m and p must be positive".into()));
        }
        if self.terminal_enabled && self.n_past > self.horizon {
            return Err(Error::Config("terminal constraint needs N ≤ L".into()));
        }
        if self.alpha_reg < T::zero() {
            return Err(Error::Config("alpha_reg must be nonnegative".into()));
        }
        Ok(())
    }

    /// Length of `α`, `T − N − L − s + 2`.
    pub fn alpha_len(&self, s: usize) -> Result<usize> {
        (self.t_data + 2)
            .checked_sub(self.n_past + self.horizon + s)
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Error::InfeasibleDimensions(format!(
                    "T = {} leaves no Hankel columns for N = {}, L = {}, s = {s}",
                    self.t_data, self.n_past, self.horizon
                ))
            })
    }
}

/// Piecewise-constant setpoint: `initial` until the first switch time.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<T: Scalar> {
    pub initial: DVector<T>,
    /// `(t_switch, y_s)` pairs in increasing time order.
    pub switches: Vec<(usize, DVector<T>)>,
}

impl<T: Scalar> Schedule<T> {
    pub fn constant(ys: DVector<T>) -> Self {
        Schedule {
            initial: ys,
            switches: Vec::new(),
        }
    }

    pub fn at(&self, t: usize) -> &DVector<T> {
        self.switches
            .iter()
            .rev()
            .find(|(ts, _)| *ts <= t)
            .map(|(_, y)| y)
            .unwrap_or(&self.initial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Exciting,
    Controlling,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Exciting => "exciting",
            Phase::Controlling => "controlling",
        }
    }
}

/// Data matrices of the frozen online record.
#[derive(Debug, Clone)]
pub struct DataModel<T: Scalar> {
    pub n_past: usize,
    pub horizon: usize,
    pub m: usize,
    pub p: usize,
    /// `H_{N+L}(u_{[0,T−s]})`.
    pub hu: DMatrix<T>,
    /// `H_{N+L}(y_{[0,T−s]})`.
    pub hy: DMatrix<T>,
    /// Orthonormal basis `U` of the range of `[hu; hy]`; the QP works with
    /// coordinates `β` in this basis, which keeps its equality rows well
    /// conditioned when the data matrix is not.
    pub basis: DMatrix<T>,
    /// `V Σ⁻¹`, mapping `β` to the minimum-norm `α`.
    pub to_alpha: DMatrix<T>,
    /// Singular values kept in `basis`.
    pub sigma: Vec<T>,
}

/// Column offsets of the QP decision vector `(β, û, ŷ)`, where `α = to_alpha · β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub beta: usize,
    pub u: usize,
    pub y: usize,
    pub n: usize,
}

impl<T: Scalar> DataModel<T> {
    pub fn new(u: &[DVector<T>], y: &[DVector<T>], n_past: usize, horizon: usize) -> Result<Self> {
        if u.len() != y.len() || u.is_empty() {
            return Err(Error::ShapeMismatch(
                "data inputs and outputs must have equal, positive length".into(),
            ));
        }
        let depth = n_past + horizon;
        let cols = (u.len() + 1)
            .checked_sub(depth)
            .filter(|&c| c > 0)
            .ok_or_else(|| {
                Error::InfeasibleDimensions(format!("{} samples for depth {depth}", u.len()))
            })?;
        let hu = hankel(u, depth, 0, cols)?.into_matrix();
        let hy = hankel(y, depth, 0, cols)?.into_matrix();
        let stacked = linalg::vstack(&[&hu, &hy]);
        let svd = Svd::new(&stacked);
        let smax = svd.sigma.first().copied().unwrap_or(T::zero());
        let tol = linalg::rank_threshold(stacked.nrows(), stacked.ncols(), smax)
            * T::lit(BASIS_TOL_FACTOR);
        let keep = svd.sigma.iter().take_while(|&&v| v > tol).count();
        let sigma = svd.sigma[..keep].to_vec();
        let mut to_alpha = svd.v.columns(0, keep).into_owned();
        for (j, &v) in sigma.iter().enumerate() {
            to_alpha.column_mut(j).unscale_mut(v);
        }
        Ok(DataModel {
            n_past,
            horizon,
            m: u[0].len(),
            p: y[0].len(),
            hu,
            hy,
            basis: svd.u.columns(0, keep).into_owned(),
            to_alpha,
            sigma,
        })
    }

    pub fn alpha_len(&self) -> usize {
        self.hu.ncols()
    }

    /// Rank of the data matrix, the length of `β`.
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn layout(&self) -> Layout {
        let u = self.rank();
        let y = u + self.m * self.horizon;
        Layout {
            beta: 0,
            u,
            y,
            n: y + self.p * self.horizon,
        }
    }

    /// Assembles the tracking QP.
    ///
    /// `pinned` fixes the first predicted inputs (the committed lookahead).
    #[allow(clippy::too_many_arguments)]
    pub fn build_qp(
        &self,
        u_past: &[DVector<T>],
        y_past: &[DVector<T>],
        pinned: &[DVector<T>],
        ys: &DVector<T>,
        cfg: &DeePCConfig<T>,
    ) -> Result<Qp<T>> {
        let (m, p, nn, l) = (self.m, self.p, self.n_past, self.horizon);
        if u_past.len() != nn || y_past.len() != nn || pinned.len() > l || ys.len() != p {
            return Err(Error::ShapeMismatch(
                "past window, pinned inputs or setpoint of wrong size".into(),
            ));
        }
        let lay = self.layout();
        let nb = self.rank();
        let (bu, by) = (
            self.basis.rows(0, m * (nn + l)),
            self.basis.rows(m * (nn + l), p * (nn + l)),
        );
        let terminal = if cfg.terminal_enabled { nn } else { 0 };
        let n_eq = (m + p) * (nn + l) + m * pinned.len() + (m + p) * terminal;
        let rows = n_eq + m * l;
        let mut a = DMatrix::zeros(rows, lay.n);
        let mut lo = DVector::zeros(rows);
        let mut hi = DVector::zeros(rows);
        let mut r = 0;
        let mut eq = |a: &mut DMatrix<T>, r: &mut usize, coeffs: &[(usize, T)], rhs: T| {
            for &(c, v) in coeffs {
                a[(*r, c)] += v;
            }
            lo[*r] = rhs;
            hi[*r] = rhs;
            *r += 1;
        };
        // past window and predictions reproduced by the data
        for (h, dim, past, off) in [(&bu, m, u_past, lay.u), (&by, p, y_past, lay.y)] {
            for i in 0..dim * (nn + l) {
                let row: Vec<(usize, T)> = (0..nb).map(|j| (j, h[(i, j)])).collect();
                if i < dim * nn {
                    eq(&mut a, &mut r, &row, past[i / dim][i % dim]);
                } else {
                    let mut row = row;
                    row.push((off + i - dim * nn, -T::one()));
                    eq(&mut a, &mut r, &row, T::zero());
                }
            }
        }
        for (k, v) in pinned.iter().enumerate() {
            for c in 0..m {
                eq(&mut a, &mut r, &[(lay.u + k * m + c, T::one())], v[c]);
            }
        }
        for k in l - terminal..l {
            for c in 0..m {
                eq(&mut a, &mut r, &[(lay.u + k * m + c, T::one())], T::zero());
            }
            for c in 0..p {
                eq(&mut a, &mut r, &[(lay.y + k * p + c, T::one())], ys[c]);
            }
        }
        for k in 0..l {
            for c in 0..m {
                a[(r, lay.u + k * m + c)] = T::one();
                lo[r] = cfg.u_box[c].0;
                hi[r] = cfg.u_box[c].1;
                r += 1;
            }
        }
        debug_assert_eq!(r, rows);

        let two = T::lit(2.0);
        let mut pm = DMatrix::zeros(lay.n, lay.n);
        // ‖α‖² = Σ β_i² / σ_i² for the minimum-norm α
        for (i, &v) in self.sigma.iter().enumerate() {
            pm[(i, i)] = two * cfg.alpha_reg / (v * v);
        }
        pm.view_mut((lay.u, lay.u), (m * l, m * l))
            .copy_from(&(kron_identity(l, &cfg.r_weight) * two));
        let qk = kron_identity(l, &cfg.q_weight);
        pm.view_mut((lay.y, lay.y), (p * l, p * l))
            .copy_from(&(&qk * two));
        let mut q = DVector::zeros(lay.n);
        let ys_stack = linalg::concat(&vec![ys.clone(); l]);
        q.rows_mut(lay.y, p * l)
            .copy_from(&(&qk * ys_stack * (-two)));
        Ok(Qp {
            p: pm,
            q,
            a,
            l: lo,
            u: hi,
        })
    }
}

/// Plant in quasi-Weierstraß coordinates driven one committed input at a time.
#[derive(Debug, Clone)]
pub struct Plant<T: Scalar> {
    qw: QuasiWeierstrass<T>,
    z1: DVector<T>,
    /// Committed inputs `u(0..)`.
    inputs: Vec<DVector<T>>,
    /// Index of the next output to measure.
    next: usize,
}

impl<T: Scalar> Plant<T> {
    pub fn new(qw: QuasiWeierstrass<T>, z1_0: DVector<T>) -> Self {
        Plant {
            qw,
            z1: z1_0,
            inputs: Vec::new(),
            next: 0,
        }
    }

    pub fn commit(&mut self, u: DVector<T>) {
        self.inputs.push(u);
    }

    pub fn committed(&self) -> &[DVector<T>] {
        &self.inputs
    }

    /// Measures `y(next)` once `u(next..next+s−1)` are committed, then advances
    /// the slow state.
    pub fn measure(&mut self) -> Option<DVector<T>> {
        let (k, s) = (self.next, self.qw.s());
        if self.inputs.len() < k + s {
            return None;
        }
        let mut z2 = DVector::zeros(self.qw.r());
        let mut npow = DMatrix::identity(self.qw.r(), self.qw.r());
        for j in 0..s {
            z2 -= &npow * self.qw.b2() * &self.inputs[k + j];
            npow = &npow * self.qw.nil();
        }
        let u = &self.inputs[k];
        let y = self.qw.c1() * &self.z1 + self.qw.c2() * &z2 + self.qw.d() * u;
        self.z1 = self.qw.a1() * &self.z1 + self.qw.b1() * u;
        self.next += 1;
        Some(y)
    }
}

/// Optimal plan of one controlling step.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T: Scalar> {
    pub t: usize,
    pub u: Vec<DVector<T>>,
    pub y: Vec<DVector<T>>,
    pub alpha: DVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow<T: Scalar> {
    pub t: usize,
    pub phase: Phase,
    pub u: DVector<T>,
    pub y: DVector<T>,
    pub ys: DVector<T>,
    pub qp_iters: usize,
    pub qp_residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopLog<T: Scalar> {
    pub rows: Vec<LogRow<T>>,
    pub predictions: Vec<Prediction<T>>,
    /// Frozen online record `(u_{[0,T−s]}, y_{[0,T−s]})`.
    pub data_u: Vec<DVector<T>>,
    pub data_y: Vec<DVector<T>>,
    /// Every committed input, including the lookahead beyond the last row.
    pub inputs: Vec<DVector<T>>,
    pub reseeds: usize,
    /// Solves that hit the iteration cap.
    pub unconverged: usize,
}

impl<T: Scalar> ClosedLoopLog<T> {
    /// `t,phase,u_1..u_m,y_1..y_p,ys_1..ys_p,qp_iters,qp_residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let Some(first) = self.rows.first() else {
            return out;
        };
        let (m, p) = (first.u.len(), first.y.len());
        out.push_str("t,phase");
        for i in 1..=m {
            let _ = write!(out, ",u_{i}");
        }
        for i in 1..=p {
            let _ = write!(out, ",y_{i}");
        }
        for i in 1..=p {
            let _ = write!(out, ",ys_{i}");
        }
        out.push_str(",qp_iters,qp_residual\n");
        for r in &self.rows {
            let _ = write!(out, "{},{}", r.t, r.phase.as_str());
            for v in r.u.iter().chain(r.y.iter()).chain(r.ys.iter()) {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{},{:e}", r.qp_iters, r.qp_residual);
        }
        out
    }

    pub fn outputs(&self) -> Vec<DVector<T>> {
        self.rows.iter().map(|r| r.y.clone()).collect()
    }
}

fn draw<T: Scalar>(rng: &mut ChaCha8Rng, bounds: &[(T, T)]) -> DVector<T> {
    DVector::from_iterator(
        bounds.len(),
        bounds.iter().map(|&(lo, hi)| {
            let (lo, hi) = (lo.to_f64_lossy(), hi.to_f64_lossy());
            let v = if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            };
            T::lit(v)
        }),
    )
}

fn attempt_seed(seed: u64, attempt: usize) -> u64 {
    seed.wrapping_add((attempt as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Closed-loop run from slow initial state `z1_0` over `t = 0..=K`.
///
/// The excitation phase is repeated with a new seed (at most
/// [`MAX_RESEEDS`] times) when its inputs are not persistently exciting of
/// order `N + L + δ + s − 1`.
pub fn run_closed_loop<T: Scalar>(
    qw: &QuasiWeierstrass<T>,
    z1_0: &DVector<T>,
    cfg: &DeePCConfig<T>,
    schedule: &Schedule<T>,
) -> Result<ClosedLoopLog<T>> {
    cfg.validate()?;
    let (m, p, q, s) = (qw.m(), qw.p(), qw.q(), qw.s());
    if cfg.m() != m || cfg.p() != p || schedule.initial.len() != p {
        return Err(Error::Config(format!(
            "weights or setpoint do not match m = {m}, p = {p}"
        )));
    }
    if cfg.n_past < q + s - 1 {
        return Err(Error::Config(format!(
            "N = {} is below q + s − 1 = {}",
            cfg.n_past,
            q + s - 1
        )));
    }
    if cfg.horizon < s {
        return Err(Error::Config(format!(
            "L = {} is below the lookahead s = {s}",
            cfg.horizon
        )));
    }
    if !analysis::oracle_r_observable(qw) {
        return Err(Error::Config("plant is not R-observable".into()));
    }
    cfg.alpha_len(s)?;
    if cfg.t_data < cfg.n_past + s - 1 {
        return Err(Error::Config(
            "first solve would precede the past window".into(),
        ));
    }
    let order = cfg.n_past + cfg.horizon + cfg.delta.unwrap_or(q) + s - 1;
    for attempt in 0..=MAX_RESEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed(cfg.seed, attempt));
        let excitation: Vec<DVector<T>> = (0..cfg.t_data)
            .map(|_| draw(&mut rng, &cfg.u_box))
            .collect();
        if !is_persistently_exciting(&excitation, order) {
            continue;
        }
        let mut log = control_phase(qw, z1_0, cfg, schedule, excitation)?;
        log.reseeds = attempt;
        return Ok(log);
    }
    Err(Error::ExcitationDeficient {
        attempts: MAX_RESEEDS + 1,
    })
}

fn control_phase<T: Scalar>(
    qw: &QuasiWeierstrass<T>,
    z1_0: &DVector<T>,
    cfg: &DeePCConfig<T>,
    schedule: &Schedule<T>,
    excitation: Vec<DVector<T>>,
) -> Result<ClosedLoopLog<T>> {
    let s = qw.s();
    let (nn, l) = (cfg.n_past, cfg.horizon);
    let switch = cfg.t_data - s + 1;
    let mut plant = Plant::new(qw.clone(), z1_0.clone());
    for u in excitation.iter().take(s - 1) {
        plant.commit(u.clone());
    }
    let mut rows: Vec<LogRow<T>> = Vec::with_capacity(cfg.k_total + 1);
    let mut predictions = Vec::new();
    let mut model: Option<DataModel<T>> = None;
    let mut warm: Option<WarmStart<T>> = None;
    let mut unconverged = 0;
    for t in 0..=cfg.k_total {
        let ys = schedule.at(t).clone();
        let (phase, iters, res) = if t < switch {
            plant.commit(excitation[t + s - 1].clone());
            (Phase::Exciting, 0, T::zero())
        } else {
            if model.is_none() {
                let y: Vec<DVector<T>> = rows.iter().map(|r| r.y.clone()).collect();
                model = Some(DataModel::new(&plant.committed()[..switch], &y, nn, l)?);
            }
            let dm = model.as_ref().expect("frozen above");
            let u_past: Vec<DVector<T>> = plant.committed()[t - nn..t].to_vec();
            let y_past: Vec<DVector<T>> = rows[t - nn..t].iter().map(|r| r.y.clone()).collect();
            let pinned: Vec<DVector<T>> = plant.committed()[t..t + s - 1].to_vec();
            let qp = dm.build_qp(&u_past, &y_past, &pinned, &ys, cfg)?;
            let sol = solve_qp(&qp, &cfg.qp, warm.as_ref())?;
            if !sol.converged {
                unconverged += 1;
            }
            let lay = dm.layout();
            let (m, p) = (dm.m, dm.p);
            let u_plan: Vec<DVector<T>> = (0..l)
                .map(|k| {
                    DVector::from_fn(m, |c, _| {
                        let (lo, hi) = cfg.u_box[c];
                        sol.x[lay.u + k * m + c].max(lo).min(hi)
                    })
                })
                .collect();
            let y_plan: Vec<DVector<T>> = (0..l)
                .map(|k| sol.x.rows(lay.y + k * p, p).into_owned())
                .collect();
            plant.commit(u_plan[s - 1].clone());
            predictions.push(Prediction {
                t,
                u: u_plan,
                y: y_plan,
                alpha: &dm.to_alpha * sol.x.rows(0, lay.u),
            });
            let res = sol.kkt_residual();
            let iters = sol.iterations;
            warm = (sol.converged && sol.x.iter().all(|v| v.is_finite())).then(|| sol.warm());
            (Phase::Controlling, iters, res)
        };
        let y = plant.measure().expect("lookahead committed");
        rows.push(LogRow {
            t,
            phase,
            u: plant.committed()[t].clone(),
            y,
            ys,
            qp_iters: iters,
            qp_residual: res,
        });
    }
    let data_y: Vec<DVector<T>> = rows[..switch.min(rows.len())]
        .iter()
        .map(|r| r.y.clone())
        .collect();
    Ok(ClosedLoopLog {
        data_u: plant.committed()[..data_y.len()].to_vec(),
        data_y,
        inputs: plant.committed().to_vec(),
        rows,
        predictions,
        reseeds: 0,
        unconverged,
    })
}

//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use ddesc::{DescriptorSystem, QuasiWeierstrass};

/// Standard state-space simulation `E x(k+1) = A x(k) + B u(k)` for an
/// invertible `E`, solving with LU at every step.
pub fn lti_outputs(
    sys: &DescriptorSystem<f64>,
    x0: &DVector<f64>,
    u: &[DVector<f64>],
) -> Vec<DVector<f64>> {
    let lu = sys.e().clone().lu();
    let mut x = x0.clone();
    let mut y = Vec::with_capacity(u.len());
    for uk in u {
        y.push(sys.c() * &x + sys.d() * uk);
        x = lu
            .solve(&(sys.a() * &x + sys.b() * uk))
            .expect("invertible E");
    }
    y
}

/// Outputs of a system whose fast block has `N = 0`, by the closed-form
/// response `y(k) = C1 A1^k z0 + Σ_{j<k} C1 A1^{k−1−j} B1 u(j) + (D − C2 B2) u(k)`.
pub fn markov_outputs(
    qw: &QuasiWeierstrass<f64>,
    z0: &DVector<f64>,
    u: &[DVector<f64>],
) -> Vec<DVector<f64>> {
    let feed = qw.d() - qw.c2() * qw.b2();
    let mut markov = Vec::new();
    let mut pw = DMatrix::identity(qw.q(), qw.q());
    let mut free = Vec::new();
    for _ in 0..u.len() {
        free.push(qw.c1() * &pw * z0);
        markov.push(qw.c1() * &pw * qw.b1());
        pw = &pw * qw.a1();
    }
    (0..u.len())
        .map(|k| {
            let mut y = free[k].clone() + &feed * &u[k];
            for j in 0..k {
                y += &markov[k - 1 - j] * &u[j];
            }
            y
        })
        .collect()
}

pub fn max_dev(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).amax())
        .fold(0.0, f64::max)
}

pub fn seq_amax(a: &[DVector<f64>]) -> f64 {
    a.iter().map(|v| v.amax()).fold(0.0, f64::max)
}

/// Map from `(z1(k), u(k), …, u(k+L+s−2))` to the stacked window
/// `(u(k..k+L−1), y(k..k+L−1))`. Its rank caps the rank of any depth-`L`
/// input-output data matrix of the system.
pub fn window_map(qw: &QuasiWeierstrass<f64>, l: usize) -> DMatrix<f64> {
    let (q, m, p, s) = (qw.q(), qw.m(), qw.p(), qw.s());
    let width = l + s - 1;
    let mut g = DMatrix::zeros((m + p) * l, q + m * width);
    let mut pw = DMatrix::identity(q, q);
    for i in 0..l {
        g.view_mut((m * l + p * i, 0), (p, q))
            .copy_from(&(qw.c1() * &pw));
        pw = &pw * qw.a1();
    }
    for j in 0..width {
        if j < l {
            g.view_mut((m * j, q + m * j), (m, m))
                .copy_from(&DMatrix::identity(m, m));
        }
        for i in 0..l {
            let blk = if j < i {
                qw.c1() * ddesc::linalg::mat_pow(qw.a1(), i - 1 - j) * qw.b1()
            } else if j - i < s {
                let fast = qw.c2() * ddesc::linalg::mat_pow(qw.nil(), j - i) * qw.b2();
                if j == i {
                    qw.d() - fast
                } else {
                    -fast
                }
            } else {
                DMatrix::zeros(p, m)
            };
            g.view_mut((m * l + p * i, q + m * j), (p, m))
                .copy_from(&blk);
        }
    }
    g
}

/// Largest rank the depth-`L` data matrix can reach for this system.
pub fn attainable_rank(qw: &QuasiWeierstrass<f64>, l: usize) -> usize {
    ddesc::linalg::rank(&window_map(qw, l))
}

/// One parameterization instance: a long trajectory whose leading part of
/// `data_len` inputs is exciting of order `L + q + s − 1` and serves as data.
pub struct LemmaCase {
    pub qw: QuasiWeierstrass<f64>,
    pub z1_0: DVector<f64>,
    pub long: ddesc::simulate::Trajectory<f64>,
    pub data_len: usize,
    pub l: usize,
}

impl LemmaCase {
    pub fn data_u(&self) -> &[DVector<f64>] {
        &self.long.u[..self.data_len]
    }

    /// Outputs `y(0..=T−s)` of the data part.
    pub fn data_y(&self) -> &[DVector<f64>] {
        &self.long.y[..self.data_len - self.qw.s() + 1]
    }

    /// Data part with its states, as a trajectory of its own.
    pub fn data(&self) -> ddesc::simulate::Trajectory<f64> {
        let valid = self.data_len - self.qw.s() + 1;
        ddesc::simulate::Trajectory {
            u: self.data_u().to_vec(),
            z1: self.long.z1[..valid].to_vec(),
            z2: self.long.z2[..valid].to_vec(),
            y: self.data_y().to_vec(),
            x: None,
            s: self.qw.s(),
        }
    }
}

pub fn lemma_case<R: rand::Rng>(rng: &mut R, slow_uncontrollable: bool) -> LemmaCase {
    use ddesc::gen::{random_input, random_qw, random_spec};
    let mut spec = random_spec(rng, 6, 2, 2);
    while slow_uncontrollable && spec.q == 0 {
        spec = random_spec(rng, 6, 2, 2);
    }
    if slow_uncontrollable {
        spec.slow_uncontrollable = rng.random_range(1..=spec.q);
    }
    let qw = random_qw(rng, &spec);
    let l = rng.random_range(2..=4);
    let order = l + qw.q() + qw.s() - 1;
    let data_len = (qw.m() + 1) * order + 10;
    let z1_0 = DVector::from_fn(qw.q(), |_, _| rng.random_range(-1.0..1.0));
    let u = random_input(rng, qw.m(), data_len + 30);
    let long = ddesc::simulate::simulate(&qw, &z1_0, &u).unwrap();
    LemmaCase {
        qw,
        z1_0,
        long,
        data_len,
        l,
    }
}

pub fn random_pd<R: rand::Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = ddesc::gen::uniform_matrix(rng, n, n, -1.0, 1.0);
    &g * g.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Equality-constrained minimizer from the KKT system `[P Aᵀ; A 0]`.
pub fn kkt_solve(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> DVector<f64> {
    let (n, k) = (p.nrows(), a.nrows());
    let mut m = DMatrix::zeros(n + k, n + k);
    m.view_mut((0, 0), (n, n)).copy_from(p);
    m.view_mut((0, n), (n, k)).copy_from(&a.transpose());
    m.view_mut((n, 0), (k, n)).copy_from(a);
    let mut rhs = DVector::zeros(n + k);
    rhs.rows_mut(0, n).copy_from(&(-q));
    rhs.rows_mut(n, k).copy_from(b);
    m.lu().solve(&rhs).unwrap().rows(0, n).into_owned()
}

/// Exhaustive search over the 3^n active sets of a box QP.
pub fn brute_force_box(p: &DMatrix<f64>, q: &DVector<f64>, lo: f64, hi: f64) -> DVector<f64> {
    let n = q.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = c % 3;
            c /= 3;
        }
        let mut x = DVector::zeros(n);
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        for i in 0..n {
            x[i] = match state[i] {
                1 => lo,
                2 => hi,
                _ => 0.0,
            };
        }
        if !free.is_empty() {
            let pf = DMatrix::from_fn(free.len(), free.len(), |i, j| p[(free[i], free[j])]);
            let rhs = DVector::from_fn(free.len(), |i, _| {
                -q[free[i]]
                    - (0..n)
                        .filter(|j| state[*j] != 0)
                        .map(|j| p[(free[i], j)] * x[j])
                        .sum::<f64>()
            });
            let xf = pf.lu().solve(&rhs).unwrap();
            for (i, &f) in free.iter().enumerate() {
                x[f] = xf[i];
            }
        }
        if x.iter().any(|&v| v < lo - 1e-12 || v > hi + 1e-12) {
            continue;
        }
        let obj = 0.5 * (x.transpose() * p * &x)[(0, 0)] + q.dot(&x);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, x));
        }
    }
    best.unwrap().1
}

//! Subspaces of the slow and fast subsystems and trajectory parameterization
//! by Hankel data.
//!
//! A window `(ū, ȳ)` of length `L` is parameterizable by a data record
//! `(u, y)` when `[ū; ȳ] = [H_L(u); H_L(y)] g` for some `g`. With inputs
//! persistently exciting of order `L + δ + s − 1` every window of the record
//! itself is parameterizable, whether or not the slow part is controllable.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hankel::{hankel, is_persistently_exciting, persistency_order, stack_io};
use crate::linalg::{self, block_diag, hstack, krylov, observability, vstack};
use crate::simulate::Trajectory;
use crate::system::QuasiWeierstrass;
use crate::Scalar;

/// Residual bound for [`parameterize`] on max-abs normalized data.
pub const PARAM_TOL: f64 = 1e-8;

/// Relative singular-value cut-off for subspace bases built from Krylov and
/// data matrices.
const SUBSPACE_RTOL: f64 = 1e-9;

/// Relative distance below which a vector counts as contained in a subspace.
pub const CONTAIN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceLabel {
    R,
    O,
    Nfast,
    K,
    Sum,
    Product,
    Data,
}

impl fmt::Display for SubspaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SubspaceLabel::R => "R",
            SubspaceLabel::O => "O",
            SubspaceLabel::Nfast => "Nfast",
            SubspaceLabel::K => "K",
            SubspaceLabel::Sum => "Sum",
            SubspaceLabel::Product => "Product",
            SubspaceLabel::Data => "Data",
        };
        f.write_str(s)
    }
}

/// Subspace of `ℝ^ambient_dim` held as an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis<T: Scalar> {
    pub basis: DMatrix<T>,
    pub ambient_dim: usize,
    pub label: SubspaceLabel,
}

impl<T: Scalar> SubspaceBasis<T> {
    /// Column space of `m`, truncated at a relative singular-value cut-off.
    pub fn span(m: &DMatrix<T>, label: SubspaceLabel) -> Self {
        let ambient_dim = m.nrows();
        let smax = linalg::singular_values(m)
            .first()
            .copied()
            .unwrap_or(T::zero());
        let basis = if smax > T::zero() {
            linalg::orth_abs(m, subspace_tol::<T>() * smax)
        } else {
            DMatrix::zeros(ambient_dim, 0)
        };
        SubspaceBasis {
            basis,
            ambient_dim,
            label,
        }
    }

    pub fn zero(ambient_dim: usize, label: SubspaceLabel) -> Self {
        SubspaceBasis {
            basis: DMatrix::zeros(ambient_dim, 0),
            ambient_dim,
            label,
        }
    }

    pub fn full(ambient_dim: usize, label: SubspaceLabel) -> Self {
        SubspaceBasis {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            ambient_dim,
            label,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Euclidean distance from `v` to the subspace.
    pub fn distance(&self, v: &DVector<T>) -> T {
        let proj = &self.basis * (self.basis.transpose() * v);
        (v - proj).norm()
    }

    /// `‖(I − B Bᵀ) v‖ ≤ tol · ‖v‖`.
    pub fn contains(&self, v: &DVector<T>, tol: T) -> bool {
        assert_eq!(
            v.len(),
            self.ambient_dim,
            "vector and subspace dimensions differ"
        );
        self.distance(v) <= tol * v.norm()
    }

    /// Every basis vector of `other` lies in `self`.
    pub fn includes(&self, other: &SubspaceBasis<T>, tol: T) -> bool {
        other.ambient_dim == self.ambient_dim
            && other
                .basis
                .column_iter()
                .all(|c| self.contains(&c.into_owned(), tol))
    }

    pub fn same_as(&self, other: &SubspaceBasis<T>, tol: T) -> bool {
        self.dim() == other.dim() && self.includes(other, tol) && other.includes(self, tol)
    }

    /// `‖Bᵀ B − I‖_max`.
    pub fn orthonormality_error(&self) -> T {
        let k = self.dim();
        linalg::max_abs(&(self.basis.transpose() * &self.basis - DMatrix::identity(k, k)))
    }
}

fn subspace_tol<T: Scalar>() -> T {
    T::lit(SUBSPACE_RTOL).max(T::lit(1e3) * T::machine_eps())
}

pub fn subspace_sum<T: Scalar>(
    a: &SubspaceBasis<T>,
    b: &SubspaceBasis<T>,
) -> Result<SubspaceBasis<T>> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::DimensionMismatch(format!(
            "subspaces of ℝ^{} and ℝ^{}",
            a.ambient_dim, b.ambient_dim
        )));
    }
    let mut s = SubspaceBasis::span(&hstack(&[&a.basis, &b.basis]), SubspaceLabel::Sum);
    s.ambient_dim = a.ambient_dim;
    if s.basis.nrows() != a.ambient_dim {
        s.basis = DMatrix::zeros(a.ambient_dim, 0);
    }
    Ok(s)
}

pub fn subspace_product<T: Scalar>(a: &SubspaceBasis<T>, b: &SubspaceBasis<T>) -> SubspaceBasis<T> {
    SubspaceBasis {
        basis: block_diag(&[&a.basis, &b.basis]),
        ambient_dim: a.ambient_dim + b.ambient_dim,
        label: SubspaceLabel::Product,
    }
}

/// `Im[B1, A1 B1, …, A1^{q−1} B1]`.
pub fn subspace_r<T: Scalar>(qw: &QuasiWeierstrass<T>) -> SubspaceBasis<T> {
    spanned(&krylov(qw.a1(), qw.b1(), qw.q()), qw.q(), SubspaceLabel::R)
}

/// Unobservable subspace of the slow subsystem.
pub fn subspace_o<T: Scalar>(qw: &QuasiWeierstrass<T>) -> SubspaceBasis<T> {
    let q = qw.q();
    let obs = observability(qw.a1(), qw.c1(), q);
    let smax = linalg::singular_values(&obs)
        .first()
        .copied()
        .unwrap_or(T::zero());
    let basis = if q == 0 {
        DMatrix::zeros(0, 0)
    } else if smax <= T::zero() {
        DMatrix::identity(q, q)
    } else {
        linalg::null_space_abs(&obs, subspace_tol::<T>() * smax)
    };
    SubspaceBasis {
        basis,
        ambient_dim: q,
        label: SubspaceLabel::O,
    }
}

/// `Im[B2, N B2, …, N^{s−1} B2]`, the reachable fast states.
pub fn subspace_n<T: Scalar>(qw: &QuasiWeierstrass<T>) -> SubspaceBasis<T> {
    spanned(
        &krylov(qw.nil(), qw.b2(), qw.s()),
        qw.r(),
        SubspaceLabel::Nfast,
    )
}

/// Krylov space of the slow initial value, `Im[z10, A1 z10, …, A1^{q−1} z10]`.
pub fn subspace_k<T: Scalar>(qw: &QuasiWeierstrass<T>, z1_0: &DVector<T>) -> SubspaceBasis<T> {
    let seed = DMatrix::from_column_slice(z1_0.len(), 1, z1_0.as_slice());
    spanned(&krylov(qw.a1(), &seed, qw.q()), qw.q(), SubspaceLabel::K)
}

fn spanned<T: Scalar>(m: &DMatrix<T>, ambient: usize, label: SubspaceLabel) -> SubspaceBasis<T> {
    if m.ncols() == 0 || ambient == 0 {
        return SubspaceBasis::zero(ambient, label);
    }
    SubspaceBasis::span(m, label)
}

/// Degree of the minimal polynomial of `a`: the first `d` for which
/// `I, a, …, a^d` are linearly dependent.
pub fn minimal_poly_degree<T: Scalar>(a: &DMatrix<T>) -> usize {
    let q = a.nrows();
    let mut cols: Vec<DMatrix<T>> = Vec::with_capacity(q + 1);
    let mut pw = DMatrix::<T>::identity(q, q);
    for d in 0..=q {
        let norm = pw.norm();
        if norm <= T::zero() {
            return d;
        }
        cols.push(DMatrix::from_column_slice(
            q * q,
            1,
            (&pw / norm).as_slice(),
        ));
        let refs: Vec<&DMatrix<T>> = cols.iter().collect();
        let sv = linalg::singular_values(&hstack(&refs));
        let cut = subspace_tol::<T>() * sv[0];
        if sv.iter().filter(|&&s| s > cut).count() < cols.len() {
            return d;
        }
        pw = &pw * a;
    }
    q
}

/// Model subspaces entering the image and state-membership statements.
#[derive(Debug, Clone)]
pub struct LemmaSubspaces<T: Scalar> {
    pub r: SubspaceBasis<T>,
    pub o: SubspaceBasis<T>,
    pub nfast: SubspaceBasis<T>,
    pub k: SubspaceBasis<T>,
    /// `−[B2, N B2, …, N^{s−1} B2]`, so that `z2(k) = F [u(k); …; u(k+s−1)]`.
    pub fast_map: DMatrix<T>,
    pub s: usize,
    pub m: usize,
    pub delta_min: usize,
}

impl<T: Scalar> LemmaSubspaces<T> {
    pub fn new(qw: &QuasiWeierstrass<T>, z1_0: &DVector<T>) -> Self {
        LemmaSubspaces {
            r: subspace_r(qw),
            o: subspace_o(qw),
            nfast: subspace_n(qw),
            k: subspace_k(qw, z1_0),
            fast_map: -krylov(qw.nil(), qw.b2(), qw.s()),
            s: qw.s(),
            m: qw.m(),
            delta_min: minimal_poly_degree(qw.a1()),
        }
    }

    pub fn q(&self) -> usize {
        self.r.ambient_dim
    }

    pub fn r_dim(&self) -> usize {
        self.nfast.ambient_dim
    }

    /// `𝓡 + 𝓚[z10]`, the reachable slow states of the record.
    pub fn slow_reach(&self) -> SubspaceBasis<T> {
        subspace_sum(&self.r, &self.k).expect("same ambient space")
    }

    /// `(𝓡 + 𝓞 + 𝓚[z10]) × 𝓝`, where initial states of parameterized windows live.
    pub fn initial_states(&self) -> SubspaceBasis<T> {
        let slow = subspace_sum(&self.slow_reach(), &self.o).expect("same ambient space");
        subspace_product(&slow, &self.nfast)
    }
}

/// Outcome of comparing the column space of `[H1(z); H_{L+s−1}(u)]` with the
/// model subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageReport {
    pub image_dim: usize,
    /// Dimension of `(𝓡 + 𝓚[z10]) × 𝓝 × ℝ^{m(L+s−1)}`.
    pub product_dim: usize,
    /// Image equals the product above.
    pub product_equal: bool,
    /// Image equals `{(z1, F u_{0..s−1}, u) : z1 ∈ 𝓡 + 𝓚[z10]}`, the set the
    /// data can actually span since each column's fast state is a function of
    /// its own inputs.
    pub graph_equal: bool,
}

/// Compares the state/input data image with the model subspaces.
///
/// `z` holds stacked samples `[z1; z2]`, `u` the full input record of length
/// `T`. The check uses `T − L − s + 2` columns and needs `u` persistently
/// exciting of order `L + δ + s − 1` (`δ = q` when not given).
pub fn image_check<T: Scalar>(
    z: &[DVector<T>],
    u: &[DVector<T>],
    l: usize,
    delta: Option<usize>,
    sub: &LemmaSubspaces<T>,
) -> Result<ImageReport> {
    let (q, r, s, m) = (sub.q(), sub.r_dim(), sub.s, sub.m);
    let delta = delta.unwrap_or(q);
    let required = l + delta + s - 1;
    if !is_persistently_exciting(u, required) {
        return Err(Error::InsufficientExcitation {
            required,
            achieved: persistency_order(u),
        });
    }
    let depth = l + s - 1;
    let cols = (u.len() + 1)
        .checked_sub(depth)
        .filter(|&c| c > 0)
        .ok_or_else(|| Error::DataTooShort(format!("{} inputs for depth {depth}", u.len())))?;
    if z.len() < cols {
        return Err(Error::DataTooShort(format!(
            "{} state samples, {cols} needed",
            z.len()
        )));
    }
    if z[..cols].iter().any(|v| v.len() != q + r) {
        return Err(Error::DimensionMismatch(
            "state samples do not match q + r".into(),
        ));
    }
    let hz = hankel(z, 1, 0, cols)?.into_matrix();
    let hu = hankel(u, depth, 0, cols)?.into_matrix();
    let image = SubspaceBasis::span(&vstack(&[&hz, &hu]), SubspaceLabel::Data);

    let slow = sub.slow_reach();
    let inputs = SubspaceBasis::full(m * depth, SubspaceLabel::R);
    let product = subspace_product(&subspace_product(&slow, &sub.nfast), &inputs);

    // graph: (ζ, η) ↦ (ζ, F η_{0..s−1}, η)
    let mut lift = DMatrix::zeros(r, m * depth);
    if r > 0 && m > 0 {
        lift.view_mut((0, 0), (r, m * s)).copy_from(&sub.fast_map);
    }
    let graph_gen = block_diag(&[&slow.basis, &DMatrix::identity(m * depth, m * depth)]);
    let mut graph_gen = graph_gen.insert_rows(q, r, T::zero());
    graph_gen
        .view_mut((q, slow.dim()), (r, m * depth))
        .copy_from(&lift);
    let graph = SubspaceBasis::span(&graph_gen, SubspaceLabel::Product);

    let tol = T::lit(CONTAIN_TOL);
    Ok(ImageReport {
        image_dim: image.dim(),
        product_dim: product.dim(),
        product_equal: image.same_as(&product, tol),
        graph_equal: image.same_as(&graph, tol),
    })
}

/// The image equality as stated: column space equals
/// `(𝓡 + 𝓚[z10]) × 𝓝 × ℝ^{m(L+s−1)}`.
pub fn image_equality_check<T: Scalar>(
    z: &[DVector<T>],
    u: &[DVector<T>],
    l: usize,
    delta: Option<usize>,
    sub: &LemmaSubspaces<T>,
) -> Result<bool> {
    image_check(z, u, l, delta, sub).map(|r| r.product_equal)
}

/// Coefficient vector reproducing a window from the data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCoefficient<T: Scalar> {
    pub g: DVector<T>,
    /// `‖[ū; ȳ] − [H_L(u); H_L(y)] g‖_∞` in the units of the data.
    pub residual: T,
}

/// Data matrix `[H_L(u); H_L(y)]` with its pseudoinverse, for repeated fits.
///
/// Data are max-abs normalized internally; `g` is invariant to the common
/// scaling. Among feasible coefficients the minimum-norm one is returned;
/// downstream code only uses the reproduced window, so the choice is immaterial.
#[derive(Debug, Clone)]
pub struct Parameterizer<T: Scalar> {
    depth: usize,
    m: usize,
    p: usize,
    scale: T,
    data: DMatrix<T>,
    pinv: DMatrix<T>,
}

impl<T: Scalar> Parameterizer<T> {
    /// `u` and `y` cover `0..=T−s`; `u` may be longer, only the common window is used.
    pub fn new(u: &[DVector<T>], y: &[DVector<T>], depth: usize) -> Result<Self> {
        if u.is_empty() || y.is_empty() {
            return Err(Error::ShapeMismatch("empty data record".into()));
        }
        let data =
            stack_io(u, y, depth, 0, None).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        let amax = linalg::max_abs(&data);
        let scale = if amax > T::zero() { amax } else { T::one() };
        let scaled = &data / scale;
        let pinv = linalg::pinv(&scaled);
        Ok(Parameterizer {
            depth,
            m: u[0].len(),
            p: y[0].len(),
            scale,
            data: scaled,
            pinv,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of data columns, the length of `g`.
    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    /// Unscaled data matrix.
    pub fn data(&self) -> DMatrix<T> {
        &self.data * self.scale
    }

    /// Minimum-norm least-squares fit, without the feasibility decision.
    pub fn fit(&self, wu: &[DVector<T>], wy: &[DVector<T>]) -> Result<ParamCoefficient<T>> {
        let w = self.window(wu, wy)?;
        let g = &self.pinv * (&w / self.scale);
        let residual = linalg::vec_max_abs(&(&w - &self.data * &g * self.scale));
        Ok(ParamCoefficient { g, residual })
    }

    /// Fit accepted when the normalized residual is within [`PARAM_TOL`].
    pub fn parameterize(
        &self,
        wu: &[DVector<T>],
        wy: &[DVector<T>],
    ) -> Result<ParamCoefficient<T>> {
        let c = self.fit(wu, wy)?;
        let normalized = c.residual / self.scale.max(self.window(wu, wy)?.amax());
        if normalized > T::lit(PARAM_TOL) {
            return Err(Error::NotParameterizable {
                residual: c.residual.to_f64_lossy(),
            });
        }
        Ok(c)
    }

    fn window(&self, wu: &[DVector<T>], wy: &[DVector<T>]) -> Result<DVector<T>> {
        if wu.len() != self.depth || wy.len() != self.depth {
            return Err(Error::ShapeMismatch(format!(
                "window lengths {} and {} for depth {}",
                wu.len(),
                wy.len(),
                self.depth
            )));
        }
        if wu.iter().any(|v| v.len() != self.m) || wy.iter().any(|v| v.len() != self.p) {
            return Err(Error::ShapeMismatch(
                "window sample dimensions differ from the data".into(),
            ));
        }
        let mut parts = wu.to_vec();
        parts.extend_from_slice(wy);
        Ok(linalg::concat(&parts))
    }
}

/// One-shot [`Parameterizer::parameterize`].
pub fn parameterize<T: Scalar>(
    wu: &[DVector<T>],
    wy: &[DVector<T>],
    u: &[DVector<T>],
    y: &[DVector<T>],
    depth: usize,
) -> Result<ParamCoefficient<T>> {
    Parameterizer::new(u, y, depth)?.parameterize(wu, wy)
}

/// State trajectory behind a parameterized window.
///
/// The initial slow state is `H1(z1) g`; the combined input record
/// `H_{L+s−1}(u) g` extends the window by the `s − 1` inputs that fix the fast
/// states. Slow states are propagated forward, fast states follow from the
/// extended inputs. The returned trajectory has `L` valid samples, outputs
/// computed from the states, and physical states `x = P z` filled in.
pub fn reconstruct_state_from_g<T: Scalar>(
    qw: &QuasiWeierstrass<T>,
    g: &DVector<T>,
    data: &Trajectory<T>,
    depth: usize,
) -> Result<Trajectory<T>> {
    let s = qw.s();
    let cols = g.len();
    if data.z1.len() < cols || data.z2.len() < cols {
        return Err(Error::MissingStates);
    }
    let ext = depth + s - 1;
    let hu = hankel(&data.u, ext, 0, cols).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let u_ext = hu.matrix * g;
    let m = qw.m();
    let u: Vec<DVector<T>> = (0..ext)
        .map(|k| u_ext.rows(k * m, m).into_owned())
        .collect();

    let mut z1 = Vec::with_capacity(depth);
    let mut cur = hankel(&data.z1, 1, 0, cols)?.matrix * g;
    for k in 0..depth {
        z1.push(cur.clone());
        cur = qw.a1() * &cur + qw.b1() * &u[k];
    }
    let z2: Vec<DVector<T>> = (0..depth)
        .map(|k| {
            let mut acc = DVector::zeros(qw.r());
            let mut npow = DMatrix::identity(qw.r(), qw.r());
            for j in 0..s {
                acc -= &npow * qw.b2() * &u[k + j];
                npow = &npow * qw.nil();
            }
            acc
        })
        .collect();
    let y = (0..depth)
        .map(|k| qw.c1() * &z1[k] + qw.c2() * &z2[k] + qw.d() * &u[k])
        .collect();
    Ok(Trajectory {
        u,
        z1,
        z2,
        y,
        x: None,
        s,
    }
    .with_states(qw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_input, random_qw, GenSpec};
    use crate::simulate::simulate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag_qw(a1: DMatrix<f64>, b1: DMatrix<f64>, c1: DMatrix<f64>) -> QuasiWeierstrass<f64> {
        let (m, p) = (b1.ncols(), c1.nrows());
        QuasiWeierstrass::from_blocks(
            a1,
            DMatrix::zeros(0, 0),
            b1,
            DMatrix::zeros(0, m),
            c1,
            DMatrix::zeros(p, 0),
            DMatrix::zeros(p, m),
        )
        .unwrap()
    }

    #[test]
    fn trivial_subspaces() {
        let a1 = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, 0.0, 0.3, 0.2, 0.0, 0.0, -0.4]);
        let qw = diag_qw(a1, DMatrix::identity(3, 3), DMatrix::identity(3, 3));
        assert_eq!(subspace_r(&qw).dim(), 3);
        assert_eq!(subspace_o(&qw).dim(), 0);
        assert_eq!(subspace_k(&qw, &DVector::zeros(3)).dim(), 0);
        assert!(subspace_r(&qw).orthonormality_error() < 1e-12);
    }

    #[test]
    fn minimal_polynomial_degrees() {
        assert_eq!(
            minimal_poly_degree(&(DMatrix::<f64>::identity(4, 4) * 0.7)),
            1
        );
        let mut j = DMatrix::<f64>::identity(4, 4) * 0.5;
        for i in 0..3 {
            j[(i, i + 1)] = 1.0;
        }
        assert_eq!(minimal_poly_degree(&j), 4);
        assert_eq!(minimal_poly_degree(&DMatrix::<f64>::zeros(0, 0)), 0);
    }

    #[test]
    fn sum_and_product_edge_cases() {
        let full = SubspaceBasis::<f64>::full(3, SubspaceLabel::R);
        let line = SubspaceBasis::span(
            &DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]),
            SubspaceLabel::K,
        );
        assert_eq!(subspace_sum(&full, &line).unwrap().dim(), 3);
        let z = SubspaceBasis::<f64>::zero(2, SubspaceLabel::O);
        let zz = subspace_product(&z, &z);
        assert_eq!((zz.dim(), zz.ambient_dim), (0, 4));
        assert!(matches!(
            subspace_sum(&full, &z),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn leading_window_is_a_unit_coordinate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let qw = random_qw(&mut rng, &GenSpec::new(2, 2, 2, 1, 1));
        let tr = simulate(
            &qw,
            &DVector::from_element(2, 0.3),
            &random_input(&mut rng, 1, 40),
        )
        .unwrap();
        let l = 4;
        let c = parameterize(&tr.u[..l], &tr.y[..l], &tr.u, &tr.y, l).unwrap();
        assert!(c.residual < 1e-12);
        let rec = reconstruct_state_from_g(
            &qw,
            &DVector::from_fn(c.g.len(), |i, _| if i == 0 { 1.0 } else { 0.0 }),
            &tr,
            l,
        )
        .unwrap();
        for k in 0..l {
            assert!((&rec.z1[k] - &tr.z1[k]).amax() < 1e-12);
            assert!((&rec.z2[k] - &tr.z2[k]).amax() < 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let u = vec![DVector::from_element(1, 1.0); 10];
        let y = vec![DVector::from_element(2, 1.0); 10];
        let p = Parameterizer::new(&u, &y, 3).unwrap();
        assert!(matches!(
            p.fit(&u[..2], &y[..3]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            p.fit(&y[..3], &y[..3]),
            Err(Error::ShapeMismatch(_))
        ));
    }
}

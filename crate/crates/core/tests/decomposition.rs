use ddesc::gen::{random_descriptor, random_spec};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent count of finite generalized eigenvalues: `det(λE − A)` is a
/// polynomial whose degree equals `q`. It is sampled at `n + 1` points,
/// interpolated exactly and its degree read off.
fn finite_eigen_count(e: &DMatrix<f64>, a: &DMatrix<f64>) -> usize {
    let n = e.nrows();
    let pts: Vec<f64> = (0..=n).map(|k| -1.5 + 3.0 * k as f64 / n as f64).collect();
    let vals: Vec<f64> = pts.iter().map(|&l| (e * l - a).determinant()).collect();
    let vander = DMatrix::from_fn(n + 1, n + 1, |i, j| pts[i].powi(j as i32));
    let coeffs = vander
        .lu()
        .solve(&nalgebra::DVector::from_vec(vals))
        .unwrap();
    let big = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    (0..=n)
        .rev()
        .find(|&k| coeffs[k].abs() > 1e-8 * big)
        .unwrap_or(0)
}

#[test]
fn random_decompositions_hold_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let spec = random_spec(&mut rng, 6, 3, 3);
        let (sys, truth) = random_descriptor(&mut rng, &spec);
        let qw = sys.quasi_weierstrass().unwrap();
        assert_eq!(
            (qw.q(), qw.r(), qw.s()),
            (truth.q(), truth.r(), truth.s()),
            "{spec:?}"
        );
        let res = qw.residuals(&sys);
        worst = worst.max(res.max());
        assert!(
            res.max() <= 1e-8,
            "{res:?} {spec:?} sap={} ",
            qw.s_mat() * sys.a() * qw.p_mat()
        );
        let back = qw.reconstruct().unwrap();
        for (x, y) in [
            (back.e(), sys.e()),
            (back.a(), sys.a()),
            (back.b(), sys.b()),
            (back.c(), sys.c()),
        ] {
            assert!((x - y).norm() <= 1e-8 * y.norm().max(1.0));
        }
        if truth.r() > 0 || truth.q() > 0 {
            assert_eq!(finite_eigen_count(sys.e(), sys.a()), qw.q());
        }
    }
    eprintln!("worst residual {worst:e}");
}

#[test]
fn nonsingular_e_matches_inverse_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let n = rand::Rng::random_range(&mut rng, 1..=6);
        let spec = ddesc::gen::GenSpec::new(n, 0, 1, 2, 2);
        let (sys, _) = random_descriptor(&mut rng, &spec);
        let qw = sys.quasi_weierstrass().unwrap();
        assert_eq!((qw.r(), qw.s()), (0, 1));
        let direct = sys.e().clone().try_inverse().unwrap() * sys.a();
        let mut x: Vec<_> = ddesc::linalg::eigenvalues(qw.a1());
        let mut y: Vec<_> = ddesc::linalg::eigenvalues(&direct);
        let key = |c: &nalgebra::Complex<f64>| {
            (c.re * 1e6).round() as i64 * 1_000_000 + (c.im * 1e3).round() as i64
        };
        x.sort_by_key(key);
        y.sort_by_key(key);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        }
    }
}

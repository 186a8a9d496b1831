use ddesc::gen::random_input;
use ddesc::hankel::{
    hankel, hankel_full, is_persistently_exciting, persistency_order, shifted_pair, stack_io,
};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn seq(vals: &[f64], dim: usize) -> Vec<DVector<f64>> {
    vals.chunks(dim).map(DVector::from_column_slice).collect()
}

proptest! {
    #[test]
    fn shift_drops_first_column(vals in prop::collection::vec(-5.0f64..5.0, 12..60), dim in 1usize..3, depth in 1usize..4) {
        let w = seq(&vals[..vals.len() / dim * dim], dim);
        prop_assume!(w.len() >= depth + 2);
        let cols = w.len() - depth;
        let shifted = hankel(&w, depth, 1, cols).unwrap().matrix;
        let base = hankel(&w, depth, 0, cols + 1).unwrap().matrix;
        prop_assert_eq!(shifted, base.columns(1, cols).into_owned());
    }

    #[test]
    fn stack_columns_are_trajectory_windows(vals in prop::collection::vec(-5.0f64..5.0, 20..40), depth in 1usize..5) {
        let u = seq(&vals, 1);
        let y: Vec<_> = u.iter().map(|v| v * 2.0 + DVector::from_element(1, 1.0)).take(u.len() - 1).collect();
        let st = stack_io(&u, &y, depth, 0, None).unwrap();
        prop_assert_eq!(st.ncols(), y.len() - depth + 1);
        for j in 0..st.ncols() {
            for i in 0..depth {
                prop_assert_eq!(st[(i, j)], u[j + i][0]);
                prop_assert_eq!(st[(depth + i, j)], y[j + i][0]);
            }
        }
    }
}

#[test]
fn random_scalar_input_reaches_maximal_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let u = random_input(&mut rng, 1, 50);
        assert_eq!(persistency_order(&u), 25);
    }
}

#[test]
fn persistency_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for len in [10, 17, 30] {
        let u = random_input(&mut rng, 2, len);
        let ord = persistency_order(&u);
        for l in 1..=ord {
            assert!(is_persistently_exciting(&u, l));
        }
        assert!(!is_persistently_exciting(&u, ord + 1));
    }
}

#[test]
fn case_study_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let u = random_input(&mut rng, 3, 99);
    let h = hankel_full(&u, 20).unwrap();
    assert_eq!(h.matrix.nrows(), 60);
    assert_eq!(h.matrix.ncols(), 80);
}

#[test]
fn window_arithmetic_with_validity_truncation() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let u = random_input(&mut rng, 1, 100);
    let y = random_input(&mut rng, 1, 99);
    assert_eq!(stack_io(&u, &y, 14, 0, None).unwrap().ncols(), 86);
    let (s0, s1) = shifted_pair(&u, &y, 14).unwrap();
    assert_eq!(s0.shape(), s1.shape());
    assert_eq!(s0.columns(1, s0.ncols() - 1), s1.columns(0, s1.ncols() - 1));
}

mod common;

use ddesc::flemma::{
    image_check, minimal_poly_degree, parameterize, reconstruct_state_from_g, subspace_sum,
    LemmaSubspaces, Parameterizer, SubspaceBasis, SubspaceLabel, CONTAIN_TOL,
};
use ddesc::gen::{random_input, random_qw, uniform_matrix, GenSpec};
use ddesc::hankel::is_persistently_exciting;
use ddesc::simulate::{residual, simulate};
use ddesc::{analysis, Error};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn minimal_degree_counts_distinct_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    for _ in 0..50 {
        let q = rng.random_range(1..=6);
        let k = rng.random_range(1..=q);
        let values: Vec<f64> = (0..k)
            .map(|i| -0.9 + 1.8 * (i as f64 + 0.5) / k as f64)
            .collect();
        let mut diag: Vec<f64> = values.clone();
        while diag.len() < q {
            diag.push(values[rng.random_range(0..k)]);
        }
        let v = ddesc::gen::well_conditioned(&mut rng, q, 0.3);
        let a = &v
            * DMatrix::from_diagonal(&DVector::from_vec(diag))
            * v.clone().try_inverse().unwrap();
        assert_eq!(minimal_poly_degree(&a), k);
    }
}

#[test]
fn sum_dimension_matches_planted_intersection() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..50 {
        let shared = rng.random_range(0..=2);
        let xa = rng.random_range(0..=2);
        let xb = rng.random_range(0..=2);
        let ambient = 7;
        let s = uniform_matrix(&mut rng, ambient, shared, -1.0, 1.0);
        let x = uniform_matrix(&mut rng, ambient, xa, -1.0, 1.0);
        let y = uniform_matrix(&mut rng, ambient, xb, -1.0, 1.0);
        let a = SubspaceBasis::span(&ddesc::linalg::hstack(&[&s, &x]), SubspaceLabel::R);
        let b = SubspaceBasis::span(&ddesc::linalg::hstack(&[&y, &s]), SubspaceLabel::K);
        let sum = subspace_sum(&a, &b).unwrap();
        // dim(a + b) = dim a + dim b − dim(a ∩ b), with a ∩ b = span(S) generically
        assert_eq!(sum.dim(), a.dim() + b.dim() - shared);
        assert!(sum.orthonormality_error() < 1e-12);
    }
}

#[test]
fn every_window_of_a_longer_record_parameterizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let mut uncontrollable = 0;
    for i in 0..40 {
        let case = common::lemma_case(&mut rng, i % 2 == 0);
        let qw = &case.qw;
        if !analysis::oracle_r_controllable(qw) {
            uncontrollable += 1;
        }
        assert!(is_persistently_exciting(
            case.data_u(),
            case.l + qw.q() + qw.s() - 1
        ));
        let fitter = Parameterizer::new(case.data_u(), case.data_y(), case.l).unwrap();
        assert_eq!(fitter.cols(), case.data_len - case.l - qw.s() + 2);
        for t in 0..=case.long.valid_len() - case.l {
            let c = fitter.parameterize(&case.long.u[t..t + case.l], &case.long.y[t..t + case.l]);
            assert!(c.is_ok(), "window {t} of case {i}: {c:?}");
        }
    }
    assert!(uncontrollable >= 15);
}

#[test]
fn parameterized_windows_are_system_trajectories() {
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    for i in 0..30 {
        let case = common::lemma_case(&mut rng, i % 2 == 1);
        let qw = &case.qw;
        let sys = qw.reconstruct().unwrap();
        let fitter = Parameterizer::new(case.data_u(), case.data_y(), case.l).unwrap();
        let data = case.data();
        let initial = LemmaSubspaces::new(qw, &case.z1_0).initial_states();
        for _ in 0..5 {
            // random convex combination of data columns
            let w = DVector::from_fn(fitter.cols(), |_, _| rng.random_range(0.0..1.0));
            let w = &w / w.sum();
            let stacked = fitter.data() * &w;
            let (m, p, l) = (qw.m(), qw.p(), case.l);
            let wu: Vec<_> = (0..l)
                .map(|k| stacked.rows(k * m, m).into_owned())
                .collect();
            let wy: Vec<_> = (0..l)
                .map(|k| stacked.rows(m * l + k * p, p).into_owned())
                .collect();
            let c = fitter.parameterize(&wu, &wy).unwrap();
            let rec = reconstruct_state_from_g(qw, &c.g, &data, l).unwrap();
            let scale = rec.scale();
            assert!(residual(&sys, &rec).unwrap() <= 1e-9 * scale);
            assert!(common::max_dev(&rec.y, &wy) <= 1e-9 * scale);
            assert!(common::max_dev(&rec.u[..l], &wu) <= 1e-9 * scale);
            let z0 = ddesc::linalg::concat(&[rec.z1[0].clone(), rec.z2[0].clone()]);
            assert!(initial.contains(&z0, CONTAIN_TOL), "case {i}");
        }
    }
}

#[test]
fn fresh_trajectory_of_controllable_system_parameterizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(74);
    let mut checked = 0;
    while checked < 20 {
        let case = common::lemma_case(&mut rng, false);
        if !analysis::oracle_r_controllable(&case.qw) {
            continue;
        }
        let qw = &case.qw;
        let z = DVector::from_fn(qw.q(), |_, _| rng.random_range(-2.0..2.0));
        let fresh = simulate(qw, &z, &random_input(&mut rng, qw.m(), case.l + qw.s() - 1)).unwrap();
        let c = parameterize(
            &fresh.u[..case.l],
            &fresh.y,
            case.data_u(),
            case.data_y(),
            case.l,
        )
        .unwrap();
        assert!(c.residual <= 1e-8);
        checked += 1;
    }
}

#[test]
fn image_is_the_graph_of_the_fast_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(75);
    for i in 0..60 {
        let case = common::lemma_case(&mut rng, i % 3 == 0);
        let sub = LemmaSubspaces::new(&case.qw, &case.z1_0);
        let rep = image_check(&case.long.z(), case.data_u(), case.l, None, &sub).unwrap();
        assert!(rep.graph_equal, "case {i}: {rep:?}");
        // the product form holds only when no fast state is reachable
        assert_eq!(rep.product_equal, sub.nfast.dim() == 0, "case {i}: {rep:?}");
    }
}

#[test]
fn planted_uncontrollable_direction_shrinks_the_image() {
    let mut rng = ChaCha8Rng::seed_from_u64(76);
    for _ in 0..10 {
        let mut spec = GenSpec::new(3, 0, 1, 1, 2);
        spec.slow_uncontrollable = 1;
        let qw = random_qw(&mut rng, &spec);
        let r = ddesc::flemma::subspace_r(&qw);
        assert!(r.dim() < 3);
        let z1_0 = &r.basis * DVector::from_fn(r.dim(), |_, _| rng.random_range(-1.0..1.0));
        let l = 3;
        let u = random_input(&mut rng, 1, 40);
        let tr = simulate(&qw, &z1_0, &u).unwrap();
        let sub = LemmaSubspaces::new(&qw, &z1_0);
        assert_eq!(sub.slow_reach().dim(), r.dim());
        let rep = image_check(&tr.z(), &tr.u, l, None, &sub).unwrap();
        assert!(rep.product_equal && rep.graph_equal);
        assert_eq!(rep.image_dim, r.dim() + l);
    }
}

#[test]
fn unexciting_input_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let qw = random_qw(&mut rng, &GenSpec::new(2, 1, 1, 1, 1));
    let z1_0 = DVector::from_element(2, 1.0);
    let tr = simulate(&qw, &z1_0, &vec![DVector::zeros(1); 30]).unwrap();
    let sub = LemmaSubspaces::new(&qw, &z1_0);
    assert!(matches!(
        image_check(&tr.z(), &tr.u, 3, None, &sub),
        Err(Error::InsufficientExcitation {
            required: 5,
            achieved: 0
        })
    ));
}

#[test]
fn perturbed_window_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    // data rank ≤ q + m(L + s − 1) = 6 < (m + p) L = 12, so a generic perturbation leaves the span
    let qw = random_qw(&mut rng, &GenSpec::new(2, 1, 1, 1, 2));
    let l = 4;
    let tr = simulate(
        &qw,
        &DVector::from_element(2, 0.5),
        &random_input(&mut rng, 1, 60),
    )
    .unwrap();
    let mut wy = tr.y[10..10 + l].to_vec();
    wy[1][0] += 1e-3;
    let err = parameterize(&tr.u[10..10 + l], &wy, &tr.u, &tr.y, l);
    assert!(matches!(err, Err(Error::NotParameterizable { residual }) if residual > 1e-6));
}

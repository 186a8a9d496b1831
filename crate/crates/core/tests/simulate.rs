mod common;

use ddesc::gen::{random_descriptor, random_input, random_qw, random_spec, GenSpec};
use ddesc::simulate::{residual, simulate, simulate_fast_backward};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{lti_outputs, markov_outputs, max_dev, seq_amax};

#[test]
fn index_one_runs_match_standard_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = rng.random_range(1..=6);
        let len = rng.random_range(1..=50);
        // alternate between invertible E and a static fast block
        let r = if i % 2 == 0 {
            0
        } else {
            rng.random_range(1..=n)
        };
        let spec = GenSpec::new(
            n - r,
            r,
            1,
            rng.random_range(1..=3),
            rng.random_range(1..=3),
        );
        let (sys, qw) = random_descriptor(&mut rng, &spec);
        let z1 = DVector::from_fn(qw.q(), |_, _| rng.random_range(-1.0..1.0));
        let u = random_input(&mut rng, spec.m, len);
        let tr = simulate(&qw, &z1, &u).unwrap().with_states(&qw);
        assert_eq!(tr.valid_len(), len);
        let oracle = if r == 0 {
            lti_outputs(&sys, &tr.x.as_ref().unwrap()[0], &u)
        } else {
            markov_outputs(&qw, &z1, &u)
        };
        let dev = max_dev(&tr.y, &oracle) / seq_amax(&oracle).max(1.0);
        worst = worst.max(dev);
        assert!(dev <= 1e-10, "instance {i}: {dev:e}");
    }
    eprintln!("worst relative deviation {worst:e}");
}

#[test]
fn simulated_trajectories_satisfy_descriptor_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..200 {
        let spec = random_spec(&mut rng, 6, 3, 3);
        let (sys, qw) = random_descriptor(&mut rng, &spec);
        let z1 = DVector::from_fn(qw.q(), |_, _| rng.random_range(-1.0..1.0));
        let len = rng.random_range(qw.s()..=40);
        let tr = simulate(&qw, &z1, &random_input(&mut rng, spec.m, len))
            .unwrap()
            .with_states(&qw);
        assert_eq!(tr.valid_len(), len - qw.s() + 1);
        let res = residual(&sys, &tr).unwrap();
        assert!(res <= 1e-9 * tr.scale(), "{res:e} {spec:?}");
    }
}

#[test]
fn superposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let spec = random_spec(&mut rng, 6, 2, 2);
        let qw = random_qw(&mut rng, &spec);
        let len = 30;
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let z = DVector::from_fn(qw.q(), |_, _| rng.random_range(-1.0..1.0));
        let z2 = DVector::from_fn(qw.q(), |_, _| rng.random_range(-1.0..1.0));
        let u = random_input(&mut rng, spec.m, len);
        let v = random_input(&mut rng, spec.m, len);
        let mix: Vec<_> = u.iter().zip(&v).map(|(x, y)| x * a + y * b).collect();
        let t1 = simulate(&qw, &z, &u).unwrap();
        let t2 = simulate(&qw, &z2, &v).unwrap();
        let t3 = simulate(&qw, &(&z * a + &z2 * b), &mix).unwrap();
        let comb: Vec<_> = t1.y.iter().zip(&t2.y).map(|(x, y)| x * a + y * b).collect();
        assert!(max_dev(&t3.y, &comb) <= 1e-9 * seq_amax(&comb).max(1.0));
    }
}

#[test]
fn perturbation_moves_states_only_inside_causal_cone() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..50 {
        let spec = random_spec(&mut rng, 6, 2, 2);
        let qw = random_qw(&mut rng, &spec);
        let s = qw.s();
        let len = 20;
        let u = random_input(&mut rng, spec.m, len);
        let k0 = rng.random_range(0..len);
        let mut w = u.clone();
        w[k0][0] += 1.0;
        let z = DVector::from_fn(qw.q(), |_, _| rng.random_range(-1.0..1.0));
        let a = simulate(&qw, &z, &u).unwrap();
        let b = simulate(&qw, &z, &w).unwrap();
        for k in 0..a.valid_len() {
            if k <= k0 {
                assert_eq!(a.z1[k], b.z1[k]);
            }
            if k + s <= k0 || k > k0 {
                assert_eq!(a.z2[k], b.z2[k], "k={k} k0={k0} s={s}");
            }
        }
    }
}

#[test]
fn backward_form_agrees_with_future_input_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..50 {
        let spec = random_spec(&mut rng, 6, 2, 2);
        let qw = random_qw(&mut rng, &spec);
        let u = random_input(&mut rng, spec.m, 25);
        let tr = simulate(&qw, &DVector::zeros(qw.q()), &u).unwrap();
        let horizon = rng.random_range(qw.s()..tr.valid_len());
        let back = simulate_fast_backward(&qw, &tr.z2[horizon], &u, horizon).unwrap();
        for k in 0..=horizon - qw.s() {
            assert!((&back[k] - &tr.z2[k]).amax() <= 1e-12 * (1.0 + tr.z2[k].amax()));
        }
    }
}

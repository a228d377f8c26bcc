//! The solution set is characterized by a vanishing projection residual.
//! These tests pin that equivalence empirically: exact solutions certify,
//! non-solutions are rejected, and the residual brackets the distance to
//! the solution from both sides with the certified constants.

mod common;

use common::dist;
use iqvi_core::certify::{certify_solution, grid_oracle, CertificateVerdict};
use iqvi_core::problem::{Mapping, MovingSet, ProblemInstance, ScalarFn};
use iqvi_core::sets::ConvexSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// f = 2x, Phi(x) = x/4 + unit ball in R^3, alpha = 2; solution at the
/// origin with contraction factor 1/8.
fn ball_instance() -> ProblemInstance {
    let f = Mapping::scaled_identity(3, 2.0).unwrap();
    let s = Mapping::scaled_identity(3, 0.25).unwrap();
    let phi = MovingSet::translation(s, ConvexSet::ball(vec![0.0; 3], 1.0).unwrap()).unwrap();
    ProblemInstance::new(f, phi, 2.0).unwrap()
}

/// f(x) = x on the line, constant set [-1, 1], alpha = 2; solution 0.
fn scalar_instance() -> ProblemInstance {
    let f = Mapping::componentwise(vec![ScalarFn::linear(1.0, 0.0).unwrap()]).unwrap();
    let phi = MovingSet::constant(ConvexSet::interval(-1.0, 1.0).unwrap());
    ProblemInstance::new(f, phi, 2.0).unwrap()
}

#[test]
fn residual_vanishes_exactly_at_solutions() {
    let ball = ball_instance();
    assert_eq!(ball.residual(&[0.0; 3]).unwrap(), 0.0);
    let cert = certify_solution(&ball, &[0.0; 3], 9, 64, 1e-9).unwrap();
    assert_eq!(cert.verdict, CertificateVerdict::Certified);

    let scalar = scalar_instance();
    assert_eq!(scalar.residual(&[0.0]).unwrap(), 0.0);
    let cert = certify_solution(&scalar, &[0.0], 9, 64, 1e-9).unwrap();
    assert_eq!(cert.verdict, CertificateVerdict::Certified);
}

#[test]
fn residual_brackets_distance_to_solution() {
    let problem = ball_instance();
    // Global contraction factor 1/8 gives dist <= residual / (alpha (1 - theta));
    // the residual itself is Lipschitz in x with constant 2L + alpha + kappa.
    let lower_scale = 2.0 * (1.0 - 0.125);
    let upper_scale = 2.0 * 2.0 + 2.0 + 0.25;
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..300 {
        let x: Vec<f64> = (0..3).map(|_| 20.0 * rng.gen::<f64>() - 10.0).collect();
        let d = dist(&x, &[0.0; 3]);
        let r = problem.residual(&x).unwrap();
        assert!(d <= r / lower_scale + 1e-9, "distance bound failed at {x:?}");
        assert!(r <= upper_scale * d + 1e-9, "Lipschitz bound failed at {x:?}");
    }
}

#[test]
fn certificate_rejects_non_solutions() {
    let problem = ball_instance();
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for _ in 0..50 {
        let x: Vec<f64> = (0..3).map(|_| 6.0 * rng.gen::<f64>() - 3.0).collect();
        if problem.residual(&x).unwrap() < 0.1 {
            continue;
        }
        let cert = certify_solution(&problem, &x, 9, 64, 1e-6).unwrap();
        assert_ne!(cert.verdict, CertificateVerdict::Certified, "certified {x:?}");
    }
}

#[test]
fn set_drift_is_bounded_by_the_shift_constant() {
    // Translated-set projections drift at most as fast as the shift map:
    // the residual translation gap is itself a difference of projections
    // of points offset by s(x) - s(y), and projections are firmly
    // nonexpansive.
    let problem = ball_instance();
    let phi = problem.moving_set();
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..300 {
        let x: Vec<f64> = (0..3).map(|_| 8.0 * rng.gen::<f64>() - 4.0).collect();
        let y: Vec<f64> = (0..3).map(|_| 8.0 * rng.gen::<f64>() - 4.0).collect();
        let z: Vec<f64> = (0..3).map(|_| 12.0 * rng.gen::<f64>() - 6.0).collect();
        let px = phi.project(&x, &z).unwrap();
        let py = phi.project(&y, &z).unwrap();
        assert!(
            dist(&px, &py) <= 0.25 * dist(&x, &y) + 1e-9,
            "drift exceeded kappa * ||x - y||"
        );
    }
}

#[test]
fn exhaustive_search_recovers_known_solutions() {
    let scalar = scalar_instance();
    let (x, r) = grid_oracle(&scalar, &[-3.0], &[3.0], 1e-3).unwrap();
    assert!(x[0].abs() <= 1e-4);
    assert!(r <= 1e-5);

    let f = Mapping::scaled_identity(2, 2.0).unwrap();
    let s = Mapping::scaled_identity(2, 0.25).unwrap();
    let phi = MovingSet::translation(s, ConvexSet::ball(vec![0.0; 2], 1.0).unwrap()).unwrap();
    let planar = ProblemInstance::new(f, phi, 2.0).unwrap();
    let (x, r) = grid_oracle(&planar, &[-2.0, -2.0], &[2.0, 2.0], 1e-2).unwrap();
    assert!(dist(&x, &[0.0, 0.0]) <= 1e-4);
    assert!(r <= 1e-4);
}

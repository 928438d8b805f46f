mod common;

use cfprop_core::krylov::{krylov_error_estimate, lanczos_step_expand, TridiagonalSystem};
use cfprop_core::oracle::{dense_expm_action, DenseHermitian};
use cfprop_core::{expm_action, KrylovConfig, WaveVector, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_hermitian, random_state};

#[test]
fn matches_dense_on_random_64() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let h = random_hermitian(&mut rng, 64);
        let u = random_state(&mut rng, 64);
        let tau = rng.random_range(0.05..0.3);
        let exact = dense_expm_action(&h, &u, tau).unwrap();
        let (approx, stats) = expm_action(&mut h.operator(), &u, tau, &KrylovConfig::with_tol(1e-13)).unwrap();
        assert!(stats.converged);
        assert!(approx.distance(&exact) < 1e-11, "{}", approx.distance(&exact));
    }
}

#[test]
fn matches_dense_on_random_32_at_default_tol() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let h = random_hermitian(&mut rng, 32);
        let u = random_state(&mut rng, 32);
        let exact = dense_expm_action(&h, &u, 0.3).unwrap();
        let (approx, _) = expm_action(&mut h.operator(), &u, 0.3, &KrylovConfig::with_tol(1e-12)).unwrap();
        assert!(approx.distance(&exact) < 1e-10);
    }
}

#[test]
fn estimate_tracks_true_error_at_fixed_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let m = 6;
    for _ in 0..20 {
        let h = random_hermitian(&mut rng, 32);
        let u = random_state(&mut rng, 32);
        let tau = rng.random_range(0.5..1.5);
        let (mut sys, norm) = TridiagonalSystem::new(&u).unwrap();
        let mut op = h.operator();
        for _ in 0..m {
            lanczos_step_expand(&mut op, tau, &mut sys).unwrap();
        }
        let est = krylov_error_estimate(&sys).unwrap();
        let mut coeffs = sys.eigen().unwrap().exp_e1(1.0);
        coeffs.iter_mut().for_each(|c| *c *= norm);
        let approx = sys.combine(&coeffs);
        let err = approx.distance(&dense_expm_action(&h, &u, tau).unwrap());
        let ratio = est / err;
        assert!((0.01..=100.0).contains(&ratio), "estimate {est:e} vs true {err:e}");
    }
}

#[test]
fn diagonal_operator_gives_pointwise_phases() {
    let d: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
    let h = DenseHermitian::from_diagonal(&d);
    let u = WaveVector::new((0..16).map(|i| C64::new(1.0, i as f64 * 0.1)).collect());
    let out = dense_expm_action(&h, &u, 0.8).unwrap();
    for ((o, x), dj) in out.iter().zip(u.iter()).zip(&d) {
        assert!((o - x * C64::from_polar(1.0, -0.8 * dj)).norm() < 1e-13);
    }
}

fn hermitian_from(seed: u64, n: usize) -> DenseHermitian {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_hermitian(&mut rng, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn output_norm_equals_input_norm(seed in any::<u64>(), tau in -2.0f64..2.0, scale in 0.1f64..10.0) {
        let h = hermitian_from(seed, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut u = random_state(&mut rng, 24);
        u.iter_mut().for_each(|z| *z *= scale);
        let (out, _) = expm_action(&mut h.operator(), &u, tau, &KrylovConfig::default()).unwrap();
        prop_assert!((out.norm() - u.norm()).abs() <= 1e-12 * scale);
    }

    #[test]
    fn lanczos_basis_stays_orthonormal(seed in any::<u64>(), tau in 0.1f64..3.0) {
        let h = hermitian_from(seed, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(7));
        let u = random_state(&mut rng, 40);
        let (mut sys, _) = TridiagonalSystem::new(&u).unwrap();
        let mut op = h.operator();
        for _ in 0..10 {
            lanczos_step_expand(&mut op, tau, &mut sys).unwrap();
        }
        let basis = sys.basis();
        let gram = DMatrix::from_fn(basis.len(), basis.len(), |i, j| basis[i].inner(&basis[j]));
        let dev = (gram - DMatrix::<C64>::identity(basis.len(), basis.len())).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(dev < 1e-10, "loss of orthogonality {dev:e}");
    }

    #[test]
    fn negative_step_inverts(seed in any::<u64>(), tau in 0.05f64..0.3) {
        let h = hermitian_from(seed, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(!seed);
        let u = random_state(&mut rng, 24);
        let cfg = KrylovConfig::with_tol(1e-13);
        let (fwd, _) = expm_action(&mut h.operator(), &u, tau, &cfg).unwrap();
        let (back, _) = expm_action(&mut h.operator(), &fwd, -tau, &cfg).unwrap();
        prop_assert!(back.distance(&u) < 1e-11);
    }
}

#![allow(dead_code)]

use cfprop_core::oracle::DenseHermitian;
use cfprop_core::{morse_ground_state, Envelope, MorseConfig, PotentialModel, SpatialGrid, WaveVector, C64};
use nalgebra::DMatrix;
use rand::Rng;

pub fn walker_preston(n: usize) -> (PotentialModel, WaveVector, MorseConfig) {
    let cfg = MorseConfig::default();
    let grid = SpatialGrid::new(-0.8, 4.32, n).unwrap();
    let model = PotentialModel::walker_preston(grid.clone(), &cfg).unwrap();
    let u0 = morse_ground_state(&cfg, &grid).unwrap();
    (model, u0, cfg)
}

/// Harmonic trap with a periodically modulated stiffness,
/// `V = x²/2 + cos(2t)·x²/2`, `μ = 1`, on `[−8, 8)`.
pub fn driven_oscillator(n: usize) -> PotentialModel {
    let grid = SpatialGrid::new(-8.0, 8.0, n).unwrap();
    let x = grid.points().to_vec();
    let half_sq: Vec<f64> = x.iter().map(|x| 0.5 * x * x).collect();
    PotentialModel::external_field(
        grid,
        1.0,
        half_sq.clone(),
        half_sq,
        Envelope::Cosine { amplitude: 1.0, omega: 2.0 },
    )
    .unwrap()
    .with_field_derivative(x)
    .unwrap()
}

/// Normalized `exp(−(x−c)²/(2s²))`.
pub fn gaussian(grid: &SpatialGrid, center: f64, width: f64) -> WaveVector {
    let mut u = WaveVector::new(
        grid.points()
            .iter()
            .map(|x| C64::new((-(x - center) * (x - center) / (2.0 * width * width)).exp(), 0.0))
            .collect(),
    );
    u.normalize().unwrap();
    u
}

/// `(G + Gᴴ)/(2√n)` with uniform complex entries in the unit square.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> DenseHermitian {
    let g = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    DenseHermitian::new((&g + g.adjoint()) * C64::new(0.5 / (n as f64).sqrt(), 0.0)).unwrap()
}

pub fn random_state<R: Rng>(rng: &mut R, n: usize) -> WaveVector {
    let mut u = WaveVector::new(
        (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
    );
    u.normalize().unwrap();
    u
}

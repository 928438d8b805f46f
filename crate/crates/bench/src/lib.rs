//! Shared fixtures for the criterion benchmarks.

use cfprop_core::{morse_ground_state, MorseConfig, PotentialModel, SpatialGrid, WaveVector};

/// Driven Morse oscillator on `n` points with its ground state.
pub fn walker_preston(n: usize) -> (PotentialModel, WaveVector, MorseConfig) {
    let cfg = MorseConfig::default();
    let grid = SpatialGrid::new(-0.8, 4.32, n).expect("valid grid");
    let model = PotentialModel::walker_preston(grid.clone(), &cfg).expect("valid model");
    let u0 = morse_ground_state(&cfg, &grid).expect("ground state");
    (model, u0, cfg)
}

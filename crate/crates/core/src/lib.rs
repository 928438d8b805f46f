//! Commutator-free exponential propagators for the 1-D time-dependent
//! Schrödinger equation `i u′ = (T + V(t)) u` on a periodic Fourier grid.
//!
//! Exponentials of `T + V` are applied through Lanczos–Krylov projection;
//! exponentials of pure potentials are pointwise phases and cost no FFTs.
//! The cost of a propagation is counted in forward+inverse FFT pairs.

// comparisons written as `!(x > 0.0)` also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bench;
pub mod error;
pub mod krylov;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod schemes;
pub mod spectral;

pub use bench::{
    compute_reference, emit_csv, emit_table, parse_csv, run_benchmark, BenchConfig, BenchRecord, GridSpec,
    ReferenceSpec, TolPolicy,
};
pub use error::{CfError, Result};
pub use krylov::{expm_action, KrylovConfig, KrylovStats, TridiagonalSystem};
pub use model::{morse_ground_state, Envelope, MorseConfig, PotentialModel};
pub use quadrature::{alpha_weights_for, gl6, AlphaWeights, QuadratureRule};
pub use schemes::{builtin_scheme, propagate, step, SchemeTable, Stage, SCHEME_NAMES};
pub use spectral::{FftCounter, SpatialGrid, WaveVector, C64};

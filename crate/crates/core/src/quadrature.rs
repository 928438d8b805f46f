//! Quadrature rules on `[0, 1]` and the map from Hamiltonian samples to the
//! graded combinations `α₁, α₂, α₃`.
//!
//! For the three-node Gauss–Legendre rule the combinations are
//!
//! ```text
//! α₁ = τ H₂,  α₂ = τ (√15/3)(H₃ − H₁),  α₃ = τ (10/3)(H₃ − 2H₂ + H₁)
//! ```
//!
//! and any other rule of order at least six is mapped onto the same
//! combinations with `W = G Q⁻¹ Q̃`.

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{CfError, Result};

/// Nodes and weights of a quadrature rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: u32,
}

impl QuadratureRule {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, order: u32) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(CfError::Config(format!(
                "rule needs matching non-empty nodes/weights, got {} and {}",
                nodes.len(),
                weights.len()
            )));
        }
        if order < 6 {
            return Err(CfError::Config(format!("rule order must be >= 6, got {order}")));
        }
        if nodes.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(CfError::Config("nodes must lie in [0, 1]".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CfError::Config("nodes must be strictly increasing".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-14 {
            return Err(CfError::Config(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { nodes, weights, order })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ b_j f(c_j)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&c, &b)| b * f(c)).sum()
    }

    /// Built-in rules by name: `gl6` (alias `gauss-legendre-3`),
    /// `gauss-legendre-4`, `gauss-legendre-5`, `lobatto-4`, `lobatto-5`.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "gl6" | "gauss-legendre-3" => Ok(gl6()),
            "gauss-legendre-4" => Ok(gauss_legendre_4()),
            "gauss-legendre-5" => Ok(gauss_legendre_5()),
            "lobatto-4" => Ok(gauss_lobatto_4()),
            "lobatto-5" => Ok(gauss_lobatto_5()),
            other => Err(CfError::Config(format!("unknown quadrature rule `{other}`"))),
        }
    }

    pub const NAMES: [&'static str; 5] =
        ["gl6", "gauss-legendre-4", "gauss-legendre-5", "lobatto-4", "lobatto-5"];
}

/// Maps sample-space `[f(t+c̃₁τ), …, f(t+c̃ₖτ)]` to `(α₁, α₂, α₃)/τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaWeights {
    matrix: DMatrix<f64>,
    gl6: bool,
}

impl AlphaWeights {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_samples(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    /// `(3/√15)·W₂`, the weights giving `V₃ − V₁` on GL6 nodes; exactly
    /// `(−1, 0, 1)` for GL6 itself.
    pub fn difference_row(&self) -> Vec<f64> {
        if self.gl6 {
            return vec![-1.0, 0.0, 1.0];
        }
        self.matrix.row(1).iter().map(|w| w * 3.0 / SQRT15).collect()
    }

    /// Combination `Σ_l W_{i,l} s_l` of scalar samples.
    pub fn combine(&self, i: usize, samples: &[f64]) -> f64 {
        self.matrix.row(i).iter().zip(samples).map(|(w, s)| w * s).sum()
    }

    /// Lower an x-space row `(x₁, x₂, x₃)` to sample-space weights `x·W`.
    pub fn lower(&self, x: [f64; 3]) -> Vec<f64> {
        (0..self.n_samples())
            .map(|l| (0..3).map(|i| x[i] * self.matrix[(i, l)]).sum())
            .collect()
    }
}

const SQRT15: f64 = 3.872_983_346_207_417;

/// Three-node Gauss–Legendre rule (order 6).
pub fn gl6() -> QuadratureRule {
    let h = SQRT15 / 10.0;
    QuadratureRule {
        nodes: vec![0.5 - h, 0.5, 0.5 + h],
        weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
        order: 6,
    }
}

fn gauss_legendre_4() -> QuadratureRule {
    // on [-1, 1]: ±sqrt(3/7 ∓ 2/7 sqrt(6/5)), weights (18 ± sqrt 30)/36
    let s = (6.0f64 / 5.0).sqrt();
    let inner = (3.0 / 7.0 - 2.0 / 7.0 * s).sqrt();
    let outer = (3.0 / 7.0 + 2.0 / 7.0 * s).sqrt();
    let w_in = (18.0 + 30f64.sqrt()) / 36.0;
    let w_out = (18.0 - 30f64.sqrt()) / 36.0;
    symmetric_rule(&[(-outer, w_out), (-inner, w_in), (inner, w_in), (outer, w_out)], 8)
}

fn gauss_legendre_5() -> QuadratureRule {
    let r = (10.0f64 / 7.0).sqrt();
    let inner = (5.0 - 2.0 * r).sqrt() / 3.0;
    let outer = (5.0 + 2.0 * r).sqrt() / 3.0;
    let s70 = 70f64.sqrt();
    let w_in = (322.0 + 13.0 * s70) / 900.0;
    let w_out = (322.0 - 13.0 * s70) / 900.0;
    symmetric_rule(
        &[(-outer, w_out), (-inner, w_in), (0.0, 128.0 / 225.0), (inner, w_in), (outer, w_out)],
        10,
    )
}

/// Four-node Gauss–Lobatto rule (order 6), endpoints included.
pub fn gauss_lobatto_4() -> QuadratureRule {
    let a = 1.0 / 5f64.sqrt();
    symmetric_rule(&[(-1.0, 1.0 / 6.0), (-a, 5.0 / 6.0), (a, 5.0 / 6.0), (1.0, 1.0 / 6.0)], 6)
}

fn gauss_lobatto_5() -> QuadratureRule {
    let a = (3.0f64 / 7.0).sqrt();
    symmetric_rule(
        &[(-1.0, 0.1), (-a, 49.0 / 90.0), (0.0, 32.0 / 45.0), (a, 49.0 / 90.0), (1.0, 0.1)],
        8,
    )
}

/// Maps `(node, weight)` pairs on `[-1, 1]` to `[0, 1]`.
fn symmetric_rule(pairs: &[(f64, f64)], order: u32) -> QuadratureRule {
    let nodes = pairs.iter().map(|(x, _)| 0.5 * (x + 1.0)).collect();
    let weights: Vec<f64> = pairs.iter().map(|(_, w)| 0.5 * w).collect();
    QuadratureRule { nodes, weights, order }
}

/// The matrix taking GL6 samples `(H₁, H₂, H₃)` to `(α₁, α₂, α₃)/τ`.
pub fn matrix_g() -> Matrix3<f64> {
    let r = SQRT15 / 3.0;
    Matrix3::new(
        0.0, 1.0, 0.0, //
        -r, 0.0, r, //
        10.0 / 3.0, -20.0 / 3.0, 10.0 / 3.0,
    )
}

/// Moment matrix `M_{i,l} = b_l (c_l − ½)^{i−1}`, `i = 1..3`.
fn moment_matrix(rule: &QuadratureRule) -> DMatrix<f64> {
    DMatrix::from_fn(3, rule.len(), |i, l| {
        rule.weights[l] * (rule.nodes[l] - 0.5).powi(i as i32)
    })
}

/// `W = G Q⁻¹ Q̃` for the given rule; `W = G` for GL6 itself.
pub fn alpha_weights_for(rule: &QuadratureRule) -> Result<AlphaWeights> {
    if rule.order < 6 {
        return Err(CfError::Config(format!("rule order {} < 6", rule.order)));
    }
    let gl = gl6();
    if rule == &gl {
        let g = matrix_g();
        return Ok(AlphaWeights { matrix: DMatrix::from_fn(3, 3, |i, j| g[(i, j)]), gl6: true });
    }
    let q = moment_matrix(&gl);
    let q3 = Matrix3::from_fn(|i, j| q[(i, j)]);
    let q_inv = q3
        .try_inverse()
        .ok_or_else(|| CfError::Internal("GL6 moment matrix is singular".into()))?;
    let gq = matrix_g() * q_inv;
    let gq = DMatrix::from_fn(3, 3, |i, j| gq[(i, j)]);
    Ok(AlphaWeights { matrix: gq * moment_matrix(rule), gl6: false })
}

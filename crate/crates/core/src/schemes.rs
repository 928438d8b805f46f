//! Commutator-free propagators `Π_j e^{−iτH̃_j}` with
//! `H̃_j = a_j T + Σ_l a_{j,l} V(t_k + c_l τ)`.
//!
//! Tables are held in x-space, i.e. as coefficients of `(α₁, α₂, α₃)`, and
//! lowered to sample weights through [`AlphaWeights`] for the quadrature rule
//! in use. Stages are stored in application order: stage 0 is the rightmost
//! factor of the product.

use num_complex::Complex64;

use crate::error::{CfError, Result};
use crate::krylov::{expm_action, KrylovConfig, KrylovStats};
use crate::model::PotentialModel;
use crate::quadrature::{alpha_weights_for, gl6, matrix_g, AlphaWeights, QuadratureRule};
use crate::spectral::{FftCounter, WaveVector};

/// Names accepted by [`builtin_scheme`].
pub const SCHEME_NAMES: [&str; 6] = ["midpoint", "midpoint-avg", "cf4-2", "cf6-2d", "cf6-3", "cf6-5alv"];

/// One exponential `e^{−iτ(aT + Σ_l w_l V_l + m τ² Ṽ)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// `a`; zero marks a diagonal stage.
    pub kinetic_coeff: f64,
    /// Sample-space weights `w_l`.
    pub potential_weights: Vec<f64>,
    /// Multiplier `m` on the modified potential.
    pub modified_weight: f64,
    /// x-space row `(x₁, x₂, x₃)`.
    pub x: [f64; 3],
}

impl Stage {
    pub fn is_diagonal(&self) -> bool {
        self.kinetic_coeff == 0.0
    }
}

#[derive(Debug, Clone)]
pub struct SchemeTable {
    name: String,
    order: u32,
    stages: Vec<Stage>,
    requires_derivative: bool,
    quadrature: QuadratureRule,
    weights: AlphaWeights,
}

impl SchemeTable {
    /// Builds a table from x-space rows `(x, modified_weight)` in application order.
    pub fn from_x_rows(
        name: &str,
        order: u32,
        rows: &[([f64; 3], f64)],
        quadrature: QuadratureRule,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(CfError::Config("scheme needs at least one stage".into()));
        }
        let weights = alpha_weights_for(&quadrature)?;
        let stages = rows
            .iter()
            .map(|&(x, modified_weight)| Stage {
                kinetic_coeff: x[0],
                potential_weights: weights.lower(x),
                modified_weight,
                x,
            })
            .collect();
        let requires_derivative = rows.iter().any(|r| r.1 != 0.0);
        Ok(Self { name: name.to_string(), order, stages, requires_derivative, quadrature, weights })
    }

    /// Builds a table from GL6 sample-space rows `a_{i,·}` in application order.
    pub fn from_gl6_rows(name: &str, order: u32, rows: &[[f64; 3]]) -> Result<Self> {
        let g_inv = matrix_g()
            .try_inverse()
            .ok_or_else(|| CfError::Internal("G is singular".into()))?;
        let x_rows: Vec<([f64; 3], f64)> = rows
            .iter()
            .map(|a| {
                let mut x = [0.0; 3];
                for (k, xk) in x.iter_mut().enumerate() {
                    *xk = (0..3).map(|j| a[j] * g_inv[(j, k)]).sum();
                }
                // row 1 of G sums to 1 and rows 2-3 to 0, so x₁ = Σ a
                x[0] = a[0] + a[1] + a[2];
                (x, 0.0)
            })
            .collect();
        Self::from_x_rows(name, order, &x_rows, gl6())
    }

    /// The same scheme on the nodes of another rule of order ≥ 6.
    pub fn with_quadrature(&self, rule: QuadratureRule) -> Result<Self> {
        let rows: Vec<([f64; 3], f64)> = self.stages.iter().map(|s| (s.x, s.modified_weight)).collect();
        Self::from_x_rows(&self.name, self.order, &rows, rule)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn requires_derivative(&self) -> bool {
        self.requires_derivative
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quadrature
    }

    pub fn alpha_weights(&self) -> &AlphaWeights {
        &self.weights
    }

    /// Number of exponentials that need Krylov (non-diagonal stages).
    pub fn kinetic_stage_count(&self) -> usize {
        self.stages.iter().filter(|s| !s.is_diagonal()).count()
    }

    /// `x_{m−i+1,j} = (−1)^{j+1} x_{i,j}` for all stages.
    pub fn is_time_symmetric(&self) -> bool {
        let m = self.stages.len();
        (0..m).all(|i| {
            let (a, b) = (&self.stages[i], &self.stages[m - 1 - i]);
            let close = |p: f64, q: f64| (p - q).abs() <= 1e-14 * (1.0 + p.abs());
            close(b.x[0], a.x[0])
                && close(b.x[1], -a.x[1])
                && close(b.x[2], a.x[2])
                && b.modified_weight == a.modified_weight
        })
    }

    /// Rejects models that cannot supply what the scheme needs.
    pub fn check_model(&self, model: &PotentialModel) -> Result<()> {
        if self.requires_derivative && !model.supports_modified_potential() {
            return Err(CfError::Capability(format!(
                "scheme `{}` needs spatial derivatives of the time-dependent potential",
                self.name
            )));
        }
        Ok(())
    }
}

/// Built-in schemes:
///
/// * `midpoint`: exponential midpoint, order 2;
/// * `midpoint-avg`: one exponential of the GL6-averaged Hamiltonian, order 2;
/// * `cf4-2`: two Krylov exponentials plus two diagonal ones, order 4;
/// * `cf6-2d`: `cf4-2` with the modified potential in the outer stages, order 6;
/// * `cf6-3`: three Krylov exponentials plus two diagonal ones, order 6;
/// * `cf6-5alv`: five-exponential sixth-order reference scheme.
pub fn builtin_scheme(name: &str) -> Result<SchemeTable> {
    match name {
        "midpoint" => SchemeTable::from_x_rows(name, 2, &[([1.0, 0.0, 0.0], 0.0)], gl6()),
        "midpoint-avg" => SchemeTable::from_x_rows(name, 2, &[([1.0, 0.0, 1.0 / 12.0], 0.0)], gl6()),
        "cf4-2" => SchemeTable::from_x_rows(name, 4, &two_exponential_rows(0.0), gl6()),
        "cf6-2d" => SchemeTable::from_x_rows(name, 6, &two_exponential_rows(1.0), gl6()),
        "cf6-3" => SchemeTable::from_gl6_rows(name, 6, &cf6_3_rows()),
        "cf6-5alv" => SchemeTable::from_gl6_rows(name, 6, &cf6_5_rows()),
        other => Err(CfError::UnknownScheme(other.to_string())),
    }
}

fn two_exponential_rows(modified: f64) -> [([f64; 3], f64); 4] {
    let (x12, x13) = (-1.0 / 60.0, 1.0 / 60.0);
    let (x21, x22, x23) = (0.5, -2.0 / 15.0, 1.0 / 40.0);
    [
        ([0.0, x12, x13], modified),
        ([x21, x22, x23], 0.0),
        ([x21, -x22, x23], 0.0),
        ([0.0, -x12, x13], modified),
    ]
}

/// Printed sample-space coefficients of the three-exponential scheme.
pub mod cf6_3 {
    pub const A11: f64 = 0.019_940_962_650_936_107_45;
    pub const A21: f64 = 0.488_252_491_022_822_195_7;
    pub const A22: f64 = -0.004_613_683_017_563_062_1;
    pub const A23: f64 = 0.083_401_910_860_218_294_0;
    pub const A31: f64 = -0.293_876_624_105_262_711_91;
    pub const A32: f64 = 0.453_671_810_479_570_568_7;
    /// `a₂ = Σ_j a_{2,j}`.
    pub const A2: f64 = 0.567_040_718_865_477_427_57;
    /// `a₃ = 1 − 2a₂`.
    pub const A3: f64 = -0.134_081_437_730_954_855_15;
}

fn cf6_3_rows() -> [[f64; 3]; 5] {
    use cf6_3::*;
    [
        [A11, 0.0, -A11],
        [A21, A22, A23],
        [A31, A32, A31],
        [A23, A22, A21],
        [-A11, 0.0, A11],
    ]
}

/// First three rows of the five-exponential scheme; the rest follow from
/// `a_{i,j} = a_{6−i,4−j}`.
pub const CF6_5_TOP: [[f64; 3]; 3] = [
    [0.203_952_578_716_323, -0.059_581_898_090_478, 0.015_629_319_374_155],
    [0.133_906_069_544_898, 0.314_511_533_222_506, -0.060_893_550_742_092],
    [-0.014_816_639_115_506, -0.065_414_825_819_611, -0.014_816_639_115_506],
];

fn cf6_5_rows() -> [[f64; 3]; 5] {
    let mut rows = [[0.0; 3]; 5];
    rows[..3].copy_from_slice(&CF6_5_TOP);
    for i in 3..5 {
        for j in 0..3 {
            rows[i][j] = CF6_5_TOP[4 - i][2 - j];
        }
    }
    rows
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Default)]
pub struct StepStats {
    pub krylov: Vec<KrylovStats>,
    /// FFT pairs spent in this step.
    pub fft_pairs: u64,
    /// Krylov calls that hit `m_max` above tolerance.
    pub cap_warnings: usize,
}

/// Advances `u` from `t_k` to `t_k + tau`.
///
/// Diagonal stages are exact pointwise phases and cost nothing; each other
/// stage is a Krylov exponential costing one FFT pair per Lanczos vector.
/// A negative `tau` runs the scheme backwards in time.
pub fn step(
    scheme: &SchemeTable,
    u: &WaveVector,
    t_k: f64,
    tau: f64,
    model: &PotentialModel,
    kcfg: &KrylovConfig,
    counter: &mut FftCounter,
) -> Result<(WaveVector, StepStats)> {
    if !tau.is_finite() || tau == 0.0 {
        return Err(CfError::Config(format!("step must be finite and nonzero, got {tau}")));
    }
    scheme.check_model(model)?;
    let grid = model.grid();
    if u.len() != grid.len() {
        return Err(CfError::Config(format!(
            "state length {} does not match grid size {}",
            u.len(),
            grid.len()
        )));
    }
    let start = counter.transforms();
    let n = grid.len();
    let nodes = scheme.quadrature.nodes();

    let samples: Vec<Option<Vec<f64>>> = (0..nodes.len())
        .map(|l| {
            let used = scheme.stages.iter().any(|s| s.potential_weights[l] != 0.0);
            used.then(|| model.potential_at(t_k + nodes[l] * tau))
        })
        .collect();
    let modified = if scheme.stages.iter().any(|s| s.modified_weight != 0.0) {
        Some(model.modified_potential_with(t_k, tau, nodes, &scheme.weights.difference_row(), counter)?)
    } else {
        None
    };
    let kinetic = grid.kinetic_eigenvalues(model.mu());

    let mut state = u.clone();
    let mut stats = StepStats::default();
    let mut diag = vec![0.0; n];
    for stage in &scheme.stages {
        diag.iter_mut().for_each(|d| *d = 0.0);
        for (w, sample) in stage.potential_weights.iter().zip(&samples) {
            if let Some(v) = sample {
                for (d, x) in diag.iter_mut().zip(v) {
                    *d += w * x;
                }
            }
        }
        if stage.modified_weight != 0.0 {
            let vt = modified
                .as_ref()
                .ok_or_else(|| CfError::Internal("modified potential missing".into()))?;
            let scale = stage.modified_weight * tau * tau;
            for (d, x) in diag.iter_mut().zip(vt) {
                *d += scale * x;
            }
        }
        if stage.is_diagonal() {
            for (z, d) in state.iter_mut().zip(&diag) {
                *z *= Complex64::from_polar(1.0, -tau * d);
            }
        } else {
            let a = stage.kinetic_coeff;
            let mut apply = |x: &[Complex64], y: &mut [Complex64]| {
                grid.apply_shifted_kinetic(x, &kinetic, a, &diag, y, counter)
            };
            let (next, ks) = expm_action(&mut apply, &state, tau, kcfg)?;
            if !ks.converged {
                stats.cap_warnings += 1;
            }
            stats.krylov.push(ks);
            state = next;
        }
    }
    stats.fft_pairs = (counter.transforms() - start) / 2;
    Ok((state, stats))
}

/// Totals over a propagation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PropagationStats {
    pub n_steps: usize,
    pub fft_pairs: u64,
    pub krylov_calls: usize,
    pub max_krylov_dim: usize,
    pub cap_warnings: usize,
}

/// `n_steps` uniform steps from `t0` to `t_f`.
pub fn propagate(
    scheme: &SchemeTable,
    u0: &WaveVector,
    t0: f64,
    t_f: f64,
    n_steps: usize,
    model: &PotentialModel,
    kcfg: &KrylovConfig,
) -> Result<(WaveVector, PropagationStats)> {
    if n_steps == 0 {
        return Err(CfError::Config("n_steps must be >= 1".into()));
    }
    scheme.check_model(model)?;
    kcfg.validate()?;
    let tau = (t_f - t0) / n_steps as f64;
    let mut counter = FftCounter::new();
    let mut stats = PropagationStats { n_steps, ..Default::default() };
    let mut u = u0.clone();
    for k in 0..n_steps {
        let t_k = t0 + k as f64 * tau;
        let (next, s) = step(scheme, &u, t_k, tau, model, kcfg, &mut counter)?;
        stats.krylov_calls += s.krylov.len();
        stats.cap_warnings += s.cap_warnings;
        stats.max_krylov_dim = s.krylov.iter().map(|k| k.m_used).fold(stats.max_krylov_dim, usize::max);
        u = next;
    }
    stats.fft_pairs = counter.pairs();
    Ok((u, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{morse_ground_state, MorseConfig};
    use crate::quadrature::gauss_lobatto_4;
    use crate::spectral::SpatialGrid;

    const SQRT15: f64 = 3.872_983_346_207_417;

    fn wp(n: usize) -> (PotentialModel, WaveVector, MorseConfig) {
        let cfg = MorseConfig::default();
        let grid = SpatialGrid::new(-0.8, 4.32, n).unwrap();
        let model = PotentialModel::walker_preston(grid.clone(), &cfg).unwrap();
        let u0 = morse_ground_state(&cfg, &grid).unwrap();
        (model, u0, cfg)
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(builtin_scheme("cf8"), Err(CfError::UnknownScheme(_))));
    }

    #[test]
    fn cf4_2_printed_coefficients() {
        let s = builtin_scheme("cf4-2").unwrap();
        let st = s.stages();
        let a1 = [(10.0 + SQRT15) / 180.0, -1.0 / 9.0, (10.0 - SQRT15) / 180.0];
        let a2 = [(15.0 + 8.0 * SQRT15) / 90.0, 2.0 / 3.0, (15.0 - 8.0 * SQRT15) / 90.0];
        for j in 0..3 {
            assert!((st[0].potential_weights[j] - a1[j]).abs() < 1e-14);
            assert!((st[3].potential_weights[j] - a1[2 - j]).abs() < 1e-14);
            // inner stages carry τ/2: weights are half the printed V̄ rows
            assert!((st[1].potential_weights[j] / st[1].kinetic_coeff - a2[j]).abs() < 1e-14);
            assert!((st[2].potential_weights[j] / st[2].kinetic_coeff - a2[2 - j]).abs() < 1e-14);
        }
        assert!(a1.iter().sum::<f64>().abs() < 1e-16);
        assert!((a2.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(st[0].is_diagonal() && st[3].is_diagonal());
        assert_eq!(s.kinetic_stage_count(), 2);
        assert!(!s.requires_derivative());
        assert!(builtin_scheme("cf6-2d").unwrap().requires_derivative());
    }

    #[test]
    fn cf6_3_printed_coefficients() {
        use cf6_3::*;
        assert!((2.0 * A2 + A3 - 1.0).abs() < 1e-15);
        assert!((A21 + A22 + A23 - A2).abs() < 1e-15);
        assert!((2.0 * A31 + A32 - A3).abs() < 1e-15);
        let s = builtin_scheme("cf6-3").unwrap();
        let rows = cf6_3_rows();
        for (stage, row) in s.stages().iter().zip(rows) {
            for (w, a) in stage.potential_weights.iter().zip(row) {
                assert!((w - a).abs() < 1e-15);
            }
        }
        assert!(s.stages()[2].kinetic_coeff < 0.0);
        assert_eq!(s.kinetic_stage_count(), 3);
    }

    #[test]
    fn cf6_5_symmetry() {
        let rows = cf6_5_rows();
        assert_eq!(rows[3][0], rows[1][2]);
        assert_eq!(rows[3][0], -0.060893550742092);
        let total: f64 = rows.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert_eq!(builtin_scheme("cf6-5alv").unwrap().kinetic_stage_count(), 5);
    }

    #[test]
    fn kinetic_coefficients_sum_to_one() {
        for name in SCHEME_NAMES {
            let s = builtin_scheme(name).unwrap();
            let total: f64 = s.stages().iter().map(|st| st.kinetic_coeff).sum();
            assert!((total - 1.0).abs() < 1e-14, "{name}");
            for st in s.stages() {
                let sum: f64 = st.potential_weights.iter().sum();
                assert!((sum - st.kinetic_coeff).abs() < 1e-14, "{name}");
            }
            assert!(s.is_time_symmetric(), "{name}");
        }
    }

    #[test]
    fn lowering_reproduces_x_rows() {
        let s = builtin_scheme("cf4-2").unwrap();
        assert_eq!(s.stages()[1].x, [0.5, -2.0 / 15.0, 1.0 / 40.0]);
        let s6 = builtin_scheme("cf6-3").unwrap();
        // x₁,₃ = 0 and the outer stages carry α₂ only
        assert!(s6.stages()[0].x[0] == 0.0);
        assert!(s6.stages()[0].x[2].abs() < 1e-16);
    }

    #[test]
    fn capability_checked_before_stepping() {
        let grid = SpatialGrid::new(-0.8, 4.32, 32).unwrap();
        let m = PotentialModel::external_field(
            grid.clone(),
            1745.0,
            vec![0.0; 32],
            grid.points().to_vec(),
            crate::model::Envelope::Cosine { amplitude: 0.01, omega: 0.02 },
        )
        .unwrap();
        let s = builtin_scheme("cf6-2d").unwrap();
        let u = WaveVector::from_real(&[1.0 / 32f64.sqrt(); 32]);
        let err = propagate(&s, &u, 0.0, 1.0, 1, &m, &KrylovConfig::default());
        assert!(matches!(err, Err(CfError::Capability(_))));
    }

    #[test]
    fn step_preserves_norm_and_counts() {
        let (model, u0, _) = wp(64);
        let mut counter = FftCounter::new();
        for name in SCHEME_NAMES {
            let s = builtin_scheme(name).unwrap();
            let (u, st) =
                step(&s, &u0, 10.0, 3.5, &model, &KrylovConfig::with_tol(1e-12), &mut counter).unwrap();
            assert!((u.norm() - 1.0).abs() < 1e-11, "{name}");
            let m: usize = st.krylov.iter().map(|k| k.m_used).sum();
            assert_eq!(st.fft_pairs as usize, m, "{name}");
            assert_eq!(st.krylov.len(), s.kinetic_stage_count());
        }
    }

    #[test]
    fn propagate_single_step_equals_step() {
        let (model, u0, _) = wp(32);
        let s = builtin_scheme("cf6-3").unwrap();
        let k = KrylovConfig::with_tol(1e-12);
        let (a, stats) = propagate(&s, &u0, 1.0, 3.0, 1, &model, &k).unwrap();
        let mut c = FftCounter::new();
        let (b, st) = step(&s, &u0, 1.0, 2.0, &model, &k, &mut c).unwrap();
        assert_eq!(a, b);
        assert_eq!(stats.fft_pairs, st.fft_pairs);
    }

    #[test]
    fn other_quadrature_rule_is_consistent() {
        // on a model linear in time, GL6 and Lobatto samples give identical α's
        let grid = SpatialGrid::new(-0.8, 4.32, 32).unwrap();
        let cfg = MorseConfig::default();
        let stat: Vec<f64> = grid.points().iter().map(|&x| cfg.potential(x)).collect();
        let model = PotentialModel::external_field(
            grid.clone(),
            cfg.mu,
            stat,
            grid.points().to_vec(),
            crate::model::Envelope::Custom(std::sync::Arc::new(|t| 1e-3 * t + 2e-5 * t * t)),
        )
        .unwrap()
        .with_field_derivative(vec![1.0; 32])
        .unwrap();
        let u0 = morse_ground_state(&cfg, &grid).unwrap();
        let k = KrylovConfig::with_tol(1e-14);
        for name in ["cf4-2", "cf6-2d", "cf6-3"] {
            let a = builtin_scheme(name).unwrap();
            let b = a.with_quadrature(gauss_lobatto_4()).unwrap();
            assert_eq!(b.stages()[0].potential_weights.len(), 4);
            let mut c = FftCounter::new();
            let (ua, _) = step(&a, &u0, 0.5, 2.0, &model, &k, &mut c).unwrap();
            let (ub, _) = step(&b, &u0, 0.5, 2.0, &model, &k, &mut c).unwrap();
            assert!(ua.distance(&ub) < 1e-12, "{name}: {}", ua.distance(&ub));
        }
    }
}

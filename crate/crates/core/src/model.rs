//! Potentials of the form `V(x,t) = V_static(x) + f(t)·V_field(x)`, the
//! Walker–Preston instance and the diagonal modified potential `Ṽ` built
//! from the double commutator `[α₂,[α₁,α₂]]`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{CfError, Result};
use crate::quadrature::{alpha_weights_for, QuadratureRule};
use crate::spectral::{FftCounter, SpatialGrid, WaveVector};

/// Coefficient `y` of `[α₂,[α₁,α₂]]` in the outer stages of the
/// sixth-order two-exponential scheme.
pub const MODIFIED_Y: f64 = 1.0 / 43200.0;

/// `5y/3` for `y = 1/43200`; the constant of the external-field form of `Ṽ`.
pub const EXTERNAL_FIELD_CONSTANT: f64 = 1.0 / 25920.0;

/// Time envelope `f(t)` of the field term.
#[derive(Clone)]
pub enum Envelope {
    Zero,
    Constant(f64),
    /// `A cos(ωt)`.
    Cosine { amplitude: f64, omega: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Envelope::Zero => 0.0,
            Envelope::Constant(c) => *c,
            Envelope::Cosine { amplitude, omega } => amplitude * (omega * t).cos(),
            Envelope::Custom(f) => f(t),
        }
    }

    pub fn is_time_independent(&self) -> bool {
        matches!(self, Envelope::Zero | Envelope::Constant(_))
    }
}

impl fmt::Debug for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Envelope::Zero => write!(f, "Zero"),
            Envelope::Constant(c) => write!(f, "Constant({c})"),
            Envelope::Cosine { amplitude, omega } => {
                write!(f, "Cosine {{ amplitude: {amplitude}, omega: {omega} }}")
            }
            Envelope::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Where `V′_field` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldDerivative {
    Absent,
    Analytic(Vec<f64>),
    /// Spectral differentiation of the sampled profile. Inaccurate for
    /// profiles that are not periodic on the grid.
    Spectral(Vec<f64>),
}

/// Samples `V(x, t)` into `out` for grid points `x`.
pub type PotentialSampler = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum PotentialKind {
    ExternalField {
        static_part: Vec<f64>,
        field_profile: Vec<f64>,
        field_deriv: FieldDerivative,
        envelope: Envelope,
    },
    Sampled {
        sampler: PotentialSampler,
        spectral_derivative: bool,
    },
}

/// A potential on a fixed grid together with the reduced mass.
#[derive(Clone)]
pub struct PotentialModel {
    grid: SpatialGrid,
    mu: f64,
    kind: PotentialKind,
}

impl fmt::Debug for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("PotentialModel");
        s.field("grid", &self.grid).field("mu", &self.mu);
        match &self.kind {
            PotentialKind::ExternalField { envelope, field_deriv, .. } => {
                s.field("envelope", envelope);
                s.field(
                    "field_deriv",
                    &match field_deriv {
                        FieldDerivative::Absent => "absent",
                        FieldDerivative::Analytic(_) => "analytic",
                        FieldDerivative::Spectral(_) => "spectral",
                    },
                );
            }
            PotentialKind::Sampled { spectral_derivative, .. } => {
                s.field("sampled", &true).field("spectral_derivative", spectral_derivative);
            }
        }
        s.finish()
    }
}

fn check_vec(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(CfError::Config(format!("{name} has length {}, grid has {n}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CfError::Config(format!("{name} contains non-finite values")));
    }
    Ok(())
}

impl PotentialModel {
    pub fn external_field(
        grid: SpatialGrid,
        mu: f64,
        static_part: Vec<f64>,
        field_profile: Vec<f64>,
        envelope: Envelope,
    ) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(CfError::Config(format!("mass must be positive, got {mu}")));
        }
        check_vec("static_part", &static_part, grid.len())?;
        check_vec("field_profile", &field_profile, grid.len())?;
        Ok(Self {
            grid,
            mu,
            kind: PotentialKind::ExternalField {
                static_part,
                field_profile,
                field_deriv: FieldDerivative::Absent,
                envelope,
            },
        })
    }

    /// A time-independent potential.
    pub fn autonomous(grid: SpatialGrid, mu: f64, potential: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        Self::external_field(grid, mu, potential, vec![0.0; n], Envelope::Zero)?
            .with_field_derivative(vec![0.0; n])
    }

    /// A general `V(x,t)` given by a sampling callback.
    pub fn sampled(grid: SpatialGrid, mu: f64, sampler: PotentialSampler) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(CfError::Config(format!("mass must be positive, got {mu}")));
        }
        Ok(Self { grid, mu, kind: PotentialKind::Sampled { sampler, spectral_derivative: false } })
    }

    /// Supplies `V′_field` analytically.
    pub fn with_field_derivative(mut self, deriv: Vec<f64>) -> Result<Self> {
        check_vec("field_profile_deriv", &deriv, self.grid.len())?;
        match &mut self.kind {
            PotentialKind::ExternalField { field_deriv, .. } => {
                *field_deriv = FieldDerivative::Analytic(deriv);
                Ok(self)
            }
            PotentialKind::Sampled { .. } => Err(CfError::Config(
                "sampled potentials have no separate field profile".into(),
            )),
        }
    }

    /// Enables `Ṽ` through spectral differentiation.
    ///
    /// For an external-field model the profile is differentiated once here;
    /// for a sampled model every evaluation of `Ṽ` costs one FFT pair.
    pub fn with_spectral_derivative(mut self) -> Result<Self> {
        match &mut self.kind {
            PotentialKind::ExternalField { field_profile, field_deriv, .. } => {
                let mut scratch = FftCounter::new();
                let d = self.grid.spectral_derivative(field_profile, &mut scratch)?;
                *field_deriv = FieldDerivative::Spectral(d);
            }
            PotentialKind::Sampled { spectral_derivative, .. } => *spectral_derivative = true,
        }
        Ok(self)
    }

    pub fn walker_preston(grid: SpatialGrid, cfg: &MorseConfig) -> Result<Self> {
        cfg.validate()?;
        let static_part = grid.points().iter().map(|&x| cfg.potential(x)).collect();
        let field_profile = grid.points().to_vec();
        let n = grid.len();
        Self::external_field(
            grid,
            cfg.mu,
            static_part,
            field_profile,
            Envelope::Cosine { amplitude: cfg.amplitude, omega: cfg.omega },
        )?
        .with_field_derivative(vec![1.0; n])
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn envelope(&self) -> Option<&Envelope> {
        match &self.kind {
            PotentialKind::ExternalField { envelope, .. } => Some(envelope),
            PotentialKind::Sampled { .. } => None,
        }
    }

    pub fn field_derivative(&self) -> Option<&FieldDerivative> {
        match &self.kind {
            PotentialKind::ExternalField { field_deriv, .. } => Some(field_deriv),
            PotentialKind::Sampled { .. } => None,
        }
    }

    /// Whether `Ṽ` can be evaluated at all.
    pub fn supports_modified_potential(&self) -> bool {
        match &self.kind {
            PotentialKind::ExternalField { field_deriv, .. } => {
                !matches!(field_deriv, FieldDerivative::Absent)
            }
            PotentialKind::Sampled { spectral_derivative, .. } => *spectral_derivative,
        }
    }

    /// True when `Ṽ` relies on spectral differentiation.
    pub fn uses_spectral_fallback(&self) -> bool {
        match &self.kind {
            PotentialKind::ExternalField { field_deriv, .. } => {
                matches!(field_deriv, FieldDerivative::Spectral(_))
            }
            PotentialKind::Sampled { spectral_derivative, .. } => *spectral_derivative,
        }
    }

    pub fn potential_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.potential_into(t, &mut out);
        out
    }

    pub fn potential_into(&self, t: f64, out: &mut [f64]) {
        match &self.kind {
            PotentialKind::ExternalField { static_part, field_profile, envelope, .. } => {
                let f = envelope.value(t);
                for ((o, s), p) in out.iter_mut().zip(static_part).zip(field_profile) {
                    *o = s + f * p;
                }
            }
            PotentialKind::Sampled { sampler, .. } => sampler(t, self.grid.points(), out),
        }
    }

    /// `V′` of the time-dependent part at time `t`; external-field models only.
    pub fn field_derivative_at(&self, t: f64) -> Result<Vec<f64>> {
        match &self.kind {
            PotentialKind::ExternalField { field_deriv, envelope, .. } => {
                let d = match field_deriv {
                    FieldDerivative::Analytic(d) | FieldDerivative::Spectral(d) => d,
                    FieldDerivative::Absent => return Err(missing_derivative()),
                };
                let f = envelope.value(t);
                Ok(d.iter().map(|v| f * v).collect())
            }
            PotentialKind::Sampled { .. } => Err(CfError::Capability(
                "field derivative snapshots are defined for external-field models only".into(),
            )),
        }
    }

    /// The modified potential `Ṽ = −(5y/3μ)(V′(t_k+c₃τ) − V′(t_k+c₁τ))²`
    /// for the nodes of `rule`, with `y = 1/43200`.
    ///
    /// For non-GL6 rules `V′₃ − V′₁` is replaced by `(3/√15) Σ_l W_{2,l} V′_l`.
    pub fn modified_potential(&self, t_k: f64, tau: f64, rule: &QuadratureRule) -> Result<Vec<f64>> {
        let w = alpha_weights_for(rule)?;
        let mut scratch = FftCounter::new();
        self.modified_potential_with(t_k, tau, rule.nodes(), &w.difference_row(), &mut scratch)
    }

    pub(crate) fn modified_potential_with(
        &self,
        t_k: f64,
        tau: f64,
        nodes: &[f64],
        difference_row: &[f64],
        counter: &mut FftCounter,
    ) -> Result<Vec<f64>> {
        if !tau.is_finite() || tau == 0.0 {
            return Err(CfError::Config(format!("step must be finite and nonzero, got {tau}")));
        }
        match &self.kind {
            PotentialKind::ExternalField { field_deriv, envelope, .. } => {
                let d = match field_deriv {
                    FieldDerivative::Analytic(d) | FieldDerivative::Spectral(d) => d,
                    FieldDerivative::Absent => return Err(missing_derivative()),
                };
                let df: f64 = nodes
                    .iter()
                    .zip(difference_row)
                    .map(|(c, w)| w * envelope.value(t_k + c * tau))
                    .sum();
                let scale = -EXTERNAL_FIELD_CONSTANT / self.mu * df * df;
                Ok(d.iter().map(|v| scale * v * v).collect())
            }
            PotentialKind::Sampled { sampler, spectral_derivative } => {
                if !spectral_derivative {
                    return Err(missing_derivative());
                }
                let n = self.grid.len();
                let mut combo = vec![0.0; n];
                let mut snap = vec![0.0; n];
                for (c, w) in nodes.iter().zip(difference_row) {
                    sampler(t_k + c * tau, self.grid.points(), &mut snap);
                    for (a, s) in combo.iter_mut().zip(&snap) {
                        *a += w * s;
                    }
                }
                let d = self.grid.spectral_derivative(&combo, counter)?;
                Ok(general_modified_potential(&d, self.mu))
            }
        }
    }

    /// `Ṽ` through the general formula applied to full derivative snapshots
    /// `V′(t_k + c_l τ)`; external-field models only.
    pub fn modified_potential_from_snapshots(
        &self,
        t_k: f64,
        tau: f64,
        rule: &QuadratureRule,
    ) -> Result<Vec<f64>> {
        let w = alpha_weights_for(rule)?;
        let row = w.difference_row();
        let n = self.grid.len();
        let mut combo = vec![0.0; n];
        for (c, wl) in rule.nodes().iter().zip(&row) {
            let snap = self.field_derivative_at(t_k + c * tau)?;
            for (a, s) in combo.iter_mut().zip(&snap) {
                *a += wl * s;
            }
        }
        Ok(general_modified_potential(&combo, self.mu))
    }
}

/// `−(5y/3μ) d²` pointwise.
fn general_modified_potential(d: &[f64], mu: f64) -> Vec<f64> {
    let pre = -5.0 * MODIFIED_Y / (3.0 * mu);
    d.iter().map(|v| pre * v * v).collect()
}

fn missing_derivative() -> CfError {
    CfError::Capability("model provides no spatial derivative of the time-dependent potential".into())
}

/// Morse oscillator driven by `A cos(ωt)·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorseConfig {
    pub depth: f64,
    pub alpha: f64,
    pub mu: f64,
    pub amplitude: f64,
    pub omega: f64,
}

impl Default for MorseConfig {
    /// HF molecule in a strong laser field (atomic units).
    fn default() -> Self {
        Self { depth: 0.2251, alpha: 1.1741, mu: 1745.0, amplitude: 0.011025, omega: 0.01787 }
    }
}

impl MorseConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.depth, self.alpha, self.mu].iter().all(|v| *v > 0.0 && v.is_finite())
            && self.amplitude.is_finite()
            && self.omega.is_finite();
        if !ok {
            return Err(CfError::Config(format!("invalid Morse parameters {self:?}")));
        }
        Ok(())
    }

    /// Same molecule, field amplitude and frequency halved.
    pub fn half_intensity(&self) -> Self {
        Self { amplitude: self.amplitude / 2.0, omega: self.omega / 2.0, ..*self }
    }

    pub fn potential(&self, x: f64) -> f64 {
        let e = 1.0 - (-self.alpha * x).exp();
        self.depth * e * e
    }

    /// Harmonic frequency `w₀ = α √(2D/μ)`.
    pub fn w0(&self) -> f64 {
        self.alpha * (2.0 * self.depth / self.mu).sqrt()
    }

    /// `γ = 2D/w₀`.
    pub fn gamma(&self) -> f64 {
        2.0 * self.depth / self.w0()
    }

    /// Ground-state energy `w₀/2 − w₀²/(16D)`.
    pub fn ground_energy(&self) -> f64 {
        let w0 = self.w0();
        w0 / 2.0 - w0 * w0 / (16.0 * self.depth)
    }

    /// Optical period `2π/ω`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }
}

/// Morse ground state `σ e^{−(γ−½)αx} e^{−γ e^{−αx}}` sampled as
/// `u_k = √Δx φ(x_k)` and normalized on the grid.
pub fn morse_ground_state(cfg: &MorseConfig, grid: &SpatialGrid) -> Result<WaveVector> {
    cfg.validate()?;
    let gamma = cfg.gamma();
    if gamma <= 0.5 {
        return Err(CfError::Domain(format!("no bound state for gamma = {gamma}")));
    }
    // σ² = α (2γ)^{2γ−1} / Γ(2γ−1), in logs
    let log_sigma =
        0.5 * (cfg.alpha.ln() + (2.0 * gamma - 1.0) * (2.0 * gamma).ln() - ln_gamma(2.0 * gamma - 1.0));
    let sqrt_dx = grid.dx().sqrt();
    let values: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| {
            let ax = cfg.alpha * x;
            sqrt_dx * (log_sigma - (gamma - 0.5) * ax - gamma * (-ax).exp()).exp()
        })
        .collect();
    let mut u = WaveVector::from_real(&values);
    let norm = u.norm();
    if !(norm >= 1e-8) || !norm.is_finite() {
        return Err(CfError::Domain(format!(
            "ground state is not normalizable on the grid (norm {norm:e})"
        )));
    }
    u.normalize()?;
    Ok(u)
}

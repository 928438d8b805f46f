//! Lanczos tridiagonalization and the Krylov approximation
//! `e^{−iτH} u ≈ ‖u‖ V_m e^{−iT_m} e₁`, where `T_m` is built from `τH`.
//!
//! The dimension grows until the a-posteriori estimate
//! `β_{m+1}(⅔|e_mᵀ e^{−iT_m/2} e₁| + ⅙|e_mᵀ e^{−iT_m} e₁|)` drops below the
//! tolerance or the cap `m_max` is reached.

use num_complex::Complex64;

use crate::error::{CfError, Result};
use crate::spectral::{inner, WaveVector, C64};

/// Residual norm below which the Krylov space is treated as invariant.
pub const HAPPY_BREAKDOWN: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovConfig {
    pub tol: f64,
    pub m_max: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self { tol: 1e-12, m_max: 10 }
    }
}

impl KrylovConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(CfError::Config(format!("Krylov tolerance must be positive, got {}", self.tol)));
        }
        if self.m_max < 2 {
            return Err(CfError::Config(format!("Krylov cap must be >= 2, got {}", self.m_max)));
        }
        Ok(())
    }
}

/// Outcome of one Krylov exponential.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KrylovStats {
    /// Krylov dimension, equal to the number of operator applications.
    pub m_used: usize,
    pub est_err: f64,
    /// Estimate met the tolerance (or the space was invariant).
    pub converged: bool,
    pub happy_breakdown: bool,
}

/// Lanczos state: `T_m` (diagonal `α`, off-diagonal `β₂..β_m`), the residual
/// norm `β_{m+1}` and the orthonormal basis `v₁..v_m`.
#[derive(Debug, Clone)]
pub struct TridiagonalSystem {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
    beta_next: f64,
    basis: Vec<WaveVector>,
    pending: Option<WaveVector>,
    exact: bool,
}

impl TridiagonalSystem {
    /// Starts from `v₁ = u/‖u‖` with `m = 0`; returns the system and `‖u‖`.
    pub fn new(u: &WaveVector) -> Result<(Self, f64)> {
        let mut v = u.clone();
        let norm = v.normalize()?;
        Ok((
            Self {
                diag: Vec::new(),
                offdiag: Vec::new(),
                beta_next: 0.0,
                basis: Vec::new(),
                pending: Some(v),
                exact: false,
            },
            norm,
        ))
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn beta_next(&self) -> f64 {
        self.beta_next
    }

    pub fn basis(&self) -> &[WaveVector] {
        &self.basis
    }

    /// Happy breakdown: the Krylov space is invariant under `H`.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn eigen(&self) -> Result<TridiagonalEigen> {
        TridiagonalEigen::new(&self.diag, &self.offdiag)
    }

    /// `Σ_i c_i v_i`.
    pub fn combine(&self, coeffs: &[C64]) -> WaveVector {
        let n = self.basis.first().map_or(0, |v| v.len());
        let mut out = WaveVector::zeros(n);
        for (v, c) in self.basis.iter().zip(coeffs) {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += c * x;
            }
        }
        out
    }
}

/// One Lanczos step: processes the newest basis vector `v_m` with
/// `y = τHv_m − β_m v_{m−1}`, `α_m = ⟨v_m, y⟩`, `β_{m+1} = ‖y − α_m v_m‖`.
///
/// A no-op once the system has broken down.
pub fn lanczos_step_expand<F>(apply_h: &mut F, tau: f64, system: &mut TridiagonalSystem) -> Result<()>
where
    F: FnMut(&[C64], &mut [C64]) -> Result<()>,
{
    if system.exact {
        return Ok(());
    }
    let v = system
        .pending
        .take()
        .ok_or_else(|| CfError::Internal("Lanczos system has no pending vector".into()))?;
    if system.dim() > 0 {
        system.offdiag.push(system.beta_next);
    }
    let mut y = WaveVector::zeros(v.len());
    apply_h(&v, &mut y)?;
    y.iter_mut().for_each(|z| *z *= tau);
    if let Some(prev) = system.basis.last() {
        let beta = system.beta_next;
        for (a, b) in y.iter_mut().zip(prev.iter()) {
            *a -= b * beta;
        }
    }
    // Hermitian H: the imaginary part is round-off
    let alpha = inner(&v, &y).re;
    for (a, b) in y.iter_mut().zip(v.iter()) {
        *a -= b * alpha;
    }
    let beta = y.norm();
    system.diag.push(alpha);
    system.basis.push(v);
    if beta < HAPPY_BREAKDOWN {
        system.beta_next = 0.0;
        system.exact = true;
    } else {
        system.beta_next = beta;
        let inv = 1.0 / beta;
        y.iter_mut().for_each(|z| *z *= inv);
        system.pending = Some(y);
    }
    Ok(())
}

/// `β_{m+1}(⅔|e_mᵀ e^{−iT_m/2} e₁| + ⅙|e_mᵀ e^{−iT_m} e₁|)` with `τ` already
/// folded into `T_m`.
pub fn krylov_error_estimate(system: &TridiagonalSystem) -> Result<f64> {
    if system.dim() == 0 {
        return Err(CfError::Internal("error estimate needs m >= 1".into()));
    }
    if system.exact || system.beta_next == 0.0 {
        return Ok(0.0);
    }
    Ok(estimate_with(&system.eigen()?, system.beta_next))
}

fn estimate_with(eig: &TridiagonalEigen, beta_next: f64) -> f64 {
    let last = eig.dim() - 1;
    let half = eig.exp_e1(0.5)[last].norm();
    let full = eig.exp_e1(1.0)[last].norm();
    beta_next * (2.0 / 3.0 * half + full / 6.0)
}

/// `e^{−iτH} u` in the adaptively sized Krylov space.
///
/// `apply_h` writes `H·x` into its second argument. Hitting `m_max` before
/// the estimate meets `tol` is reported through [`KrylovStats::converged`],
/// not as an error.
pub fn expm_action<F>(
    apply_h: &mut F,
    u: &WaveVector,
    tau: f64,
    cfg: &KrylovConfig,
) -> Result<(WaveVector, KrylovStats)>
where
    F: FnMut(&[C64], &mut [C64]) -> Result<()>,
{
    cfg.validate()?;
    if u.norm() == 0.0 {
        return Ok((u.clone(), KrylovStats { converged: true, ..Default::default() }));
    }
    let (mut system, norm) = TridiagonalSystem::new(u)?;
    loop {
        lanczos_step_expand(apply_h, tau, &mut system)?;
        let eig = system.eigen()?;
        let err = if system.exact { 0.0 } else { estimate_with(&eig, system.beta_next) };
        let converged = err < cfg.tol;
        if converged || system.exact || system.dim() >= cfg.m_max {
            let mut coeffs = eig.exp_e1(1.0);
            if system.dim() == 1 {
                // invariant line: a pure phase on u itself
                let phase = coeffs[0];
                let mut out = u.clone();
                out.iter_mut().for_each(|z| *z *= phase);
                let stats = KrylovStats { m_used: 1, est_err: err, converged, happy_breakdown: system.exact };
                return Ok((out, stats));
            }
            coeffs.iter_mut().for_each(|c| *c *= norm);
            let stats = KrylovStats {
                m_used: system.dim(),
                est_err: err,
                converged,
                happy_breakdown: system.exact,
            };
            return Ok((system.combine(&coeffs), stats));
        }
    }
}

/// Eigendecomposition `T = Z Λ Zᵀ` of a real symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    values: Vec<f64>,
    /// Row-major `n × n`; column `k` is the `k`-th eigenvector.
    vectors: Vec<f64>,
}

impl TridiagonalEigen {
    /// Implicit QL with Wilkinson-type shifts.
    pub fn new(diag: &[f64], offdiag: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || offdiag.len() + 1 != n {
            return Err(CfError::Internal(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                n,
                offdiag.len()
            )));
        }
        let mut d = diag.to_vec();
        let mut e = offdiag.to_vec();
        e.push(0.0);
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                if iter > 60 {
                    return Err(CfError::Internal("tridiagonal QL did not converge".into()));
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut deflated = false;
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for k in 0..n {
                        let zk1 = z[k * n + i + 1];
                        let zk = z[k * n + i];
                        z[k * n + i + 1] = s * zk + c * zk1;
                        z[k * n + i] = c * zk - s * zk1;
                    }
                }
                if deflated {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        Ok(Self { values: d, vectors: z })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Component `i` of eigenvector `k`.
    pub fn vector(&self, i: usize, k: usize) -> f64 {
        self.vectors[i * self.dim() + k]
    }

    /// `e^{−iθT} e₁`.
    pub fn exp_e1(&self, theta: f64) -> Vec<C64> {
        let n = self.dim();
        let weights: Vec<C64> = (0..n)
            .map(|k| Complex64::from_polar(self.vector(0, k), -theta * self.values[k]))
            .collect();
        (0..n)
            .map(|i| (0..n).map(|k| weights[k] * self.vector(i, k)).sum())
            .collect()
    }
}

//! Periodic 1-D Fourier-spectral grid, wave-function storage and the
//! kinetic operator `T = F⁻¹ diag(k²/2μ) F`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{CfError, Result};

pub type C64 = Complex64;

/// Counts complex-to-complex transforms issued on behalf of one propagation.
///
/// Two transforms (one forward, one inverse) make one FFT pair, the unit of
/// cost used throughout the crate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FftCounter {
    transforms: u64,
}

impl FftCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_transforms(&mut self, n: u64) {
        self.transforms += n;
    }

    pub fn transforms(&self) -> u64 {
        self.transforms
    }

    /// Completed forward+inverse pairs.
    pub fn pairs(&self) -> u64 {
        self.transforms / 2
    }

    /// Pairs including a dangling half pair.
    pub fn pairs_f64(&self) -> f64 {
        self.transforms as f64 / 2.0
    }

    pub fn merge(&mut self, other: &FftCounter) {
        self.transforms += other.transforms;
    }
}

/// Discretized wave function `u_k = sqrt(Δx) ψ(x_k)`.
#[derive(Clone, PartialEq)]
pub struct WaveVector(Vec<C64>);

impl WaveVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        Self(amplitudes)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); n])
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Scales to unit 2-norm and returns the previous norm.
    pub fn normalize(&mut self) -> Result<f64> {
        let norm = self.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(CfError::Domain(format!("cannot normalize vector of norm {norm}")));
        }
        let inv = 1.0 / norm;
        self.0.iter_mut().for_each(|z| *z *= inv);
        Ok(norm)
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &WaveVector) -> C64 {
        inner(&self.0, &other.0)
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &WaveVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl Deref for WaveVector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl DerefMut for WaveVector {
    fn deref_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }
}

impl fmt::Debug for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WaveVector(n={}, norm={:.3e})", self.0.len(), self.norm())
    }
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Periodic grid on `[x0, xn)` with `n` points and its FFT plans.
///
/// Plans are immutable after construction, so a grid may be cloned or shared
/// between threads freely.
#[derive(Clone)]
pub struct SpatialGrid {
    x0: f64,
    xn: f64,
    n: usize,
    dx: f64,
    points: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpatialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpatialGrid")
            .field("x0", &self.x0)
            .field("xn", &self.xn)
            .field("n", &self.n)
            .field("dx", &self.dx)
            .finish()
    }
}

impl SpatialGrid {
    pub fn new(x0: f64, xn: f64, n: usize) -> Result<Self> {
        if !(x0.is_finite() && xn.is_finite()) || xn <= x0 {
            return Err(CfError::Config(format!("invalid domain [{x0}, {xn})")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(CfError::Config(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        let length = xn - x0;
        let dx = length / n as f64;
        let points = (0..n).map(|j| x0 + j as f64 * dx).collect();
        // [0, 1, .., N/2-1, -N/2, .., -1]; Nyquist carries k = -πN/L
        let half = (n / 2) as i64;
        let wavenumbers = (0..n as i64)
            .map(|j| {
                let m = if j < half { j } else { j - n as i64 };
                2.0 * PI * m as f64 / length
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self { x0, xn, n, dx, points, wavenumbers, forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn xn(&self) -> f64 {
        self.xn
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.xn - self.x0
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Eigenvalues `k²/(2μ)` of the kinetic operator in FFT order.
    pub fn kinetic_eigenvalues(&self, mu: f64) -> Vec<f64> {
        self.wavenumbers.iter().map(|k| k * k / (2.0 * mu)).collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(CfError::Config(format!(
                "vector length {len} does not match grid size {}",
                self.n
            )));
        }
        Ok(())
    }

    /// Unnormalized forward transform in place.
    pub fn forward_in_place(&self, buf: &mut [C64], counter: &mut FftCounter) -> Result<()> {
        self.check_len(buf.len())?;
        self.forward.process(buf);
        counter.record_transforms(1);
        Ok(())
    }

    /// Inverse transform in place, carrying the `1/N` factor.
    pub fn inverse_in_place(&self, buf: &mut [C64], counter: &mut FftCounter) -> Result<()> {
        self.check_len(buf.len())?;
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
        counter.record_transforms(1);
        Ok(())
    }

    pub fn to_frequency(&self, u: &WaveVector, counter: &mut FftCounter) -> Result<WaveVector> {
        let mut out = u.clone();
        self.forward_in_place(&mut out, counter)?;
        Ok(out)
    }

    pub fn from_frequency(&self, u_hat: &WaveVector, counter: &mut FftCounter) -> Result<WaveVector> {
        let mut out = u_hat.clone();
        self.inverse_in_place(&mut out, counter)?;
        Ok(out)
    }

    /// `out = scale·T·u + diag ⊙ u` with one FFT pair. `diag` may be empty.
    pub fn apply_shifted_kinetic(
        &self,
        u: &[C64],
        kinetic_eigs: &[f64],
        scale: f64,
        diag: &[f64],
        out: &mut [C64],
        counter: &mut FftCounter,
    ) -> Result<()> {
        self.check_len(u.len())?;
        self.check_len(out.len())?;
        out.copy_from_slice(u);
        self.forward_in_place(out, counter)?;
        for (z, &e) in out.iter_mut().zip(kinetic_eigs) {
            *z *= scale * e;
        }
        self.inverse_in_place(out, counter)?;
        if !diag.is_empty() {
            for ((o, x), d) in out.iter_mut().zip(u).zip(diag) {
                *o += x * d;
            }
        }
        Ok(())
    }

    /// `T·u` for `T = −Δ/(2μ)`; costs one FFT pair.
    pub fn apply_kinetic(&self, u: &WaveVector, mu: f64, counter: &mut FftCounter) -> Result<WaveVector> {
        if !(mu > 0.0) {
            return Err(CfError::Config(format!("mass must be positive, got {mu}")));
        }
        let eigs = self.kinetic_eigenvalues(mu);
        let mut out = WaveVector::zeros(self.n);
        self.apply_shifted_kinetic(u, &eigs, 1.0, &[], &mut out, counter)?;
        Ok(out)
    }

    /// Spectral derivative of a real sampled function; costs one FFT pair.
    ///
    /// The Nyquist mode is dropped. Only meaningful for functions that are
    /// smooth and periodic on the grid.
    pub fn spectral_derivative(&self, f: &[f64], counter: &mut FftCounter) -> Result<Vec<f64>> {
        self.check_len(f.len())?;
        let mut buf: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf, counter)?;
        let nyquist = self.n / 2;
        for (j, (z, &k)) in buf.iter_mut().zip(&self.wavenumbers).enumerate() {
            *z = if j == nyquist { C64::new(0.0, 0.0) } else { *z * C64::new(0.0, k) };
        }
        self.inverse_in_place(&mut buf, counter)?;
        Ok(buf.into_iter().map(|z| z.re).collect())
    }
}

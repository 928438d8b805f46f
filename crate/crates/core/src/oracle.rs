//! Dense reference machinery: exact exponentials by eigendecomposition, the
//! sixth-order Magnus generator with explicit commutators, and measurement
//! of local convergence orders.
//!
//! Everything here is O(N³) and meant for small grids in tests.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{CfError, Result};
use crate::krylov::KrylovConfig;
use crate::model::PotentialModel;
use crate::quadrature::gl6;
use crate::schemes::{builtin_scheme, step, SchemeTable};
use crate::spectral::{FftCounter, SpatialGrid, WaveVector, C64};

/// Largest dimension the dense routines accept.
pub const MAX_DENSE_DIM: usize = 512;

/// Local errors below this are treated as round-off and left out of fits.
pub const ERROR_FLOOR: f64 = 1e-13;

const SQRT15: f64 = 3.872_983_346_207_417;

/// A dense Hermitian matrix.
#[derive(Debug, Clone)]
pub struct DenseHermitian {
    matrix: DMatrix<C64>,
}

impl DenseHermitian {
    /// Checks `‖H − Hᴴ‖_max ≤ 1e−12 · max(1, ‖H‖_max)`.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(CfError::Config("matrix is not square".into()));
        }
        let scale = matrix.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        let n = matrix.nrows();
        for i in 0..n {
            for j in i..n {
                if (matrix[(i, j)] - matrix[(j, i)].conj()).norm() > 1e-12 * scale {
                    return Err(CfError::Domain(format!("matrix is not Hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self { matrix: DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) }) }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, u: &WaveVector) -> WaveVector {
        let v = DVector::from_column_slice(u);
        WaveVector::new((&self.matrix * v).iter().copied().collect())
    }

    /// Matrix-vector action as a Krylov operator.
    pub fn operator(&self) -> impl FnMut(&[C64], &mut [C64]) -> Result<()> + '_ {
        move |x, y| {
            let v = DVector::from_column_slice(x);
            y.copy_from_slice((&self.matrix * v).as_slice());
            Ok(())
        }
    }
}

/// Kinetic matrix `T_jk = (1/N) Σ_m e^{i k_m (x_j − x_k)} k_m²/(2μ)` by direct
/// summation, without FFTs.
pub fn dense_kinetic(grid: &SpatialGrid, mu: f64) -> DenseHermitian {
    let n = grid.len();
    let eig = grid.kinetic_eigenvalues(mu);
    // T depends only on j − k
    let kernel: Vec<C64> = (0..n)
        .map(|d| {
            let s: C64 = grid
                .wavenumbers()
                .iter()
                .zip(&eig)
                .map(|(k, e)| Complex64::from_polar(*e, k * d as f64 * grid.dx()))
                .sum();
            s / n as f64
        })
        .collect();
    // upper triangle from the kernel, lower triangle mirrored
    let matrix = DMatrix::from_fn(n, n, |j, k| {
        if j <= k {
            kernel[(j + n - k) % n]
        } else {
            kernel[(k + n - j) % n].conj()
        }
    });
    DenseHermitian { matrix }
}

/// Kinetic matrix assembled column by column from the spectral operator.
pub fn dense_kinetic_from_operator(grid: &SpatialGrid, mu: f64) -> Result<DMatrix<C64>> {
    let n = grid.len();
    let mut counter = FftCounter::new();
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut e = WaveVector::zeros(n);
        e[k] = C64::new(1.0, 0.0);
        let col = grid.apply_kinetic(&e, mu, &mut counter)?;
        for j in 0..n {
            m[(j, k)] = col[j];
        }
    }
    Ok(m)
}

/// `T + diag(V(t))`.
pub fn dense_hamiltonian(model: &PotentialModel, t: f64) -> Result<DenseHermitian> {
    check_dim(model.grid().len())?;
    let mut h = dense_kinetic(model.grid(), model.mu()).matrix;
    for (j, v) in model.potential_at(t).iter().enumerate() {
        h[(j, j)] += v;
    }
    Ok(DenseHermitian { matrix: h })
}

fn check_dim(n: usize) -> Result<()> {
    if n > MAX_DENSE_DIM {
        return Err(CfError::Config(format!("dense oracle limited to n <= {MAX_DENSE_DIM}, got {n}")));
    }
    Ok(())
}

/// `e^{−iτH} u` through a full eigendecomposition.
pub fn dense_expm_action(h: &DenseHermitian, u: &WaveVector, tau: f64) -> Result<WaveVector> {
    check_dim(h.dim())?;
    if u.len() != h.dim() {
        return Err(CfError::Config("vector length does not match matrix".into()));
    }
    let eig = SymmetricEigen::new(h.matrix.clone());
    let q = &eig.eigenvectors;
    let coeffs = q.adjoint() * DVector::from_column_slice(u);
    let phased = DVector::from_iterator(
        coeffs.len(),
        coeffs
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, l)| c * Complex64::from_polar(1.0, -tau * l)),
    );
    Ok(WaveVector::new((q * phased).iter().copied().collect()))
}

fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

/// Anti-Hermitian `α₁, α₂, α₃` of the GL6 construction for `u′ = −iH(t)u`.
#[derive(Debug, Clone)]
pub struct MagnusAlphas {
    pub a1: DMatrix<C64>,
    pub a2: DMatrix<C64>,
    pub a3: DMatrix<C64>,
}

pub fn magnus_alphas(model: &PotentialModel, t_k: f64, tau: f64) -> Result<MagnusAlphas> {
    let n = model.grid().len();
    check_dim(n)?;
    let c = gl6();
    let v: Vec<Vec<f64>> = c.nodes().iter().map(|ci| model.potential_at(t_k + ci * tau)).collect();
    let minus_i_tau = C64::new(0.0, -tau);
    let t = dense_kinetic(model.grid(), model.mu()).matrix;
    let mut a1 = t * minus_i_tau;
    for j in 0..n {
        a1[(j, j)] += minus_i_tau * v[1][j];
    }
    let diag = |f: &dyn Fn(usize) -> f64| {
        DMatrix::from_fn(n, n, |i, j| if i == j { minus_i_tau * f(i) } else { C64::new(0.0, 0.0) })
    };
    let a2 = diag(&|j| SQRT15 / 3.0 * (v[2][j] - v[0][j]));
    let a3 = diag(&|j| 10.0 / 3.0 * (v[2][j] - 2.0 * v[1][j] + v[0][j]));
    Ok(MagnusAlphas { a1, a2, a3 })
}

/// Converts an anti-Hermitian generator `Ω = −iH` to `H`, dropping the
/// round-off part of `H − Hᴴ` left by the matrix products.
fn to_hermitian(omega: DMatrix<C64>) -> Result<DenseHermitian> {
    let h = omega * C64::new(0.0, 1.0);
    let scale = h.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let skew = (&h - h.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if skew > 1e-10 * scale {
        return Err(CfError::Domain(format!("generator is not anti-Hermitian (defect {skew:e})")));
    }
    DenseHermitian::new((&h + h.adjoint()) * C64::new(0.5, 0.0))
}

/// `Ω⁽⁶⁾ = α₁ + α₃/12 − [12]/12 + [113]/360 − [212]/240 + [1112]/720`,
/// returned as `H` with `Ω⁽⁶⁾ = −iH`.
pub fn magnus6_generator(model: &PotentialModel, t_k: f64, tau: f64) -> Result<DenseHermitian> {
    if model.grid().len() > 256 {
        return Err(CfError::Config("Magnus generator limited to n <= 256".into()));
    }
    let MagnusAlphas { a1, a2, a3 } = magnus_alphas(model, t_k, tau)?;
    let c12 = commutator(&a1, &a2);
    let c113 = commutator(&a1, &commutator(&a1, &a3));
    let c212 = commutator(&a2, &c12);
    let c1112 = commutator(&a1, &commutator(&a1, &c12));
    let omega = &a1 + &a3 / C64::from(12.0) - &c12 / C64::from(12.0) + c113 / C64::from(360.0)
        - c212 / C64::from(240.0)
        + c1112 / C64::from(720.0);
    to_hermitian(omega)
}

/// `[α₂,[α₁,α₂]]` as `H` with `[212] = −iH`.
pub fn commutator_212(model: &PotentialModel, t_k: f64, tau: f64) -> Result<DenseHermitian> {
    let MagnusAlphas { a1, a2, .. } = magnus_alphas(model, t_k, tau)?;
    to_hermitian(commutator(&a2, &commutator(&a1, &a2)))
}

/// `[12] = [α₁, α₂]` and `[α₂, α₁]`, for antisymmetry checks.
pub fn commutator_12_pair(model: &PotentialModel, t_k: f64, tau: f64) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let MagnusAlphas { a1, a2, .. } = magnus_alphas(model, t_k, tau)?;
    Ok((commutator(&a1, &a2), commutator(&a2, &a1)))
}

/// Substepped dense propagation with `exp(Ω⁽⁶⁾)` on each substep.
pub fn dense_magnus6_propagate(
    model: &PotentialModel,
    u: &WaveVector,
    t0: f64,
    t1: f64,
    substeps: usize,
) -> Result<WaveVector> {
    let h = (t1 - t0) / substeps as f64;
    let mut state = u.clone();
    for s in 0..substeps {
        let gen = magnus6_generator(model, t0 + s as f64 * h, h)?;
        state = dense_expm_action(&gen, &state, 1.0)?;
    }
    Ok(state)
}

/// Substeps used by [`reference_step`].
pub const REFERENCE_SUBSTEPS: usize = 64;
/// Required agreement of the two reference routes.
pub const REFERENCE_AGREEMENT: f64 = 1e-12;

/// Krylov tolerance of reference runs; below what the estimate can reach,
/// so every exponential uses the full `m_max` space unless it breaks down.
pub const REFERENCE_KRYLOV_TOL: f64 = 1e-16;

/// One-step reference: the three-exponential sixth-order scheme with 64
/// substeps at [`REFERENCE_KRYLOV_TOL`], validated against dense substepping
/// with `exp(Ω⁽⁶⁾)`.
pub fn reference_step(model: &PotentialModel, u: &WaveVector, t_k: f64, tau: f64) -> Result<WaveVector> {
    let scheme = builtin_scheme("cf6-3")?;
    let kcfg = KrylovConfig::with_tol(REFERENCE_KRYLOV_TOL);
    let h = tau / REFERENCE_SUBSTEPS as f64;
    let mut counter = FftCounter::new();
    let mut krylov_ref = u.clone();
    for s in 0..REFERENCE_SUBSTEPS {
        krylov_ref = step(&scheme, &krylov_ref, t_k + s as f64 * h, h, model, &kcfg, &mut counter)?.0;
    }
    let dense_ref = dense_magnus6_propagate(model, u, t_k, t_k + tau, REFERENCE_SUBSTEPS)?;
    let gap = krylov_ref.distance(&dense_ref);
    if gap > REFERENCE_AGREEMENT {
        return Err(CfError::Reference(format!(
            "one-step references disagree by {gap:e} (limit {REFERENCE_AGREEMENT:e})"
        )));
    }
    Ok(krylov_ref)
}

/// Least-squares fit of `log err` against `log τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    /// `(τ, error)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
    /// Points dropped for being below [`ERROR_FLOOR`].
    pub excluded: Vec<(f64, f64)>,
}

/// Slope of the least-squares line through `(log x, log y)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn fit(all: Vec<(f64, f64)>) -> Result<OrderFit> {
    let (points, excluded): (Vec<_>, Vec<_>) = all.into_iter().partition(|(_, e)| *e >= ERROR_FLOOR);
    if points.len() < 2 {
        return Err(CfError::Domain(format!(
            "only {} points above the error floor; cannot fit an order",
            points.len()
        )));
    }
    Ok(OrderFit { slope: log_log_slope(&points), points, excluded })
}

fn check_tau_list(tau_list: &[f64]) -> Result<()> {
    if tau_list.len() < 3 || tau_list.iter().any(|t| !(*t > 0.0)) {
        return Err(CfError::Config("need at least three positive step sizes".into()));
    }
    Ok(())
}

/// Local order: slope of the one-step error `‖Φ_τ(u) − reference‖` vs `τ`.
pub fn local_order(
    scheme: &SchemeTable,
    model: &PotentialModel,
    u: &WaveVector,
    t_k: f64,
    tau_list: &[f64],
    kcfg: &KrylovConfig,
) -> Result<OrderFit> {
    check_tau_list(tau_list)?;
    let mut all = Vec::with_capacity(tau_list.len());
    for &tau in tau_list {
        let mut counter = FftCounter::new();
        let (out, _) = step(scheme, u, t_k, tau, model, kcfg, &mut counter)?;
        let reference = reference_step(model, u, t_k, tau)?;
        all.push((tau, out.distance(&reference)));
    }
    fit(all)
}

/// Slope of `‖Φ_τ(u) − exp(Ω⁽⁶⁾ − z[212])u‖` for a scheme whose leading
/// defect is claimed to be `−z[212]`.
pub fn magnus_defect_order(
    scheme: &SchemeTable,
    model: &PotentialModel,
    u: &WaveVector,
    t_k: f64,
    tau_list: &[f64],
    z: f64,
    kcfg: &KrylovConfig,
) -> Result<OrderFit> {
    check_tau_list(tau_list)?;
    let mut all = Vec::with_capacity(tau_list.len());
    for &tau in tau_list {
        let mut counter = FftCounter::new();
        let (out, _) = step(scheme, u, t_k, tau, model, kcfg, &mut counter)?;
        let omega = magnus6_generator(model, t_k, tau)?;
        let c212 = commutator_212(model, t_k, tau)?;
        let gen = DenseHermitian { matrix: omega.matrix - c212.matrix * C64::from(z) };
        let target = dense_expm_action(&gen, u, 1.0)?;
        all.push((tau, out.distance(&target)));
    }
    fit(all)
}

/// Geometric list `τ₀, τ₀/r, τ₀/r², …`.
pub fn geometric_taus(tau0: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| tau0 / ratio.powi(i as i32)).collect()
}

/// Plane wave `e^{i k_m x}/√N`.
pub fn plane_wave(grid: &SpatialGrid, m: i64) -> WaveVector {
    let k = 2.0 * PI * m as f64 / grid.length();
    let s = 1.0 / (grid.len() as f64).sqrt();
    WaveVector::new(grid.points().iter().map(|&x| Complex64::from_polar(s, k * x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{morse_ground_state, MorseConfig};

    fn wp(n: usize) -> (PotentialModel, WaveVector) {
        let cfg = MorseConfig::default();
        let grid = SpatialGrid::new(-0.8, 4.32, n).unwrap();
        (
            PotentialModel::walker_preston(grid.clone(), &cfg).unwrap(),
            morse_ground_state(&cfg, &grid).unwrap(),
        )
    }

    #[test]
    fn dense_kinetic_matches_operator() {
        let grid = SpatialGrid::new(-0.8, 4.32, 32).unwrap();
        let a = dense_kinetic(&grid, 1745.0);
        let b = dense_kinetic_from_operator(&grid, 1745.0).unwrap();
        let diff = (a.matrix() - &b).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(diff < 1e-13, "{diff}");
        assert!(DenseHermitian::new(b).is_ok());
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 1.0), C64::new(2.0, 0.0)]);
        assert!(matches!(DenseHermitian::new(m), Err(CfError::Domain(_))));
    }

    #[test]
    fn expm_trivial_cases() {
        let h = DenseHermitian::from_diagonal(&[1.0, -2.0, 0.5]);
        let u = WaveVector::new(vec![C64::new(0.5, 0.0), C64::new(0.0, 0.5), C64::new(0.5, 0.5)]);
        let same = dense_expm_action(&h, &u, 0.0).unwrap();
        assert!(same.distance(&u) < 1e-15);
        let out = dense_expm_action(&h, &u, 0.7).unwrap();
        for ((o, x), d) in out.iter().zip(u.iter()).zip([1.0, -2.0, 0.5]) {
            assert!((o - x * Complex64::from_polar(1.0, -0.7 * d)).norm() < 1e-14);
        }
    }

    #[test]
    fn autonomous_generator_is_tau_h() {
        let grid = SpatialGrid::new(-0.8, 4.32, 32).unwrap();
        let cfg = MorseConfig::default();
        let v: Vec<f64> = grid.points().iter().map(|&x| cfg.potential(x)).collect();
        let model = PotentialModel::autonomous(grid, cfg.mu, v).unwrap();
        let tau = 2.5;
        let omega = magnus6_generator(&model, 1.0, tau).unwrap();
        let h = dense_hamiltonian(&model, 0.0).unwrap();
        let diff = (omega.matrix() - h.matrix() * C64::from(tau)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(diff < 1e-14);
    }

    #[test]
    fn commutator_antisymmetry_and_hermiticity() {
        let (model, _) = wp(32);
        let (c12, c21) = commutator_12_pair(&model, 40.0, 3.0).unwrap();
        let d = (&c12 + &c21).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert_eq!(d, 0.0);
        let omega = magnus6_generator(&model, 40.0, 3.0).unwrap();
        assert!(DenseHermitian::new(omega.matrix().clone()).is_ok());
    }

    #[test]
    fn log_log_slope_exact() {
        let pts: Vec<(f64, f64)> = [1.0, 0.5, 0.25].iter().map(|&t: &f64| (t, 3.0 * t.powi(5))).collect();
        assert!((log_log_slope(&pts) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn reference_routes_agree() {
        let (model, u) = wp(64);
        let r = reference_step(&model, &u, 100.0, 3.5).unwrap();
        assert!((r.norm() - 1.0).abs() < 1e-12);
    }
}

//! Walker–Preston benchmark harness: propagates the Morse ground state over a
//! number of optical periods with every scheme and step count, and records the
//! final-time error against a validated reference together with the FFT cost.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CfError, Result};
use crate::krylov::KrylovConfig;
use crate::model::{morse_ground_state, MorseConfig, PotentialModel};
use crate::oracle::{log_log_slope, REFERENCE_KRYLOV_TOL};
use crate::schemes::{builtin_scheme, propagate, SCHEME_NAMES};
use crate::spectral::{SpatialGrid, WaveVector};

/// Smallest per-step Krylov tolerance the target policy will hand out.
pub const KRYLOV_TOL_FLOOR: f64 = 1e-14;

/// Names accepted by [`BenchConfig::preset`].
pub const PRESET_NAMES: [&str; 4] = [
    "walker-preston-64",
    "walker-preston-128",
    "walker-preston-64-half",
    "walker-preston-128-half",
];

/// Columns of the emitted CSV, in order.
pub const CSV_HEADER: [&str; 6] = ["scheme", "n_steps", "tau", "fft_pairs", "error_l2", "wall_time_s"];

const DEFAULT_STEPS: [usize; 16] = [128, 160, 192, 224, 256, 320, 384, 448, 512, 640, 768, 1024, 1536, 2048, 3072, 4096];

/// Periodic grid `[x0, xn)` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub xn: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.x0, self.xn, self.n)
    }
}

/// How the per-step Krylov tolerance is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TolPolicy {
    Fixed(f64),
    /// `max(target / (10 n_steps), KRYLOV_TOL_FLOOR)` for a global error target.
    Target(f64),
}

impl TolPolicy {
    pub fn tol_for(&self, n_steps: usize) -> f64 {
        match *self {
            TolPolicy::Fixed(tol) => tol,
            TolPolicy::Target(target) => (target / (10.0 * n_steps as f64)).max(KRYLOV_TOL_FLOOR),
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            TolPolicy::Fixed(v) | TolPolicy::Target(v) => v,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(CfError::Config(format!("Krylov tolerance must be positive, got {v}")));
        }
        Ok(())
    }
}

/// Reference solution: `scheme` at `refinement ×` the finest benchmark step
/// count, accepted only if `check_scheme` at the same resolution agrees to
/// `agreement`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpec {
    pub scheme: String,
    pub check_scheme: String,
    pub refinement: usize,
    pub krylov_tol: f64,
    pub agreement: f64,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            scheme: "cf6-3".into(),
            check_scheme: "cf6-2d".into(),
            refinement: 8,
            krylov_tol: REFERENCE_KRYLOV_TOL,
            agreement: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub grid: GridSpec,
    pub model: MorseConfig,
    /// Horizon in optical periods `2π/ω`.
    pub periods: f64,
    pub schemes: Vec<String>,
    pub steps: Vec<usize>,
    pub tol: TolPolicy,
    pub reference: ReferenceSpec,
    pub output: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec { x0: -0.8, xn: 4.32, n: 64 },
            model: MorseConfig::default(),
            periods: 10.0,
            schemes: SCHEME_NAMES.iter().map(|s| s.to_string()).collect(),
            steps: DEFAULT_STEPS.to_vec(),
            tol: TolPolicy::Target(1e-10),
            reference: ReferenceSpec::default(),
            output: None,
        }
    }
}

impl BenchConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        let (n, half) = match name {
            "walker-preston-64" => (64, false),
            "walker-preston-128" => (128, false),
            "walker-preston-64-half" => (64, true),
            "walker-preston-128-half" => (128, true),
            other => {
                return Err(CfError::Config(format!(
                    "unknown preset `{other}` (expected one of {})",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
        let model = if half { base.model.half_intensity() } else { base.model };
        Ok(Self { grid: GridSpec { n, ..base.grid }, model, ..base })
    }

    /// Reads a TOML config; keys that are absent keep their value in `base`.
    pub fn from_toml_str(text: &str, base: BenchConfig) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CfError::Parse(e.to_string()))?;
        let mut cfg = base;
        if let Some(g) = raw.grid {
            cfg.grid.x0 = g.x0.unwrap_or(cfg.grid.x0);
            cfg.grid.xn = g.xn.unwrap_or(cfg.grid.xn);
            cfg.grid.n = g.n.unwrap_or(cfg.grid.n);
        }
        if let Some(m) = raw.model {
            let d = &mut cfg.model;
            d.depth = m.depth.unwrap_or(d.depth);
            d.alpha = m.alpha.unwrap_or(d.alpha);
            d.mu = m.mu.unwrap_or(d.mu);
            d.amplitude = m.amplitude.unwrap_or(d.amplitude);
            d.omega = m.omega.unwrap_or(d.omega);
        }
        if let Some(r) = raw.run {
            cfg.periods = r.periods.unwrap_or(cfg.periods);
            if let Some(s) = r.schemes {
                cfg.schemes = s;
            }
            if let Some(s) = r.steps {
                cfg.steps = s;
            }
            match (r.krylov_tol, r.target_error) {
                (Some(_), Some(_)) => {
                    return Err(CfError::Config("set either krylov_tol or target_error, not both".into()))
                }
                (Some(t), None) => cfg.tol = TolPolicy::Fixed(t),
                (None, Some(t)) => cfg.tol = TolPolicy::Target(t),
                (None, None) => {}
            }
            let rs = &mut cfg.reference;
            rs.scheme = r.reference_scheme.unwrap_or(rs.scheme.clone());
            rs.check_scheme = r.reference_check.unwrap_or(rs.check_scheme.clone());
            rs.refinement = r.reference_refinement.unwrap_or(rs.refinement);
            rs.krylov_tol = r.reference_tol.unwrap_or(rs.krylov_tol);
            rs.agreement = r.reference_agreement.unwrap_or(rs.agreement);
            if let Some(o) = r.output {
                cfg.output = Some(PathBuf::from(o));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path, base: BenchConfig) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, base)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.grid.build()?;
        if !(self.periods > 0.0 && self.periods.is_finite()) {
            return Err(CfError::Config(format!("horizon must be positive, got {} periods", self.periods)));
        }
        if self.schemes.is_empty() {
            return Err(CfError::Config("no schemes selected".into()));
        }
        for s in self.schemes.iter().chain([&self.reference.scheme, &self.reference.check_scheme]) {
            builtin_scheme(s)?;
        }
        if self.steps.is_empty() || self.steps[0] == 0 {
            return Err(CfError::Config("step counts must be nonempty and positive".into()));
        }
        if self.steps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CfError::Config(format!("step counts must be strictly increasing: {:?}", self.steps)));
        }
        self.tol.validate()?;
        let r = &self.reference;
        if r.refinement == 0 || !(r.krylov_tol > 0.0) || !(r.agreement > 0.0) {
            return Err(CfError::Config("reference refinement, tolerance and agreement must be positive".into()));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.periods * self.model.period()
    }

    /// Model and initial state for this configuration.
    pub fn setup(&self) -> Result<(PotentialModel, WaveVector)> {
        let grid = self.grid.build()?;
        let model = PotentialModel::walker_preston(grid.clone(), &self.model)?;
        let u0 = morse_ground_state(&self.model, &grid)?;
        Ok((model, u0))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: Option<RawGrid>,
    model: Option<RawModel>,
    run: Option<RawRun>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    x0: Option<f64>,
    xn: Option<f64>,
    n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    depth: Option<f64>,
    alpha: Option<f64>,
    mu: Option<f64>,
    amplitude: Option<f64>,
    omega: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    periods: Option<f64>,
    schemes: Option<Vec<String>>,
    steps: Option<Vec<usize>>,
    krylov_tol: Option<f64>,
    target_error: Option<f64>,
    reference_scheme: Option<String>,
    reference_check: Option<String>,
    reference_refinement: Option<usize>,
    reference_tol: Option<f64>,
    reference_agreement: Option<f64>,
    output: Option<String>,
}

/// One `(scheme, n_steps)` cell of a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scheme: String,
    pub n_steps: usize,
    pub tau: f64,
    pub fft_pairs: u64,
    pub error_l2: f64,
    pub wall_time: f64,
}

/// A validated reference state.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub state: WaveVector,
    pub n_steps: usize,
    /// Distance to the check scheme's solution.
    pub agreement: f64,
}

/// Reference at the final time, cross-checked against a second scheme.
pub fn compute_reference(cfg: &BenchConfig) -> Result<ReferenceSolution> {
    cfg.validate()?;
    let (model, u0) = cfg.setup()?;
    let finest = *cfg.steps.last().expect("validated nonempty");
    compute_reference_at(cfg, &model, &u0, finest * cfg.reference.refinement)
}

/// Reference with an explicit step count.
pub fn compute_reference_at(
    cfg: &BenchConfig,
    model: &PotentialModel,
    u0: &WaveVector,
    n_steps: usize,
) -> Result<ReferenceSolution> {
    let r = &cfg.reference;
    let kcfg = KrylovConfig::with_tol(r.krylov_tol);
    let tf = cfg.horizon();
    let (main, check) = rayon::join(
        || -> Result<WaveVector> { Ok(propagate(&builtin_scheme(&r.scheme)?, u0, 0.0, tf, n_steps, model, &kcfg)?.0) },
        || -> Result<WaveVector> {
            Ok(propagate(&builtin_scheme(&r.check_scheme)?, u0, 0.0, tf, n_steps, model, &kcfg)?.0)
        },
    );
    let (state, check) = (main?, check?);
    let agreement = state.distance(&check);
    if !(agreement <= r.agreement) {
        return Err(CfError::Reference(format!(
            "`{}` and `{}` at {n_steps} steps differ by {agreement:e} (limit {:e})",
            r.scheme, r.check_scheme, r.agreement
        )));
    }
    Ok(ReferenceSolution { state, n_steps, agreement })
}

/// Computes the reference and runs every cell.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let reference = compute_reference(cfg)?;
    run_benchmark_against(cfg, &reference.state)
}

/// Runs every `(scheme, n_steps)` cell against a given reference state.
///
/// Cells run in parallel; records come back ordered by scheme (as listed in
/// the config) and then by step count.
pub fn run_benchmark_against(cfg: &BenchConfig, reference: &WaveVector) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let (model, u0) = cfg.setup()?;
    if reference.len() != u0.len() {
        return Err(CfError::Config("reference does not match the grid".into()));
    }
    let tf = cfg.horizon();
    let cells: Vec<(&str, usize)> = cfg
        .schemes
        .iter()
        .flat_map(|s| cfg.steps.iter().map(move |&n| (s.as_str(), n)))
        .collect();
    cells
        .par_iter()
        .map(|&(name, n_steps)| {
            let scheme = builtin_scheme(name)?;
            let kcfg = KrylovConfig::with_tol(cfg.tol.tol_for(n_steps));
            let start = Instant::now();
            let (u, stats) = propagate(&scheme, &u0, 0.0, tf, n_steps, &model, &kcfg)?;
            let wall_time = start.elapsed().as_secs_f64();
            Ok(BenchRecord {
                scheme: name.to_string(),
                n_steps,
                tau: tf / n_steps as f64,
                fft_pairs: stats.fft_pairs,
                error_l2: u.distance(reference),
                wall_time,
            })
        })
        .collect()
}

fn csv_row(r: &BenchRecord) -> [String; 6] {
    [
        r.scheme.clone(),
        r.n_steps.to_string(),
        format!("{:.12e}", r.tau),
        r.fft_pairs.to_string(),
        format!("{:.9e}", r.error_l2),
        format!("{:.6e}", r.wall_time),
    ]
}

fn csv_error(e: csv::Error) -> CfError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CfError::Io(io),
        other => CfError::Parse(format!("{other:?}")),
    }
}

/// CSV text for `records`.
pub fn csv_string(records: &[BenchRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(CfError::Config("no records to write".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record(csv_row(r)).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| CfError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CfError::Internal(e.to_string()))
}

/// Writes `records` as CSV; nothing is created when `records` is empty.
pub fn emit_csv(records: &[BenchRecord], path: &Path) -> Result<()> {
    let text = csv_string(records)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Parses CSV produced by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(CfError::Parse(format!("unexpected header: {header:?}")));
    }
    let num = |field: &str, what: &str| -> Result<f64> {
        field.parse::<f64>().map_err(|_| CfError::Parse(format!("bad {what} `{field}`")))
    };
    let int = |field: &str, what: &str| -> Result<u64> {
        field.parse::<u64>().map_err(|_| CfError::Parse(format!("bad {what} `{field}`")))
    };
    rd.records()
        .map(|row| {
            let row = row.map_err(csv_error)?;
            Ok(BenchRecord {
                scheme: row[0].to_string(),
                n_steps: int(&row[1], "n_steps")? as usize,
                tau: num(&row[2], "tau")?,
                fft_pairs: int(&row[3], "fft_pairs")?,
                error_l2: num(&row[4], "error_l2")?,
                wall_time: num(&row[5], "wall_time_s")?,
            })
        })
        .collect()
}

/// Plain-text table of `records`.
pub fn emit_table(records: &[BenchRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>8} {:>12} {:>10} {:>12} {:>10}",
        "scheme", "n_steps", "tau", "fft_pairs", "error_l2", "wall_s"
    );
    for r in records {
        let _ = writeln!(
            out,
            "{:<12} {:>8} {:>12.4} {:>10} {:>12.3e} {:>10.3}",
            r.scheme, r.n_steps, r.tau, r.fft_pairs, r.error_l2, r.wall_time
        );
    }
    out
}

/// Records of one scheme, in increasing step count.
pub fn scheme_records<'a>(records: &'a [BenchRecord], scheme: &str) -> Vec<&'a BenchRecord> {
    let mut v: Vec<_> = records.iter().filter(|r| r.scheme == scheme).collect();
    v.sort_by_key(|r| r.n_steps);
    v
}

/// Slope of `log error_l2` vs `log τ` over the records with step counts in
/// `[min_steps, max_steps]`.
pub fn convergence_slope(records: &[BenchRecord], scheme: &str, min_steps: usize, max_steps: usize) -> Result<f64> {
    let pts: Vec<(f64, f64)> = scheme_records(records, scheme)
        .into_iter()
        .filter(|r| (min_steps..=max_steps).contains(&r.n_steps) && r.error_l2 > 0.0)
        .map(|r| (r.tau, r.error_l2))
        .collect();
    if pts.len() < 2 {
        return Err(CfError::Domain(format!(
            "`{scheme}` has {} records in [{min_steps}, {max_steps}]",
            pts.len()
        )));
    }
    Ok(log_log_slope(&pts))
}

/// FFT-pair cost at which the error first reaches `target`, interpolated
/// linearly on the log-log error/cost polyline. `None` if never reached.
pub fn cost_at_error(records: &[BenchRecord], scheme: &str, target: f64) -> Option<f64> {
    let rs = scheme_records(records, scheme);
    if let Some(first) = rs.first() {
        if first.error_l2 <= target {
            return Some(first.fft_pairs as f64);
        }
    }
    rs.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.error_l2 > target && b.error_l2 <= target {
            let (ea, eb) = (a.error_l2.ln(), b.error_l2.ln());
            let (ca, cb) = ((a.fft_pairs as f64).ln(), (b.fft_pairs as f64).ln());
            let s = (target.ln() - ea) / (eb - ea);
            Some((ca + s * (cb - ca)).exp())
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(scheme: &str, n: usize, pairs: u64, err: f64) -> BenchRecord {
        BenchRecord { scheme: scheme.into(), n_steps: n, tau: 100.0 / n as f64, fft_pairs: pairs, error_l2: err, wall_time: 0.01 }
    }

    #[test]
    fn presets_validate() {
        for name in PRESET_NAMES {
            let cfg = BenchConfig::preset(name).unwrap();
            cfg.validate().unwrap();
        }
        let half = BenchConfig::preset("walker-preston-64-half").unwrap();
        assert_eq!(half.model.amplitude, 0.011025 / 2.0);
        assert_eq!(half.model.omega, 0.01787 / 2.0);
        assert!(matches!(BenchConfig::preset("nope"), Err(CfError::Config(_))));
    }

    #[test]
    fn default_matches_walker_preston() {
        let cfg = BenchConfig::preset("walker-preston-64").unwrap();
        assert_eq!(cfg.grid, GridSpec { x0: -0.8, xn: 4.32, n: 64 });
        assert_eq!(cfg.model, MorseConfig::default());
        assert!((cfg.horizon() - 3516.0).abs() < 1.0);
    }

    #[test]
    fn toml_overrides_only_given_keys() {
        let text = "[grid]\nn = 128\n\n[run]\nsteps = [10, 20]\nkrylov_tol = 1e-12\n";
        let cfg = BenchConfig::from_toml_str(text, BenchConfig::default()).unwrap();
        assert_eq!(cfg.grid.n, 128);
        assert_eq!(cfg.grid.x0, -0.8);
        assert_eq!(cfg.steps, vec![10, 20]);
        assert_eq!(cfg.tol, TolPolicy::Fixed(1e-12));
        assert_eq!(cfg.model, MorseConfig::default());
    }

    #[test]
    fn toml_rejects_bad_input() {
        let base = BenchConfig::default;
        assert!(matches!(BenchConfig::from_toml_str("[run]\nsteps = [20, 10]\n", base()), Err(CfError::Config(_))));
        assert!(matches!(BenchConfig::from_toml_str("[run]\nsteps = [10, 10]\n", base()), Err(CfError::Config(_))));
        assert!(matches!(BenchConfig::from_toml_str("[model]\nmu = -1.0\n", base()), Err(CfError::Config(_))));
        assert!(matches!(BenchConfig::from_toml_str("[grid]\nbogus = 1\n", base()), Err(CfError::Parse(_))));
        assert!(matches!(
            BenchConfig::from_toml_str("[run]\nschemes = [\"rk4\"]\n", base()),
            Err(CfError::UnknownScheme(_))
        ));
        assert!(matches!(
            BenchConfig::from_toml_str("[run]\nkrylov_tol = 1e-12\ntarget_error = 1e-8\n", base()),
            Err(CfError::Config(_))
        ));
    }

    #[test]
    fn tol_policy_floor() {
        assert_eq!(TolPolicy::Fixed(1e-9).tol_for(1000), 1e-9);
        assert!((TolPolicy::Target(1e-8).tol_for(100) - 1e-11).abs() < 1e-25);
        assert_eq!(TolPolicy::Target(1e-10).tol_for(100_000), KRYLOV_TOL_FLOOR);
    }

    #[test]
    fn csv_layout() {
        let text = csv_string(&[rec("cf4-2", 100, 2000, 1.234_567_891_2e-8)]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("scheme,n_steps,tau,fft_pairs,error_l2,wall_time_s"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("cf4-2,100,1.000000000000e0,2000,1.234567891e-8,"), "{row}");
        assert!(lines.next().is_none());
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let records = vec![rec("midpoint", 10, 55, 0.5), rec("cf6-3", 1000, 123_456, 3.3e-11)];
        let first = csv_string(&records).unwrap();
        let second = csv_string(&parse_csv(&first).unwrap()).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn empty_records_are_rejected() {
        assert!(csv_string(&[]).is_err());
        assert!(parse_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn cost_interpolation_on_log_log_line() {
        let rs = vec![rec("s", 10, 100, 1e-6), rec("s", 20, 1000, 1e-10)];
        let c = cost_at_error(&rs, "s", 1e-8).unwrap();
        assert!((c - 316.227_766_016_837_94).abs() < 1e-9, "{c}");
        assert_eq!(cost_at_error(&rs, "s", 1e-12), None);
        assert_eq!(cost_at_error(&rs, "s", 1e-3), Some(100.0));
    }

    #[test]
    fn slope_over_window() {
        let rs: Vec<_> = [10usize, 20, 40, 80].iter().map(|&n| rec("s", n, n as u64, (n as f64).powi(-4))).collect();
        assert!((convergence_slope(&rs, "s", 10, 80).unwrap() - 4.0).abs() < 1e-12);
        assert!(convergence_slope(&rs, "s", 30, 35).is_err());
    }

    #[test]
    fn table_has_a_row_per_record() {
        let t = emit_table(&[rec("a", 1, 1, 1.0), rec("b", 2, 2, 2.0)]);
        assert_eq!(t.lines().count(), 3);
    }
}

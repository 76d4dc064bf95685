//! Simulation data generation: correlated latent Gaussians, the mixed-type
//! covariate transforms, truncation, effect-size and intercept calibration,
//! the 72-cell scenario grid, validation draws and the two-dataset
//! illustrative generator.
//!
//! The published covariate table is partly garbled (misaligned correlation
//! lists, an incomplete fourth row, one implausible effect size), so this
//! module assembles the correlation matrix from the legible pairs only,
//! averages conflicting entries, repairs to positive definite by eigenvalue
//! clipping, and derives the doubtful effect size from the sextile rule. All
//! repairs are surfaced in [`CorrelationRepair`] and configurable via
//! [`TableOptions`].

use crate::data::{DataError, Dataset};
use crate::glm::expit;
use crate::stream;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Number of latent and transformed covariates.
pub const N_COVARIATES: usize = 15;
/// Indices (0-based) of the noise covariates appended in noise scenarios.
pub const NOISE_RANGE: std::ops::Range<usize> = 10..15;
/// Draws used for every calibration quantile/expectation.
pub const CALIBRATION_DRAWS: usize = 1_000_000;
/// Dedicated seed for the shared calibration sample.
pub const CALIBRATION_SEED: u64 = 901;
/// Validation sample size.
pub const VALIDATION_N: usize = 10_000;

#[derive(Debug, Error)]
pub enum SimGenError {
    #[error("calibration does not cover scenario {0}")]
    MissingCalibration(String),
    #[error("degenerate sextile spread for covariate {0}")]
    DegenerateSextiles(usize),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

// ---------------------------------------------------------------------------
// Covariate table
// ---------------------------------------------------------------------------

/// Transform from a standard-normal latent draw to a covariate value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CovariateKind {
    /// `I(z < threshold)`.
    BinaryThreshold { threshold: f64 },
    /// `I(z >= cut1) + I(z >= cut2)`, three ordinal levels.
    OrdinalTwoCut { cut1: f64, cut2: f64 },
    /// `floor(scale·z + shift)`.
    LinearFloor { scale: f64, shift: f64 },
    /// `floor(max(0, scale·exp(z) − shift))`.
    ExpFloorMax { scale: f64, shift: f64 },
    /// `exp(scale·z + shift)`.
    ExpScale { scale: f64, shift: f64 },
    /// `0.01·floor(100·(z + shift)²)`.
    ShiftedSquare { shift: f64 },
}

impl CovariateKind {
    pub fn apply(&self, z: f64) -> f64 {
        match *self {
            CovariateKind::BinaryThreshold { threshold } => {
                if z < threshold {
                    1.0
                } else {
                    0.0
                }
            }
            CovariateKind::OrdinalTwoCut { cut1, cut2 } => {
                let mut v = 0.0;
                if z >= cut1 {
                    v += 1.0;
                }
                if z >= cut2 {
                    v += 1.0;
                }
                v
            }
            CovariateKind::LinearFloor { scale, shift } => (scale * z + shift).floor(),
            CovariateKind::ExpFloorMax { scale, shift } => {
                (scale * z.exp() - shift).max(0.0).floor()
            }
            CovariateKind::ExpScale { scale, shift } => (scale * z + shift).exp(),
            CovariateKind::ShiftedSquare { shift } => 0.01 * (100.0 * (z + shift) * (z + shift)).floor(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(
            self,
            CovariateKind::BinaryThreshold { .. } | CovariateKind::OrdinalTwoCut { .. }
        )
    }
}

/// Where a covariate's true effect comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BetaSource {
    Fixed(f64),
    /// `0.69 / (q_{5/6} − q_{1/6})` of the transformed, truncated covariate.
    Sextile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub kind: CovariateKind,
    pub beta: BetaSource,
    pub is_noise: bool,
}

/// Knobs for the two illegible table cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    /// Threshold of the fourth binary covariate (row unreadable); 0 gives a
    /// balanced covariate.
    pub x4_threshold: f64,
    /// Restore the printed effect 0.36 for the tenth covariate instead of the
    /// sextile-rule value (≈0.036).
    pub use_printed_beta10: bool,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            x4_threshold: 0.0,
            use_printed_beta10: false,
        }
    }
}

/// The fifteen covariate definitions in table order.
pub fn covariate_table(opts: &TableOptions) -> Vec<CovariateSpec> {
    use BetaSource::*;
    use CovariateKind::*;
    vec![
        CovariateSpec { kind: BinaryThreshold { threshold: 0.84 }, beta: Fixed(2.08), is_noise: false },
        CovariateSpec { kind: BinaryThreshold { threshold: -0.35 }, beta: Fixed(1.39), is_noise: false },
        CovariateSpec { kind: BinaryThreshold { threshold: 0.0 }, beta: Fixed(0.69), is_noise: false },
        CovariateSpec { kind: BinaryThreshold { threshold: opts.x4_threshold }, beta: Fixed(0.69), is_noise: false },
        CovariateSpec { kind: OrdinalTwoCut { cut1: -1.2, cut2: 0.75 }, beta: Fixed(0.35), is_noise: false },
        CovariateSpec { kind: OrdinalTwoCut { cut1: 0.5, cut2: 1.5 }, beta: Fixed(0.35), is_noise: false },
        CovariateSpec { kind: LinearFloor { scale: 10.0, shift: 55.0 }, beta: Sextile, is_noise: false },
        CovariateSpec { kind: ExpFloorMax { scale: 100.0, shift: 20.0 }, beta: Sextile, is_noise: false },
        CovariateSpec { kind: ExpFloorMax { scale: 80.0, shift: 20.0 }, beta: Sextile, is_noise: false },
        CovariateSpec {
            kind: LinearFloor { scale: 10.0, shift: 55.0 },
            beta: if opts.use_printed_beta10 { Fixed(0.36) } else { Sextile },
            is_noise: false,
        },
        CovariateSpec { kind: ExpScale { scale: 0.4, shift: 3.0 }, beta: Fixed(0.0), is_noise: true },
        CovariateSpec { kind: ExpScale { scale: 0.5, shift: 1.5 }, beta: Fixed(0.0), is_noise: true },
        CovariateSpec { kind: ShiftedSquare { shift: 4.0 }, beta: Fixed(0.0), is_noise: true },
        CovariateSpec { kind: LinearFloor { scale: 10.0, shift: 55.0 }, beta: Fixed(0.0), is_noise: true },
        CovariateSpec { kind: LinearFloor { scale: 10.0, shift: 55.0 }, beta: Fixed(0.0), is_noise: true },
    ]
}

// ---------------------------------------------------------------------------
// Latent correlation
// ---------------------------------------------------------------------------

/// The legible latent-correlation entries, 0-based `(row, col, value)`.
/// Self-references in the printed lists are dropped; duplicated pairs stay in
/// this list and are averaged during assembly.
pub fn legible_correlation_entries() -> Vec<(usize, usize, f64)> {
    vec![
        (0, 1, 0.5),
        (0, 2, 0.5),
        (0, 6, 0.5),
        (0, 13, 0.5),
        (1, 0, 0.5),
        (1, 13, 0.3),
        (2, 0, 0.5),
        (2, 3, -0.5),
        (2, 4, -0.3),
        (2, 4, 0.5),
        (2, 6, 0.3),
        (2, 7, 0.5),
        (2, 8, 0.3),
        (2, 13, 0.5),
        (3, 2, -0.3),
        (3, 7, 0.3),
        (3, 8, 0.3),
        (4, 6, -0.3),
        (4, 7, 0.3),
        (4, 10, -0.5),
        (5, 0, 0.5),
        (5, 3, 0.3),
        (5, 3, 0.5),
        (5, 4, 0.3),
        (5, 8, 0.5),
        (5, 11, -0.3),
        (5, 13, 0.5),
        (6, 3, 0.3),
        (6, 4, 0.3),
        (6, 7, 0.5),
        (6, 13, 0.3),
        (7, 3, 0.3),
        (7, 4, 0.3),
        (7, 13, 0.3),
        (9, 5, -0.5),
        (9, 11, 0.3),
        (9, 14, 0.5),
        (10, 7, -0.3),
        (10, 14, 0.5),
        (12, 0, 0.5),
        (12, 1, 0.3),
        (12, 3, 0.5),
        (12, 7, 0.5),
        (12, 8, 0.3),
        (13, 10, 0.5),
        (13, 11, 0.5),
    ]
}

/// What the assembly and positive-definite repair had to change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRepair {
    /// Pairs whose printed entries disagreed and were averaged.
    pub averaged_pairs: Vec<(usize, usize)>,
    pub min_eigenvalue_before: f64,
    pub min_eigenvalue_after: f64,
    /// Largest entrywise change introduced by the eigenvalue repair.
    pub max_abs_adjustment: f64,
    pub clipped: bool,
}

/// Repaired latent correlation matrix with its Cholesky factor. `assembled`
/// keeps the pre-repair matrix exactly as read from the table.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCorrelation {
    pub matrix: DMatrix<f64>,
    pub assembled: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    pub repair: CorrelationRepair,
}

impl LatentCorrelation {
    pub fn study_default() -> Self {
        build_correlation(&legible_correlation_entries())
    }
}

/// Assembles the correlation matrix from legible entries: averages duplicates
/// and transposes, then repairs to positive definite by clipping eigenvalues
/// at 1e-6 and rescaling to unit diagonal.
pub fn build_correlation(entries: &[(usize, usize, f64)]) -> LatentCorrelation {
    let p = N_COVARIATES;
    let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for &(r, c, v) in entries {
        assert!(r < p && c < p && r != c, "entry ({r},{c}) out of range");
        let key = (r.min(c), r.max(c));
        let e = sums.entry(key).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let mut m = DMatrix::identity(p, p);
    let mut averaged = Vec::new();
    for (&(r, c), &(sum, count)) in &sums {
        let mean = sum / count as f64;
        m[(r, c)] = mean;
        m[(c, r)] = mean;
        if count > 1 {
            // Only report pairs whose prints genuinely disagreed.
            let distinct = entries
                .iter()
                .filter(|&&(er, ec, _)| (er.min(ec), er.max(ec)) == (r, c))
                .map(|&(_, _, v)| v.to_bits())
                .collect::<std::collections::BTreeSet<_>>();
            if distinct.len() > 1 {
                averaged.push((r, c));
            }
        }
    }

    let assembled = m.clone();
    let eig0 = m.clone().symmetric_eigen();
    let min_before = eig0.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let mut clipped = false;
    for _ in 0..32 {
        let eig = m.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig >= 1e-6 - 1e-12 {
            break;
        }
        clipped = true;
        let mut rebuilt = DMatrix::zeros(p, p);
        for (idx, val) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(idx);
            rebuilt += v * v.transpose() * val.max(1e-6);
        }
        // Rescale to unit diagonal.
        let d: Vec<f64> = (0..p).map(|j| rebuilt[(j, j)].sqrt()).collect();
        for r in 0..p {
            for c in 0..p {
                rebuilt[(r, c)] /= d[r] * d[c];
            }
        }
        m = rebuilt;
    }
    let eig1 = m.clone().symmetric_eigen();
    let min_after = eig1.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max_adj = (0..p)
        .flat_map(|r| (0..p).map(move |c| (r, c)))
        .map(|(r, c)| (m[(r, c)] - assembled[(r, c)]).abs())
        .fold(0.0, f64::max);
    let chol = m
        .clone()
        .cholesky()
        .expect("repaired correlation matrix is positive definite");
    LatentCorrelation {
        matrix: m,
        assembled,
        chol_lower: chol.l(),
        repair: CorrelationRepair {
            averaged_pairs: averaged,
            min_eigenvalue_before: min_before,
            min_eigenvalue_after: min_after,
            max_abs_adjustment: max_adj,
            clipped,
        },
    }
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

/// Per-covariate quantities from the shared calibration sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateCalibration {
    pub q1: f64,
    pub q3: f64,
    /// Q3 + 5·IQR for continuous covariates, absent for discrete ones.
    pub truncation: Option<f64>,
    /// Mean of the transformed covariate before truncation (the published
    /// expectation column refers to this one).
    pub mean_untruncated: f64,
    /// Mean of the transformed, truncated covariate.
    pub mean: f64,
    pub sextile_low: f64,
    pub sextile_high: f64,
}

/// Everything derived once from the 10⁶-draw calibration sample: truncation
/// bounds, effect sizes and per-scenario intercepts. Persisted alongside runs
/// so every scenario shares identical calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCache {
    pub version: String,
    pub seed: u64,
    pub draws: usize,
    pub table: TableOptions,
    pub covariates: Vec<CovariateCalibration>,
    /// True effects on the original covariate scale, before the multiplier.
    pub betas: Vec<f64>,
    /// Intercepts keyed by `ey..c_a.._K..`.
    pub beta0: BTreeMap<String, f64>,
    pub correlation_repair: CorrelationRepair,
}

pub const CALIBRATION_VERSION: &str = "calibration-v1";

fn beta0_key(ey: f64, a: f64, k: usize) -> String {
    format!("ey{ey:.2}_a{a:.2}_K{k}")
}

impl CalibrationCache {
    pub fn beta0_for(&self, scenario: &ScenarioConfig) -> Result<f64, SimGenError> {
        self.beta0
            .get(&beta0_key(scenario.ey_target, scenario.a, scenario.k))
            .copied()
            .ok_or_else(|| SimGenError::MissingCalibration(scenario.id()))
    }

    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("cache serializes");
        std::fs::write(path, json)
    }

    pub fn load(path: &std::path::Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    crate::tuning::quantile_linear_sorted(sorted, q)
}

/// Builds the calibration cache: samples `draws` latent vectors, derives
/// truncation bounds from the untruncated transforms, then effect sizes and
/// per-scenario intercepts from the truncated sample.
pub fn calibrate(
    corr: &LatentCorrelation,
    opts: &TableOptions,
    seed: u64,
    draws: usize,
) -> Result<CalibrationCache, SimGenError> {
    let specs = covariate_table(opts);
    let mut rng = stream::derive_rng(seed, "calibration", 0, "sample");
    let mut columns: Vec<Vec<f64>> = (0..N_COVARIATES).map(|_| Vec::with_capacity(draws)).collect();
    let mut z = vec![0.0f64; N_COVARIATES];
    for _ in 0..draws {
        sample_latent(&mut rng, corr, &mut z);
        for (k, spec) in specs.iter().enumerate() {
            columns[k].push(spec.kind.apply(z[k]));
        }
    }

    let mut covariates = Vec::with_capacity(N_COVARIATES);
    for (k, spec) in specs.iter().enumerate() {
        let mut sorted = columns[k].clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite covariate"));
        let q1 = empirical_quantile(&sorted, 0.25);
        let q3 = empirical_quantile(&sorted, 0.75);
        let mean_untruncated = crate::metrics::pairwise_sum(&columns[k]) / draws as f64;
        let truncation = if spec.kind.is_continuous() {
            Some(q3 + 5.0 * (q3 - q1))
        } else {
            None
        };
        if let Some(bound) = truncation {
            for v in columns[k].iter_mut() {
                if *v > bound {
                    *v = bound;
                }
            }
            sorted = columns[k].clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite covariate"));
        }
        let mean = crate::metrics::pairwise_sum(&columns[k]) / draws as f64;
        let sextile_low = empirical_quantile(&sorted, 1.0 / 6.0);
        let sextile_high = empirical_quantile(&sorted, 5.0 / 6.0);
        covariates.push(CovariateCalibration {
            q1,
            q3,
            truncation,
            mean_untruncated,
            mean,
            sextile_low,
            sextile_high,
        });
    }

    let mut betas = Vec::with_capacity(N_COVARIATES);
    for (k, spec) in specs.iter().enumerate() {
        let beta = match spec.beta {
            BetaSource::Fixed(b) => b,
            BetaSource::Sextile => {
                let spread = covariates[k].sextile_high - covariates[k].sextile_low;
                if spread <= 0.0 {
                    return Err(SimGenError::DegenerateSextiles(k));
                }
                0.69 / spread
            }
        };
        betas.push(beta);
    }

    // Linear predictor sums over the first K covariates for each K.
    let mut beta0 = BTreeMap::new();
    for &k in &[2usize, 5, 10] {
        let mut effect = vec![0.0f64; draws];
        for j in 0..k {
            let b = betas[j];
            for (i, e) in effect.iter_mut().enumerate() {
                *e += b * columns[j][i];
            }
        }
        for &a in &[0.5, 1.0] {
            for &ey in &[0.1, 0.25] {
                let b0 = bisect_intercept(&effect, a, ey);
                beta0.insert(beta0_key(ey, a, k), b0);
            }
        }
    }

    Ok(CalibrationCache {
        version: CALIBRATION_VERSION.to_string(),
        seed,
        draws,
        table: *opts,
        covariates,
        betas,
        beta0: beta0.clone(),
        correlation_repair: corr.repair.clone(),
    })
}

/// Convenience wrapper with the study defaults.
pub fn calibrate_default() -> Result<CalibrationCache, SimGenError> {
    let corr = LatentCorrelation::study_default();
    calibrate(&corr, &TableOptions::default(), CALIBRATION_SEED, CALIBRATION_DRAWS)
}

/// Bisection on the intercept until the mean event probability over the
/// calibration sample is within 1e-3 of the target; the mean is monotone
/// increasing in the intercept, so the bracket always closes.
fn bisect_intercept(effect: &[f64], a: f64, target: f64) -> f64 {
    let mean_at = |b0: f64| -> f64 {
        let mut s = 0.0;
        for &e in effect {
            s += expit(b0 + a * e);
        }
        s / effect.len() as f64
    };
    let mut lo = -40.0;
    let mut hi = 40.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = mean_at(mid);
        if (m - target).abs() <= 1e-3 {
            return mid;
        }
        if m < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Scenario grid and dataset generation
// ---------------------------------------------------------------------------

/// One cell of the factorial design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub ey_target: f64,
    pub noise: bool,
    pub reps: usize,
    pub master_seed: u64,
}

impl ScenarioConfig {
    /// Stable identifier used in filenames, record keys and seed streams.
    pub fn id(&self) -> String {
        format!(
            "ey{:.2}_a{:.1}_K{}_N{}_noise{}",
            self.ey_target,
            self.a,
            self.k,
            self.n,
            if self.noise { 1 } else { 0 }
        )
    }

    /// The full 72-cell factorial design.
    pub fn full_factorial(reps: usize, master_seed: u64) -> Vec<ScenarioConfig> {
        let mut out = Vec::with_capacity(72);
        for &ey_target in &[0.1, 0.25] {
            for &a in &[1.0, 0.5] {
                for &k in &[2usize, 5, 10] {
                    for &n in &[100usize, 250, 500] {
                        for &noise in &[false, true] {
                            out.push(ScenarioConfig {
                                n,
                                k,
                                a,
                                ey_target,
                                noise,
                                reps,
                                master_seed,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), SimGenError> {
        if ![2usize, 5, 10].contains(&self.k) {
            return Err(SimGenError::InvalidScenario(format!("K = {}", self.k)));
        }
        if self.n == 0 {
            return Err(SimGenError::InvalidScenario("N = 0".into()));
        }
        Ok(())
    }

    /// Covariate indices (into the 15-column table) used by this scenario.
    pub fn covariate_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.k).collect();
        if self.noise {
            idx.extend(NOISE_RANGE);
        }
        idx
    }
}

/// A generated dataset together with its generating truth.
#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub data: Dataset,
    /// True event probability per row.
    pub pi_true: Vec<f64>,
    /// True effects per covariate column (original scale, effect multiplier
    /// applied; zero for noise covariates).
    pub beta_true: Vec<f64>,
    pub beta0: f64,
}

fn sample_latent<R: Rng>(rng: &mut R, corr: &LatentCorrelation, out: &mut [f64]) {
    let p = N_COVARIATES;
    let mut raw = [0.0f64; N_COVARIATES];
    for r in raw.iter_mut() {
        *r = rng.sample(StandardNormal);
    }
    let l = &corr.chol_lower;
    for i in 0..p {
        let mut s = 0.0;
        for j in 0..=i {
            s += l[(i, j)] * raw[j];
        }
        out[i] = s;
    }
}

/// Draws `n` rows of all fifteen transformed, truncated covariates.
pub fn sample_transform<R: Rng>(
    n: usize,
    rng: &mut R,
    corr: &LatentCorrelation,
    cache: &CalibrationCache,
) -> DMatrix<f64> {
    let specs = covariate_table(&cache.table);
    let mut x = DMatrix::zeros(n, N_COVARIATES);
    let mut z = [0.0f64; N_COVARIATES];
    for i in 0..n {
        sample_latent(rng, corr, &mut z);
        for (k, spec) in specs.iter().enumerate() {
            let mut v = spec.kind.apply(z[k]);
            if let Some(bound) = cache.covariates[k].truncation {
                if v > bound {
                    v = bound;
                }
            }
            x[(i, k)] = v;
        }
    }
    x
}

fn generate_with_rng<R: Rng>(
    scenario: &ScenarioConfig,
    n: usize,
    rng: &mut R,
    corr: &LatentCorrelation,
    cache: &CalibrationCache,
) -> Result<GeneratedDataset, SimGenError> {
    scenario.validate()?;
    let beta0 = cache.beta0_for(scenario)?;
    let idx = scenario.covariate_indices();
    let all = sample_transform(n, rng, corr, cache);
    let p = idx.len() + 1;
    let mut x = DMatrix::zeros(n, p);
    let mut pi_true = Vec::with_capacity(n);
    let mut y = DVector::zeros(n);
    let beta_true: Vec<f64> = idx
        .iter()
        .map(|&k| if k < scenario.k { scenario.a * cache.betas[k] } else { 0.0 })
        .collect();
    for i in 0..n {
        x[(i, 0)] = 1.0;
        let mut eta = beta0;
        for (c, &k) in idx.iter().enumerate() {
            let v = all[(i, k)];
            x[(i, c + 1)] = v;
            eta += beta_true[c] * v;
        }
        let pi = expit(eta);
        pi_true.push(pi);
        y[i] = if rng.random_bool(pi) { 1.0 } else { 0.0 };
    }
    Ok(GeneratedDataset {
        data: Dataset::new(x, y)?,
        pi_true,
        beta_true,
        beta0,
    })
}

/// Generates one training replicate on its own deterministic stream.
pub fn generate_dataset(
    scenario: &ScenarioConfig,
    replicate: usize,
    corr: &LatentCorrelation,
    cache: &CalibrationCache,
) -> Result<GeneratedDataset, SimGenError> {
    let mut rng = stream::derive_rng(scenario.master_seed, &scenario.id(), replicate as u64, "train");
    generate_with_rng(scenario, scenario.n, &mut rng, corr, cache)
}

/// Generates the replicate's validation set (N = 10,000, fresh outcomes) on a
/// stream independent of the training draw.
pub fn generate_validation(
    scenario: &ScenarioConfig,
    replicate: usize,
    corr: &LatentCorrelation,
    cache: &CalibrationCache,
) -> Result<GeneratedDataset, SimGenError> {
    let mut rng = stream::derive_rng(
        scenario.master_seed,
        &scenario.id(),
        replicate as u64,
        "validation",
    );
    generate_with_rng(scenario, VALIDATION_N, &mut rng, corr, cache)
}

/// The illustrative two-dataset generator: a single binary covariate with
/// P(X = 1) = 0.8 and event probability `expit(−3.05 + x)`.
pub fn illustrative_generator<R: Rng>(n: usize, rng: &mut R) -> GeneratedDataset {
    let mut x = DMatrix::zeros(n, 2);
    let mut y = DVector::zeros(n);
    let mut pi_true = Vec::with_capacity(n);
    for i in 0..n {
        let xv = if rng.random_bool(0.8) { 1.0 } else { 0.0 };
        let pi = expit(-3.05 + xv);
        x[(i, 0)] = 1.0;
        x[(i, 1)] = xv;
        pi_true.push(pi);
        y[i] = if rng.random_bool(pi) { 1.0 } else { 0.0 };
    }
    GeneratedDataset {
        data: Dataset::new(x, y).expect("well-formed illustrative design"),
        pi_true,
        beta_true: vec![1.0],
        beta0: -3.05,
    }
}

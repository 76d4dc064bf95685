//! Study harness: method registry, run configuration, deterministic
//! per-replicate execution, persistence and report aggregation.
//!
//! Replicates are the unit of parallelism. Every replicate derives its RNG
//! streams from (master seed, scenario id, replicate index, purpose), records
//! are sorted before writing, and scenario files are written atomically, so a
//! run's bytes depend only on (config, master seed) and never on worker count
//! or scheduling.

pub mod fitcmd;
pub mod illustrate;
pub mod records;
pub mod report;

use crate::data::{fit_or_last, Dataset, GlmError};
use crate::glm::{self, expit};
use crate::metrics::{self, MetricsError};
use crate::penalty::{self, PenaltyError, PenaltySpec, Standardizer};
use crate::separation;
use crate::simgen::{self, CalibrationCache, GeneratedDataset, LatentCorrelation, ScenarioConfig, SimGenError};
use crate::stream;
use crate::tuning::{self, GcvMode, LambdaGrid, TuningError};
use nalgebra::DVector;
use rayon::prelude::*;
use records::ReplicateRecord;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("record store: {0}")]
    Records(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("refusing to touch an existing run without --resume: {0}")]
    WouldClobber(String),
    #[error(transparent)]
    SimGen(#[from] SimGenError),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    Tuning(#[from] TuningError),
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// The estimation methods of the study, named by their published
/// abbreviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ML")]
    Ml,
    #[serde(rename = "FC")]
    Fc,
    #[serde(rename = "FLIC")]
    Flic,
    #[serde(rename = "D")]
    D,
    #[serde(rename = "GCV")]
    Gcv,
    #[serde(rename = "CE")]
    Ce,
    #[serde(rename = "RCV50")]
    Rcv50,
    #[serde(rename = "RCV95")]
    Rcv95,
    #[serde(rename = "AIC")]
    Aic,
    #[serde(rename = "IP")]
    Ip,
    #[serde(rename = "WP")]
    Wp,
    #[serde(rename = "OEX")]
    Oex,
    #[serde(rename = "OP")]
    Op,
}

impl Method {
    pub fn all() -> &'static [Method] {
        use Method::*;
        &[Ml, Fc, Flic, D, Gcv, Ce, Rcv50, Rcv95, Aic, Ip, Wp, Oex, Op]
    }

    pub fn id(&self) -> &'static str {
        match self {
            Method::Ml => "ML",
            Method::Fc => "FC",
            Method::Flic => "FLIC",
            Method::D => "D",
            Method::Gcv => "GCV",
            Method::Ce => "CE",
            Method::Rcv50 => "RCV50",
            Method::Rcv95 => "RCV95",
            Method::Aic => "AIC",
            Method::Ip => "IP",
            Method::Wp => "WP",
            Method::Oex => "OEX",
            Method::Op => "OP",
        }
    }

    pub fn parse(s: &str) -> Result<Method, StudyError> {
        Method::all()
            .iter()
            .find(|m| m.id() == s)
            .copied()
            .ok_or_else(|| StudyError::Config(format!("unknown method id {s}")))
    }

    /// Ridge-family methods need standardized data and report a λ*.
    pub fn is_ridge(&self) -> bool {
        !matches!(self, Method::Ml | Method::Fc | Method::Flic)
    }

    /// Oracles use the generating truth and exist only inside simulations.
    pub fn needs_truth(&self) -> bool {
        matches!(self, Method::Oex | Method::Op)
    }

    fn rank(&self) -> usize {
        Method::all().iter().position(|m| m == self).expect("listed")
    }
}

/// One requested cell of the factorial design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioKey {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub ey: f64,
    pub noise: bool,
}

impl ScenarioKey {
    fn matches(&self, s: &ScenarioConfig) -> bool {
        self.n == s.n
            && self.k == s.k
            && (self.a - s.a).abs() < 1e-12
            && (self.ey - s.ey_target).abs() < 1e-12
            && self.noise == s.noise
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub len: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            min: 1e-6,
            max: 100.0,
            len: 200,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<LambdaGrid, StudyError> {
        Ok(LambdaGrid::log_linear(self.min, self.max, self.len)?)
    }
}

fn default_reps() -> usize {
    200
}

fn default_methods() -> Vec<Method> {
    Method::all().to_vec()
}

fn default_gcv_mode() -> GcvMode {
    GcvMode::InSample
}

/// Configuration of a simulation run; unknown JSON keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_gcv_mode")]
    pub gcv_mode: GcvMode,
    /// Restrict to these cells; absent means the full 72-cell factorial.
    #[serde(default)]
    pub scenarios: Option<Vec<ScenarioKey>>,
    #[serde(default)]
    pub grid: GridConfig,
    /// Worker threads; 0 means one per available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub resume: bool,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, StudyError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        if self.reps == 0 {
            return Err(StudyError::Config("reps must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(StudyError::Config("method list is empty".into()));
        }
        Ok(())
    }

    fn selected_scenarios(&self) -> Result<Vec<ScenarioConfig>, StudyError> {
        let all = ScenarioConfig::full_factorial(self.reps, self.master_seed);
        match &self.scenarios {
            None => Ok(all),
            Some(keys) => {
                let mut out = Vec::new();
                for key in keys {
                    let matched: Vec<_> = all.iter().filter(|s| key.matches(s)).copied().collect();
                    if matched.is_empty() {
                        return Err(StudyError::Config(format!(
                            "scenario filter {key:?} matches no factorial cell"
                        )));
                    }
                    out.extend(matched);
                }
                out.dedup_by_key(|s| s.id());
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioStatus {
    pub id: String,
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub ey: f64,
    pub noise: bool,
    pub reps: usize,
    pub file: String,
    /// Per-replicate true-model benchmark file.
    pub optimal_file: String,
    pub completed: bool,
}

/// Run-level provenance stored next to the record files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub seed_scheme: String,
    pub master_seed: u64,
    pub reps: usize,
    pub methods: Vec<Method>,
    pub gcv_mode: GcvMode,
    pub grid: GridConfig,
    pub calibration_file: String,
    /// Stable hash of the serialized correlation-repair report.
    pub sigma_repair_hash: String,
    pub scenarios: BTreeMap<String, ScenarioStatus>,
}

pub const MANIFEST_VERSION: &str = "run-v1";
pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const CALIBRATION_FILE: &str = "calibration.json";

fn stable_hash_hex(bytes: &[u8]) -> String {
    // Same mixing as the seed scheme, folded over the byte string.
    let seed = stream::derive_seed(0xC0FFEE, std::str::from_utf8(bytes).unwrap_or(""), bytes.len() as u64, "hash");
    seed[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    fn compatible_with(&self, config: &RunConfig) -> Result<(), StudyError> {
        if self.master_seed != config.master_seed
            || self.reps != config.reps
            || self.methods != config.methods
            || self.gcv_mode != config.gcv_mode
            || self.grid != config.grid
        {
            return Err(StudyError::WouldClobber(
                "existing run was produced with a different configuration".into(),
            ));
        }
        Ok(())
    }

    fn save(&self, dir: &Path) -> Result<(), StudyError> {
        let path = dir.join(MANIFEST_FILE);
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        std::fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, StudyError> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }
}

// ---------------------------------------------------------------------------
// Replicate execution
// ---------------------------------------------------------------------------

pub(crate) struct MethodEstimate {
    pub(crate) lambda_star: Option<f64>,
    pub(crate) boundary: Option<bool>,
    /// Coefficients on the original covariate scale; empty when estimation
    /// was impossible.
    pub(crate) beta: Vec<f64>,
    pub(crate) converged: bool,
    pub(crate) flags: Vec<String>,
}

impl MethodEstimate {
    fn failed(flags: Vec<String>) -> Self {
        Self {
            lambda_star: None,
            boundary: None,
            beta: Vec::new(),
            converged: false,
            flags,
        }
    }
}

pub(crate) struct RidgeContext {
    pub(crate) std_data: Dataset,
    pub(crate) std: Standardizer,
}

pub(crate) fn fit_flags(fit: &crate::data::FitResult) -> Vec<String> {
    let mut flags = Vec::new();
    if !fit.converged {
        flags.push("nonconverged".to_string());
    }
    if fit.flags.separation_suspected {
        flags.push("separation_suspected".to_string());
    }
    if fit.flags.step_halving_used {
        flags.push("step_halving".to_string());
    }
    if fit.flags.prob_clipped {
        flags.push("prob_clipped".to_string());
    }
    flags
}

pub(crate) fn ridge_estimate_at(
    ctx: &RidgeContext,
    lambda: f64,
    grid: &LambdaGrid,
    boundary: Option<bool>,
    extra_flags: Vec<String>,
) -> Result<MethodEstimate, StudyError> {
    let spec = PenaltySpec::uniform(lambda, ctx.std_data.n_covariates());
    let (fit, _clean) = match penalty::fit_ridge_augmented(&ctx.std_data, &spec) {
        Ok(fit) => (fit, true),
        Err(PenaltyError::Glm(err)) => match err.into_last_iterate() {
            Some(last) => (last, false),
            None => return Err(StudyError::Penalty(PenaltyError::Glm(GlmError::InvalidArgument(
                "ridge fit failed without iterate".into(),
            )))),
        },
        Err(e) => return Err(e.into()),
    };
    let raw = penalty::destandardize(&fit.beta, &ctx.std)?;
    let mut flags = fit_flags(&fit);
    flags.extend(extra_flags);
    let boundary = boundary.or_else(|| {
        let lo = grid.values()[0];
        let hi = *grid.values().last().expect("nonempty grid");
        Some(lambda <= lo || lambda >= hi)
    });
    Ok(MethodEstimate {
        lambda_star: Some(lambda),
        boundary,
        beta: raw.iter().copied().collect(),
        converged: fit.converged,
        flags,
    })
}

/// Everything deterministic about one replicate: data, separation status and
/// one estimate per requested method, plus the true-model benchmark.
fn run_replicate(
    scenario: &ScenarioConfig,
    replicate: usize,
    methods: &[Method],
    grid: &LambdaGrid,
    gcv_mode: GcvMode,
    corr: &LatentCorrelation,
    cache: &CalibrationCache,
) -> Result<(Vec<ReplicateRecord>, records::OptimalRecord), StudyError> {
    let gen = simgen::generate_dataset(scenario, replicate, corr, cache)?;
    let val = simgen::generate_validation(scenario, replicate, corr, cache)?;
    run_replicate_on(
        scenario.id(),
        replicate,
        &gen,
        &val,
        methods,
        grid,
        gcv_mode,
        || stream::derive_rng(scenario.master_seed, &scenario.id(), replicate as u64, "rcv"),
    )
}

/// Method execution on fixed training/validation data; shared by the
/// simulation and by callers with external datasets.
#[allow(clippy::too_many_arguments)]
fn run_replicate_on(
    scenario_id: String,
    replicate: usize,
    gen: &GeneratedDataset,
    val: &GeneratedDataset,
    methods: &[Method],
    grid: &LambdaGrid,
    gcv_mode: GcvMode,
    rcv_rng: impl Fn() -> rand_chacha::ChaCha12Rng,
) -> Result<(Vec<ReplicateRecord>, records::OptimalRecord), StudyError> {
    let mut methods: Vec<Method> = methods.to_vec();
    methods.sort_by_key(Method::rank);
    methods.dedup();

    let separated;
    let mut base_flags: Vec<String> = Vec::new();
    match separation::detect_separation(&gen.data) {
        Ok(report) => separated = report.is_separated(),
        Err(_) => {
            separated = false;
            base_flags.push("lp_error".to_string());
        }
    }

    let y_val: Vec<f64> = val.data.y().iter().copied().collect();
    let need_ridge = methods.iter().any(Method::is_ridge);
    let ridge_ctx: Option<RidgeContext> = if need_ridge {
        match penalty::standardize(&gen.data) {
            Ok((std_data, std)) => Some(RidgeContext { std_data, std }),
            Err(PenaltyError::ConstantColumn(_)) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };

    // Shared expensive artifacts.
    let d_ce = if methods.contains(&Method::D) || methods.contains(&Method::Ce) {
        match &ridge_ctx {
            Some(ctx) => Some(tuning::profile_deviance_and_ce(&ctx.std_data, grid, None)?),
            None => None,
        }
    } else {
        None
    };
    let rcv_draws = if methods.contains(&Method::Rcv50) || methods.contains(&Method::Rcv95) {
        match &ridge_ctx {
            Some(ctx) => {
                let mut rng = rcv_rng();
                Some(tuning::rcv_draws(&ctx.std_data, grid, 50, &mut rng)?)
            }
            None => None,
        }
    } else {
        None
    };

    let mut out = Vec::with_capacity(methods.len());

    // True-model benchmark: optimal c-index on fresh validation outcomes.
    let optimal = records::OptimalRecord {
        scenario_id: scenario_id.clone(),
        replicate,
        separated,
        cindex: metrics::c_index(&val.pi_true, &y_val).ok(),
        flags: base_flags.clone(),
    };

    for method in &methods {
        let estimate = estimate_method(
            *method,
            gen,
            &ridge_ctx,
            grid,
            gcv_mode,
            d_ce.as_ref(),
            rcv_draws.as_ref(),
        )?;
        let mut flags = base_flags.clone();
        flags.extend(estimate.flags);
        let (slope, cindex, contrib) = if estimate.beta.is_empty() {
            (None, None, None)
        } else {
            let beta = DVector::from_vec(estimate.beta.clone());
            let pi_train: Vec<f64> = (gen.data.x() * &beta).iter().map(|&e| expit(e)).collect();
            let contrib = metrics::mean_sq_pred_err(&pi_train, &gen.pi_true)?;
            let slope = match metrics::calibration_slope(&val.data, &beta) {
                Ok(outcome) => {
                    if outcome.degenerate {
                        flags.push("degenerate_slope".to_string());
                    }
                    if !outcome.converged {
                        flags.push("slope_nonconverged".to_string());
                    }
                    Some(outcome.slope)
                }
                Err(_) => {
                    flags.push("slope_failed".to_string());
                    None
                }
            };
            let pi_val: Vec<f64> = (val.data.x() * &beta).iter().map(|&e| expit(e)).collect();
            let cindex = match metrics::c_index(&pi_val, &y_val) {
                Ok(c) => Some(c),
                Err(_) => {
                    flags.push("cindex_single_class".to_string());
                    None
                }
            };
            (slope, cindex, Some(contrib))
        };
        if estimate.boundary == Some(true) {
            flags.push("boundary_lambda".to_string());
        }
        out.push(ReplicateRecord {
            scenario_id: scenario_id.clone(),
            replicate,
            method: method.id().to_string(),
            lambda_star: estimate.lambda_star,
            boundary_hit: estimate.boundary,
            separated,
            converged: estimate.converged,
            beta: estimate.beta,
            slope,
            cindex,
            rmse_pred_contrib: contrib,
            flags,
        });
    }
    Ok((out, optimal))
}

fn estimate_method(
    method: Method,
    gen: &GeneratedDataset,
    ridge_ctx: &Option<RidgeContext>,
    grid: &LambdaGrid,
    gcv_mode: GcvMode,
    d_ce: Option<&(tuning::CriterionProfile, tuning::CriterionProfile)>,
    rcv_draws: Option<&tuning::RcvDraws>,
) -> Result<MethodEstimate, StudyError> {
    match method {
        Method::Ml => {
            let (fit, _) = fit_or_last(glm::fit_ml_default(&gen.data))?;
            Ok(MethodEstimate {
                lambda_star: None,
                boundary: None,
                beta: fit.beta.iter().copied().collect(),
                converged: fit.converged,
                flags: fit_flags(&fit),
            })
        }
        Method::Fc => match penalty::fit_firth(&gen.data) {
            Ok(fit) => Ok(MethodEstimate {
                lambda_star: None,
                boundary: None,
                beta: fit.beta.iter().copied().collect(),
                converged: fit.converged,
                flags: fit_flags(&fit),
            }),
            Err(err) => match err.into_last_iterate() {
                Some(fit) => Ok(MethodEstimate {
                    lambda_star: None,
                    boundary: None,
                    beta: fit.beta.iter().copied().collect(),
                    converged: false,
                    flags: fit_flags(&fit),
                }),
                None => Ok(MethodEstimate::failed(vec!["firth_failed".to_string()])),
            },
        },
        Method::Flic => match penalty::fit_firth(&gen.data) {
            Ok(firth_fit) => {
                let fit = penalty::flic(&gen.data, &firth_fit)?;
                Ok(MethodEstimate {
                    lambda_star: None,
                    boundary: None,
                    beta: fit.beta.iter().copied().collect(),
                    converged: fit.converged,
                    flags: fit_flags(&fit),
                })
            }
            Err(_) => Ok(MethodEstimate::failed(vec!["firth_failed".to_string()])),
        },
        _ => {
            let Some(ctx) = ridge_ctx else {
                return Ok(MethodEstimate::failed(vec!["constant_covariate".to_string()]));
            };
            match method {
                Method::D | Method::Ce => {
                    let (d_profile, ce_profile) = d_ce.expect("profiles computed for D/CE");
                    let profile = if method == Method::D { d_profile } else { ce_profile };
                    let mut extra = Vec::new();
                    let sel = profile.selected_flags();
                    if sel.nonconverged {
                        extra.push("loocv_nonconverged".to_string());
                    }
                    if sel.clipped {
                        extra.push("loocv_clipped".to_string());
                    }
                    ridge_estimate_at(
                        ctx,
                        profile.selected_lambda,
                        grid,
                        Some(profile.boundary() != tuning::BoundaryHit::Interior),
                        extra,
                    )
                }
                Method::Gcv => {
                    let profile = tuning::profile_gcv(&ctx.std_data, grid, gcv_mode)?;
                    ridge_estimate_at(
                        ctx,
                        profile.selected_lambda,
                        grid,
                        Some(profile.boundary() != tuning::BoundaryHit::Interior),
                        Vec::new(),
                    )
                }
                Method::Aic => {
                    let profile = tuning::profile_aic(&ctx.std_data, grid)?;
                    ridge_estimate_at(
                        ctx,
                        profile.selected_lambda,
                        grid,
                        Some(profile.boundary() != tuning::BoundaryHit::Interior),
                        Vec::new(),
                    )
                }
                Method::Rcv50 | Method::Rcv95 => {
                    let draws = rcv_draws.expect("draws computed for RCV");
                    let theta = if method == Method::Rcv50 { 0.5 } else { 0.95 };
                    let lambda = tuning::quantile_linear(&draws.per_rep_lambda, theta);
                    let extra = if draws.any_unstratified {
                        vec!["rcv_unstratified".to_string()]
                    } else {
                        Vec::new()
                    };
                    ridge_estimate_at(ctx, lambda, grid, None, extra)
                }
                Method::Ip => ridge_estimate_at(ctx, 2.0, grid, Some(false), Vec::new()),
                Method::Wp => ridge_estimate_at(ctx, 0.5, grid, Some(false), Vec::new()),
                Method::Oex => {
                    let sel = tuning::oracle_oex(&ctx.std_data, grid, gen.beta_true[0], &ctx.std)?;
                    let boundary = sel.index == 0 || sel.index + 1 == grid.len();
                    ridge_estimate_at(ctx, sel.lambda, grid, Some(boundary), Vec::new())
                }
                Method::Op => {
                    let sel = tuning::oracle_op(&ctx.std_data, grid, &gen.pi_true)?;
                    let boundary = sel.index == 0 || sel.index + 1 == grid.len();
                    ridge_estimate_at(ctx, sel.lambda, grid, Some(boundary), Vec::new())
                }
                Method::Ml | Method::Fc | Method::Flic => unreachable!("handled above"),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Simulation driver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub scenarios_run: usize,
    pub scenarios_skipped: usize,
    pub records_written: usize,
    pub out_dir: PathBuf,
}

/// Runs the configured scenarios, writing one sorted record CSV per scenario,
/// a shared calibration cache and a run manifest into `config.out_dir`.
pub fn run_simulate(config: &RunConfig) -> Result<SimulateSummary, StudyError> {
    config.validate()?;
    let out_dir = &config.out_dir;
    std::fs::create_dir_all(out_dir)?;
    let grid = config.grid.build()?;

    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut manifest = if manifest_path.exists() {
        if !config.resume {
            return Err(StudyError::WouldClobber(format!(
                "{} already contains a run manifest",
                out_dir.display()
            )));
        }
        let existing = RunManifest::load(out_dir)?;
        existing.compatible_with(config)?;
        existing
    } else {
        RunManifest {
            version: MANIFEST_VERSION.to_string(),
            seed_scheme: stream::SEED_SCHEME_VERSION.to_string(),
            master_seed: config.master_seed,
            reps: config.reps,
            methods: config.methods.clone(),
            gcv_mode: config.gcv_mode,
            grid: config.grid,
            calibration_file: CALIBRATION_FILE.to_string(),
            sigma_repair_hash: String::new(),
            scenarios: BTreeMap::new(),
        }
    };

    let corr = LatentCorrelation::study_default();
    let calibration_path = out_dir.join(CALIBRATION_FILE);
    let cache = if calibration_path.exists() {
        let loaded = CalibrationCache::load(&calibration_path)?;
        if loaded.version != simgen::CALIBRATION_VERSION {
            return Err(StudyError::Config(format!(
                "calibration file version {} is not {}",
                loaded.version,
                simgen::CALIBRATION_VERSION
            )));
        }
        loaded
    } else {
        let cache = simgen::calibrate_default()?;
        cache.save(&calibration_path)?;
        cache
    };
    manifest.sigma_repair_hash = stable_hash_hex(serde_json::to_string(&corr.repair)?.as_bytes());
    manifest.save(out_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| StudyError::Config(format!("thread pool: {e}")))?;

    let scenarios = config.selected_scenarios()?;
    let mut run = 0usize;
    let mut skipped = 0usize;
    let mut written = 0usize;
    for scenario in &scenarios {
        let id = scenario.id();
        let file = format!("records_{id}.csv");
        let path = out_dir.join(&file);
        if let Some(status) = manifest.scenarios.get(&id) {
            if status.completed && path.exists() {
                skipped += 1;
                continue;
            }
        }
        let optimal_file = format!("optimal_{id}.csv");
        let methods = &config.methods;
        let gcv_mode = config.gcv_mode;
        let results: Result<Vec<(Vec<ReplicateRecord>, records::OptimalRecord)>, StudyError> =
            pool.install(|| {
                (0..scenario.reps)
                    .into_par_iter()
                    .map(|rep| run_replicate(scenario, rep, methods, &grid, gcv_mode, &corr, &cache))
                    .collect()
            });
        let mut records = Vec::new();
        let mut optimal = Vec::new();
        for (recs, opt) in results? {
            records.extend(recs);
            optimal.push(opt);
        }
        records.sort_by(|a, b| {
            (a.replicate, method_sort_key(&a.method)).cmp(&(b.replicate, method_sort_key(&b.method)))
        });
        optimal.sort_by_key(|o| o.replicate);
        let n_beta = scenario.covariate_indices().len() + 1;
        records::write_records(&path, n_beta, &records)?;
        records::write_optimal(&out_dir.join(&optimal_file), &optimal)?;
        written += records.len();
        run += 1;
        manifest.scenarios.insert(
            id.clone(),
            ScenarioStatus {
                id,
                n: scenario.n,
                k: scenario.k,
                a: scenario.a,
                ey: scenario.ey_target,
                noise: scenario.noise,
                reps: scenario.reps,
                file,
                optimal_file,
                completed: true,
            },
        );
        manifest.save(out_dir)?;
    }

    Ok(SimulateSummary {
        scenarios_run: run,
        scenarios_skipped: skipped,
        records_written: written,
        out_dir: out_dir.clone(),
    })
}

fn method_sort_key(id: &str) -> usize {
    Method::parse(id).map(|m| m.rank()).unwrap_or(usize::MAX)
}

//! Complexity-parameter selection for ridge logistic regression: the λ grid,
//! a leave-one-out prediction engine, the tuning criteria (deviance, GCV,
//! classification error, AIC), repeated stratified 10-fold CV with a quantile
//! rule, and the explanation/prediction oracles.
//!
//! Grid scans run from the largest λ down, warm-starting every fit from the
//! neighbouring solution; leave-one-out and fold fits warm-start from the
//! full-data fit at the same λ. Nonconvergent grid points receive infinite
//! criterion scores, except for the deviance criteria where the last
//! iterate's clipped predictions are used.

use crate::data::{fit_or_last, Dataset, FitResult, GlmError};
use crate::glm::{self, clip_probability, FitOptions};
use crate::penalty::{self, destandardize, PenaltyError, PenaltySpec, Standardizer};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TuningError {
    #[error("all criterion scores are nonfinite")]
    AllScoresNonFinite,
    #[error("effective degrees of freedom {df_e} must be below N = {n}")]
    DegreesOfFreedom { df_e: f64, n: usize },
    #[error("penalized Hessian is singular")]
    SingularPenalizedHessian,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    Glm(#[from] GlmError),
}

/// Ascending grid of positive complexity-parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    /// The study grid: 200 log-linearly equidistant values from 1e-6 to 100.
    pub fn study_default() -> Self {
        Self::log_linear(1e-6, 100.0, 200).expect("valid default grid")
    }

    /// `len` log-linearly equidistant values from `min` to `max` inclusive.
    pub fn log_linear(min: f64, max: f64, len: usize) -> Result<Self, TuningError> {
        if !(min.is_finite() && min > 0.0 && max.is_finite() && max > min) || len < 2 {
            return Err(TuningError::InvalidArgument(format!(
                "log-linear grid needs 0 < min < max and len >= 2, got ({min}, {max}, {len})"
            )));
        }
        let (lo, hi) = (min.log10(), max.log10());
        let values = (0..len)
            .map(|j| 10f64.powf(lo + (hi - lo) * j as f64 / (len - 1) as f64))
            .collect();
        Ok(Self { values })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self, TuningError> {
        if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) || values[0] <= 0.0 {
            return Err(TuningError::InvalidArgument(
                "grid values must be strictly ascending and positive".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Which λ wins when several grid points attain the criterion minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieRule {
    /// Smallest minimizing λ (deviance, GCV, AIC, RCV inner selection).
    MinSmallest,
    /// Largest minimizing λ (classification error).
    MinLargest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub lambda: f64,
}

/// Picks the minimizing grid point under the given tie rule; nonfinite scores
/// never win.
pub fn select_lambda(
    grid: &LambdaGrid,
    scores: &[f64],
    rule: TieRule,
) -> Result<Selection, TuningError> {
    if scores.len() != grid.len() {
        return Err(TuningError::InvalidArgument(format!(
            "{} scores vs {} grid points",
            scores.len(),
            grid.len()
        )));
    }
    let mut best: Option<usize> = None;
    for (j, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        best = match best {
            None => Some(j),
            Some(b) => {
                let better = match rule {
                    TieRule::MinSmallest => s < scores[b],
                    TieRule::MinLargest => s <= scores[b],
                };
                Some(if better { j } else { b })
            }
        };
    }
    let index = best.ok_or(TuningError::AllScoresNonFinite)?;
    Ok(Selection {
        index,
        lambda: grid.values()[index],
    })
}

/// Whether the selected λ sits on a grid endpoint; the study tracks how often
/// tuning runs into the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryHit {
    Interior,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PointFlags {
    pub nonconverged: bool,
    pub clipped: bool,
}

/// A criterion evaluated over the grid together with the selected λ*.
#[derive(Debug, Clone)]
pub struct CriterionProfile {
    pub grid: LambdaGrid,
    pub scores: Vec<f64>,
    pub point_flags: Vec<PointFlags>,
    pub rule: TieRule,
    pub selected_index: usize,
    pub selected_lambda: f64,
}

impl CriterionProfile {
    fn build(
        grid: &LambdaGrid,
        scores: Vec<f64>,
        point_flags: Vec<PointFlags>,
        rule: TieRule,
    ) -> Result<Self, TuningError> {
        let sel = select_lambda(grid, &scores, rule)?;
        Ok(Self {
            grid: grid.clone(),
            scores,
            point_flags,
            rule,
            selected_index: sel.index,
            selected_lambda: sel.lambda,
        })
    }

    pub fn boundary(&self) -> BoundaryHit {
        if self.selected_index == 0 {
            BoundaryHit::Lower
        } else if self.selected_index + 1 == self.grid.len() {
            BoundaryHit::Upper
        } else {
            BoundaryHit::Interior
        }
    }

    pub fn selected_flags(&self) -> PointFlags {
        self.point_flags[self.selected_index]
    }
}

// ---------------------------------------------------------------------------
// Shared grid-scan machinery
// ---------------------------------------------------------------------------

/// Augmented dataset whose pseudo-record weights can be retargeted to a new λ
/// without rebuilding the design matrix.
struct AugmentedWork {
    data: Dataset,
    n_original: usize,
    n_pseudo: usize,
    rescale_s: f64,
}

impl AugmentedWork {
    fn new(std_data: &Dataset, k: usize) -> Result<Self, TuningError> {
        // Any positive λ builds the right shape; weights are retargeted below.
        let spec = PenaltySpec::uniform(1.0, k);
        let data = penalty::augment(std_data, &spec)?;
        Ok(Self {
            n_original: std_data.n_rows(),
            n_pseudo: data.n_rows() - std_data.n_rows(),
            rescale_s: spec.rescale_s,
            data,
        })
    }

    fn set_lambda(&mut self, lambda: f64) {
        let w = 2.0 * self.rescale_s * self.rescale_s * lambda;
        for r in self.n_original..self.n_original + self.n_pseudo {
            self.data.swap_weight(r, w);
        }
    }

    fn fit(&self, init: Option<&DVector<f64>>) -> Result<(FitResult, bool), TuningError> {
        let opts = FitOptions {
            init,
            ..Default::default()
        };
        Ok(fit_or_last(glm::fit_ml(&self.data, &opts))?)
    }
}

/// Rows that are exact duplicates (same covariates, outcome and weight) share
/// one leave-one-out fit; grouping them once makes the LOOCV sweep cheap on
/// designs with few distinct rows.
fn duplicate_groups(std_data: &Dataset) -> (Vec<usize>, Vec<usize>) {
    use std::collections::HashMap;
    let n = std_data.n_rows();
    let p = std_data.n_coef();
    let mut group_of = vec![0usize; n];
    let mut reps: Vec<usize> = Vec::new();
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    for (i, slot) in group_of.iter_mut().enumerate() {
        let mut key = Vec::with_capacity(p + 2);
        for j in 0..p {
            key.push(std_data.x()[(i, j)].to_bits());
        }
        key.push(std_data.y()[i].to_bits());
        key.push(std_data.weights()[i].to_bits());
        *slot = *seen.entry(key).or_insert_with(|| {
            reps.push(i);
            reps.len() - 1
        });
    }
    (group_of, reps)
}

/// Leave-one-out predictions at a single λ.
#[derive(Debug, Clone)]
pub struct LoocvResult {
    /// Clipped probability for each observation from the fit without it.
    pub predictions: Vec<f64>,
    /// Per-observation marker for leave-one-out fits that did not converge
    /// cleanly (their last iterate still supplies the prediction).
    pub nonconverged: Vec<bool>,
    pub any_clipped: bool,
}

impl LoocvResult {
    pub fn any_nonconverged(&self) -> bool {
        self.nonconverged.iter().any(|&b| b)
    }
}

/// Leave-one-out ridge predictions at `lambda`, each fit warm-started from
/// the full-data fit.
pub fn loocv_predictions(std_data: &Dataset, lambda: f64) -> Result<LoocvResult, TuningError> {
    let mut work = AugmentedWork::new(std_data, std_data.n_covariates())?;
    work.set_lambda(lambda);
    let (group_of, reps) = duplicate_groups(std_data);
    loocv_on(&mut work, std_data, None, &group_of, &reps).map(|(loo, _)| loo)
}

/// Runs the leave-one-out loop at the current working λ and also returns the
/// full-data solution for warm-starting the next grid point.
fn loocv_on(
    work: &mut AugmentedWork,
    std_data: &Dataset,
    warm: Option<&DVector<f64>>,
    group_of: &[usize],
    representatives: &[usize],
) -> Result<(LoocvResult, DVector<f64>), TuningError> {
    let n = std_data.n_rows();
    let (full, _) = work.fit(warm)?;
    let mut group_pred = vec![f64::NAN; representatives.len()];
    let mut group_nc = vec![false; representatives.len()];
    for (g, &i) in representatives.iter().enumerate() {
        let saved = work.data.swap_weight(i, 0.0);
        let outcome = work.fit(Some(&full.beta));
        work.data.swap_weight(i, saved);
        let (fit, clean) = outcome?;
        let eta = glm::row_dot(std_data.x(), i, &fit.beta);
        group_pred[g] = clip_probability(glm::expit(eta));
        group_nc[g] = !clean || !fit.converged;
    }
    let mut predictions = vec![0.0; n];
    let mut nonconverged = vec![false; n];
    let mut any_clipped = false;
    for (i, &g) in group_of.iter().enumerate() {
        predictions[i] = group_pred[g];
        nonconverged[i] = group_nc[g];
        any_clipped |= predictions[i] <= glm::PROB_CLIP || predictions[i] >= 1.0 - glm::PROB_CLIP;
    }
    Ok((
        LoocvResult {
            predictions,
            nonconverged,
            any_clipped,
        },
        full.beta,
    ))
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

/// Deviance of out-of-sample predictions: `−2 Σ (y log π̂ + (1−y) log(1−π̂))`
/// on clipped probabilities.
pub fn criterion_d(pi_loo: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(pi_loo.len(), y.len());
    let mut d = 0.0;
    for (&pi, &yi) in pi_loo.iter().zip(y) {
        let pi = clip_probability(pi);
        d += yi * pi.ln() + (1.0 - yi) * (1.0 - pi).ln();
    }
    -2.0 * d
}

/// Classification error at cut-off `c`; predictions equal to `c` (within
/// 1e-12) count one half.
pub fn criterion_ce(pi_loo: &[f64], y: &[f64], c: f64) -> f64 {
    debug_assert_eq!(pi_loo.len(), y.len());
    let mut e = 0.0;
    for (&pi, &yi) in pi_loo.iter().zip(y) {
        if (pi - c).abs() <= 1e-12 {
            e += 0.5;
        } else if pi < c {
            e += yi;
        } else {
            e += 1.0 - yi;
        }
    }
    e / y.len() as f64
}

/// Effective degrees of freedom of a converged ridge fit:
/// `trace(I(β̂)(I(β̂)+λP)⁻¹)` with `P = diag(0,1,…,1)`.
pub fn effective_df(
    std_data: &Dataset,
    beta_hat: &DVector<f64>,
    lambda: f64,
) -> Result<f64, TuningError> {
    let (_, info) = glm::score_and_fisher(std_data, beta_hat)?;
    effective_df_from_fisher(&info, lambda)
}

fn effective_df_from_fisher(info: &DMatrix<f64>, lambda: f64) -> Result<f64, TuningError> {
    let p = info.nrows();
    let mut penalized = info.clone();
    for j in 1..p {
        penalized[(j, j)] += lambda;
    }
    let chol = Cholesky::new(penalized).ok_or(TuningError::SingularPenalizedHessian)?;
    let z = chol.solve(info);
    Ok(z.trace())
}

/// Generalized cross-validation score `N·D/(N − df_e)²`.
pub fn criterion_gcv(n_obs: usize, deviance: f64, df_e: f64) -> Result<f64, TuningError> {
    if df_e >= n_obs as f64 {
        return Err(TuningError::DegreesOfFreedom { df_e, n: n_obs });
    }
    let n = n_obs as f64;
    Ok(n * deviance / ((n - df_e) * (n - df_e)))
}

/// Akaike information criterion of the ridge fit at `lambda`:
/// `−2ℓ(β̂) + 2·df_e(λ)` with the unpenalized log-likelihood.
pub fn criterion_aic(std_data: &Dataset, lambda: f64) -> Result<f64, TuningError> {
    let spec = PenaltySpec::uniform(lambda, std_data.n_covariates());
    let fit = penalty::fit_ridge_augmented(std_data, &spec)?;
    let df = effective_df_from_fisher(&fit.fisher, lambda)?;
    Ok(-2.0 * fit.loglik + 2.0 * df)
}

/// Which deviance feeds the GCV numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GcvMode {
    /// In-sample deviance `−2ℓ(β̂_λ)`; classical GCV exists to avoid
    /// resampling, so this is the default.
    InSample,
    /// Leave-one-out deviance, the literal reading of the criterion text.
    Loocv,
}

// ---------------------------------------------------------------------------
// Grid profiles
// ---------------------------------------------------------------------------

/// Deviance and classification-error profiles from a single LOOCV sweep over
/// the grid. The CE cut-off defaults to the observed event rate.
pub fn profile_deviance_and_ce(
    std_data: &Dataset,
    grid: &LambdaGrid,
    cutoff: Option<f64>,
) -> Result<(CriterionProfile, CriterionProfile), TuningError> {
    let n = std_data.n_rows();
    let y: Vec<f64> = std_data.y().iter().copied().collect();
    let c = cutoff.unwrap_or_else(|| std_data.event_rate());
    let mut work = AugmentedWork::new(std_data, std_data.n_covariates())?;
    let (group_of, reps) = duplicate_groups(std_data);

    let m = grid.len();
    let mut d_scores = vec![f64::INFINITY; m];
    let mut ce_scores = vec![f64::INFINITY; m];
    let mut flags = vec![PointFlags::default(); m];
    let mut warm: Option<DVector<f64>> = None;
    for j in (0..m).rev() {
        work.set_lambda(grid.values()[j]);
        let (loo, full_beta) = loocv_on(&mut work, std_data, warm.as_ref(), &group_of, &reps)?;
        d_scores[j] = criterion_d(&loo.predictions, &y);
        ce_scores[j] = criterion_ce(&loo.predictions, &y, c);
        flags[j] = PointFlags {
            nonconverged: loo.any_nonconverged(),
            clipped: loo.any_clipped,
        };
        // Warm-start the next (smaller) λ from this full-data fit.
        warm = Some(full_beta);
    }
    let _ = n;
    let d = CriterionProfile::build(grid, d_scores, flags.clone(), TieRule::MinSmallest)?;
    let ce = CriterionProfile::build(grid, ce_scores, flags, TieRule::MinLargest)?;
    Ok((d, ce))
}

/// Leave-one-out deviance profile alone.
pub fn profile_deviance(
    std_data: &Dataset,
    grid: &LambdaGrid,
) -> Result<CriterionProfile, TuningError> {
    profile_deviance_and_ce(std_data, grid, None).map(|(d, _)| d)
}

/// Scans the grid from large to small λ with warm starts, handing each fit to
/// the callback. Nonconvergent fits are handed over too, marked unclean.
fn ridge_scan<F>(std_data: &Dataset, grid: &LambdaGrid, mut visit: F) -> Result<(), TuningError>
where
    F: FnMut(usize, f64, &FitResult, bool) -> Result<(), TuningError>,
{
    let mut work = AugmentedWork::new(std_data, std_data.n_covariates())?;
    let mut warm: Option<DVector<f64>> = None;
    for j in (0..grid.len()).rev() {
        let lambda = grid.values()[j];
        work.set_lambda(lambda);
        let (fit, clean) = work.fit(warm.as_ref())?;
        // The fit reports over the augmented rows; restate on the originals.
        let (ll, clipped) = glm::log_likelihood_flagged(std_data, &fit.beta)?;
        let (_, fisher) = glm::score_and_fisher(std_data, &fit.beta)?;
        let mut stripped = fit.clone();
        stripped.loglik = ll;
        stripped.fisher = fisher;
        stripped.flags.prob_clipped |= clipped;
        visit(j, lambda, &stripped, clean && fit.converged)?;
        warm = Some(fit.beta);
    }
    Ok(())
}

/// GCV profile over the grid. `mode` picks the deviance fed to the numerator.
pub fn profile_gcv(
    std_data: &Dataset,
    grid: &LambdaGrid,
    mode: GcvMode,
) -> Result<CriterionProfile, TuningError> {
    let n = std_data.n_rows();
    let y: Vec<f64> = std_data.y().iter().copied().collect();
    let m = grid.len();
    let mut scores = vec![f64::INFINITY; m];
    let mut flags = vec![PointFlags::default(); m];
    let loo_d: Option<Vec<f64>> = match mode {
        GcvMode::InSample => None,
        GcvMode::Loocv => {
            let mut work = AugmentedWork::new(std_data, std_data.n_covariates())?;
            let (group_of, reps) = duplicate_groups(std_data);
            let mut warm: Option<DVector<f64>> = None;
            let mut ds = vec![f64::INFINITY; m];
            for j in (0..m).rev() {
                work.set_lambda(grid.values()[j]);
                let (loo, full_beta) = loocv_on(&mut work, std_data, warm.as_ref(), &group_of, &reps)?;
                ds[j] = criterion_d(&loo.predictions, &y);
                warm = Some(full_beta);
            }
            Some(ds)
        }
    };
    ridge_scan(std_data, grid, |j, lambda, fit, clean| {
        flags[j] = PointFlags {
            nonconverged: !clean,
            clipped: fit.flags.prob_clipped,
        };
        if !clean {
            return Ok(());
        }
        let deviance = match &loo_d {
            None => -2.0 * fit.loglik,
            Some(ds) => ds[j],
        };
        let df = effective_df_from_fisher(&fit.fisher, lambda)?;
        scores[j] = criterion_gcv(n, deviance, df)?;
        Ok(())
    })?;
    CriterionProfile::build(grid, scores, flags, TieRule::MinSmallest)
}

/// AIC profile over the grid.
pub fn profile_aic(std_data: &Dataset, grid: &LambdaGrid) -> Result<CriterionProfile, TuningError> {
    let m = grid.len();
    let mut scores = vec![f64::INFINITY; m];
    let mut flags = vec![PointFlags::default(); m];
    ridge_scan(std_data, grid, |j, lambda, fit, clean| {
        flags[j] = PointFlags {
            nonconverged: !clean,
            clipped: fit.flags.prob_clipped,
        };
        if clean {
            let df = effective_df_from_fisher(&fit.fisher, lambda)?;
            scores[j] = -2.0 * fit.loglik + 2.0 * df;
        }
        Ok(())
    })?;
    CriterionProfile::build(grid, scores, flags, TieRule::MinSmallest)
}

// ---------------------------------------------------------------------------
// Repeated 10-fold cross-validation
// ---------------------------------------------------------------------------

/// Assignment of observations to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub n_folds: usize,
    pub stratified: bool,
}

/// Stratified fold draw: events and non-events are shuffled separately and
/// dealt round-robin, so per-fold counts of each class differ by at most one.
/// With fewer events than folds the draw falls back to unstratified.
pub fn stratified_folds<R: Rng>(y: &[f64], n_folds: usize, rng: &mut R) -> FoldAssignment {
    let n = y.len();
    let mut events: Vec<usize> = (0..n).filter(|&i| y[i] == 1.0).collect();
    let mut non_events: Vec<usize> = (0..n).filter(|&i| y[i] != 1.0).collect();
    let mut fold_of = vec![0usize; n];
    if events.len() < n_folds {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(rng);
        for (pos, &i) in all.iter().enumerate() {
            fold_of[i] = pos % n_folds;
        }
        return FoldAssignment {
            fold_of,
            n_folds,
            stratified: false,
        };
    }
    events.shuffle(rng);
    non_events.shuffle(rng);
    for (pos, &i) in events.iter().enumerate() {
        fold_of[i] = pos % n_folds;
    }
    for (pos, &i) in non_events.iter().enumerate() {
        // Reverse direction so fold sizes stay balanced overall.
        fold_of[i] = n_folds - 1 - (pos % n_folds);
    }
    FoldAssignment {
        fold_of,
        n_folds,
        stratified: true,
    }
}

/// Per-repetition λ* values from repeated stratified 10-fold CV deviance.
#[derive(Debug, Clone)]
pub struct RcvDraws {
    pub per_rep_lambda: Vec<f64>,
    pub any_unstratified: bool,
}

/// Runs `reps` repetitions of 10-fold cross-validated deviance over the grid
/// and selects the per-repetition minimizer (smallest-λ tie rule).
pub fn rcv_draws<R: Rng>(
    std_data: &Dataset,
    grid: &LambdaGrid,
    reps: usize,
    rng: &mut R,
) -> Result<RcvDraws, TuningError> {
    const FOLDS: usize = 10;
    let n = std_data.n_rows();
    if n < FOLDS {
        return Err(TuningError::InvalidArgument(format!(
            "need at least {FOLDS} observations for 10-fold CV, got {n}"
        )));
    }
    let y: Vec<f64> = std_data.y().iter().copied().collect();
    let mut work = AugmentedWork::new(std_data, std_data.n_covariates())?;
    let m = grid.len();
    let mut per_rep = Vec::with_capacity(reps);
    let mut any_unstratified = false;
    for _ in 0..reps {
        let assignment = stratified_folds(&y, FOLDS, rng);
        any_unstratified |= !assignment.stratified;
        let mut deviance = vec![0.0; m];
        let mut warm: Vec<Option<DVector<f64>>> = vec![None; FOLDS];
        let fold_rows: Vec<Vec<usize>> = (0..FOLDS)
            .map(|f| (0..n).filter(|&i| assignment.fold_of[i] == f).collect())
            .collect();
        for j in (0..m).rev() {
            work.set_lambda(grid.values()[j]);
            for f in 0..FOLDS {
                let rows = &fold_rows[f];
                let mut saved = Vec::with_capacity(rows.len());
                for &i in rows {
                    saved.push(work.data.swap_weight(i, 0.0));
                }
                let outcome = work.fit(warm[f].as_ref());
                for (&i, &s) in rows.iter().zip(&saved) {
                    work.data.swap_weight(i, s);
                }
                let (fit, _clean) = outcome?;
                for &i in rows {
                    let eta = glm::row_dot(std_data.x(), i, &fit.beta);
                    let pi = clip_probability(glm::expit(eta));
                    deviance[j] -= 2.0 * (y[i] * pi.ln() + (1.0 - y[i]) * (1.0 - pi).ln());
                }
                warm[f] = Some(fit.beta);
            }
        }
        let sel = select_lambda(grid, &deviance, TieRule::MinSmallest)?;
        per_rep.push(sel.lambda);
    }
    Ok(RcvDraws {
        per_rep_lambda: per_rep,
        any_unstratified,
    })
}

/// Repeated 10-fold CV selection: the `theta`-quantile of the per-repetition
/// λ* values.
pub fn rcv<R: Rng>(
    std_data: &Dataset,
    grid: &LambdaGrid,
    reps: usize,
    theta: f64,
    rng: &mut R,
) -> Result<f64, TuningError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(TuningError::InvalidArgument(format!(
            "quantile must lie in (0,1), got {theta}"
        )));
    }
    let draws = rcv_draws(std_data, grid, reps, rng)?;
    Ok(quantile_linear(&draws.per_rep_lambda, theta))
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile_linear(values: &[f64], theta: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite quantile input"));
    quantile_linear_sorted(&sorted, theta)
}

/// Same quantile on an already-sorted slice.
pub fn quantile_linear_sorted(sorted: &[f64], theta: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * theta;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Explanation oracle: the grid λ whose destandardized first-covariate
/// estimate is closest to the true coefficient.
pub fn oracle_oex(
    std_data: &Dataset,
    grid: &LambdaGrid,
    beta1_true: f64,
    std: &Standardizer,
) -> Result<Selection, TuningError> {
    if std_data.n_covariates() == 0 {
        return Err(TuningError::InvalidArgument(
            "explanation oracle needs at least one covariate".into(),
        ));
    }
    let mut scores = vec![f64::INFINITY; grid.len()];
    ridge_scan(std_data, grid, |j, _lambda, fit, clean| {
        if clean {
            let raw = destandardize(&fit.beta, std)?;
            let err = raw[1] - beta1_true;
            scores[j] = err * err;
        }
        Ok(())
    })?;
    select_lambda(grid, &scores, TieRule::MinSmallest)
}

/// Prediction oracle: the grid λ minimizing the in-sample summed squared
/// difference between fitted and true probabilities.
pub fn oracle_op(
    std_data: &Dataset,
    grid: &LambdaGrid,
    pi_true: &[f64],
) -> Result<Selection, TuningError> {
    if pi_true.len() != std_data.n_rows() {
        return Err(TuningError::InvalidArgument(format!(
            "{} true probabilities vs {} rows",
            pi_true.len(),
            std_data.n_rows()
        )));
    }
    let mut scores = vec![f64::INFINITY; grid.len()];
    ridge_scan(std_data, grid, |j, _lambda, fit, clean| {
        if clean {
            let pi_hat = fit.predict(std_data.x());
            let mut s = 0.0;
            for i in 0..pi_true.len() {
                let d = pi_hat[i] - pi_true[i];
                s += d * d;
            }
            scores[j] = s;
        }
        Ok(())
    })?;
    select_lambda(grid, &scores, TieRule::MinSmallest)
}

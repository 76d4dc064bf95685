//! Penalized fits: Firth's correction, FLIC intercept correction and ridge
//! logistic regression, plus covariate standardization and the conversion of
//! prior odds-ratio intervals into a ridge complexity parameter.
//!
//! Ridge fits come in two independent routes that must agree: the data
//! augmentation scheme (pseudo-records per covariate, weight `2s²λ`) and a
//! direct Newton solver on the exact penalized objective. The direct solver is
//! the oracle for the augmentation approximation, which tightens as `s` grows.

use crate::data::{Dataset, FitFlags, FitResult, GlmError};
use crate::glm::{self, FitOptions, GRAD_TOL, MAX_HALVINGS, MAX_ITER_FIRTH, MAX_ITER_ML};
use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PenaltyError {
    #[error("covariate column {0} has zero sample variance")]
    ConstantColumn(usize),
    #[error("invalid penalty specification: {0}")]
    InvalidSpec(String),
    #[error("prior odds-ratio upper bound must exceed 1, got {0}")]
    InvalidPrior(f64),
    #[error(transparent)]
    Glm(#[from] GlmError),
}

/// Per-covariate location/scale recorded by [`standardize`], needed to map
/// coefficients back to the original scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    pub fn identity(k: usize) -> Self {
        Self {
            means: vec![0.0; k],
            sds: vec![1.0; k],
        }
    }
}

/// Centers and scales every covariate column to mean 0, sd 1 (divisor N−1);
/// the intercept column is untouched.
pub fn standardize(data: &Dataset) -> Result<(Dataset, Standardizer), PenaltyError> {
    if data.is_augmented() {
        return Err(PenaltyError::InvalidSpec(
            "cannot standardize an augmented dataset".into(),
        ));
    }
    let n = data.n_rows();
    let p = data.n_coef();
    let mut x = data.x().clone();
    let mut means = Vec::with_capacity(p - 1);
    let mut sds = Vec::with_capacity(p - 1);
    for j in 1..p {
        let col = data.x().column(j);
        let mean = col.sum() / n as f64;
        let mut ss = 0.0;
        for i in 0..n {
            let d = col[i] - mean;
            ss += d * d;
        }
        if ss == 0.0 || n < 2 {
            return Err(PenaltyError::ConstantColumn(j));
        }
        let sd = (ss / (n as f64 - 1.0)).sqrt();
        for i in 0..n {
            x[(i, j)] = (col[i] - mean) / sd;
        }
        means.push(mean);
        sds.push(sd);
    }
    let d = Dataset::with_weights(x, data.y().clone(), data.weights().clone())
        .map_err(GlmError::from)?;
    Ok((d, Standardizer { means, sds }))
}

/// Maps coefficients estimated on the standardized scale back to the original
/// covariate scale. Predicted probabilities are unchanged by construction.
pub fn destandardize(beta_std: &DVector<f64>, std: &Standardizer) -> Result<DVector<f64>, PenaltyError> {
    let k = std.means.len();
    if beta_std.len() != k + 1 {
        return Err(PenaltyError::InvalidSpec(format!(
            "coefficient length {} vs standardizer for {} covariates",
            beta_std.len(),
            k
        )));
    }
    let mut out = beta_std.clone();
    for j in 0..k {
        out[j + 1] = beta_std[j + 1] / std.sds[j];
        out[0] -= beta_std[j + 1] * std.means[j] / std.sds[j];
    }
    Ok(out)
}

/// Ridge penalty specification. The intercept is never penalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub lambda: f64,
    /// Pseudo-record rescaling factor; the augmentation error shrinks as
    /// O(1/s²).
    pub rescale_s: f64,
    /// One entry per coefficient, intercept first (must be false there).
    pub penalized_mask: Vec<bool>,
}

pub const DEFAULT_RESCALE_S: f64 = 10.0;

impl PenaltySpec {
    /// Uniform penalty on all `k` covariates.
    pub fn uniform(lambda: f64, k: usize) -> Self {
        let mut mask = vec![true; k + 1];
        mask[0] = false;
        Self {
            lambda,
            rescale_s: DEFAULT_RESCALE_S,
            penalized_mask: mask,
        }
    }

    fn validate(&self, n_coef: usize) -> Result<(), PenaltyError> {
        if self.penalized_mask.len() != n_coef {
            return Err(PenaltyError::InvalidSpec(format!(
                "mask length {} vs {} coefficients",
                self.penalized_mask.len(),
                n_coef
            )));
        }
        if self.penalized_mask[0] {
            return Err(PenaltyError::InvalidSpec(
                "the intercept must not be penalized".into(),
            ));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(PenaltyError::InvalidSpec(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if self.rescale_s.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(PenaltyError::InvalidSpec(format!(
                "rescale factor must be positive, got {}",
                self.rescale_s
            )));
        }
        Ok(())
    }
}

/// Appends the ridge pseudo-records to `std_data`: for each penalized
/// covariate, one record with the covariate at `1/s` and outcome 1, one with
/// outcome 0, both weighted `2s²λ`, intercept entry 0. At zero coefficients
/// the pair contributes no score and second derivative exactly `−λ`.
pub fn augment(std_data: &Dataset, spec: &PenaltySpec) -> Result<Dataset, PenaltyError> {
    spec.validate(std_data.n_coef())?;
    if spec.lambda.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(PenaltyError::InvalidSpec(
            "augmentation requires lambda > 0".into(),
        ));
    }
    let n = std_data.n_rows();
    let p = std_data.n_coef();
    let n_pen = spec.penalized_mask.iter().filter(|&&m| m).count();
    let total = n + 2 * n_pen;
    let mut x = DMatrix::zeros(total, p);
    x.view_mut((0, 0), (n, p)).copy_from(std_data.x());
    let mut y = DVector::zeros(total);
    y.rows_mut(0, n).copy_from(std_data.y());
    let mut w = DVector::zeros(total);
    w.rows_mut(0, n).copy_from(std_data.weights());
    let pseudo_weight = 2.0 * spec.rescale_s * spec.rescale_s * spec.lambda;
    let mut row = n;
    for (k, &penalized) in spec.penalized_mask.iter().enumerate() {
        if !penalized {
            continue;
        }
        for outcome in [1.0, 0.0] {
            x[(row, k)] = 1.0 / spec.rescale_s;
            y[row] = outcome;
            w[row] = pseudo_weight;
            row += 1;
        }
    }
    Dataset::with_pseudo(x, y, w, n).map_err(|e| PenaltyError::Glm(e.into()))
}

/// Restates a fit over the augmented dataset in terms of the original data:
/// log-likelihood and Fisher information are recomputed on the original rows.
fn strip_augmentation(std_data: &Dataset, fit: FitResult) -> Result<FitResult, GlmError> {
    let (ll, clipped) = glm::log_likelihood_flagged(std_data, &fit.beta)?;
    let (_, fisher) = glm::score_and_fisher(std_data, &fit.beta)?;
    let mut flags = fit.flags;
    flags.prob_clipped |= clipped;
    Ok(FitResult {
        beta: fit.beta,
        loglik: ll,
        fisher,
        converged: fit.converged,
        iterations: fit.iterations,
        flags,
    })
}

/// Ridge fit by data augmentation with an optional warm start.
pub fn fit_ridge_augmented_from(
    std_data: &Dataset,
    spec: &PenaltySpec,
    init: Option<&DVector<f64>>,
) -> Result<FitResult, PenaltyError> {
    let augmented = augment(std_data, spec)?;
    let opts = FitOptions {
        init,
        ..Default::default()
    };
    match glm::fit_ml(&augmented, &opts) {
        Ok(fit) => Ok(strip_augmentation(std_data, fit)?),
        Err(GlmError::Nonconvergence(last)) => Err(PenaltyError::Glm(GlmError::Nonconvergence(
            Box::new(strip_augmentation(std_data, *last)?),
        ))),
        Err(GlmError::SingularInformation(last)) => Err(PenaltyError::Glm(
            GlmError::SingularInformation(Box::new(strip_augmentation(std_data, *last)?)),
        )),
        Err(e) => Err(PenaltyError::Glm(e)),
    }
}

/// Ridge fit by data augmentation on a standardized dataset.
pub fn fit_ridge_augmented(std_data: &Dataset, spec: &PenaltySpec) -> Result<FitResult, PenaltyError> {
    fit_ridge_augmented_from(std_data, spec, None)
}

/// Ridge fit by Newton iteration on the exact penalized objective
/// `ℓ(β) − (λ/2) Σ β_k²`; the independent oracle for the augmentation route.
pub fn fit_ridge_direct(std_data: &Dataset, spec: &PenaltySpec) -> Result<FitResult, PenaltyError> {
    fit_ridge_direct_from(std_data, spec, None)
}

pub fn fit_ridge_direct_from(
    std_data: &Dataset,
    spec: &PenaltySpec,
    init: Option<&DVector<f64>>,
) -> Result<FitResult, PenaltyError> {
    spec.validate(std_data.n_coef())?;
    let p = std_data.n_coef();
    let lambda = spec.lambda;
    let mut beta = match init {
        Some(b) => b.clone(),
        None => DVector::zeros(p),
    };
    let penalty = |beta: &DVector<f64>| -> f64 {
        let mut s = 0.0;
        for (j, &m) in spec.penalized_mask.iter().enumerate() {
            if m {
                s += beta[j] * beta[j];
            }
        }
        0.5 * lambda * s
    };
    let objective = |beta: &DVector<f64>| -> Result<f64, GlmError> {
        Ok(glm::log_likelihood(std_data, beta)? - penalty(beta))
    };

    let mut flags = FitFlags::default();
    let mut obj = objective(&beta)?;
    let mut iterations = 0;
    for iter in 1..=MAX_ITER_ML {
        let (mut g, mut info) = glm::score_and_fisher(std_data, &beta)?;
        for (j, &m) in spec.penalized_mask.iter().enumerate() {
            if m {
                g[j] -= lambda * beta[j];
                info[(j, j)] += lambda;
            }
        }
        if g.amax() <= GRAD_TOL {
            return finish_direct(std_data, beta, true, iterations, flags);
        }
        let chol = match Cholesky::new(info) {
            Some(c) => c,
            None => {
                let fit = finish_raw(std_data, beta, false, iterations, flags)?;
                return Err(GlmError::SingularInformation(Box::new(fit)).into());
            }
        };
        let step = chol.solve(&g);
        let slack = (1.0 + obj.abs()) * 1e-13;
        let mut scale = 1.0;
        let mut best: Option<(DVector<f64>, f64)> = None;
        for attempt in 0..=MAX_HALVINGS {
            let cand = &beta + &step * scale;
            let cand_obj = objective(&cand)?;
            if cand_obj >= obj - slack {
                if attempt > 0 {
                    flags.step_halving_used = true;
                }
                best = Some((cand, cand_obj));
                break;
            }
            if best.as_ref().is_none_or(|(_, b)| cand_obj > *b) {
                best = Some((cand, cand_obj));
            }
            scale *= 0.5;
            flags.step_halving_used = true;
        }
        let (next, next_obj) = best.expect("candidate evaluated");
        beta = next;
        obj = next_obj;
        iterations = iter;
    }
    let (mut g, _) = glm::score_and_fisher(std_data, &beta)?;
    for (j, &m) in spec.penalized_mask.iter().enumerate() {
        if m {
            g[j] -= lambda * beta[j];
        }
    }
    if g.amax() <= GRAD_TOL {
        return finish_direct(std_data, beta, true, iterations, flags);
    }
    let fit = finish_raw(std_data, beta, false, iterations, flags)?;
    Err(GlmError::Nonconvergence(Box::new(fit)).into())
}

fn finish_direct(
    std_data: &Dataset,
    beta: DVector<f64>,
    converged: bool,
    iterations: usize,
    flags: FitFlags,
) -> Result<FitResult, PenaltyError> {
    Ok(finish_raw(std_data, beta, converged, iterations, flags)?)
}

fn finish_raw(
    data: &Dataset,
    beta: DVector<f64>,
    converged: bool,
    iterations: usize,
    mut flags: FitFlags,
) -> Result<FitResult, GlmError> {
    let (ll, clipped) = glm::log_likelihood_flagged(data, &beta)?;
    flags.prob_clipped |= clipped;
    let (_, fisher) = glm::score_and_fisher(data, &beta)?;
    Ok(FitResult {
        beta,
        loglik: ll,
        fisher,
        converged,
        iterations,
        flags,
    })
}

/// Firth's bias-reduced fit: maximizes `ℓ(β) + ½ log|I(β)|` via the modified
/// score `U*_r = Σ_i (w_i(y_i − π_i) + h_i(½ − π_i)) x_ir`, where `h` is the
/// diagonal of the weighted hat matrix. The intercept is part of the penalty,
/// so the average prediction is pulled towards one half; see [`flic`].
pub fn fit_firth(data: &Dataset) -> Result<FitResult, GlmError> {
    let p = data.n_coef();
    let n = data.n_rows();
    let x = data.x();
    let y = data.y();
    let w = data.weights();
    let mut beta: DVector<f64> = DVector::zeros(p);
    let mut flags = FitFlags::default();

    type FirthState = (DVector<f64>, Cholesky<f64, nalgebra::Dyn>, f64);
    // Modified score and Fisher information at beta; also the log-determinant
    // needed by the penalized objective.
    let eval = |beta: &DVector<f64>| -> Result<FirthState, GlmError> {
        let eta = x * beta;
        let mut wt = DVector::zeros(n);
        let mut pi = DVector::zeros(n);
        for i in 0..n {
            let prob = glm::expit(eta[i]);
            pi[i] = prob;
            wt[i] = w[i] * prob * (1.0 - prob);
        }
        let mut info = DMatrix::zeros(p, p);
        for j in 0..p {
            let cj = x.column(j);
            for k in j..p {
                let ck = x.column(k);
                let mut f = 0.0;
                for i in 0..n {
                    f += wt[i] * cj[i] * ck[i];
                }
                info[(j, k)] = f;
                info[(k, j)] = f;
            }
        }
        let chol = Cholesky::new(info.clone())
            .ok_or_else(|| GlmError::SingularInformation(Box::new(FitResult {
                beta: beta.clone(),
                loglik: f64::NAN,
                fisher: info.clone(),
                converged: false,
                iterations: 0,
                flags: FitFlags::default(),
            })))?;
        let inv = chol.inverse();
        let mut logdet = 0.0;
        {
            let l = chol.l_dirty();
            for j in 0..p {
                logdet += 2.0 * l[(j, j)].ln();
            }
        }
        let mut score = DVector::zeros(p);
        for i in 0..n {
            let xi = x.row(i);
            let mut q = 0.0;
            for a in 0..p {
                for b in 0..p {
                    q += xi[a] * inv[(a, b)] * xi[b];
                }
            }
            let h = wt[i] * q;
            let r = w[i] * (y[i] - pi[i]) + h * (0.5 - pi[i]);
            for a in 0..p {
                score[a] += r * xi[a];
            }
        }
        Ok((score, chol, logdet))
    };
    let penalized = |beta: &DVector<f64>, logdet: f64| -> Result<f64, GlmError> {
        Ok(glm::log_likelihood(data, beta)? + 0.5 * logdet)
    };

    let (mut score, mut chol, mut logdet) = eval(&beta)?;
    let mut obj = penalized(&beta, logdet)?;
    let mut iterations = 0;
    for iter in 1..=MAX_ITER_FIRTH {
        if score.amax() <= GRAD_TOL {
            return finish_raw(data, beta, true, iterations, flags);
        }
        let step = chol.solve(&score);
        let slack = (1.0 + obj.abs()) * 1e-13;
        let mut scale = 1.0;
        let mut best: Option<(DVector<f64>, f64)> = None;
        for attempt in 0..=MAX_HALVINGS {
            let cand = &beta + &step * scale;
            let (_, _, cand_logdet) = eval(&cand)?;
            let cand_obj = penalized(&cand, cand_logdet)?;
            if cand_obj >= obj - slack {
                if attempt > 0 {
                    flags.step_halving_used = true;
                }
                best = Some((cand, cand_obj));
                break;
            }
            if best.as_ref().is_none_or(|(_, b)| cand_obj > *b) {
                best = Some((cand, cand_obj));
            }
            scale *= 0.5;
            flags.step_halving_used = true;
        }
        let (next, next_obj) = best.expect("candidate evaluated");
        beta = next;
        obj = next_obj;
        iterations = iter;
        let evaluated = eval(&beta)?;
        score = evaluated.0;
        chol = evaluated.1;
        logdet = evaluated.2;
    }
    let _ = logdet;
    if score.amax() <= GRAD_TOL {
        return finish_raw(data, beta, true, iterations, flags);
    }
    let fit = finish_raw(data, beta, false, iterations, flags)?;
    Err(GlmError::Nonconvergence(Box::new(fit)))
}

/// Firth's correction with intercept re-estimation: slopes stay at the Firth
/// values and the intercept is refit by plain ML, which restores mean
/// predicted probability equal to the observed event rate.
pub fn flic(data: &Dataset, firth_fit: &FitResult) -> Result<FitResult, GlmError> {
    if !firth_fit.converged {
        return Err(GlmError::InvalidArgument(
            "FLIC requires a converged Firth fit".into(),
        ));
    }
    let p = data.n_coef();
    let frozen: Vec<usize> = (1..p).collect();
    let opts = FitOptions {
        frozen: &frozen,
        init: Some(&firth_fit.beta),
        ..Default::default()
    };
    glm::fit_ml(data, &opts)
}

/// A symmetric prior interval for a standardized covariate's odds ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// Upper bound of the interval `(1/or_upper, or_upper)`.
    pub or_upper: f64,
    /// Interval coverage, 0.95 unless stated otherwise.
    pub coverage: f64,
}

impl PriorSpec {
    pub fn new(or_upper: f64) -> Self {
        Self {
            or_upper,
            coverage: 0.95,
        }
    }

    /// The informative prior of the study: odds ratio within (0.25, 4).
    pub fn informative() -> Self {
        Self::new(4.0)
    }

    /// The weakly informative prior: odds ratio within (1/16, 16).
    pub fn weakly_informative() -> Self {
        Self::new(16.0)
    }
}

/// Converts a prior odds-ratio interval into the ridge complexity parameter:
/// the prior variance is `(ln(or_upper)/z)²` with `z` the normal quantile at
/// `(1+coverage)/2`, and `λ = 1/v_prior` on standardized covariates.
pub fn prior_to_lambda(prior: &PriorSpec) -> Result<f64, PenaltyError> {
    if prior.or_upper.partial_cmp(&1.0) != Some(std::cmp::Ordering::Greater) {
        return Err(PenaltyError::InvalidPrior(prior.or_upper));
    }
    if !(prior.coverage.is_finite() && prior.coverage > 0.0 && prior.coverage < 1.0) {
        return Err(PenaltyError::InvalidSpec(format!(
            "coverage must be in (0,1), got {}",
            prior.coverage
        )));
    }
    let z = Normal::standard().inverse_cdf(0.5 * (1.0 + prior.coverage));
    let v_prior = (prior.or_upper.ln() / z).powi(2);
    Ok(1.0 / v_prior)
}

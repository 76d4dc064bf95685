//! Core data containers for binary-outcome regression: the weighted design
//! matrix and the result of a fit.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Column index of the intercept in every design matrix.
pub const INTERCEPT_COL: usize = 0;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("outcome entries must be exactly 0 or 1 (row {0})")]
    NonBinaryOutcome(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("weights must be finite and nonnegative (row {0})")]
    BadWeight(usize),
    #[error("column 0 must be the all-ones intercept (row {0})")]
    BadInterceptColumn(usize),
    #[error("dataset must contain at least one row and one column")]
    Empty,
}

/// A binary-outcome dataset: design matrix with an intercept column,
/// 0/1 outcomes and nonnegative observation weights.
///
/// Ridge pseudo-records (see the penalty module) are appended after the
/// original rows and carry a zero intercept entry; `pseudo_from` marks where
/// they start.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    w: DVector<f64>,
    pseudo_from: Option<usize>,
}

impl Dataset {
    /// Builds a dataset with unit weights. Column 0 of `x` must be all ones.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self, DataError> {
        let w = DVector::from_element(y.len(), 1.0);
        Self::with_weights(x, y, w)
    }

    /// Builds a dataset with explicit observation weights.
    pub fn with_weights(
        x: DMatrix<f64>,
        y: DVector<f64>,
        w: DVector<f64>,
    ) -> Result<Self, DataError> {
        Self::validated(x, y, w, None)
    }

    /// Builds an augmented dataset whose rows at and beyond `pseudo_from` are
    /// ridge pseudo-records (intercept entry 0).
    pub(crate) fn with_pseudo(
        x: DMatrix<f64>,
        y: DVector<f64>,
        w: DVector<f64>,
        pseudo_from: usize,
    ) -> Result<Self, DataError> {
        Self::validated(x, y, w, Some(pseudo_from))
    }

    fn validated(
        x: DMatrix<f64>,
        y: DVector<f64>,
        w: DVector<f64>,
        pseudo_from: Option<usize>,
    ) -> Result<Self, DataError> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(DataError::Empty);
        }
        if y.len() != x.nrows() {
            return Err(DataError::DimensionMismatch(format!(
                "outcome length {} vs {} rows",
                y.len(),
                x.nrows()
            )));
        }
        if w.len() != x.nrows() {
            return Err(DataError::DimensionMismatch(format!(
                "weight length {} vs {} rows",
                w.len(),
                x.nrows()
            )));
        }
        let original = pseudo_from.unwrap_or(x.nrows());
        for i in 0..x.nrows() {
            if y[i] != 0.0 && y[i] != 1.0 {
                return Err(DataError::NonBinaryOutcome(i));
            }
            if !w[i].is_finite() || w[i] < 0.0 {
                return Err(DataError::BadWeight(i));
            }
            let expected = if i < original { 1.0 } else { 0.0 };
            if x[(i, INTERCEPT_COL)] != expected {
                return Err(DataError::BadInterceptColumn(i));
            }
        }
        Ok(Self { x, y, w, pseudo_from })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.w
    }

    /// Total number of rows, pseudo-records included.
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    /// Number of original observations (pseudo-records excluded).
    pub fn n_original(&self) -> usize {
        self.pseudo_from.unwrap_or(self.x.nrows())
    }

    /// Number of coefficients, intercept included.
    pub fn n_coef(&self) -> usize {
        self.x.ncols()
    }

    /// Number of covariates (intercept excluded).
    pub fn n_covariates(&self) -> usize {
        self.x.ncols() - 1
    }

    pub fn is_augmented(&self) -> bool {
        self.pseudo_from.is_some()
    }

    /// Replaces one observation weight, returning the previous value.
    /// Used by leave-one-out loops to drop a row without copying the dataset.
    pub fn swap_weight(&mut self, row: usize, value: f64) -> f64 {
        let old = self.w[row];
        self.w[row] = value;
        old
    }

    /// Weighted event rate over the original observations.
    pub fn event_rate(&self) -> f64 {
        let n = self.n_original();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            num += self.w[i] * self.y[i];
            den += self.w[i];
        }
        if den > 0.0 {
            num / den
        } else {
            f64::NAN
        }
    }
}

/// Pathology markers accumulated while fitting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitFlags {
    /// Diverging coefficients, the usual footprint of (quasi-)separation.
    pub separation_suspected: bool,
    /// At least one Newton step had to be shortened.
    pub step_halving_used: bool,
    /// At least one fitted probability hit the clipping bound.
    pub prob_clipped: bool,
}

impl FitFlags {
    pub fn any(&self) -> bool {
        self.separation_suspected || self.step_halving_used || self.prob_clipped
    }
}

/// Outcome of a (penalized) maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Coefficients on the scale of the fitted design (log-odds units).
    pub beta: DVector<f64>,
    /// Unpenalized log-likelihood at `beta` over the original observations.
    pub loglik: f64,
    /// Fisher information at `beta` over the original observations.
    pub fisher: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub flags: FitFlags,
}

impl FitResult {
    /// Linear predictor for each row of `x`.
    pub fn linear_predictor(&self, x: &DMatrix<f64>) -> DVector<f64> {
        x * &self.beta
    }

    /// Fitted probabilities for each row of `x`.
    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        self.linear_predictor(x).map(crate::glm::expit)
    }
}

#[derive(Debug, Error)]
pub enum GlmError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("iteration budget exhausted without meeting the convergence criterion")]
    Nonconvergence(Box<FitResult>),
    #[error("Fisher information numerically singular on the free coordinates")]
    SingularInformation(Box<FitResult>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl GlmError {
    /// The last iterate carried by a failed fit, if any. Nonconvergent fits
    /// are a reported state in this toolkit, not a dead end: tuning criteria
    /// and the study harness keep working from the final iterate.
    pub fn last_iterate(&self) -> Option<&FitResult> {
        match self {
            GlmError::Nonconvergence(fit) | GlmError::SingularInformation(fit) => Some(fit),
            _ => None,
        }
    }

    pub fn into_last_iterate(self) -> Option<FitResult> {
        match self {
            GlmError::Nonconvergence(fit) | GlmError::SingularInformation(fit) => Some(*fit),
            _ => None,
        }
    }
}

/// Splits a fit outcome into (result, cleanly_converged), keeping the last
/// iterate of a nonconvergent or singular fit.
pub fn fit_or_last(outcome: Result<FitResult, GlmError>) -> Result<(FitResult, bool), GlmError> {
    match outcome {
        Ok(fit) => Ok((fit, true)),
        Err(err) => match err.into_last_iterate_err() {
            Ok(fit) => Ok((fit, false)),
            Err(other) => Err(other),
        },
    }
}

impl GlmError {
    fn into_last_iterate_err(self) -> Result<FitResult, GlmError> {
        match self {
            GlmError::Nonconvergence(fit) | GlmError::SingularInformation(fit) => Ok(*fit),
            other => Err(other),
        }
    }
}

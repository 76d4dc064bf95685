//! Performance measures for the simulation study: RMSE of coefficients and
//! predictions, calibration slope on validation data, RMSD of log slopes,
//! concordance index, median absolute deviation and Spearman correlation.
//!
//! Aggregations use pairwise summation so parallel or re-ordered reductions
//! reproduce the same totals to well below the reporting precision.

use crate::data::{Dataset, GlmError};
use crate::glm::{self, FitOptions};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no finite estimates to aggregate")]
    NoFiniteEstimates,
    #[error("concordance needs both outcome classes")]
    SingleClassOutcome,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error(transparent)]
    Glm(#[from] GlmError),
}

/// Calibration slopes below this value are winsorized before taking logs.
pub const SLOPE_WINSOR_MIN: f64 = 0.01;

/// Numerically stable pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

fn pairwise_mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Root mean squared error of per-replicate coefficient estimates around the
/// truth. Nonfinite estimates are excluded and counted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefRmse {
    pub rmse: f64,
    pub n_used: usize,
    pub n_excluded: usize,
}

pub fn rmse_coef(estimates: &[f64], truth: f64) -> Result<CoefRmse, MetricsError> {
    let sq: Vec<f64> = estimates
        .iter()
        .filter(|e| e.is_finite())
        .map(|e| (e - truth) * (e - truth))
        .collect();
    if sq.is_empty() {
        return Err(MetricsError::NoFiniteEstimates);
    }
    Ok(CoefRmse {
        rmse: pairwise_mean(&sq).sqrt(),
        n_used: sq.len(),
        n_excluded: estimates.len() - sq.len(),
    })
}

/// Mean squared prediction error of one replicate.
pub fn mean_sq_pred_err(pi_hat: &[f64], pi_true: &[f64]) -> Result<f64, MetricsError> {
    if pi_hat.len() != pi_true.len() {
        return Err(MetricsError::LengthMismatch(format!(
            "{} predictions vs {} true probabilities",
            pi_hat.len(),
            pi_true.len()
        )));
    }
    let sq: Vec<f64> = pi_hat
        .iter()
        .zip(pi_true)
        .map(|(&a, &b)| (a - b) * (a - b))
        .collect();
    Ok(pairwise_mean(&sq))
}

/// Grand root mean squared prediction error over replicates,
/// `sqrt((1/SN) Σ_s Σ_i (π̂_{i,s} − π_{i,s})²)`.
pub fn rmse_pred<'a>(
    replicates: impl IntoIterator<Item = (&'a [f64], &'a [f64])>,
) -> Result<f64, MetricsError> {
    let contribs: Result<Vec<f64>, MetricsError> = replicates
        .into_iter()
        .map(|(hat, truth)| mean_sq_pred_err(hat, truth))
        .collect();
    let contribs = contribs?;
    if contribs.is_empty() {
        return Err(MetricsError::NoFiniteEstimates);
    }
    Ok(rmse_pred_from_contribs(&contribs))
}

/// Same grand RMSE from stored per-replicate mean squared errors.
pub fn rmse_pred_from_contribs(contribs: &[f64]) -> f64 {
    pairwise_mean(contribs).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeOutcome {
    pub slope: f64,
    /// Constant linear predictor (total shrinkage); slope reported as 0 and
    /// winsorized downstream.
    pub degenerate: bool,
    pub converged: bool,
}

/// Calibration slope: the coefficient of the linear predictor `η̂ = xβ̂` in a
/// two-parameter logistic refit on the validation outcomes.
pub fn calibration_slope(
    validation: &Dataset,
    beta_hat: &DVector<f64>,
) -> Result<SlopeOutcome, MetricsError> {
    if beta_hat.len() != validation.n_coef() {
        return Err(MetricsError::LengthMismatch(format!(
            "{} coefficients vs {} validation columns",
            beta_hat.len(),
            validation.n_coef()
        )));
    }
    let n = validation.n_rows();
    let eta = validation.x() * beta_hat;
    let mean = eta.sum() / n as f64;
    let var = eta.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n as f64;
    if var < 1e-12 {
        return Ok(SlopeOutcome {
            slope: 0.0,
            degenerate: true,
            converged: true,
        });
    }
    let mut x = DMatrix::zeros(n, 2);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = eta[i];
    }
    let refit = Dataset::new(x, validation.y().clone()).map_err(GlmError::from)?;
    match glm::fit_ml(&refit, &FitOptions::default()) {
        Ok(fit) => Ok(SlopeOutcome {
            slope: fit.beta[1],
            degenerate: false,
            converged: true,
        }),
        Err(err) => match err.into_last_iterate() {
            Some(fit) => Ok(SlopeOutcome {
                slope: fit.beta[1],
                degenerate: false,
                converged: false,
            }),
            None => Err(MetricsError::Glm(GlmError::InvalidArgument(
                "slope refit failed".into(),
            ))),
        },
    }
}

/// Winsorizes a slope at [`SLOPE_WINSOR_MIN`] from below.
pub fn winsorize_slope(slope: f64) -> f64 {
    slope.max(SLOPE_WINSOR_MIN)
}

/// Root mean squared distance of log calibration slopes from log 1, after
/// winsorizing slopes at 0.01.
pub fn rmsd_log_slope(slopes: &[f64]) -> f64 {
    let sq: Vec<f64> = slopes
        .iter()
        .map(|&s| {
            let d = -winsorize_slope(s).ln();
            d * d
        })
        .collect();
    pairwise_mean(&sq).sqrt()
}

/// Average ranks (1-based), ties receiving the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite ranks"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Concordance index: the probability that a random event/non-event pair is
/// ranked concordantly by the predictions, ties counting one half. Computed
/// from ranks in O(n log n).
pub fn c_index(pi_hat: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if pi_hat.len() != y.len() {
        return Err(MetricsError::LengthMismatch(format!(
            "{} predictions vs {} outcomes",
            pi_hat.len(),
            y.len()
        )));
    }
    let n1 = y.iter().filter(|&&v| v == 1.0).count();
    let n0 = y.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(MetricsError::SingleClassOutcome);
    }
    let ranks = average_ranks(pi_hat);
    let rank_sum: f64 = ranks
        .iter()
        .zip(y)
        .filter(|(_, &yi)| yi == 1.0)
        .map(|(&r, _)| r)
        .sum();
    let u = rank_sum - (n1 * (n1 + 1)) as f64 / 2.0;
    Ok(u / (n1 as f64 * n0 as f64))
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite median input"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median absolute deviation from the median, unscaled.
pub fn mad(values: &[f64]) -> f64 {
    let m = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&dev)
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(format!(
            "{} vs {} values",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(MetricsError::NoFiniteEstimates);
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let ma = pairwise_mean(&ra);
    let mb = pairwise_mean(&rb);
    let mut num = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..ra.len() {
        let da = ra[i] - ma;
        let db = rb[i] - mb;
        num += da * db;
        va += da * da;
        vb += db * db;
    }
    if va == 0.0 || vb == 0.0 {
        return Err(MetricsError::NoFiniteEstimates);
    }
    Ok(num / (va * vb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, RngExt, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn rmse_coef_basics() {
        let r = rmse_coef(&[2.0, 2.0, 2.0], 2.0).unwrap();
        assert_eq!(r.rmse, 0.0);
        let r = rmse_coef(&[1.0, 3.0], 2.0).unwrap();
        assert_relative_eq!(r.rmse, 1.0, epsilon = 1e-15);
        let r = rmse_coef(&[1.0, f64::NAN, 3.0, f64::INFINITY], 2.0).unwrap();
        assert_eq!(r.n_used, 2);
        assert_eq!(r.n_excluded, 2);
        assert!(rmse_coef(&[f64::NAN], 0.0).is_err());
    }

    #[test]
    fn rmse_coef_scales() {
        let base = rmse_coef(&[1.0, 3.0, 0.5], 2.0).unwrap().rmse;
        let scaled: Vec<f64> = [1.0, 3.0, 0.5].iter().map(|e| 2.0 + 3.0 * (e - 2.0)).collect();
        let r = rmse_coef(&scaled, 2.0).unwrap().rmse;
        assert_relative_eq!(r, 3.0 * base, epsilon = 1e-12);
    }

    #[test]
    fn rmse_pred_constant_error() {
        let hat = vec![0.11; 50];
        let truth = vec![0.10; 50];
        let r = rmse_pred([(hat.as_slice(), truth.as_slice())]).unwrap();
        assert_relative_eq!(r, 0.01, epsilon = 1e-12);
        assert_relative_eq!(r * 1e4, 100.0, epsilon = 1e-8);
        let z = rmse_pred([(truth.as_slice(), truth.as_slice())]).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn rmsd_log_slope_winsorizes() {
        assert_eq!(rmsd_log_slope(&[1.0, 1.0, 1.0]), 0.0);
        let r = rmsd_log_slope(&[0.005]);
        assert_relative_eq!(r, -(0.01f64.ln()), epsilon = 1e-12);
        assert_relative_eq!(r, 4.6052, epsilon = 1e-4);
        // Values at or above the bound are untouched.
        assert_relative_eq!(
            rmsd_log_slope(&[2.0]),
            2f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn c_index_corners() {
        let y = [0.0, 0.0, 1.0, 1.0];
        assert_eq!(c_index(&[0.1, 0.2, 0.3, 0.4], &y).unwrap(), 1.0);
        assert_eq!(c_index(&[0.5, 0.5, 0.5, 0.5], &y).unwrap(), 0.5);
        assert_eq!(c_index(&[0.4, 0.3, 0.2, 0.1], &y).unwrap(), 0.0);
        assert!(c_index(&[0.1, 0.2], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn c_index_matches_pair_enumeration() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..20 {
            let n = rng.random_range(5..40);
            let pi: Vec<f64> = (0..n).map(|_| (rng.random_range(0..7) as f64) / 6.0).collect();
            let y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.4) { 1.0 } else { 0.0 }).collect();
            if y.iter().all(|&v| v == 1.0) || y.iter().all(|&v| v == 0.0) {
                continue;
            }
            let fast = c_index(&pi, &y).unwrap();
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if y[i] == 1.0 && y[j] == 0.0 {
                        den += 1.0;
                        if pi[i] > pi[j] {
                            num += 1.0;
                        } else if pi[i] == pi[j] {
                            num += 0.5;
                        }
                    }
                }
            }
            assert_relative_eq!(fast, num / den, epsilon = 1e-12);
        }
    }

    #[test]
    fn c_index_monotone_invariant() {
        let y = [0.0, 1.0, 0.0, 1.0, 0.0];
        let pi = [0.1, 0.4, 0.2, 0.9, 0.3];
        let transformed: Vec<f64> = pi.iter().map(|p| (5.0f64 * p).tanh()).collect();
        assert_eq!(
            c_index(&pi, &y).unwrap(),
            c_index(&transformed, &y).unwrap()
        );
    }

    #[test]
    fn mad_examples() {
        assert_eq!(mad(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(mad(&[5.0, 5.0, 5.0]), 0.0);
        assert_eq!(mad(&[1.0, 1.0, 1.0, 10.0]), 0.0);
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap(), -1.0);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert_relative_eq!(r, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn spearman_monotone_invariant() {
        let a = [0.3, 1.2, -0.5, 2.0, 0.9];
        let b = [4.0, 1.0, 2.2, 0.3, 5.0];
        let base = spearman(&a, &b).unwrap();
        let ta: Vec<f64> = a.iter().map(|v| v.exp()).collect();
        assert_relative_eq!(spearman(&ta, &b).unwrap(), base, epsilon = 1e-12);
    }

    #[test]
    fn calibration_slope_recovers_unit_slope() {
        use nalgebra::{DMatrix, DVector};
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let n = 10_000;
        let mut x = DMatrix::zeros(n, 2);
        let mut y = DVector::zeros(n);
        let beta = DVector::from_vec(vec![-2.0, 1.0]);
        for i in 0..n {
            x[(i, 0)] = 1.0;
            x[(i, 1)] = rng.random_range(-2.0..2.0);
            let pi = glm::expit(beta[0] + beta[1] * x[(i, 1)]);
            y[i] = if rng.random_bool(pi) { 1.0 } else { 0.0 };
        }
        let val = Dataset::new(x, y).unwrap();
        let out = calibration_slope(&val, &beta).unwrap();
        assert!(!out.degenerate);
        assert!(
            (out.slope - 1.0).abs() < 0.05,
            "well-specified slope: {}",
            out.slope
        );

        // Halving the non-intercept coefficient doubles the refit slope.
        let half = DVector::from_vec(vec![-2.0, 0.5]);
        let out_half = calibration_slope(&val, &half).unwrap();
        assert_relative_eq!(out_half.slope, 2.0 * out.slope, epsilon = 1e-6);
    }

    #[test]
    fn calibration_slope_degenerate() {
        use nalgebra::{DMatrix, DVector};
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.3, 1.0, 0.3, 1.0, 0.3, 1.0, 0.3]);
        let y = DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0]);
        let val = Dataset::new(x, y).unwrap();
        let beta = DVector::from_vec(vec![0.5, 1.0]);
        let out = calibration_slope(&val, &beta).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.slope, 0.0);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let vals: Vec<f64> = (0..1001).map(|_| rng.random_range(-1.0..1.0)).collect();
        let naive: f64 = vals.iter().sum();
        assert_relative_eq!(pairwise_sum(&vals), naive, epsilon = 1e-9);
    }
}

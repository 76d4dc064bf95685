//! Binary logistic model primitives: likelihood, score, Fisher information
//! and a Newton fitting driver with step-halving.
//!
//! The same driver serves plain maximum likelihood, the Firth correction and
//! ridge fits (via data augmentation or the exact penalized objective), so all
//! of them share one convergence contract: gradient max-norm below [`GRAD_TOL`]
//! on the free coordinates.

use crate::data::{Dataset, FitFlags, FitResult, GlmError};
use nalgebra::{Cholesky, DMatrix, DVector};

/// Convergence criterion: gradient max-norm on the free coordinates.
pub const GRAD_TOL: f64 = 1e-8;
/// Iteration cap for ML and ridge fits.
pub const MAX_ITER_ML: usize = 25;
/// Iteration cap for Firth fits; penalized estimates exist under separation
/// but converge slowly.
pub const MAX_ITER_FIRTH: usize = 50;
/// Maximum number of step-halvings per Newton step.
pub const MAX_HALVINGS: usize = 5;
/// Fitted probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]` inside
/// log-likelihood evaluations.
pub const PROB_CLIP: f64 = 1e-10;
/// A fit whose coefficient max-norm exceeds this bound is treated as
/// separation-driven divergence rather than a genuine optimum, even when the
/// score criterion is met: under quasi-separation the score vanishes along the
/// diverging path.
pub const DIVERGENCE_NORM: f64 = 15.0;
/// Reciprocal-condition guard for the free-coordinate Fisher block.
pub const RCOND_MIN: f64 = 1e-12;

/// Numerically safe inverse logit, strictly inside (0, 1) for finite input;
/// saturated values land on the nearest representable neighbours of 0 and 1.
#[inline]
pub fn expit(u: f64) -> f64 {
    let p = if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    };
    if p >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else if p <= 0.0 && u.is_finite() {
        f64::MIN_POSITIVE
    } else {
        p
    }
}

/// Log-odds of a probability.
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
fn clip_prob(p: f64) -> (f64, bool) {
    if p < PROB_CLIP {
        (PROB_CLIP, true)
    } else if p > 1.0 - PROB_CLIP {
        (1.0 - PROB_CLIP, true)
    } else {
        (p, false)
    }
}

/// Clips a probability to the working range `[PROB_CLIP, 1 - PROB_CLIP]`.
#[inline]
pub fn clip_probability(p: f64) -> f64 {
    clip_prob(p).0
}

fn check_beta_len(data: &Dataset, beta: &DVector<f64>) -> Result<(), GlmError> {
    if beta.len() != data.n_coef() {
        return Err(GlmError::InvalidArgument(format!(
            "coefficient length {} vs {} design columns",
            beta.len(),
            data.n_coef()
        )));
    }
    Ok(())
}

/// Weighted Bernoulli log-likelihood at `beta`, with probabilities clipped to
/// the working range. Also reports whether any clipping occurred.
pub fn log_likelihood_flagged(data: &Dataset, beta: &DVector<f64>) -> Result<(f64, bool), GlmError> {
    check_beta_len(data, beta)?;
    let eta = data.x() * beta;
    Ok(loglik_from_eta(data, &eta))
}

/// Weighted Bernoulli log-likelihood at `beta` on clipped probabilities.
pub fn log_likelihood(data: &Dataset, beta: &DVector<f64>) -> Result<f64, GlmError> {
    log_likelihood_flagged(data, beta).map(|(ll, _)| ll)
}

/// Linear predictor into a reusable buffer, hand-rolled over the
/// column-major design to keep the hot loop allocation-free.
fn eval_linear(data: &Dataset, beta: &DVector<f64>, offset: Option<&DVector<f64>>, eta: &mut DVector<f64>) {
    let x = data.x();
    let n = x.nrows();
    let p = x.ncols();
    let xs = x.as_slice();
    let out = eta.as_mut_slice();
    match offset {
        Some(o) => out.copy_from_slice(o.as_slice()),
        None => out.fill(0.0),
    }
    for j in 0..p {
        let b = beta[j];
        if b == 0.0 {
            continue;
        }
        let cj = &xs[j * n..(j + 1) * n];
        for i in 0..n {
            out[i] += b * cj[i];
        }
    }
}

/// Strided dot product of one design row with a coefficient vector.
pub(crate) fn row_dot(x: &DMatrix<f64>, row: usize, beta: &DVector<f64>) -> f64 {
    let n = x.nrows();
    let xs = x.as_slice();
    let mut s = 0.0;
    for j in 0..x.ncols() {
        s += beta[j] * xs[j * n + row];
    }
    s
}

/// Clipped log-likelihood from a filled linear predictor, storing the
/// (unclipped) fitted probabilities for reuse by the weight update.
fn loglik_store_pi(data: &Dataset, eta: &DVector<f64>, pi_out: &mut DVector<f64>) -> (f64, bool) {
    let y = data.y().as_slice();
    let w = data.weights().as_slice();
    let eta = eta.as_slice();
    let pi_out = pi_out.as_mut_slice();
    let mut ll = 0.0;
    let mut clipped = false;
    for i in 0..y.len() {
        let p = expit(eta[i]);
        pi_out[i] = p;
        if w[i] == 0.0 {
            continue;
        }
        let (p, c) = clip_prob(p);
        clipped |= c;
        // Outcomes are exactly 0 or 1, so one log per row suffices.
        ll += w[i] * if y[i] == 1.0 { p.ln() } else { (1.0 - p).ln() };
    }
    (ll, clipped)
}

fn loglik_from_eta(data: &Dataset, eta: &DVector<f64>) -> (f64, bool) {
    let mut pi = DVector::zeros(eta.len());
    loglik_store_pi(data, eta, &mut pi)
}

/// Score vector `Xᵀ W (y − π)` and Fisher information
/// `Xᵀ diag(w π (1 − π)) X` at `beta`.
pub fn score_and_fisher(
    data: &Dataset,
    beta: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>), GlmError> {
    check_beta_len(data, beta)?;
    let n = data.n_rows();
    let p = data.n_coef();
    let mut eta = DVector::zeros(n);
    eval_linear(data, beta, None, &mut eta);
    let mut pi = DVector::zeros(n);
    for i in 0..n {
        pi[i] = expit(eta[i]);
    }
    let mut resid = DVector::zeros(n);
    let mut wt = DVector::zeros(n);
    fill_weights_from_pi(data, &pi, &mut resid, &mut wt);
    let mut g = DVector::zeros(p);
    let mut info = DMatrix::zeros(p, p);
    score_fisher_into(data, &resid, &wt, &mut g, &mut info);
    Ok((g, info))
}

fn fill_weights_from_pi(data: &Dataset, pi: &DVector<f64>, resid: &mut DVector<f64>, wt: &mut DVector<f64>) {
    let y = data.y().as_slice();
    let w = data.weights().as_slice();
    let pi = pi.as_slice();
    let resid = resid.as_mut_slice();
    let wt = wt.as_mut_slice();
    for i in 0..y.len() {
        resid[i] = w[i] * (y[i] - pi[i]);
        wt[i] = w[i] * pi[i] * (1.0 - pi[i]);
    }
}

fn score_fisher_into(
    data: &Dataset,
    resid: &DVector<f64>,
    wt: &DVector<f64>,
    g: &mut DVector<f64>,
    info: &mut DMatrix<f64>,
) {
    let x = data.x();
    let p = x.ncols();
    let n = x.nrows();
    // Column-major storage: column j is the contiguous slice [j*n, (j+1)*n).
    let xs = x.as_slice();
    let resid = resid.as_slice();
    let wt = wt.as_slice();
    for j in 0..p {
        let cj = &xs[j * n..(j + 1) * n];
        let mut s = 0.0;
        for i in 0..n {
            s += cj[i] * resid[i];
        }
        g[j] = s;
        for k in j..p {
            let ck = &xs[k * n..(k + 1) * n];
            let mut f = 0.0;
            for i in 0..n {
                f += wt[i] * cj[i] * ck[i];
            }
            info[(j, k)] = f;
            info[(k, j)] = f;
        }
    }
}

/// Options for [`fit_ml`]. Defaults implement the toolkit-wide convergence
/// contract (tolerance 1e-8, 25 iterations, 5 halvings).
#[derive(Debug, Clone, Copy)]
pub struct FitOptions<'a> {
    /// Added to the linear predictor, not estimated.
    pub offset: Option<&'a DVector<f64>>,
    /// Coefficient indices held fixed at their `init` values.
    pub frozen: &'a [usize],
    /// Starting point; zeros when absent.
    pub init: Option<&'a DVector<f64>>,
    pub max_iter: usize,
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for FitOptions<'_> {
    fn default() -> Self {
        Self {
            offset: None,
            frozen: &[],
            init: None,
            max_iter: MAX_ITER_ML,
            tol: GRAD_TOL,
            max_halvings: MAX_HALVINGS,
        }
    }
}

impl<'a> FitOptions<'a> {
    pub fn with_init(init: &'a DVector<f64>) -> Self {
        Self {
            init: Some(init),
            ..Self::default()
        }
    }
}

/// Weighted maximum-likelihood logistic fit by Newton's method with
/// step-halving.
///
/// Frozen coordinates stay at their starting values, an optional offset is
/// added to the linear predictor, and convergence requires the score max-norm
/// on the free coordinates to drop below `opts.tol` at a non-diverged iterate.
/// Nonconvergence and a singular information block are reported as errors that
/// carry the last iterate, so callers may keep working with it.
pub fn fit_ml(data: &Dataset, opts: &FitOptions) -> Result<FitResult, GlmError> {
    let p = data.n_coef();
    let n = data.n_rows();
    if let Some(offset) = opts.offset {
        if offset.len() != n {
            return Err(GlmError::InvalidArgument(format!(
                "offset length {} vs {} rows",
                offset.len(),
                n
            )));
        }
    }
    for &j in opts.frozen {
        if j >= p {
            return Err(GlmError::InvalidArgument(format!(
                "frozen index {j} out of range for {p} coefficients"
            )));
        }
    }
    let mut beta = match opts.init {
        Some(b) => {
            check_beta_len(data, b)?;
            b.clone()
        }
        None => DVector::zeros(p),
    };
    let free: Vec<usize> = (0..p).filter(|j| !opts.frozen.contains(j)).collect();

    let mut eta = DVector::zeros(n);
    let mut pi = DVector::zeros(n);
    let mut resid = DVector::zeros(n);
    let mut wt = DVector::zeros(n);
    let mut g = DVector::zeros(p);
    let mut info = DMatrix::zeros(p, p);
    let mut flags = FitFlags::default();

    eval_linear(data, &beta, opts.offset, &mut eta);
    let (mut ll, mut clipped) = loglik_store_pi(data, &eta, &mut pi);
    flags.prob_clipped |= clipped;

    if free.is_empty() {
        fill_weights_from_pi(data, &pi, &mut resid, &mut wt);
        score_fisher_into(data, &resid, &wt, &mut g, &mut info);
        return Ok(assemble(beta, ll, info, true, 0, flags));
    }

    // The Fisher information and log-likelihood tracked through the loop
    // refer to the current beta, so the final result reuses them instead of
    // recomputing.
    let mut iterations = 0;
    for iter in 1..=opts.max_iter {
        fill_weights_from_pi(data, &pi, &mut resid, &mut wt);
        score_fisher_into(data, &resid, &wt, &mut g, &mut info);

        let g_norm = free.iter().map(|&j| g[j].abs()).fold(0.0, f64::max);
        if g_norm <= opts.tol {
            let diverged = free.iter().map(|&j| beta[j].abs()).fold(0.0, f64::max) > DIVERGENCE_NORM;
            if diverged {
                flags.separation_suspected = true;
                let fit = assemble(beta, ll, info, false, iterations, flags);
                return Err(GlmError::Nonconvergence(Box::new(fit)));
            }
            return Ok(assemble(beta, ll, info, true, iterations, flags));
        }

        let gf = DVector::from_iterator(free.len(), free.iter().map(|&j| g[j]));
        let info_f = submatrix(&info, &free);
        let chol = match Cholesky::new(info_f) {
            Some(c) => c,
            None => {
                let fit = assemble(beta, ll, info, false, iterations, flags);
                return Err(GlmError::SingularInformation(Box::new(fit)));
            }
        };
        if rcond_proxy(&chol) < RCOND_MIN {
            let fit = assemble(beta, ll, info, false, iterations, flags);
            return Err(GlmError::SingularInformation(Box::new(fit)));
        }
        let step = chol.solve(&gf);

        // Step-halving: accept the first scale that does not worsen the
        // clipped log-likelihood beyond float rounding noise (near the
        // optimum the true improvement drops below resolution); after the
        // halving budget, keep the best candidate.
        let slack = (1.0 + ll.abs()) * 1e-13;
        let mut scale = 1.0;
        let mut best: Option<(DVector<f64>, f64, bool, usize)> = None;
        let mut last_attempt = 0;
        for attempt in 0..=opts.max_halvings {
            let mut cand = beta.clone();
            for (idx, &j) in free.iter().enumerate() {
                cand[j] += scale * step[idx];
            }
            eval_linear(data, &cand, opts.offset, &mut eta);
            let (ll_cand, c) = loglik_store_pi(data, &eta, &mut pi);
            last_attempt = attempt;
            if ll_cand >= ll - slack {
                if attempt > 0 {
                    flags.step_halving_used = true;
                }
                best = Some((cand, ll_cand, c, attempt));
                break;
            }
            if best.as_ref().is_none_or(|(_, b, _, _)| ll_cand > *b) {
                best = Some((cand, ll_cand, c, attempt));
            }
            scale *= 0.5;
            flags.step_halving_used = true;
        }
        let (next, ll_next, c, best_attempt) = best.expect("at least one candidate evaluated");
        beta = next;
        ll = ll_next;
        clipped = c;
        flags.prob_clipped |= clipped;
        iterations = iter;
        if best_attempt != last_attempt {
            // The buffers hold the last evaluated candidate, not the accepted
            // one; refresh them.
            eval_linear(data, &beta, opts.offset, &mut eta);
            let _ = loglik_store_pi(data, &eta, &mut pi);
        }
    }

    // Budget exhausted; a final score check decides whether the last step
    // happened to land on the optimum.
    fill_weights_from_pi(data, &pi, &mut resid, &mut wt);
    score_fisher_into(data, &resid, &wt, &mut g, &mut info);
    let g_norm = free.iter().map(|&j| g[j].abs()).fold(0.0, f64::max);
    let diverged = free.iter().map(|&j| beta[j].abs()).fold(0.0, f64::max) > DIVERGENCE_NORM;
    if g_norm <= opts.tol && !diverged {
        return Ok(assemble(beta, ll, info, true, iterations, flags));
    }
    flags.separation_suspected = diverged;
    let fit = assemble(beta, ll, info, false, iterations, flags);
    Err(GlmError::Nonconvergence(Box::new(fit)))
}

/// Fits with default options.
pub fn fit_ml_default(data: &Dataset) -> Result<FitResult, GlmError> {
    fit_ml(data, &FitOptions::default())
}

fn assemble(
    beta: DVector<f64>,
    loglik: f64,
    fisher: DMatrix<f64>,
    converged: bool,
    iterations: usize,
    flags: FitFlags,
) -> FitResult {
    FitResult {
        beta,
        loglik,
        fisher,
        converged,
        iterations,
        flags,
    }
}

fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let k = idx.len();
    DMatrix::from_fn(k, k, |r, c| m[(idx[r], idx[c])])
}

/// Cheap reciprocal-condition proxy from the Cholesky factor diagonal;
/// within a factor of the dimension of the true value for SPD matrices.
fn rcond_proxy(chol: &Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let l = chol.l_dirty();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for j in 0..l.nrows() {
        let d = l[(j, j)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if hi == 0.0 {
        0.0
    } else {
        (lo / hi).powi(2)
    }
}

//! One-shot model fitting on a user-supplied CSV file: separation check,
//! method dispatch, destandardized coefficients and a machine-readable
//! report.

use super::{ridge_estimate_at, MethodEstimate, Method, RidgeContext, StudyError};
use crate::data::{fit_or_last, Dataset};
use crate::glm::{self, expit};
use crate::penalty::{self, PriorSpec};
use crate::separation;
use crate::tuning::{self, GcvMode, LambdaGrid};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOverrides {
    /// Fixed complexity parameter for the prior-based ridge methods.
    pub lambda: Option<f64>,
    /// Odds-ratio interval upper bound converted to λ.
    pub prior_or: Option<f64>,
    pub gcv_mode: Option<GcvMode>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfilePoint {
    pub lambda: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub data_file: String,
    pub outcome: String,
    pub method: String,
    pub n: usize,
    pub k: usize,
    pub event_rate: f64,
    pub separated: bool,
    pub separation_objective: f64,
    pub converged: bool,
    pub lambda_star: Option<f64>,
    pub boundary_lambda: Option<bool>,
    /// Coefficient per design column (intercept first), original scale.
    pub coefficients: Vec<(String, f64)>,
    pub mean_predicted: f64,
    pub flags: Vec<String>,
    /// Criterion profile over the grid for tuned methods.
    pub profile: Option<Vec<ProfilePoint>>,
}

/// Parses a headed CSV with one binary outcome column and numeric covariates.
pub fn read_csv_dataset(path: &Path, outcome: &str) -> Result<(Dataset, Vec<String>), StudyError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| StudyError::Records(format!("{} is empty", path.display())))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let outcome_idx = names
        .iter()
        .position(|n| n == outcome)
        .ok_or_else(|| StudyError::Config(format!("outcome column {outcome} not found")))?;
    let covariate_names: Vec<String> = names
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != outcome_idx)
        .map(|(_, n)| n.clone())
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(StudyError::Records(format!(
                "line {}: expected {} fields, found {}",
                lineno + 2,
                names.len(),
                fields.len()
            )));
        }
        let mut row = Vec::with_capacity(names.len() - 1);
        for (i, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|e| {
                StudyError::Records(format!("line {}: bad number {field}: {e}", lineno + 2))
            })?;
            if i == outcome_idx {
                ys.push(v);
            } else {
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(StudyError::Records("no data rows".into()));
    }
    let n = rows.len();
    let k = covariate_names.len();
    let mut x = DMatrix::zeros(n, k + 1);
    for (i, row) in rows.iter().enumerate() {
        x[(i, 0)] = 1.0;
        for (j, &v) in row.iter().enumerate() {
            x[(i, j + 1)] = v;
        }
    }
    let data = Dataset::new(x, DVector::from_vec(ys)).map_err(crate::data::GlmError::from)?;
    Ok((data, covariate_names))
}

fn profile_points(profile: &tuning::CriterionProfile) -> Vec<ProfilePoint> {
    profile
        .grid
        .values()
        .iter()
        .zip(&profile.scores)
        .map(|(&lambda, &score)| ProfilePoint { lambda, score })
        .collect()
}

/// Fits `method` to the dataset in `path` and reports the result.
pub fn run_fit(
    path: &Path,
    outcome: &str,
    method: Method,
    overrides: &FitOverrides,
) -> Result<FitReport, StudyError> {
    if method.needs_truth() {
        return Err(StudyError::Config(format!(
            "{} is an oracle and needs the generating truth; it is unavailable for data files",
            method.id()
        )));
    }
    let (data, covariate_names) = read_csv_dataset(path, outcome)?;
    let grid = LambdaGrid::study_default();
    let gcv_mode = overrides.gcv_mode.unwrap_or(GcvMode::InSample);

    let (separated, sep_objective, mut flags) = match separation::detect_separation(&data) {
        Ok(report) => (report.is_separated(), report.objective, Vec::new()),
        Err(_) => (false, f64::NAN, vec!["lp_error".to_string()]),
    };

    let fixed_lambda = match (overrides.lambda, overrides.prior_or) {
        (Some(_), Some(_)) => {
            return Err(StudyError::Config(
                "--lambda and --prior-or are mutually exclusive".into(),
            ))
        }
        (Some(l), None) => {
            if l.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(StudyError::Config("lambda must be positive".into()));
            }
            Some(l)
        }
        (None, Some(or)) => Some(penalty::prior_to_lambda(&PriorSpec::new(or))?),
        (None, None) => None,
    };
    if fixed_lambda.is_some() && !matches!(method, Method::Ip | Method::Wp) {
        return Err(StudyError::Config(
            "--lambda/--prior-or only apply to the prior-based methods IP and WP".into(),
        ));
    }

    let mut profile_out: Option<Vec<ProfilePoint>> = None;
    let estimate: MethodEstimate = match method {
        Method::Ml => {
            let (fit, _) = fit_or_last(glm::fit_ml_default(&data))?;
            MethodEstimate {
                lambda_star: None,
                boundary: None,
                beta: fit.beta.iter().copied().collect(),
                converged: fit.converged,
                flags: super::fit_flags(&fit),
            }
        }
        Method::Fc => {
            let fit = penalty::fit_firth(&data)?;
            MethodEstimate {
                lambda_star: None,
                boundary: None,
                beta: fit.beta.iter().copied().collect(),
                converged: fit.converged,
                flags: super::fit_flags(&fit),
            }
        }
        Method::Flic => {
            let firth_fit = penalty::fit_firth(&data)?;
            let fit = penalty::flic(&data, &firth_fit)?;
            MethodEstimate {
                lambda_star: None,
                boundary: None,
                beta: fit.beta.iter().copied().collect(),
                converged: fit.converged,
                flags: super::fit_flags(&fit),
            }
        }
        _ => {
            let (std_data, std) = penalty::standardize(&data)?;
            let ctx = RidgeContext { std_data, std };
            match method {
                Method::D | Method::Ce => {
                    let (d, ce) = tuning::profile_deviance_and_ce(&ctx.std_data, &grid, None)?;
                    let profile = if method == Method::D { d } else { ce };
                    profile_out = Some(profile_points(&profile));
                    ridge_estimate_at(
                        &ctx,
                        profile.selected_lambda,
                        &grid,
                        Some(profile.boundary() != tuning::BoundaryHit::Interior),
                        Vec::new(),
                    )?
                }
                Method::Gcv => {
                    let profile = tuning::profile_gcv(&ctx.std_data, &grid, gcv_mode)?;
                    profile_out = Some(profile_points(&profile));
                    ridge_estimate_at(
                        &ctx,
                        profile.selected_lambda,
                        &grid,
                        Some(profile.boundary() != tuning::BoundaryHit::Interior),
                        Vec::new(),
                    )?
                }
                Method::Aic => {
                    let profile = tuning::profile_aic(&ctx.std_data, &grid)?;
                    profile_out = Some(profile_points(&profile));
                    ridge_estimate_at(
                        &ctx,
                        profile.selected_lambda,
                        &grid,
                        Some(profile.boundary() != tuning::BoundaryHit::Interior),
                        Vec::new(),
                    )?
                }
                Method::Rcv50 | Method::Rcv95 => {
                    let theta = if method == Method::Rcv50 { 0.5 } else { 0.95 };
                    let mut rng = crate::stream::derive_rng(0, "fit", 0, "rcv");
                    let lambda = tuning::rcv(&ctx.std_data, &grid, 50, theta, &mut rng)?;
                    ridge_estimate_at(&ctx, lambda, &grid, None, Vec::new())?
                }
                Method::Ip => {
                    let lambda = fixed_lambda.unwrap_or(2.0);
                    ridge_estimate_at(&ctx, lambda, &grid, Some(false), Vec::new())?
                }
                Method::Wp => {
                    let lambda = fixed_lambda.unwrap_or(0.5);
                    ridge_estimate_at(&ctx, lambda, &grid, Some(false), Vec::new())?
                }
                _ => unreachable!("oracles rejected above"),
            }
        }
    };

    flags.extend(estimate.flags.iter().cloned());
    if separated {
        flags.push("separated".to_string());
    }
    let beta = DVector::from_vec(estimate.beta.clone());
    let mean_predicted = (data.x() * &beta).iter().map(|&e| expit(e)).sum::<f64>() / data.n_rows() as f64;
    let mut coefficients = vec![("intercept".to_string(), beta[0])];
    for (j, name) in covariate_names.iter().enumerate() {
        coefficients.push((name.clone(), beta[j + 1]));
    }
    Ok(FitReport {
        data_file: path.display().to_string(),
        outcome: outcome.to_string(),
        method: method.id().to_string(),
        n: data.n_rows(),
        k: data.n_covariates(),
        event_rate: data.event_rate(),
        separated,
        separation_objective: sep_objective,
        converged: estimate.converged,
        lambda_star: estimate.lambda_star,
        boundary_lambda: estimate.boundary,
        coefficients,
        mean_predicted,
        flags,
        profile: profile_out,
    })
}

impl FitReport {
    /// Human-readable rendering for the terminal.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method: {}   data: {} (N = {}, K = {})", self.method, self.data_file, self.n, self.k);
        let _ = writeln!(
            out,
            "separation: {}   event rate: {:.4}",
            if self.separated { "DETECTED" } else { "none" },
            self.event_rate
        );
        if let Some(lambda) = self.lambda_star {
            let _ = writeln!(
                out,
                "lambda*: {:.6e}{}",
                lambda,
                if self.boundary_lambda == Some(true) {
                    "  (grid boundary)"
                } else {
                    ""
                }
            );
        }
        let _ = writeln!(out, "converged: {}", self.converged);
        let _ = writeln!(out, "coefficients (original scale):");
        for (name, value) in &self.coefficients {
            let _ = writeln!(out, "  {name:>16}  {value:+.6}");
        }
        let _ = writeln!(out, "mean predicted probability: {:.6}", self.mean_predicted);
        if !self.flags.is_empty() {
            let _ = writeln!(out, "flags: {}", self.flags.join(", "));
        }
        out
    }
}

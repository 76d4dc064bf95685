//! Detection of complete or quasi-complete separation in a binary-outcome
//! design via a linear program.
//!
//! A direction `b` separates the data when `(2y_i − 1)(x_i·b) ≥ 0` for every
//! observation with strict inequality somewhere. The LP maximizes the summed
//! margin under those constraints with box bounds `−1 ≤ b_j ≤ 1` (only the
//! sign pattern matters, so the box keeps the program bounded). A positive
//! optimum certifies separation.

use crate::data::Dataset;
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DVector;
use thiserror::Error;

/// Optimum above this threshold counts as separation; below it the LP value
/// is numerical zero.
pub const SEPARATION_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationStatus {
    None,
    Separated,
}

/// Result of the separation test. When separated, `certificate` holds a
/// margin-maximizing direction and `objective` the attained summed margin.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub status: SeparationStatus,
    pub certificate: Option<DVector<f64>>,
    pub objective: f64,
}

impl SeparationReport {
    pub fn is_separated(&self) -> bool {
        self.status == SeparationStatus::Separated
    }
}

#[derive(Debug, Error)]
pub enum SeparationError {
    #[error("linear program failed: {0}")]
    Lp(String),
}

/// Runs the separation linear program on the original observations of `data`
/// (pseudo-records and zero-weight rows are ignored).
pub fn detect_separation(data: &Dataset) -> Result<SeparationReport, SeparationError> {
    let p = data.n_coef();
    let n = data.n_original();
    let x = data.x();
    let y = data.y();
    let w = data.weights();

    let mut problem = Problem::new(OptimizationDirection::Maximize);
    // Objective: sum of margins = c·b with c_j = Σ_i (2y_i − 1) x_ij.
    let mut c = vec![0.0; p];
    for i in 0..n {
        if w[i] == 0.0 {
            continue;
        }
        let sign = 2.0 * y[i] - 1.0;
        for j in 0..p {
            c[j] += sign * x[(i, j)];
        }
    }
    let vars: Vec<_> = c
        .iter()
        .map(|&cj| problem.add_var(cj, (-1.0, 1.0)))
        .collect();
    for i in 0..n {
        if w[i] == 0.0 {
            continue;
        }
        let sign = 2.0 * y[i] - 1.0;
        let row: Vec<_> = (0..p).map(|j| (vars[j], sign * x[(i, j)])).collect();
        problem.add_constraint(&row, ComparisonOp::Ge, 0.0);
    }

    let solution = problem
        .solve()
        .map_err(|e| SeparationError::Lp(format!("{e:?}")))?;
    let objective = solution.objective();
    if objective > SEPARATION_THRESHOLD {
        let b = DVector::from_iterator(p, vars.iter().map(|&v| solution[v]));
        Ok(SeparationReport {
            status: SeparationStatus::Separated,
            certificate: Some(b),
            objective,
        })
    } else {
        Ok(SeparationReport {
            status: SeparationStatus::None,
            certificate: None,
            objective,
        })
    }
}

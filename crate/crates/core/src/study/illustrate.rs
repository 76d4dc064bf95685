//! The illustrative example: two fixed 2×2 datasets, their tuning-criterion
//! profiles, and the 1000-replication experiment showing how often the
//! deviance criterion runs into the grid boundary.

use super::{ridge_estimate_at, RidgeContext, StudyError};
use crate::data::Dataset;
use crate::penalty::{self, PenaltySpec};
use crate::separation;
use crate::simgen;
use crate::stream;
use crate::tuning::{self, BoundaryHit, LambdaGrid};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Cell counts (x=0 non-events/events, x=1 non-events/events) for the two
/// illustrative datasets.
pub fn dataset_cells(which: u8) -> [usize; 4] {
    match which {
        1 => [20, 0, 71, 9],
        2 => [19, 1, 71, 9],
        _ => panic!("illustrative dataset index must be 1 or 2"),
    }
}

/// Builds illustrative dataset 1 or 2 as individual records.
pub fn illustrative_dataset(which: u8) -> Dataset {
    let [n00, n01, n10, n11] = dataset_cells(which);
    let n = n00 + n01 + n10 + n11;
    let mut x = DMatrix::zeros(n, 2);
    let mut y = DVector::zeros(n);
    let mut row = 0;
    for (cnt, xv, yv) in [
        (n00, 0.0, 0.0),
        (n01, 0.0, 1.0),
        (n10, 1.0, 0.0),
        (n11, 1.0, 1.0),
    ] {
        for _ in 0..cnt {
            x[(row, 0)] = 1.0;
            x[(row, 1)] = xv;
            y[row] = yv;
            row += 1;
        }
    }
    Dataset::new(x, y).expect("well-formed illustrative dataset")
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Row {
    pub dataset: u8,
    pub method: String,
    pub beta1: Option<f64>,
    pub lambda_star: Option<f64>,
    pub separated: bool,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IllustrateSummary {
    pub seed: u64,
    pub reps: usize,
    /// Fraction of replications where the deviance criterion selected the
    /// smallest grid value.
    pub d_boundary_low_fraction: f64,
    pub d_boundary_high_fraction: f64,
    pub separation_fraction: f64,
    /// Mean deviation of the Firth estimate from the true coefficient 1.
    pub fc_bias: f64,
    pub ip_bias: f64,
    pub table1: Vec<Table1Row>,
    pub files: Vec<PathBuf>,
}

struct RepOutcome {
    rep: usize,
    separated: bool,
    d_lambda: f64,
    d_boundary: BoundaryHit,
    fc_dev: Option<f64>,
    ip_dev: Option<f64>,
    oex_lambda: Option<f64>,
    op_lambda: Option<f64>,
}

fn table1_for(which: u8, grid: &LambdaGrid) -> Result<Vec<Table1Row>, StudyError> {
    let data = illustrative_dataset(which);
    let separated = separation::detect_separation(&data)
        .map(|r| r.is_separated())
        .unwrap_or(false);
    let mut rows = Vec::new();

    let fc = penalty::fit_firth(&data)?;
    rows.push(Table1Row {
        dataset: which,
        method: "FC".to_string(),
        beta1: Some(fc.beta[1]),
        lambda_star: None,
        separated,
        flags: Vec::new(),
    });

    let (std_data, std) = penalty::standardize(&data)?;
    let ctx = RidgeContext { std_data, std };
    let (d_profile, _) = tuning::profile_deviance_and_ce(&ctx.std_data, grid, None)?;
    let d_est = ridge_estimate_at(
        &ctx,
        d_profile.selected_lambda,
        grid,
        Some(d_profile.boundary() != BoundaryHit::Interior),
        Vec::new(),
    )?;
    let mut d_flags = d_est.flags.clone();
    if d_est.boundary == Some(true) {
        d_flags.push("boundary_lambda".to_string());
    }
    rows.push(Table1Row {
        dataset: which,
        method: "D".to_string(),
        beta1: d_est.beta.get(1).copied(),
        lambda_star: d_est.lambda_star,
        separated,
        flags: d_flags,
    });

    let ip = ridge_estimate_at(&ctx, 2.0, grid, Some(false), Vec::new())?;
    rows.push(Table1Row {
        dataset: which,
        method: "IP".to_string(),
        beta1: ip.beta.get(1).copied(),
        lambda_star: Some(2.0),
        separated,
        flags: ip.flags,
    });
    Ok(rows)
}

/// Deviance profile and per-distinct-observation deviance components over the
/// grid for one illustrative dataset.
fn deviance_profile_rows(
    which: u8,
    grid: &LambdaGrid,
) -> Result<(Vec<String>, Vec<String>), StudyError> {
    let data = illustrative_dataset(which);
    let (std_data, _) = penalty::standardize(&data)?;
    let y: Vec<f64> = data.y().iter().copied().collect();
    let mut profile_rows = Vec::new();
    let mut component_rows = Vec::new();
    for &lambda in grid.values() {
        let loo = tuning::loocv_predictions(&std_data, lambda)?;
        let d = tuning::criterion_d(&loo.predictions, &y);
        profile_rows.push(format!("{which},{lambda:.12e},{d:.10e}"));
        // Components grouped by the distinct (x, y) cells.
        let mut groups: BTreeMap<(u64, u64), (usize, f64)> = BTreeMap::new();
        for (i, &yi) in y.iter().enumerate() {
            let key = (data.x()[(i, 1)].to_bits(), yi.to_bits());
            let pi = loo.predictions[i];
            let di = -2.0 * (yi * pi.ln() + (1.0 - yi) * (1.0 - pi).ln());
            let e = groups.entry(key).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += di;
        }
        for ((xb, yb), (count, total)) in groups {
            component_rows.push(format!(
                "{which},{lambda:.12e},{},{},{count},{total:.10e}",
                f64::from_bits(xb),
                f64::from_bits(yb)
            ));
        }
    }
    Ok((profile_rows, component_rows))
}

fn run_single_rep(
    seed: u64,
    rep: usize,
    grid: &LambdaGrid,
) -> Result<RepOutcome, StudyError> {
    let mut rng = stream::derive_rng(seed, "illustrative", rep as u64, "train");
    let gen = simgen::illustrative_generator(100, &mut rng);
    let separated = separation::detect_separation(&gen.data)
        .map(|r| r.is_separated())
        .unwrap_or(false);
    // A constant covariate draw cannot be tuned; record it as a degenerate
    // boundary-free replicate.
    let std_pair = penalty::standardize(&gen.data);
    let (std_data, std) = match std_pair {
        Ok(pair) => pair,
        Err(penalty::PenaltyError::ConstantColumn(_)) => {
            return Ok(RepOutcome {
                rep,
                separated,
                d_lambda: f64::NAN,
                d_boundary: BoundaryHit::Interior,
                fc_dev: None,
                ip_dev: None,
                oex_lambda: None,
                op_lambda: None,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let (d_profile, _) = tuning::profile_deviance_and_ce(&std_data, grid, None)?;
    let fc_dev = penalty::fit_firth(&gen.data).ok().map(|f| f.beta[1] - 1.0);
    let ip_spec = PenaltySpec::uniform(2.0, 1);
    let ip_dev = penalty::fit_ridge_augmented(&std_data, &ip_spec)
        .ok()
        .and_then(|fit| penalty::destandardize(&fit.beta, &std).ok().map(|b| b[1] - 1.0));
    let oex_lambda = tuning::oracle_oex(&std_data, grid, 1.0, &std).ok().map(|s| s.lambda);
    let op_lambda = tuning::oracle_op(&std_data, grid, &gen.pi_true).ok().map(|s| s.lambda);
    Ok(RepOutcome {
        rep,
        separated,
        d_lambda: d_profile.selected_lambda,
        d_boundary: d_profile.boundary(),
        fc_dev,
        ip_dev,
        oex_lambda,
        op_lambda,
    })
}

/// Regenerates the illustrative example: the coefficient table for the two
/// fixed datasets, the deviance profiles behind the first figure, the λ*
/// histogram behind the second, and per-replication coefficient deviations.
pub fn run_illustrate(seed: u64, reps: usize, out_dir: &Path) -> Result<IllustrateSummary, StudyError> {
    std::fs::create_dir_all(out_dir)?;
    let grid = LambdaGrid::study_default();
    let mut files = Vec::new();

    let mut table1 = table1_for(1, &grid)?;
    table1.extend(table1_for(2, &grid)?);
    {
        let mut out = String::from("dataset,method,beta1,lambda_star,separated,flags\n");
        for r in &table1 {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.dataset,
                r.method,
                r.beta1.map(|b| format!("{b:.10e}")).unwrap_or_default(),
                r.lambda_star.map(|l| format!("{l:.12e}")).unwrap_or_default(),
                if r.separated { 1 } else { 0 },
                r.flags.join("|")
            );
        }
        let path = out_dir.join("table1.csv");
        std::fs::write(&path, out)?;
        files.push(path);
    }

    {
        let mut profile = String::from("dataset,lambda,deviance\n");
        let mut components = String::from("dataset,lambda,x,y,count,component\n");
        for which in [1u8, 2] {
            let (p, c) = deviance_profile_rows(which, &grid)?;
            for row in p {
                profile.push_str(&row);
                profile.push('\n');
            }
            for row in c {
                components.push_str(&row);
                components.push('\n');
            }
        }
        let path = out_dir.join("deviance_profile.csv");
        std::fs::write(&path, profile)?;
        files.push(path);
        let path = out_dir.join("deviance_components.csv");
        std::fs::write(&path, components)?;
        files.push(path);
    }

    let outcomes: Result<Vec<RepOutcome>, StudyError> = (0..reps)
        .into_par_iter()
        .map(|rep| run_single_rep(seed, rep, &grid))
        .collect();
    let mut outcomes = outcomes?;
    outcomes.sort_by_key(|o| o.rep);

    let mut hist: BTreeMap<u64, usize> = BTreeMap::new();
    let mut low = 0usize;
    let mut high = 0usize;
    let mut sep = 0usize;
    let mut fc_devs = Vec::new();
    let mut ip_devs = Vec::new();
    {
        let mut out = String::from(
            "rep,separated,d_lambda,d_boundary_low,d_boundary_high,fc_dev,ip_dev,oex_lambda,op_lambda\n",
        );
        for o in &outcomes {
            if o.separated {
                sep += 1;
            }
            if o.d_lambda.is_finite() {
                *hist.entry(o.d_lambda.to_bits()).or_insert(0) += 1;
            }
            let is_low = o.d_boundary == BoundaryHit::Lower;
            let is_high = o.d_boundary == BoundaryHit::Upper;
            low += is_low as usize;
            high += is_high as usize;
            if let Some(d) = o.fc_dev {
                fc_devs.push(d);
            }
            if let Some(d) = o.ip_dev {
                ip_devs.push(d);
            }
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                o.rep,
                if o.separated { 1 } else { 0 },
                if o.d_lambda.is_finite() {
                    format!("{:.12e}", o.d_lambda)
                } else {
                    String::new()
                },
                is_low as u8,
                is_high as u8,
                o.fc_dev.map(|d| format!("{d:.10e}")).unwrap_or_default(),
                o.ip_dev.map(|d| format!("{d:.10e}")).unwrap_or_default(),
                o.oex_lambda.map(|l| format!("{l:.12e}")).unwrap_or_default(),
                o.op_lambda.map(|l| format!("{l:.12e}")).unwrap_or_default(),
            );
        }
        let path = out_dir.join("replicates.csv");
        std::fs::write(&path, out)?;
        files.push(path);
    }

    {
        let mut out = String::from("lambda,count\n");
        for (bits, count) in &hist {
            let _ = writeln!(out, "{:.12e},{}", f64::from_bits(*bits), count);
        }
        let path = out_dir.join("lambda_hist.csv");
        std::fs::write(&path, out)?;
        files.push(path);
    }

    let summary = IllustrateSummary {
        seed,
        reps,
        d_boundary_low_fraction: low as f64 / reps as f64,
        d_boundary_high_fraction: high as f64 / reps as f64,
        separation_fraction: sep as f64 / reps as f64,
        fc_bias: if fc_devs.is_empty() {
            f64::NAN
        } else {
            crate::metrics::pairwise_sum(&fc_devs) / fc_devs.len() as f64
        },
        ip_bias: if ip_devs.is_empty() {
            f64::NAN
        } else {
            crate::metrics::pairwise_sum(&ip_devs) / ip_devs.len() as f64
        },
        table1,
        files,
    };
    let path = out_dir.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

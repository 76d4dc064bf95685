//! Aggregation of replicate records into result tables: separation
//! prevalence, coefficient and prediction RMSE, calibration-slope summaries,
//! RMSD of log slopes, c-index and λ*-stability diagnostics.

use super::records::{self, OptimalRecord, ReplicateRecord};
use super::{RunManifest, ScenarioStatus, StudyError};
use crate::metrics;
use crate::simgen::CalibrationCache;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default)]
pub struct MethodAggregate {
    pub n_records: usize,
    pub n_nonconverged: usize,
    /// RMSE over all finite estimates (nonconvergent iterates included, as in
    /// the published tables) plus the share of records without a finite
    /// estimate.
    pub rmse_b1: Option<f64>,
    pub rmse_b1_excl_pct: f64,
    /// RMSE over cleanly converged replicates only.
    pub rmse_b1_converged: Option<f64>,
    pub rmse_b2: Option<f64>,
    pub rmse_b2_excl_pct: f64,
    pub rmse_b2_converged: Option<f64>,
    /// Grand prediction RMSE ×10⁴.
    pub rmse_pred_e4: Option<f64>,
    pub slope_median: Option<f64>,
    pub slope_p5: Option<f64>,
    pub slope_p95: Option<f64>,
    pub rmsd_log_slope: Option<f64>,
    /// Mean and standard deviation ×1000.
    pub cindex_mean: Option<f64>,
    pub cindex_sd: Option<f64>,
    pub lambda_mad: Option<f64>,
    pub lambda_median: Option<f64>,
    pub boundary_pct: Option<f64>,
    /// Spearman correlation of log winsorized slope with λ*.
    pub spearman_logslope_lambda: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioAggregate {
    pub id: String,
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub ey: f64,
    pub noise: bool,
    pub beta1_true: f64,
    pub beta2_true: f64,
    pub sp_pct: f64,
    pub optimal_cindex_mean: Option<f64>,
    pub optimal_cindex_sd: Option<f64>,
    pub methods: BTreeMap<String, MethodAggregate>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let mean = metrics::pairwise_sum(values) / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = metrics::pairwise_sum(&sq) / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

fn coef_summary(records: &[&ReplicateRecord], coef: usize, truth: f64) -> (Option<f64>, f64, Option<f64>) {
    let all: Vec<f64> = records
        .iter()
        .map(|r| r.beta.get(coef).copied().unwrap_or(f64::NAN))
        .collect();
    let included = metrics::rmse_coef(&all, truth).ok();
    let excl_pct = match &included {
        Some(res) => 100.0 * res.n_excluded as f64 / all.len().max(1) as f64,
        None => 100.0,
    };
    let conv: Vec<f64> = records
        .iter()
        .filter(|r| r.converged)
        .map(|r| r.beta.get(coef).copied().unwrap_or(f64::NAN))
        .collect();
    let converged = metrics::rmse_coef(&conv, truth).ok().map(|r| r.rmse);
    (included.map(|r| r.rmse), excl_pct, converged)
}

fn aggregate_method(records: &[&ReplicateRecord], beta1: f64, beta2: Option<f64>) -> MethodAggregate {
    let mut agg = MethodAggregate {
        n_records: records.len(),
        n_nonconverged: records.iter().filter(|r| !r.converged).count(),
        ..Default::default()
    };
    let (rmse1, excl1, conv1) = coef_summary(records, 1, beta1);
    agg.rmse_b1 = rmse1;
    agg.rmse_b1_excl_pct = excl1;
    agg.rmse_b1_converged = conv1;
    if let Some(b2) = beta2 {
        let (rmse2, excl2, conv2) = coef_summary(records, 2, b2);
        agg.rmse_b2 = rmse2;
        agg.rmse_b2_excl_pct = excl2;
        agg.rmse_b2_converged = conv2;
    }

    let contribs: Vec<f64> = records
        .iter()
        .filter_map(|r| r.rmse_pred_contrib)
        .filter(|v| v.is_finite())
        .collect();
    if !contribs.is_empty() {
        agg.rmse_pred_e4 = Some(metrics::rmse_pred_from_contribs(&contribs) * 1e4);
    }

    let slopes: Vec<f64> = records
        .iter()
        .filter_map(|r| r.slope)
        .filter(|v| v.is_finite())
        .collect();
    if !slopes.is_empty() {
        agg.slope_median = Some(metrics::median(&slopes));
        agg.slope_p5 = Some(crate::tuning::quantile_linear(&slopes, 0.05));
        agg.slope_p95 = Some(crate::tuning::quantile_linear(&slopes, 0.95));
        agg.rmsd_log_slope = Some(metrics::rmsd_log_slope(&slopes));
    }

    let cindex: Vec<f64> = records
        .iter()
        .filter_map(|r| r.cindex)
        .filter(|v| v.is_finite())
        .collect();
    if !cindex.is_empty() {
        let (m, s) = mean_sd(&cindex);
        agg.cindex_mean = Some(1000.0 * m);
        agg.cindex_sd = Some(1000.0 * s);
    }

    let lambdas: Vec<f64> = records
        .iter()
        .filter_map(|r| r.lambda_star)
        .filter(|v| v.is_finite())
        .collect();
    if !lambdas.is_empty() {
        agg.lambda_mad = Some(metrics::mad(&lambdas));
        agg.lambda_median = Some(metrics::median(&lambdas));
        let boundary: Vec<&ReplicateRecord> = records
            .iter()
            .filter(|r| r.boundary_hit.is_some())
            .copied()
            .collect();
        if !boundary.is_empty() {
            let hits = boundary
                .iter()
                .filter(|r| r.boundary_hit == Some(true))
                .count();
            agg.boundary_pct = Some(100.0 * hits as f64 / boundary.len() as f64);
        }
        let pairs: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| match (r.slope, r.lambda_star) {
                (Some(s), Some(l)) if s.is_finite() && l.is_finite() => {
                    Some((metrics::winsorize_slope(s).ln(), l))
                }
                _ => None,
            })
            .collect();
        if pairs.len() >= 3 {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            agg.spearman_logslope_lambda = metrics::spearman(&a, &b).ok();
        }
    }
    agg
}

fn aggregate_scenario(
    status: &ScenarioStatus,
    records: &[ReplicateRecord],
    optimal: &[OptimalRecord],
    cache: &CalibrationCache,
) -> ScenarioAggregate {
    let beta1 = status.a * cache.betas[0];
    let beta2 = status.a * cache.betas[1];
    let mut by_method: BTreeMap<String, Vec<&ReplicateRecord>> = BTreeMap::new();
    for r in records {
        by_method.entry(r.method.clone()).or_default().push(r);
    }
    let sp_pct = if !optimal.is_empty() {
        100.0 * optimal.iter().filter(|r| r.separated).count() as f64 / optimal.len() as f64
    } else if let Some(rs) = by_method.values().next() {
        100.0 * rs.iter().filter(|r| r.separated).count() as f64 / rs.len() as f64
    } else {
        f64::NAN
    };
    let optimal_cs: Vec<f64> = optimal.iter().filter_map(|r| r.cindex).collect();
    let (optimal_cindex_mean, optimal_cindex_sd) = if optimal_cs.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_sd(&optimal_cs);
        (Some(1000.0 * m), Some(1000.0 * s))
    };
    let methods = by_method
        .into_iter()
        .map(|(m, recs)| {
            let beta2 = if status.k >= 2 { Some(beta2) } else { None };
            (m.clone(), aggregate_method(&recs, beta1, beta2))
        })
        .collect();
    ScenarioAggregate {
        id: status.id.clone(),
        n: status.n,
        k: status.k,
        a: status.a,
        ey: status.ey,
        noise: status.noise,
        beta1_true: beta1,
        beta2_true: beta2,
        sp_pct,
        optimal_cindex_mean,
        optimal_cindex_sd,
        methods,
    }
}

/// Reads a completed run directory and aggregates every scenario.
pub fn aggregate(in_dir: &Path) -> Result<Vec<ScenarioAggregate>, StudyError> {
    let manifest = RunManifest::load(in_dir)?;
    let cache = CalibrationCache::load(&in_dir.join(&manifest.calibration_file))?;
    let mut out = Vec::new();
    for status in manifest.scenarios.values() {
        if !status.completed {
            continue;
        }
        let (_, recs) = records::read_records(&in_dir.join(&status.file))?;
        let optimal_path = in_dir.join(&status.optimal_file);
        let optimal = if optimal_path.exists() {
            records::read_optimal(&optimal_path)?
        } else {
            Vec::new()
        };
        out.push(aggregate_scenario(status, &recs, &optimal, &cache));
    }
    if out.is_empty() {
        return Err(StudyError::Records(format!(
            "no completed scenarios found in {}",
            in_dir.display()
        )));
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

const COEF_ORDER: &[&str] = &["OEX", "D", "GCV", "CE", "RCV50", "RCV95", "AIC", "IP", "WP", "FC", "ML"];
const PRED_ORDER: &[&str] = &["OP", "D", "GCV", "CE", "RCV50", "RCV95", "AIC", "IP", "WP", "FLIC", "ML"];
const TUNED_ORDER: &[&str] = &["D", "GCV", "CE", "RCV50", "RCV95", "AIC", "OEX", "OP"];

fn present(order: &[&str], aggs: &[ScenarioAggregate]) -> Vec<String> {
    order
        .iter()
        .filter(|m| aggs.iter().any(|s| s.methods.contains_key(**m)))
        .map(|m| m.to_string())
        .collect()
}

fn fmt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.6}"),
        _ => String::new(),
    }
}

fn scenario_prefix(s: &ScenarioAggregate) -> String {
    format!(
        "{},{:.2},{:.1},{},{},{},{:.4}",
        s.id,
        s.ey,
        s.a,
        s.k,
        s.n,
        if s.noise { 1 } else { 0 },
        s.beta1_true
    )
}

const PREFIX_HEADER: &str = "scenario_id,ey,a,K,N,noise,beta1_true";

fn write_table(path: &Path, header: String, rows: Vec<String>) -> Result<(), StudyError> {
    let mut out = header;
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub scenarios: usize,
    pub files: Vec<PathBuf>,
}

/// Writes the aggregate tables for a completed run into `out_dir`.
pub fn run_report(in_dir: &Path, out_dir: &Path) -> Result<ReportSummary, StudyError> {
    let aggs = aggregate(in_dir)?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();

    // RMSE of the first two coefficients, with exclusion percentages and a
    // converged-only variant.
    for (coef, file, conv_file) in [
        (1usize, "rmse_beta1.csv", "rmse_beta1_converged.csv"),
        (2, "rmse_beta2.csv", "rmse_beta2_converged.csv"),
    ] {
        let methods = present(COEF_ORDER, &aggs);
        let mut header = format!("{PREFIX_HEADER},SP");
        for m in &methods {
            let _ = write!(header, ",{m},{m}_excl_pct");
        }
        let mut conv_header = format!("{PREFIX_HEADER},SP");
        for m in &methods {
            let _ = write!(conv_header, ",{m}");
        }
        let mut rows = Vec::new();
        let mut conv_rows = Vec::new();
        for s in &aggs {
            let mut row = format!("{},{:.1}", scenario_prefix(s), s.sp_pct);
            let mut conv_row = row.clone();
            for m in &methods {
                let agg = s.methods.get(m);
                let (v, e, c) = match (coef, agg) {
                    (1, Some(a)) => (a.rmse_b1, a.rmse_b1_excl_pct, a.rmse_b1_converged),
                    (2, Some(a)) => (a.rmse_b2, a.rmse_b2_excl_pct, a.rmse_b2_converged),
                    _ => (None, 0.0, None),
                };
                let _ = write!(row, ",{},{:.1}", fmt(v), e);
                let _ = write!(conv_row, ",{}", fmt(c));
            }
            rows.push(row);
            conv_rows.push(conv_row);
        }
        let path = out_dir.join(file);
        write_table(&path, header, rows)?;
        files.push(path);
        let path = out_dir.join(conv_file);
        write_table(&path, conv_header, conv_rows)?;
        files.push(path);
    }

    // Prediction RMSE ×10⁴.
    {
        let methods = present(PRED_ORDER, &aggs);
        let mut header = PREFIX_HEADER.to_string();
        for m in &methods {
            let _ = write!(header, ",{m}");
        }
        let rows = aggs
            .iter()
            .map(|s| {
                let mut row = scenario_prefix(s);
                for m in &methods {
                    let v = s.methods.get(m).and_then(|a| a.rmse_pred_e4);
                    let _ = write!(row, ",{}", fmt(v));
                }
                row
            })
            .collect();
        let path = out_dir.join("rmse_pred.csv");
        write_table(&path, header, rows)?;
        files.push(path);
    }

    // Calibration slopes: median with 5th/95th percentiles.
    {
        let methods = present(PRED_ORDER, &aggs);
        let mut header = PREFIX_HEADER.to_string();
        for m in &methods {
            let _ = write!(header, ",{m}_median,{m}_p5,{m}_p95");
        }
        let rows = aggs
            .iter()
            .map(|s| {
                let mut row = scenario_prefix(s);
                for m in &methods {
                    let a = s.methods.get(m);
                    let _ = write!(
                        row,
                        ",{},{},{}",
                        fmt(a.and_then(|a| a.slope_median)),
                        fmt(a.and_then(|a| a.slope_p5)),
                        fmt(a.and_then(|a| a.slope_p95))
                    );
                }
                row
            })
            .collect();
        let path = out_dir.join("slopes.csv");
        write_table(&path, header, rows)?;
        files.push(path);
    }

    // RMSD of log calibration slopes.
    {
        let methods = present(PRED_ORDER, &aggs);
        let mut header = PREFIX_HEADER.to_string();
        for m in &methods {
            let _ = write!(header, ",{m}");
        }
        let rows = aggs
            .iter()
            .map(|s| {
                let mut row = scenario_prefix(s);
                for m in &methods {
                    let v = s.methods.get(m).and_then(|a| a.rmsd_log_slope);
                    let _ = write!(row, ",{}", fmt(v));
                }
                row
            })
            .collect();
        let path = out_dir.join("rmsd_slope.csv");
        write_table(&path, header, rows)?;
        files.push(path);
    }

    // C-index (×1000) with the true-model benchmark first.
    {
        let methods = present(PRED_ORDER, &aggs);
        let mut header = format!("{PREFIX_HEADER},Optimal_mean,Optimal_sd");
        for m in &methods {
            let _ = write!(header, ",{m}_mean,{m}_sd");
        }
        let rows = aggs
            .iter()
            .map(|s| {
                let mut row = format!(
                    "{},{},{}",
                    scenario_prefix(s),
                    fmt(s.optimal_cindex_mean),
                    fmt(s.optimal_cindex_sd)
                );
                for m in &methods {
                    let a = s.methods.get(m);
                    let _ = write!(
                        row,
                        ",{},{}",
                        fmt(a.and_then(|a| a.cindex_mean)),
                        fmt(a.and_then(|a| a.cindex_sd))
                    );
                }
                row
            })
            .collect();
        let path = out_dir.join("cindex.csv");
        write_table(&path, header, rows)?;
        files.push(path);
    }

    // λ* stability diagnostics for the tuned methods.
    {
        let methods = present(TUNED_ORDER, &aggs);
        let mut header = PREFIX_HEADER.to_string();
        for m in &methods {
            let _ = write!(header, ",{m}_mad,{m}_median,{m}_boundary_pct,{m}_spearman_logslope");
        }
        let rows = aggs
            .iter()
            .map(|s| {
                let mut row = scenario_prefix(s);
                for m in &methods {
                    let a = s.methods.get(m);
                    let _ = write!(
                        row,
                        ",{},{},{},{}",
                        fmt(a.and_then(|a| a.lambda_mad)),
                        fmt(a.and_then(|a| a.lambda_median)),
                        fmt(a.and_then(|a| a.boundary_pct)),
                        fmt(a.and_then(|a| a.spearman_logslope_lambda))
                    );
                }
                row
            })
            .collect();
        let path = out_dir.join("lambda_diag.csv");
        write_table(&path, header, rows)?;
        files.push(path);
    }

    Ok(ReportSummary {
        scenarios: aggs.len(),
        files,
    })
}

/// Methods whose columns appear in the coefficient tables, in table order.
pub fn coefficient_method_order() -> &'static [&'static str] {
    COEF_ORDER
}

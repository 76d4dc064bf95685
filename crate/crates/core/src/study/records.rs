//! Per-replicate record store: one CSV row per (scenario, replicate, method)
//! with the exact column order
//! `scenario_id, replicate, method, lambda_star, boundary_hit, separated,
//! converged, beta0..betaK, slope, cindex, rmse_pred_contrib, flags`.
//!
//! Files are written sorted and atomically (temp file + rename), so reruns
//! with the same configuration are byte-identical and interrupted runs never
//! leave partial scenario files behind.

use super::StudyError;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub scenario_id: String,
    pub replicate: usize,
    pub method: String,
    pub lambda_star: Option<f64>,
    pub boundary_hit: Option<bool>,
    pub separated: bool,
    pub converged: bool,
    /// Destandardized coefficients; empty for the benchmark row.
    pub beta: Vec<f64>,
    pub slope: Option<f64>,
    pub cindex: Option<f64>,
    pub rmse_pred_contrib: Option<f64>,
    pub flags: Vec<String>,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.12e}"),
        Some(_) => "NaN".to_string(),
        None => String::new(),
    }
}

fn fmt_beta(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else {
        "NaN".to_string()
    }
}

pub fn csv_header(n_beta: usize) -> String {
    let mut h = String::from("scenario_id,replicate,method,lambda_star,boundary_hit,separated,converged");
    for j in 0..n_beta {
        let _ = write!(h, ",beta{j}");
    }
    h.push_str(",slope,cindex,rmse_pred_contrib,flags");
    h
}

impl ReplicateRecord {
    pub fn to_csv_row(&self, n_beta: usize) -> String {
        let mut row = format!(
            "{},{},{},{},{},{},{}",
            self.scenario_id,
            self.replicate,
            self.method,
            fmt_opt(self.lambda_star),
            self.boundary_hit.map(|b| if b { "1" } else { "0" }).unwrap_or(""),
            if self.separated { 1 } else { 0 },
            if self.converged { 1 } else { 0 },
        );
        for j in 0..n_beta {
            row.push(',');
            if let Some(&b) = self.beta.get(j) {
                row.push_str(&fmt_beta(b));
            }
        }
        let _ = write!(
            row,
            ",{},{},{},{}",
            fmt_opt(self.slope),
            fmt_opt(self.cindex),
            fmt_opt(self.rmse_pred_contrib),
            self.flags.join("|")
        );
        row
    }

    fn parse_csv_row(line: &str, n_beta: usize) -> Result<Self, StudyError> {
        let fields: Vec<&str> = line.split(',').collect();
        let expected = 7 + n_beta + 4;
        if fields.len() != expected {
            return Err(StudyError::Records(format!(
                "expected {expected} fields, found {} in: {line}",
                fields.len()
            )));
        }
        let parse_opt = |s: &str| -> Result<Option<f64>, StudyError> {
            if s.is_empty() {
                Ok(None)
            } else if s == "NaN" {
                Ok(Some(f64::NAN))
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|e| StudyError::Records(format!("bad number {s}: {e}")))
            }
        };
        let mut beta = Vec::with_capacity(n_beta);
        let mut has_beta = false;
        for j in 0..n_beta {
            match parse_opt(fields[7 + j])? {
                Some(v) => {
                    beta.push(v);
                    has_beta = true;
                }
                None => beta.push(f64::NAN),
            }
        }
        if !has_beta {
            beta.clear();
        }
        Ok(ReplicateRecord {
            scenario_id: fields[0].to_string(),
            replicate: fields[1]
                .parse()
                .map_err(|e| StudyError::Records(format!("bad replicate: {e}")))?,
            method: fields[2].to_string(),
            lambda_star: parse_opt(fields[3])?,
            boundary_hit: match fields[4] {
                "" => None,
                "0" => Some(false),
                "1" => Some(true),
                other => return Err(StudyError::Records(format!("bad boundary flag {other}"))),
            },
            separated: fields[5] == "1",
            converged: fields[6] == "1",
            beta,
            slope: parse_opt(fields[7 + n_beta])?,
            cindex: parse_opt(fields[8 + n_beta])?,
            rmse_pred_contrib: parse_opt(fields[9 + n_beta])?,
            flags: if fields[10 + n_beta].is_empty() {
                Vec::new()
            } else {
                fields[10 + n_beta].split('|').map(str::to_string).collect()
            },
        })
    }
}

/// Writes a scenario's records atomically; rows must already be sorted.
pub fn write_records(path: &Path, n_beta: usize, records: &[ReplicateRecord]) -> Result<(), StudyError> {
    let mut out = String::new();
    out.push_str(&csv_header(n_beta));
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row(n_beta));
        out.push('\n');
    }
    let tmp = path.with_extension("csv.tmp");
    std::fs::write(&tmp, out)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Per-replicate benchmark of the generating truth: the c-index of the true
/// probabilities on the fresh validation outcomes, which the report turns
/// into the `Optimal` column. Kept beside the method records in its own file
/// so the record schema stays one row per (replicate, method).
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalRecord {
    pub scenario_id: String,
    pub replicate: usize,
    pub separated: bool,
    pub cindex: Option<f64>,
    pub flags: Vec<String>,
}

pub fn write_optimal(path: &Path, records: &[OptimalRecord]) -> Result<(), StudyError> {
    let mut out = String::from("scenario_id,replicate,separated,optimal_cindex,flags\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.scenario_id,
            r.replicate,
            if r.separated { 1 } else { 0 },
            fmt_opt(r.cindex),
            r.flags.join("|")
        );
    }
    let tmp = path.with_extension("csv.tmp");
    std::fs::write(&tmp, out)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_optimal(path: &Path) -> Result<Vec<OptimalRecord>, StudyError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(StudyError::Records(format!(
                "expected 5 benchmark fields in: {line}"
            )));
        }
        out.push(OptimalRecord {
            scenario_id: fields[0].to_string(),
            replicate: fields[1]
                .parse()
                .map_err(|e| StudyError::Records(format!("bad replicate: {e}")))?,
            separated: fields[2] == "1",
            cindex: if fields[3].is_empty() {
                None
            } else {
                Some(
                    fields[3]
                        .parse()
                        .map_err(|e| StudyError::Records(format!("bad c-index: {e}")))?,
                )
            },
            flags: if fields[4].is_empty() {
                Vec::new()
            } else {
                fields[4].split('|').map(str::to_string).collect()
            },
        });
    }
    Ok(out)
}

/// Reads one scenario record file; the beta column count is recovered from
/// the header.
pub fn read_records(path: &Path) -> Result<(usize, Vec<ReplicateRecord>), StudyError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| StudyError::Records(format!("{} is empty", path.display())))?;
    let n_beta = header.split(',').filter(|f| f.starts_with("beta")).count();
    if n_beta == 0 {
        return Err(StudyError::Records(format!(
            "{} has no beta columns",
            path.display()
        )));
    }
    let mut records = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        records.push(ReplicateRecord::parse_csv_row(line, n_beta)?);
    }
    Ok((n_beta, records))
}

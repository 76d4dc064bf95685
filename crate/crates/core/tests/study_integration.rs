//! End-to-end harness behaviour: record bookkeeping, resume semantics,
//! report generation, separation prevalence and illustrate determinism.

use penlogit::study::records::read_records;
use penlogit::study::report;
use penlogit::study::{self, illustrate, GridConfig, Method, RunConfig, ScenarioKey};
use penlogit::tuning::GcvMode;
use std::path::Path;

fn config(dir: &Path, methods: Vec<Method>, reps: usize, key: ScenarioKey) -> RunConfig {
    RunConfig {
        master_seed: 11,
        reps,
        methods,
        gcv_mode: GcvMode::InSample,
        scenarios: Some(vec![key]),
        grid: GridConfig::default(),
        workers: 2,
        out_dir: dir.to_path_buf(),
        resume: false,
    }
}

fn small_key() -> ScenarioKey {
    ScenarioKey {
        n: 100,
        k: 2,
        a: 1.0,
        ey: 0.25,
        noise: false,
    }
}

#[test]
fn record_counts_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), vec![Method::Fc], 2, small_key());
    let summary = study::run_simulate(&cfg).unwrap();
    // Exactly one record per (replicate, method).
    assert_eq!(summary.records_written, 2);
    let (n_beta, records) = read_records(
        &dir.path().join("records_ey0.25_a1.0_K2_N100_noise0.csv"),
    )
    .unwrap();
    assert_eq!(n_beta, 3);
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r.method == "FC"));
    assert!(records.iter().all(|r| r.beta.len() == 3));
    assert!(records.iter().all(|r| r.slope.is_some() && r.cindex.is_some()));
    // The true-model benchmark lives in its own file, one row per replicate.
    let optimal = penlogit::study::records::read_optimal(
        &dir.path().join("optimal_ey0.25_a1.0_K2_N100_noise0.csv"),
    )
    .unwrap();
    assert_eq!(optimal.len(), 2);
    assert!(optimal.iter().all(|r| r.cindex.is_some()));
}

#[test]
fn rerun_requires_resume_and_resume_skips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), vec![Method::Fc, Method::Ip], 3, small_key());
    let first = study::run_simulate(&cfg).unwrap();
    assert_eq!(first.scenarios_run, 1);

    // Same directory without --resume is refused.
    let again = study::run_simulate(&cfg);
    assert!(matches!(again, Err(study::StudyError::WouldClobber(_))));

    // With resume, the completed scenario is skipped.
    let mut resumed = cfg.clone();
    resumed.resume = true;
    let summary = study::run_simulate(&resumed).unwrap();
    assert_eq!(summary.scenarios_run, 0);
    assert_eq!(summary.scenarios_skipped, 1);

    // A config mismatch is refused even with resume.
    let mut other = resumed.clone();
    other.master_seed = 99;
    assert!(matches!(
        study::run_simulate(&other),
        Err(study::StudyError::WouldClobber(_))
    ));
}

#[test]
fn report_emits_tables() {
    let run_dir = tempfile::tempdir().unwrap();
    let cfg = config(
        run_dir.path(),
        vec![Method::Fc, Method::Flic, Method::Ip],
        4,
        small_key(),
    );
    study::run_simulate(&cfg).unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let summary = report::run_report(run_dir.path(), out_dir.path()).unwrap();
    assert_eq!(summary.scenarios, 1);
    for file in [
        "rmse_beta1.csv",
        "rmse_beta1_converged.csv",
        "rmse_beta2.csv",
        "rmse_pred.csv",
        "slopes.csv",
        "rmsd_slope.csv",
        "cindex.csv",
        "lambda_diag.csv",
    ] {
        let path = out_dir.path().join(file);
        assert!(path.exists(), "{file} missing");
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2, "{file} should have one data row");
    }
    let cindex = std::fs::read_to_string(out_dir.path().join("cindex.csv")).unwrap();
    assert!(cindex.lines().next().unwrap().contains("Optimal_mean"));

    // Aggregates expose the same numbers programmatically.
    let aggs = report::aggregate(run_dir.path()).unwrap();
    assert_eq!(aggs.len(), 1);
    assert!(aggs[0].methods.contains_key("FC"));
    assert!((aggs[0].beta1_true - 2.08).abs() < 1e-9);
}

#[test]
fn report_on_empty_store_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(report::run_report(dir.path(), dir.path()).is_err());
}

#[test]
fn empty_method_list_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), vec![], 2, small_key());
    assert!(matches!(
        study::run_simulate(&cfg),
        Err(study::StudyError::Config(_))
    ));
}

#[test]
fn separation_prevalence_in_sparse_cell() {
    // K = 5, N = 100, strong effects, E(Y) = 0.1: the published prevalence is
    // 85%; the repaired correlation matrix widens the band to 75-95%.
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        vec![Method::Fc],
        400,
        ScenarioKey {
            n: 100,
            k: 5,
            a: 1.0,
            ey: 0.1,
            noise: false,
        },
    );
    study::run_simulate(&cfg).unwrap();
    let aggs = report::aggregate(dir.path()).unwrap();
    let sp = aggs[0].sp_pct;
    assert!(
        (75.0..=95.0).contains(&sp),
        "separation prevalence {sp:.1}% outside 75-95%"
    );
}

#[test]
fn illustrate_same_seed_same_bytes() {
    let mut all = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let summary = illustrate::run_illustrate(3, 40, dir.path()).unwrap();
        let mut bytes = Vec::new();
        let mut names: Vec<_> = summary
            .files
            .iter()
            .map(|p| p.file_name().unwrap().to_owned())
            .collect();
        names.sort();
        for name in names {
            bytes.extend(std::fs::read(dir.path().join(name)).unwrap());
        }
        all.push(bytes);
    }
    assert_eq!(all[0], all[1], "illustrate outputs differ between runs");
}

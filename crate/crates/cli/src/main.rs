use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use penlogit::study::{self, fitcmd, illustrate, report, GridConfig, Method, RunConfig, ScenarioKey};
use penlogit::tuning::GcvMode;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "penlogit",
    about = "Penalized logistic regression toolkit: fit single datasets or regenerate the simulation study",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regenerate the illustrative example (coefficient table, deviance
    /// profiles, λ* boundary histogram).
    Illustrate {
        #[arg(long, default_value_t = 20210)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Run simulation scenarios and persist per-replicate records.
    Simulate(SimulateArgs),
    /// Aggregate a record store into result tables.
    Report {
        #[arg(long = "in", value_name = "DIR")]
        in_dir: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Fit one method to a CSV dataset.
    Fit(FitArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON run configuration; command-line flags below override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Single scenario cell as N,K,a,ey,noise (e.g. 500,2,1.0,0.25,0).
    #[arg(long, value_name = "N,K,a,ey,noise")]
    scenario: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated method ids (ML,FC,FLIC,D,GCV,CE,RCV50,RCV95,AIC,IP,WP,OEX,OP).
    #[arg(long)]
    methods: Option<String>,
    #[arg(long, value_parser = parse_gcv_mode)]
    gcv_mode: Option<GcvMode>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Continue an interrupted run in the same output directory.
    #[arg(long, default_value_t = false)]
    resume: bool,
    /// Use the published replicate count (1000) instead of the desk-scale
    /// default.
    #[arg(long, default_value_t = false)]
    full: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Name of the binary outcome column.
    #[arg(long)]
    outcome: String,
    /// Method id (oracles excluded).
    #[arg(long)]
    method: String,
    /// Fixed complexity parameter (IP/WP only).
    #[arg(long)]
    lambda: Option<f64>,
    /// Prior 95% odds-ratio upper bound, converted to λ (IP/WP only).
    #[arg(long)]
    prior_or: Option<f64>,
    #[arg(long, value_parser = parse_gcv_mode)]
    gcv_mode: Option<GcvMode>,
    /// Where to write the JSON report (default: alongside the data file).
    #[arg(long, value_name = "FILE")]
    json_out: Option<PathBuf>,
}

fn parse_gcv_mode(s: &str) -> Result<GcvMode, String> {
    match s {
        "insample" => Ok(GcvMode::InSample),
        "loocv" => Ok(GcvMode::Loocv),
        other => Err(format!("gcv mode must be insample or loocv, got {other}")),
    }
}

fn parse_scenario(s: &str) -> Result<ScenarioKey> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 5 {
        bail!("--scenario expects N,K,a,ey,noise");
    }
    Ok(ScenarioKey {
        n: parts[0].trim().parse().context("N")?,
        k: parts[1].trim().parse().context("K")?,
        a: parts[2].trim().parse().context("a")?,
        ey: parts[3].trim().parse().context("ey")?,
        noise: matches!(parts[4].trim(), "1" | "true"),
    })
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',')
        .map(|m| Method::parse(m.trim()).map_err(Into::into))
        .collect()
}

fn build_simulate_config(args: &SimulateArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_json_file(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => RunConfig {
            master_seed: 1,
            reps: 200,
            methods: Method::all().to_vec(),
            gcv_mode: GcvMode::InSample,
            scenarios: None,
            grid: GridConfig::default(),
            workers: 0,
            out_dir: PathBuf::new(),
            resume: false,
        },
    };
    if let Some(s) = &args.scenario {
        config.scenarios = Some(vec![parse_scenario(s)?]);
    }
    if args.full {
        config.reps = 1000;
    }
    if let Some(reps) = args.reps {
        config.reps = reps;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(methods) = &args.methods {
        config.methods = parse_methods(methods)?;
    }
    if let Some(mode) = args.gcv_mode {
        config.gcv_mode = mode;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    config.resume = args.resume;
    if config.out_dir.as_os_str().is_empty() {
        bail!("an output directory is required (--out or the config file)");
    }
    Ok(config)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Illustrate { seed, reps, out } => {
            let summary = illustrate::run_illustrate(seed, reps, &out)?;
            println!(
                "illustrate: {} replications, D at the lower grid boundary in {:.1}% (separation in {:.1}%)",
                summary.reps,
                100.0 * summary.d_boundary_low_fraction,
                100.0 * summary.separation_fraction
            );
            for row in &summary.table1 {
                println!(
                    "  dataset {} {:>4}: beta1 = {}{}",
                    row.dataset,
                    row.method,
                    row.beta1.map(|b| format!("{b:.4}")).unwrap_or_else(|| "--".into()),
                    row.lambda_star
                        .map(|l| format!("  (lambda* = {l:.3e})"))
                        .unwrap_or_default()
                );
            }
            println!("wrote {} files to {}", summary.files.len() + 1, out.display());
        }
        Command::Simulate(args) => {
            let config = build_simulate_config(&args)?;
            let summary = study::run_simulate(&config)?;
            println!(
                "simulate: {} scenario(s) run, {} skipped, {} records -> {}",
                summary.scenarios_run,
                summary.scenarios_skipped,
                summary.records_written,
                summary.out_dir.display()
            );
        }
        Command::Report { in_dir, out } => {
            let summary = report::run_report(&in_dir, &out)?;
            println!(
                "report: {} scenario(s) aggregated into {} files under {}",
                summary.scenarios,
                summary.files.len(),
                out.display()
            );
        }
        Command::Fit(args) => {
            let method = Method::parse(&args.method)?;
            let overrides = fitcmd::FitOverrides {
                lambda: args.lambda,
                prior_or: args.prior_or,
                gcv_mode: args.gcv_mode,
            };
            let fit_report = fitcmd::run_fit(&args.data, &args.outcome, method, &overrides)?;
            print!("{}", fit_report.render_text());
            let json_path = args
                .json_out
                .unwrap_or_else(|| args.data.with_extension("fit.json"));
            std::fs::write(&json_path, serde_json::to_string_pretty(&fit_report)?)?;
            println!("report written to {}", json_path.display());
        }
    }
    Ok(())
}

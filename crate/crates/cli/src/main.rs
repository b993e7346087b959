//! Command-line front end: run a two-sample test on CSV data, run power
//! studies over scenario files, or run the level-calibration study.
//!
//! Machine-readable JSON goes to stdout; human-readable summaries go to
//! stderr. Exit codes: 0 success, 2 usage/input error, 3 degenerate
//! data (for example coincident observations under a singular kernel).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use energy2::distributions::load_scenarios;
use energy2::methods::EnergyConfig;
use energy2::permutation::{calibrate_alpha, run_test, CalibrationOptions, TestOptions};
use energy2::power::{render_csv, render_text, run_scenario, CriticalMode, RunConfig, TableLayout};
use energy2::samples::{distance_matrix, pool, read_csv_sample};
use energy2::{DistanceKernel, Error, Method};

#[derive(Parser)]
#[command(
    name = "energy2",
    version,
    about = "Two-sample testing with permutation inference and Monte Carlo power studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether two CSV samples come from the same distribution.
    Test(TestArgs),
    /// Estimate rejection rates over a scenario file.
    Power(PowerArgs),
    /// Measure achieved-level spread as a function of permutation count.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Statistic: energy, fr, nn, ks, cvm, or chi2.
    #[arg(long)]
    method: String,

    /// CSV file with the first sample, one observation per line.
    #[arg(long)]
    a: PathBuf,

    /// CSV file with the second sample.
    #[arg(long)]
    b: PathBuf,

    /// Distance kernel for the energy statistic: log, power:<exponent>,
    /// or gauss:<sigma>.
    #[arg(long, default_value = "log")]
    kernel: String,

    /// Number of random relabelings for the null distribution.
    #[arg(long, default_value_t = 1000)]
    permutations: usize,

    /// RNG seed (falls back to ENERGY2_SEED, then 1).
    #[arg(long)]
    seed: Option<u64>,

    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Standardize pooled coordinates before testing.
    #[arg(long)]
    standardize: bool,

    /// Skip one header line in each CSV file.
    #[arg(long)]
    has_header: bool,

    /// Clamp pairwise distances below this floor (permits duplicate
    /// rows under the log and power-law kernels).
    #[arg(long)]
    min_distance: Option<f64>,

    /// Bin count for the chi2 statistic.
    #[arg(long, default_value_t = 5)]
    bins: usize,

    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct PowerArgs {
    /// Scenario file (JSON array of cases).
    #[arg(long)]
    config: PathBuf,

    /// Comma-separated case ids to run (default: all in the file).
    #[arg(long)]
    cases: Option<String>,

    /// Comma-separated methods (default: energy,ks,cvm,chi2 in 1-D,
    /// energy,fr,nn otherwise).
    #[arg(long)]
    methods: Option<String>,

    /// Monte Carlo replications per case.
    #[arg(long, default_value_t = 1000)]
    replications: usize,

    /// Permutations per replication (default 300; 1000 with
    /// --paper-scale).
    #[arg(long)]
    permutations: Option<usize>,

    /// Use 1000 permutations per replication.
    #[arg(long)]
    paper_scale: bool,

    /// Estimate each critical value once from the first replication
    /// instead of running a permutation test per replication.
    #[arg(long)]
    fixed_critical: bool,

    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// RNG seed (falls back to ENERGY2_SEED, then 1).
    #[arg(long)]
    seed: Option<u64>,

    /// Override the sample size n of every selected case.
    #[arg(long)]
    n: Option<usize>,

    /// Override the sample size m of every selected case.
    #[arg(long)]
    m: Option<usize>,

    /// Distance kernel for the energy statistic.
    #[arg(long, default_value = "log")]
    kernel: String,

    /// Bin count for the chi2 statistic.
    #[arg(long, default_value_t = 5)]
    bins: usize,

    /// Standardize pooled coordinates in every replication.
    #[arg(long)]
    standardize: bool,

    /// Output name tag: writes power_<tag>.csv and power_<tag>.txt
    /// (default: the config file stem).
    #[arg(long)]
    tag: Option<String>,

    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,

    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// First sample size.
    #[arg(long)]
    n: usize,

    /// Second sample size.
    #[arg(long)]
    m: usize,

    /// Permutation count B whose critical-value noise is measured.
    #[arg(long)]
    permutations: usize,

    /// Number of repeated batch estimates (at least 30).
    #[arg(long)]
    repeats: usize,

    /// Nominal significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Size of the high-precision reference null.
    #[arg(long, default_value_t = 100_000)]
    reference_permutations: usize,

    /// RNG seed (falls back to ENERGY2_SEED, then 1).
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("ENERGY2_SEED")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
}

fn exit_code_for(error: &Error) -> u8 {
    if error.is_data_degeneracy() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Power(args) => cmd_power(args),
        Command::Calibrate(args) => cmd_calibrate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}

#[derive(Serialize)]
struct TestReport {
    schema: u32,
    method: String,
    statistic: f64,
    p_value: f64,
    critical_value: f64,
    alpha: f64,
    n: usize,
    m: usize,
    d: usize,
    permutations: usize,
    exhaustive: bool,
    seed: u64,
    standardized: bool,
    kernel: Option<String>,
}

fn build_method(name: &str, kernel: &str, min_distance: Option<f64>, bins: usize) -> Result<Method, Error> {
    let mut method: Method = name.parse()?;
    match &mut method {
        Method::Energy(config) => {
            *config = EnergyConfig {
                kernel: kernel.parse::<DistanceKernel>()?,
                min_distance,
            };
        }
        Method::ChiSquared { bins: b } => *b = bins,
        _ => {}
    }
    Ok(method)
}

fn cmd_test(args: TestArgs) -> Result<(), Error> {
    energy2::exec::configure_threads(args.threads);
    let seed = resolve_seed(args.seed);
    let method = build_method(&args.method, &args.kernel, args.min_distance, args.bins)?;

    let a = read_csv_sample(&args.a, args.has_header)?;
    let b = read_csv_sample(&args.b, args.has_header)?;
    let mut merged = pool(&a, &b)?;
    if args.standardize {
        merged = merged.standardize()?;
    }
    let dm = distance_matrix(&merged);

    let options = TestOptions {
        permutations: args.permutations,
        alpha: args.alpha,
        seed,
    };
    let outcome = run_test(&merged, &dm, &method, &options)?;

    let report = TestReport {
        schema: 1,
        method: outcome.method.clone(),
        statistic: outcome.statistic,
        p_value: outcome.p_value,
        critical_value: outcome.critical_value,
        alpha: outcome.alpha,
        n: outcome.n,
        m: outcome.m,
        d: outcome.d,
        permutations: outcome.permutations,
        exhaustive: outcome.exhaustive,
        seed,
        standardized: args.standardize,
        kernel: match method {
            Method::Energy(config) => Some(config.kernel.to_string()),
            _ => None,
        },
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );

    let decision = if outcome.p_value <= outcome.alpha {
        "reject"
    } else {
        "do not reject"
    };
    eprintln!(
        "method        {}{}",
        report.method,
        report
            .kernel
            .as_deref()
            .map(|k| format!(" (kernel {k})"))
            .unwrap_or_default()
    );
    eprintln!(
        "samples       n={} ({}), m={} ({}), d={}",
        report.n,
        args.a.display(),
        report.m,
        args.b.display(),
        report.d
    );
    eprintln!("statistic     {:.6}", report.statistic);
    eprintln!(
        "p-value       {:.6}  ({} relabelings{}, seed {})",
        report.p_value,
        report.permutations,
        if report.exhaustive { ", exhaustive" } else { "" },
        report.seed
    );
    eprintln!(
        "critical      {:.6} at alpha={}",
        report.critical_value, report.alpha
    );
    eprintln!("decision      {decision} H0 at alpha={}", report.alpha);
    Ok(())
}

fn parse_cases(text: &str) -> Result<Vec<u32>, Error> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<u32>()
                .map_err(|_| Error::Scenario(format!("bad case id: {part:?}")))
        })
        .collect()
}

fn cmd_power(args: PowerArgs) -> Result<(), Error> {
    energy2::exec::configure_threads(args.threads);
    let seed = resolve_seed(args.seed);
    let started = Instant::now();

    let mut entries = load_scenarios(&args.config)?;
    if let Some(cases) = &args.cases {
        let wanted = parse_cases(cases)?;
        for &case_id in &wanted {
            if !entries.iter().any(|e| e.case_id == case_id) {
                return Err(Error::Scenario(format!(
                    "case {case_id} is not in {}",
                    args.config.display()
                )));
            }
        }
        entries.retain(|e| wanted.contains(&e.case_id));
    }
    if let Some(n) = args.n {
        for entry in &mut entries {
            entry.n = n;
        }
    }
    if let Some(m) = args.m {
        for entry in &mut entries {
            entry.m = m;
        }
    }

    let dim = entries[0].validate()?;
    let method_names = match &args.methods {
        Some(text) => text.clone(),
        None if dim == 1 => "energy,ks,cvm,chi2".to_string(),
        None => "energy,fr,nn".to_string(),
    };
    let methods: Vec<Method> = method_names
        .split(',')
        .map(|name| build_method(name.trim(), &args.kernel, None, args.bins))
        .collect::<Result<_, _>>()?;

    let cfg = RunConfig {
        alpha: args.alpha,
        replications: args.replications,
        permutations: args
            .permutations
            .unwrap_or(if args.paper_scale { 1000 } else { 300 }),
        seed,
        mode: if args.fixed_critical {
            CriticalMode::FixedCritical
        } else {
            CriticalMode::PerReplication
        },
        standardize: args.standardize,
    };

    let mut reports = Vec::new();
    for entry in &entries {
        eprintln!(
            "case {}{} (n={}, m={}) ...",
            entry.case_id,
            entry
                .label
                .as_deref()
                .map(|l| format!(" [{l}]"))
                .unwrap_or_default(),
            entry.n,
            entry.m
        );
        reports.extend(run_scenario(entry, &methods, &cfg)?);
    }

    let tag = args.tag.clone().unwrap_or_else(|| {
        args.config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".to_string())
    });
    std::fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join(format!("power_{tag}.csv"));
    let txt_path = args.out_dir.join(format!("power_{tag}.txt"));

    let layout = TableLayout::covering(&reports);
    let text = render_text(&reports, &layout, &cfg)?;
    std::fs::write(&csv_path, render_csv(&reports))?;
    std::fs::write(&txt_path, &text)?;

    print!("{text}");
    eprintln!(
        "wrote {} and {} in {:.1}s",
        csv_path.display(),
        txt_path.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

#[derive(Serialize)]
struct CalibrationReport {
    schema: u32,
    permutations: usize,
    interval_low: f64,
    interval_high: f64,
    repeats: usize,
    alpha: f64,
    reference_permutations: usize,
    seed: u64,
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), Error> {
    energy2::exec::configure_threads(args.threads);
    let seed = resolve_seed(args.seed);
    let options = CalibrationOptions {
        n: args.n,
        m: args.m,
        permutations: args.permutations,
        repeats: args.repeats,
        alpha: args.alpha,
        reference_permutations: args.reference_permutations,
        seed,
    };
    let result = calibrate_alpha(&options)?;
    let report = CalibrationReport {
        schema: 1,
        permutations: args.permutations,
        interval_low: result.interval_low,
        interval_high: result.interval_high,
        repeats: args.repeats,
        alpha: args.alpha,
        reference_permutations: args.reference_permutations,
        seed,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    eprintln!(
        "B={}: achieved alpha in [{:.4}, {:.4}] over {} repeats (nominal {})",
        args.permutations, result.interval_low, result.interval_high, args.repeats, args.alpha
    );
    Ok(())
}

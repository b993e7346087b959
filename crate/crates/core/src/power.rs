//! Monte Carlo power studies: replication loops, rejection counting,
//! and table rendering.
//!
//! Each replication draws a fresh sample pair, applies the scenario's
//! location-scale transform to the second sample, and evaluates every
//! requested method on the same pool (paired comparison: one distance
//! matrix and one spanning tree per replication, shared across methods
//! and permutations). Replications are independent and run in parallel;
//! rejection counts aggregate order-independently.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use crate::distributions::ScenarioEntry;
use crate::error::{Error, Result};
use crate::exec;
use crate::methods::{Method, Tail};
use crate::permutation::{permutation_null, NullDistribution};
use crate::rng::RngStream;
use crate::samples::{distance_matrix, pool, LabeledPool};

/// How the rejection threshold is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalMode {
    /// A fresh permutation test per replication; reject when p <= alpha.
    /// Statistically exact at every replication.
    PerReplication,
    /// Estimate each method's critical value once, from 1000 relabelings
    /// of the first replication's pool, then compare observed statistics
    /// against it. Faster; trades exactness for speed.
    FixedCritical,
}

/// Harness-level configuration shared by all cells of a study.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub alpha: f64,
    pub replications: usize,
    pub permutations: usize,
    pub seed: u64,
    pub mode: CriticalMode,
    /// Standardize pooled coordinates before testing (off by default).
    pub standardize: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 0.05,
            replications: 1000,
            permutations: 300,
            seed: 0,
            mode: CriticalMode::PerReplication,
            standardize: false,
        }
    }
}

/// Estimated rejection rate for one (scenario, method) cell.
#[derive(Debug, Clone)]
pub struct PowerReport {
    pub case_id: u32,
    pub method: String,
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    pub tau: f64,
    pub replications: usize,
    pub permutations: usize,
    pub rejections: usize,
    pub power: f64,
    /// Seconds spent evaluating this method, summed over workers.
    pub wall_time: f64,
}

const FIXED_CRITICAL_PERMUTATIONS: usize = 1000;

fn build_pool(entry: &ScenarioEntry, cfg: &RunConfig, rep_stream: RngStream) -> Result<LabeledPool> {
    let a = entry.p_x.sample(entry.n, rep_stream.child(0))?;
    let b = entry
        .p_y
        .sample(entry.m, rep_stream.child(1))?
        .location_scale(entry.theta, entry.tau)?;
    let merged = pool(&a, &b)?;
    if cfg.standardize {
        merged.standardize()
    } else {
        Ok(merged)
    }
}

/// Run one scenario cell for each method; returns one report per method
/// in the order given.
pub fn run_scenario(
    entry: &ScenarioEntry,
    methods: &[Method],
    cfg: &RunConfig,
) -> Result<Vec<PowerReport>> {
    if methods.is_empty() {
        return Err(Error::Scenario("no methods requested".into()));
    }
    entry.validate()?;
    let case_stream = RngStream::root(cfg.seed).child(entry.case_id as u64);

    // Fixed-critical mode pins each method's threshold from the first
    // replication's pool before the main loop.
    let fixed_criticals: Option<Vec<(Tail, f64)>> = match cfg.mode {
        CriticalMode::PerReplication => None,
        CriticalMode::FixedCritical => {
            let first = build_pool(entry, cfg, case_stream.child(0))
                .map_err(|e| in_replication(0, e))?;
            let dm = distance_matrix(&first);
            let mut criticals = Vec::with_capacity(methods.len());
            for method in methods {
                let prepared = method.prepare(&first, &dm).map_err(|e| in_replication(0, e))?;
                let null = permutation_null(
                    &prepared,
                    FIXED_CRITICAL_PERMUTATIONS,
                    case_stream.child(0).child(2),
                );
                criticals.push((prepared.tail(), null.critical_value(cfg.alpha)?));
            }
            Some(criticals)
        }
    };

    let method_nanos: Vec<AtomicU64> = methods.iter().map(|_| AtomicU64::new(0)).collect();
    let outcomes: Vec<Result<Vec<bool>>> = exec::map_indices(cfg.replications, |r| {
        let rep_stream = case_stream.child(r as u64);
        let pool = build_pool(entry, cfg, rep_stream).map_err(|e| in_replication(r, e))?;
        let dm = distance_matrix(&pool);
        let mut rejects = Vec::with_capacity(methods.len());
        for (slot, method) in methods.iter().enumerate() {
            let started = Instant::now();
            let prepared = method.prepare(&pool, &dm).map_err(|e| in_replication(r, e))?;
            let observed = prepared.evaluate(pool.labels());
            let reject = match &fixed_criticals {
                None => {
                    // all methods share the same relabelings: draw b of the
                    // null derives from rep_stream.child(2).child(b)
                    let null: NullDistribution =
                        permutation_null(&prepared, cfg.permutations, rep_stream.child(2));
                    null.rejects(observed, cfg.alpha)
                }
                Some(criticals) => {
                    let (tail, critical) = criticals[slot];
                    match tail {
                        Tail::High => observed >= critical,
                        Tail::Low => observed <= critical,
                    }
                }
            };
            method_nanos[slot]
                .fetch_add(started.elapsed().as_nanos() as u64, Ordering::Relaxed);
            rejects.push(reject);
        }
        Ok(rejects)
    });

    let mut rejections = vec![0usize; methods.len()];
    for outcome in outcomes {
        for (slot, reject) in outcome?.into_iter().enumerate() {
            if reject {
                rejections[slot] += 1;
            }
        }
    }

    Ok(methods
        .iter()
        .zip(rejections)
        .zip(&method_nanos)
        .map(|((method, rejected), nanos)| PowerReport {
            case_id: entry.case_id,
            method: method.name().to_string(),
            n: entry.n,
            m: entry.m,
            theta: entry.theta,
            tau: entry.tau,
            replications: cfg.replications,
            permutations: cfg.permutations,
            rejections: rejected,
            power: rejected as f64 / cfg.replications as f64,
            wall_time: nanos.load(Ordering::Relaxed) as f64 * 1e-9,
        })
        .collect())
}

fn in_replication(replication: usize, source: Error) -> Error {
    Error::InReplication {
        replication,
        source: Box::new(source),
    }
}

/// Row/column structure of a rendered table: one row per case, one
/// column per method.
#[derive(Debug, Clone)]
pub struct TableLayout {
    pub cases: Vec<u32>,
    pub methods: Vec<String>,
}

impl TableLayout {
    /// Layout covering everything present in the reports, cases sorted.
    pub fn covering(reports: &[PowerReport]) -> TableLayout {
        let mut cases: Vec<u32> = Vec::new();
        let mut methods: Vec<String> = Vec::new();
        for report in reports {
            if !cases.contains(&report.case_id) {
                cases.push(report.case_id);
            }
            if !methods.contains(&report.method) {
                methods.push(report.method.clone());
            }
        }
        cases.sort_unstable();
        TableLayout { cases, methods }
    }
}

/// CSV with a fixed column set, rows ordered as given.
pub fn render_csv(reports: &[PowerReport]) -> String {
    let mut out =
        String::from("case_id,method,n,m,theta,tau,replications,permutations,power\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.case_id,
            r.method,
            r.n,
            r.m,
            r.theta,
            r.tau,
            r.replications,
            r.permutations,
            r.power
        ));
    }
    out
}

/// Aligned text table (cases x methods) with a run-parameter footer.
/// Every layout cell must have a report.
pub fn render_text(
    reports: &[PowerReport],
    layout: &TableLayout,
    cfg: &RunConfig,
) -> Result<String> {
    let find = |case_id: u32, method: &str| {
        reports
            .iter()
            .find(|r| r.case_id == case_id && r.method == method)
    };
    let mut out = String::new();
    out.push_str(&format!("{:>6}", "case"));
    for method in &layout.methods {
        out.push_str(&format!("{method:>10}"));
    }
    out.push('\n');
    for &case_id in &layout.cases {
        out.push_str(&format!("{case_id:>6}"));
        for method in &layout.methods {
            let report = find(case_id, method).ok_or_else(|| Error::MissingCell {
                case_id,
                method: method.clone(),
            })?;
            out.push_str(&format!("{:>10.3}", report.power));
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "\nreplications={} permutations={} alpha={} seed={} mode={}\n",
        cfg.replications,
        cfg.permutations,
        cfg.alpha,
        cfg.seed,
        match cfg.mode {
            CriticalMode::PerReplication => "per-replication",
            CriticalMode::FixedCritical => "fixed-critical",
        }
    ));
    Ok(out)
}

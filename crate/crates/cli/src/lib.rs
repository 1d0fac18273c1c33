//! Experiment orchestration for the `gols` binary: training sweeps over
//! resolvers and repeats, line scans over batch sizes, and cost tables.
//! All results are written as CSV with fixed headers.
//!
//! Output layout under `out`:
//!
//! | file | columns |
//! |------|---------|
//! | `train/<resolver>_rep<r>.csv` | iteration, alpha, alpha_min, alpha_max, gradient_norm, termination, train_loss, validation_loss, test_loss, fevals, infocalls |
//! | `train/summary.csv` | resolver, iteration, repeats, cost_mean, train_mean, train_std, validation_mean, validation_std, test_mean, test_std |
//! | `scan/batch_<b>.csv` | alpha, f, fprime, batch_size, repeat_id |
//! | `scan/summary.csv` | batch_size, repeats, minima_mean, minima_std, snngpp_mean, snngpp_std, ball_center, ball_epsilon |
//! | `compare.csv` | resolver, fevals_per_iter, infocalls_per_iter |

pub mod spec;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use gols_core::analysis::{descent_direction_with_root_at, mean_std, repeat_scans, summarize, CountSummary, ScanGrid, ScanResult};
use gols_core::data::{BatchSampler, Dataset};
use gols_core::net::Architecture;
use gols_core::probe::{MlpObjective, SamplingPolicy};
use gols_core::trainer::{derive_seed, sgd_train, Seeds, TrainConfig, TrainRun};

pub use spec::{ExperimentSpec, ScanBatch, ScanSpec};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// Failure while running; exit status 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Worker pool capped by `GOLS_THREADS` when set.
fn pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("GOLS_THREADS") {
        let n: usize = v.parse().map_err(|_| CliError::Usage(format!("GOLS_THREADS='{v}' is not a count")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(runtime)
}

pub fn load_dataset(spec: &ExperimentSpec) -> Result<Arc<Dataset>, CliError> {
    Dataset::builtin_or_path(&spec.dataset, spec.seed).map(Arc::new).map_err(|e| CliError::Usage(e.to_string()))
}

/// One training run of the sweep.
#[derive(Debug, Clone)]
pub struct Cell {
    pub resolver: String,
    pub repeat: usize,
    pub run: TrainRun,
}

/// Trains every (resolver, repeat) pair. Repeat `r` uses the same seeds for
/// all resolvers. Cells come back ordered by resolver, then repeat.
pub fn run_train(spec: &ExperimentSpec) -> Result<Vec<Cell>, CliError> {
    spec.validate()?;
    let dataset = load_dataset(spec)?;
    let policy = spec.sampling_policy()?;
    let jobs: Vec<(String, usize)> =
        spec.resolvers.iter().flat_map(|r| (0..spec.repeats).map(move |i| (r.clone(), i))).collect();
    pool()?.install(|| {
        jobs.into_par_iter()
            .map(|(resolver, repeat)| {
                let cfg = TrainConfig {
                    iterations: spec.iterations,
                    batch_size: spec.batch_size,
                    resolver: resolver.clone(),
                    hidden: spec.hidden.clone(),
                    policy,
                    seeds: Seeds::for_repeat(spec.seed, repeat as u64),
                    ..Default::default()
                };
                let run = sgd_train(&cfg, dataset.clone())
                    .map_err(|e| CliError::Runtime(format!("{resolver} repeat {repeat}: {e}")))?;
                Ok(Cell { resolver, repeat, run })
            })
            .collect()
    })
}

fn file_stem(resolver: &str) -> String {
    resolver.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '-' }).collect()
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    w.write_record(header).map_err(runtime)?;
    for row in rows {
        w.write_record(&row).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

pub fn trace_path(out: &Path, resolver: &str, repeat: usize) -> PathBuf {
    out.join("train").join(format!("{}_rep{repeat}.csv", file_stem(resolver)))
}

pub fn write_train(spec: &ExperimentSpec, cells: &[Cell]) -> Result<(), CliError> {
    for cell in cells {
        let rows = cell.run.trace.records.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                r.alpha.map(num).unwrap_or_default(),
                r.bounds.map(|b| num(b.min)).unwrap_or_default(),
                r.bounds.map(|b| num(b.max)).unwrap_or_default(),
                if r.gradient_norm.is_nan() { String::new() } else { num(r.gradient_norm) },
                r.termination.map(|t| t.to_string()).unwrap_or_default(),
                num(r.losses.train),
                num(r.losses.validation),
                num(r.losses.test),
                r.cost().to_string(),
                r.information_calls().to_string(),
            ]
        });
        write_csv(
            &trace_path(&spec.out, &cell.resolver, cell.repeat),
            &[
                "iteration",
                "alpha",
                "alpha_min",
                "alpha_max",
                "gradient_norm",
                "termination",
                "train_loss",
                "validation_loss",
                "test_loss",
                "fevals",
                "infocalls",
            ],
            rows,
        )?;
    }

    let mut rows = Vec::new();
    for resolver in &spec.resolvers {
        let group: Vec<&Cell> = cells.iter().filter(|c| &c.resolver == resolver).collect();
        for i in 0..=spec.iterations {
            let column = |f: &dyn Fn(&Cell) -> f64| mean_std(&group.iter().map(|c| f(c)).collect::<Vec<_>>());
            let (cost, _) = column(&|c| c.run.trace.records[i].cost() as f64);
            let (tr, tr_sd) = column(&|c| c.run.trace.records[i].losses.train);
            let (va, va_sd) = column(&|c| c.run.trace.records[i].losses.validation);
            let (te, te_sd) = column(&|c| c.run.trace.records[i].losses.test);
            rows.push(vec![
                resolver.clone(),
                i.to_string(),
                group.len().to_string(),
                num(cost),
                num(tr),
                num(tr_sd),
                num(va),
                num(va_sd),
                num(te),
                num(te_sd),
            ]);
        }
    }
    write_csv(
        &spec.out.join("train").join("summary.csv"),
        &[
            "resolver",
            "iteration",
            "repeats",
            "cost_mean",
            "train_mean",
            "train_std",
            "validation_mean",
            "validation_std",
            "test_mean",
            "test_std",
        ],
        rows,
    )
}

pub fn cmd_train(spec: &ExperimentSpec) -> Result<(), CliError> {
    let cells = run_train(spec)?;
    write_train(spec, &cells)
}

/// Repeated scans for one batch size.
#[derive(Debug, Clone)]
pub struct ScanGroup {
    pub batch: ScanBatch,
    pub scans: Vec<ScanResult>,
    pub summary: CountSummary,
}

/// Scans one descent direction at every configured batch size.
///
/// The line starts at the seeded initial weights and follows the full-batch
/// steepest-descent direction, rescaled so its sign change sits at
/// `scan.target`. Every row of the dataset is in the sampling partition.
/// Repeats differ only in their sampler seed.
pub fn run_scan(spec: &ExperimentSpec) -> Result<Vec<ScanGroup>, CliError> {
    spec.validate()?;
    let dataset = load_dataset(spec)?;
    let rows: Vec<usize> = (0..dataset.len()).collect();
    let arch = Architecture::new(dataset.feature_dim(), &spec.hidden, dataset.class_count()).map_err(runtime)?;
    let origin = arch.init_weights(Seeds::for_repeat(spec.seed, 0).weights).into_inner();
    let mut full = MlpObjective::new(
        arch.clone(),
        dataset.clone(),
        BatchSampler::new(rows.clone(), rows.len(), 0),
        SamplingPolicy::FullBatch,
    );
    let direction = descent_direction_with_root_at(&mut full, &origin, spec.scan.target).map_err(runtime)?;
    let grid = ScanGrid { start: spec.scan.start, step: spec.scan.step, steps: spec.scan.steps };

    pool()?.install(|| {
        spec.scan
            .batch_sizes
            .par_iter()
            .enumerate()
            .map(|(g, &batch)| {
                let (size, policy) = match batch {
                    ScanBatch::Rows(n) => (n, SamplingPolicy::Resample),
                    ScanBatch::Full => (rows.len(), SamplingPolicy::FullBatch),
                };
                let make = |r: usize| {
                    let seed = derive_seed(spec.seed, 16 + g as u64, r as u64);
                    MlpObjective::new(arch.clone(), dataset.clone(), BatchSampler::new(rows.clone(), size, seed), policy)
                };
                let scans = repeat_scans(make, &origin, &direction, grid, spec.scan.repeats).map_err(runtime)?;
                let summary = summarize(&scans);
                Ok(ScanGroup { batch, scans, summary })
            })
            .collect()
    })
}

pub fn write_scan(spec: &ExperimentSpec, groups: &[ScanGroup]) -> Result<(), CliError> {
    let dir = spec.out.join("scan");
    for group in groups {
        let rows = group.scans.iter().enumerate().flat_map(|(r, s)| {
            (0..s.alphas.len()).map(move |i| {
                vec![num(s.alphas[i]), num(s.f[i]), num(s.fprime[i]), s.batch_size.to_string(), r.to_string()]
            })
        });
        write_csv(
            &dir.join(format!("batch_{}.csv", group.batch)),
            &["alpha", "f", "fprime", "batch_size", "repeat_id"],
            rows,
        )?;
    }
    let rows = groups.iter().map(|g| {
        let s = &g.summary;
        vec![
            g.batch.to_string(),
            s.repeats.to_string(),
            num(s.minima_mean),
            num(s.minima_std),
            num(s.snngpp_mean),
            num(s.snngpp_std),
            s.ball.map(|b| num(b.center)).unwrap_or_default(),
            s.ball.map(|b| num(b.epsilon)).unwrap_or_default(),
        ]
    });
    write_csv(
        &dir.join("summary.csv"),
        &["batch_size", "repeats", "minima_mean", "minima_std", "snngpp_mean", "snngpp_std", "ball_center", "ball_epsilon"],
        rows,
    )
}

pub fn cmd_scan(spec: &ExperimentSpec) -> Result<(), CliError> {
    let groups = run_scan(spec)?;
    write_scan(spec, &groups)
}

/// Mean per-iteration cost of one resolver over its repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub resolver: String,
    pub fevals_per_iter: f64,
    pub infocalls_per_iter: f64,
}

pub fn cost_table(spec: &ExperimentSpec, cells: &[Cell]) -> Vec<CostRow> {
    spec.resolvers
        .iter()
        .map(|resolver| {
            let group: Vec<&Cell> = cells.iter().filter(|c| &c.resolver == resolver).collect();
            let mean = |f: &dyn Fn(&Cell) -> f64| group.iter().map(|c| f(c)).sum::<f64>() / group.len() as f64;
            CostRow {
                resolver: resolver.clone(),
                fevals_per_iter: mean(&|c| c.run.trace.fevals_per_iteration()),
                infocalls_per_iter: mean(&|c| c.run.trace.information_calls_per_iteration()),
            }
        })
        .collect()
}

pub fn cmd_compare(spec: &ExperimentSpec) -> Result<(), CliError> {
    if spec.resolvers.len() < 2 {
        return Err(CliError::Usage("compare needs at least two resolvers".into()));
    }
    let cells = run_train(spec)?;
    let rows = cost_table(spec, &cells)
        .into_iter()
        .map(|r| vec![r.resolver, num(r.fevals_per_iter), num(r.infocalls_per_iter)]);
    write_csv(&spec.out.join("compare.csv"), &["resolver", "fevals_per_iter", "infocalls_per_iter"], rows)
}

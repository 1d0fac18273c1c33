//! Steepest-descent SGD whose step sizes come from a [`StepResolver`].
//!
//! Each iteration computes the direction gradient on its own data draw,
//! builds a [`DirectionalProbe`] along `d = -g`, resolves a step inside
//! `[alpha_min, min(1/|g|, cap)]` and moves. Cost is reported in function
//! evaluations (gradient = 2) and information calls (either = 1), including
//! the direction gradient. Metric losses are evaluated outside the counters.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{split_3_1_1, BatchSampler, DataError, Dataset, Split};
use crate::linesearch::{RegistryError, ResolverRegistry, StepBounds, StepLimits, StepResolver, Termination};
use crate::net::{dot, Architecture, LabeledBatch, NetError};
use crate::probe::{DirectionalProbe, EvalCounter, MlpObjective, Objective, ProbeError, SamplingPolicy, SyntheticQuadratic};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Resolver(#[from] RegistryError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("iteration {iteration}: {source}")]
    Search { iteration: usize, source: ProbeError },
    #[error("iteration {iteration}: non-finite {what}")]
    NonFinite { iteration: usize, what: &'static str },
}

/// Seeds for every random stream in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub weights: u64,
    pub sampler: u64,
    pub split: u64,
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Self { weights: seed, sampler: seed, split: seed }
    }

    /// Seeds for repeat `index` of an experiment: one shared split, distinct
    /// weights and sampler streams per repeat.
    pub fn for_repeat(base: u64, index: u64) -> Self {
        Self { weights: derive_seed(base, 1, index), sampler: derive_seed(base, 2, index), split: base }
    }
}

/// Independent seed number `index` of stream `stream` under `base`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.set_word_pos(2 * u128::from(index));
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    /// Registry spec, e.g. `igols` or `fixed:0.01`.
    pub resolver: String,
    pub hidden: Vec<usize>,
    pub policy: SamplingPolicy,
    pub limits: StepLimits,
    pub seeds: Seeds,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 3000,
            batch_size: 10,
            resolver: "igols".into(),
            hidden: vec![3],
            policy: SamplingPolicy::Resample,
            limits: StepLimits::default(),
            seeds: Seeds::all(0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.iterations == 0 {
            return Err(TrainError::Config("iterations must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be at least 1".into()));
        }
        if !(self.limits.alpha_min > 0.0 && self.limits.alpha_min <= self.limits.alpha_max_cap) {
            return Err(TrainError::Config("need 0 < alpha_min <= alpha_max_cap".into()));
        }
        Ok(())
    }
}

/// Losses on the full train / validation / test partitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionLosses {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

/// One row of a training trace. Row 0 describes the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Accepted step; `None` for the starting row.
    pub alpha: Option<f64>,
    /// Norm of the direction gradient.
    pub gradient_norm: f64,
    /// Search bounds used for this step.
    pub bounds: Option<StepBounds>,
    pub termination: Option<Termination>,
    pub losses: PartitionLosses,
    /// Cumulative optimizer evaluations up to and including this iteration.
    pub evaluations: EvalCounter,
}

impl TraceRecord {
    pub fn cost(&self) -> u64 {
        self.evaluations.cost()
    }

    pub fn information_calls(&self) -> u64 {
        self.evaluations.information_calls()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub resolver: String,
    pub records: Vec<TraceRecord>,
}

impl TrainTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace has a starting row")
    }

    /// Number of optimizer iterations (rows minus the starting row).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn fevals_per_iteration(&self) -> f64 {
        self.last().cost() as f64 / self.iterations().max(1) as f64
    }

    pub fn information_calls_per_iteration(&self) -> f64 {
        self.last().information_calls() as f64 / self.iterations().max(1) as f64
    }

    /// Last record whose cumulative cost does not exceed `budget`.
    pub fn at_cost(&self, budget: u64) -> &TraceRecord {
        self.records.iter().take_while(|r| r.cost() <= budget).last().unwrap_or(&self.records[0])
    }
}

/// Full-partition metric evaluation, kept apart from optimizer accounting.
pub trait Metrics {
    fn partition_losses(&self, x: &[f64]) -> PartitionLosses;
}

/// Train / validation / test losses of an MLP on fixed partitions.
#[derive(Debug, Clone)]
pub struct MlpMetrics {
    architecture: Architecture,
    train: LabeledBatch,
    validation: LabeledBatch,
    test: LabeledBatch,
}

impl MlpMetrics {
    pub fn new(architecture: Architecture, dataset: &Dataset, split: &Split) -> Result<Self, DataError> {
        Ok(Self {
            architecture,
            train: dataset.batch(&split.train)?,
            validation: dataset.batch(&split.validation)?,
            test: dataset.batch(&split.test)?,
        })
    }
}

impl Metrics for MlpMetrics {
    fn partition_losses(&self, x: &[f64]) -> PartitionLosses {
        let loss = |b: &LabeledBatch| self.architecture.loss(x, b).expect("metric shapes are consistent");
        PartitionLosses { train: loss(&self.train), validation: loss(&self.validation), test: loss(&self.test) }
    }
}

impl Metrics for SyntheticQuadratic {
    fn partition_losses(&self, x: &[f64]) -> PartitionLosses {
        let l = self.expected_loss(x);
        PartitionLosses { train: l, validation: l, test: l }
    }
}

/// Runs `iterations` SGD steps from `x0`. Returns the trace and final point.
pub fn sgd(
    objective: &mut dyn Objective,
    metrics: &dyn Metrics,
    resolver: &mut dyn StepResolver,
    x0: Vec<f64>,
    iterations: usize,
    limits: StepLimits,
) -> Result<(TrainTrace, Vec<f64>), TrainError> {
    let mut x = x0;
    let mut total = EvalCounter::default();
    let mut records = Vec::with_capacity(iterations + 1);
    let losses = checked_losses(metrics, &x, 0)?;
    records.push(TraceRecord {
        iteration: 0,
        alpha: None,
        gradient_norm: f64::NAN,
        bounds: None,
        termination: None,
        losses,
        evaluations: total,
    });

    let policy = objective.policy();
    for iteration in 1..=iterations {
        objective.next_iteration();
        let g = objective.gradient(&x);
        total.gradient_evaluations += 1;
        let g_sq = dot(&g, &g);
        if !g_sq.is_finite() {
            return Err(TrainError::NonFinite { iteration, what: "gradient" });
        }
        let g_norm = g_sq.sqrt();
        let bounds = StepBounds::for_gradient_norm(g_norm, limits);

        let (alpha, termination) = if g_norm == 0.0 {
            (0.0, Termination::Tolerance)
        } else {
            let direction: Vec<f64> = g.iter().map(|v| -v).collect();
            let mut probe = DirectionalProbe::new(objective, x.clone(), direction)
                .map_err(|source| TrainError::Search { iteration, source })?;
            // Under resampling F'(0) belongs to a fresh draw and is re-evaluated.
            if policy != SamplingPolicy::Resample {
                probe = probe.with_origin_slope(-g_sq);
            }
            let outcome = resolver
                .resolve(&mut probe, bounds)
                .map_err(|source| TrainError::Search { iteration, source })?;
            total += outcome.evaluations;
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= outcome.alpha * gi;
            }
            (outcome.alpha, outcome.termination)
        };

        let losses = checked_losses(metrics, &x, iteration)?;
        records.push(TraceRecord {
            iteration,
            alpha: Some(alpha),
            gradient_norm: g_norm,
            bounds: Some(bounds),
            termination: Some(termination),
            losses,
            evaluations: total,
        });
    }
    Ok((TrainTrace { resolver: resolver.name(), records }, x))
}

fn checked_losses(metrics: &dyn Metrics, x: &[f64], iteration: usize) -> Result<PartitionLosses, TrainError> {
    let l = metrics.partition_losses(x);
    if l.train.is_finite() && l.validation.is_finite() && l.test.is_finite() {
        Ok(l)
    } else {
        Err(TrainError::NonFinite { iteration, what: "loss" })
    }
}

/// Result of [`sgd_train`].
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub trace: TrainTrace,
    pub weights: Vec<f64>,
    pub architecture: Architecture,
    pub split: Split,
}

/// Trains an MLP on `dataset` with the resolver named in `cfg`.
pub fn sgd_train(cfg: &TrainConfig, dataset: Arc<Dataset>) -> Result<TrainRun, TrainError> {
    sgd_train_with(cfg, dataset, &ResolverRegistry::with_builtins())
}

pub fn sgd_train_with(cfg: &TrainConfig, dataset: Arc<Dataset>, registry: &ResolverRegistry) -> Result<TrainRun, TrainError> {
    cfg.validate()?;
    let mut resolver = registry.create(&cfg.resolver)?;
    let architecture = Architecture::new(dataset.feature_dim(), &cfg.hidden, dataset.class_count())?;
    let split = split_3_1_1(dataset.len(), cfg.seeds.split)?;
    let metrics = MlpMetrics::new(architecture.clone(), &dataset, &split)?;
    let sampler = BatchSampler::new(split.train.clone(), cfg.batch_size, cfg.seeds.sampler);
    let mut objective = MlpObjective::new(architecture.clone(), dataset, sampler, cfg.policy);
    let x0 = architecture.init_weights(cfg.seeds.weights).into_inner();
    let (trace, weights) = sgd(&mut objective, &metrics, resolver.as_mut(), x0, cfg.iterations, cfg.limits)?;
    Ok(TrainRun { trace, weights, architecture, split })
}

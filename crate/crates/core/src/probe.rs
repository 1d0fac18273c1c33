//! Univariate views `F(alpha) = L(x + alpha d)` and `F'(alpha) = g(x + alpha d)ᵀ d`
//! over a stochastic objective, with evaluation accounting.

use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::data::{BatchSampler, Dataset};
use crate::net::{dot, norm, Architecture, LabeledBatch};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("step size {0} is not finite")]
    NonFiniteStep(f64),
    #[error("search direction has zero norm")]
    ZeroDirection,
    #[error("origin has {origin} components but direction has {direction}")]
    DimensionMismatch { origin: usize, direction: usize },
    #[error("objective returned a non-finite value at alpha = {alpha}")]
    NonFiniteValue { alpha: f64 },
}

/// How an objective chooses the data behind each evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingPolicy {
    /// Every loss or gradient evaluation draws a fresh mini-batch.
    #[default]
    Resample,
    /// One mini-batch per iteration, drawn by [`Objective::next_iteration`].
    FixedBatch,
    /// The whole partition, no sampling.
    FullBatch,
}

impl SamplingPolicy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Resample => "resample",
            Self::FixedBatch => "fixed-batch",
            Self::FullBatch => "full-batch",
        }
    }
}

impl FromStr for SamplingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "resample" => Ok(Self::Resample),
            "fixed-batch" | "fixed" => Ok(Self::FixedBatch),
            "full-batch" | "full" => Ok(Self::FullBatch),
            other => Err(format!("unknown sampling policy '{other}' (resample|fixed-batch|full-batch)")),
        }
    }
}

/// A loss over parameter vectors whose evaluations may be sub-sampled.
pub trait Objective {
    fn dim(&self) -> usize;

    fn loss(&mut self, x: &[f64]) -> f64;

    fn gradient(&mut self, x: &[f64]) -> Vec<f64>;

    /// Loss and gradient on the same data draw.
    fn loss_and_gradient(&mut self, x: &[f64]) -> (f64, Vec<f64>);

    /// Marks the start of an optimizer iteration; fixed-batch objectives redraw here.
    fn next_iteration(&mut self) {}

    /// Number of rows behind one evaluation (1 for synthetic objectives).
    fn batch_size(&self) -> usize;

    fn policy(&self) -> SamplingPolicy;
}

/// Mini-batch MSE loss of a sigmoid MLP over one data partition.
#[derive(Debug, Clone)]
pub struct MlpObjective {
    architecture: Architecture,
    dataset: Arc<Dataset>,
    sampler: BatchSampler,
    policy: SamplingPolicy,
    fixed: Option<LabeledBatch>,
    full: Option<LabeledBatch>,
}

impl MlpObjective {
    pub fn new(architecture: Architecture, dataset: Arc<Dataset>, sampler: BatchSampler, policy: SamplingPolicy) -> Self {
        let full = (policy == SamplingPolicy::FullBatch)
            .then(|| dataset.batch(sampler.partition()).expect("partition rows are valid"));
        let mut objective = Self { architecture, dataset, sampler, policy, fixed: None, full };
        if policy == SamplingPolicy::FixedBatch {
            objective.next_iteration();
        }
        objective
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    fn with_batch<T>(&mut self, f: impl FnOnce(&Architecture, &LabeledBatch) -> T) -> T {
        match self.policy {
            SamplingPolicy::Resample => {
                let rows = self.sampler.sample();
                let batch = self.dataset.batch(&rows.0).expect("sampled rows are valid");
                f(&self.architecture, &batch)
            }
            SamplingPolicy::FixedBatch => f(&self.architecture, self.fixed.as_ref().expect("fixed batch drawn")),
            SamplingPolicy::FullBatch => f(&self.architecture, self.full.as_ref().expect("full batch built")),
        }
    }
}

impl Objective for MlpObjective {
    fn dim(&self) -> usize {
        self.architecture.weight_count()
    }

    fn loss(&mut self, x: &[f64]) -> f64 {
        self.with_batch(|arch, batch| arch.loss(x, batch).expect("objective shapes are consistent"))
    }

    fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        self.loss_and_gradient(x).1
    }

    fn loss_and_gradient(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        self.with_batch(|arch, batch| {
            let (l, g) = arch.loss_and_gradient(x, batch).expect("objective shapes are consistent");
            (l, g.into_inner())
        })
    }

    fn next_iteration(&mut self) {
        if self.policy == SamplingPolicy::FixedBatch {
            let rows = self.sampler.sample();
            self.fixed = Some(self.dataset.batch(&rows.0).expect("sampled rows are valid"));
        }
    }

    fn batch_size(&self) -> usize {
        match self.policy {
            SamplingPolicy::FullBatch => self.sampler.partition().len(),
            _ => self.sampler.batch_size(),
        }
    }

    fn policy(&self) -> SamplingPolicy {
        self.policy
    }
}

/// `½ Σ (x_i − c_i − o_i)²` where the offset `o` plays the role of mini-batch
/// sampling error. Under [`SamplingPolicy::Resample`] each evaluation draws a
/// fresh Gaussian offset with standard deviation `noise_sd / sqrt(batch_size)`,
/// which makes `F(alpha)` step-discontinuous between evaluations.
#[derive(Debug, Clone)]
pub struct SyntheticQuadratic {
    center: Vec<f64>,
    noise_sd: f64,
    batch_size: usize,
    policy: SamplingPolicy,
    rng: ChaCha8Rng,
    fixed_offset: Vec<f64>,
}

impl SyntheticQuadratic {
    /// Noise-free quadratic with minimiser `center`.
    pub fn exact(center: Vec<f64>) -> Self {
        let n = center.len();
        Self {
            center,
            noise_sd: 0.0,
            batch_size: 1,
            policy: SamplingPolicy::FullBatch,
            rng: ChaCha8Rng::seed_from_u64(0),
            fixed_offset: vec![0.0; n],
        }
    }

    pub fn noisy(center: Vec<f64>, noise_sd: f64, batch_size: usize, policy: SamplingPolicy, seed: u64) -> Self {
        let n = center.len();
        let mut q = Self {
            center,
            noise_sd,
            batch_size: batch_size.max(1),
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            fixed_offset: vec![0.0; n],
        };
        q.next_iteration();
        q
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Loss with the sampling offset removed.
    pub fn expected_loss(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
    }

    fn draw_offset(&mut self) -> Vec<f64> {
        let sd = self.noise_sd / (self.batch_size as f64).sqrt();
        if sd == 0.0 {
            return vec![0.0; self.center.len()];
        }
        let normal = Normal::new(0.0, sd).expect("finite sd");
        (0..self.center.len()).map(|_| normal.sample(&mut self.rng)).collect()
    }

    fn offset(&mut self) -> Vec<f64> {
        match self.policy {
            SamplingPolicy::Resample => self.draw_offset(),
            SamplingPolicy::FixedBatch => self.fixed_offset.clone(),
            SamplingPolicy::FullBatch => vec![0.0; self.center.len()],
        }
    }
}

impl Objective for SyntheticQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn loss(&mut self, x: &[f64]) -> f64 {
        self.loss_and_gradient(x).0
    }

    fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        self.loss_and_gradient(x).1
    }

    fn loss_and_gradient(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        let offset = self.offset();
        let r: Vec<f64> = x.iter().zip(&self.center).zip(&offset).map(|((a, c), o)| a - c - o).collect();
        (0.5 * dot(&r, &r), r)
    }

    fn next_iteration(&mut self) {
        if self.policy == SamplingPolicy::FixedBatch {
            self.fixed_offset = self.draw_offset();
        }
    }

    fn batch_size(&self) -> usize {
        self.batch_size
    }

    fn policy(&self) -> SamplingPolicy {
        self.policy
    }
}

/// A one-dimensional objective from closures; with origin 0 and direction
/// 1 it gives `F = value` and `F' = derivative` directly.
pub struct Univariate<F, G> {
    value: F,
    derivative: G,
}

impl<F, G> Univariate<F, G>
where
    F: FnMut(f64) -> f64,
    G: FnMut(f64) -> f64,
{
    pub fn new(value: F, derivative: G) -> Self {
        Self { value, derivative }
    }
}

impl<F, G> Objective for Univariate<F, G>
where
    F: FnMut(f64) -> f64,
    G: FnMut(f64) -> f64,
{
    fn dim(&self) -> usize {
        1
    }

    fn loss(&mut self, x: &[f64]) -> f64 {
        (self.value)(x[0])
    }

    fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        vec![(self.derivative)(x[0])]
    }

    fn loss_and_gradient(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        ((self.value)(x[0]), vec![(self.derivative)(x[0])])
    }

    fn batch_size(&self) -> usize {
        1
    }

    fn policy(&self) -> SamplingPolicy {
        SamplingPolicy::FullBatch
    }
}

/// Function and gradient evaluation tallies.
///
/// Cost is measured in function evaluations with a gradient counting as two.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounter {
    pub function_evaluations: u64,
    pub gradient_evaluations: u64,
}

impl EvalCounter {
    pub fn cost(&self) -> u64 {
        self.function_evaluations + 2 * self.gradient_evaluations
    }

    pub fn information_calls(&self) -> u64 {
        self.function_evaluations + self.gradient_evaluations
    }
}

impl Add for EvalCounter {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            function_evaluations: self.function_evaluations + rhs.function_evaluations,
            gradient_evaluations: self.gradient_evaluations + rhs.gradient_evaluations,
        }
    }
}

impl AddAssign for EvalCounter {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for EvalCounter {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self {
            function_evaluations: self.function_evaluations - rhs.function_evaluations,
            gradient_evaluations: self.gradient_evaluations - rhs.gradient_evaluations,
        }
    }
}

/// Frozen `(origin, direction)` pair over an objective.
///
/// The direction is used as given (unnormalised); `F'` is the projection of
/// the gradient onto it.
pub struct DirectionalProbe<'a> {
    objective: &'a mut dyn Objective,
    origin: Vec<f64>,
    direction: Vec<f64>,
    origin_slope: Option<f64>,
    counter: EvalCounter,
    point: Vec<f64>,
}

impl<'a> DirectionalProbe<'a> {
    pub fn new(objective: &'a mut dyn Objective, origin: Vec<f64>, direction: Vec<f64>) -> Result<Self, ProbeError> {
        if origin.len() != direction.len() {
            return Err(ProbeError::DimensionMismatch { origin: origin.len(), direction: direction.len() });
        }
        let n = norm(&direction);
        if n == 0.0 || !n.is_finite() {
            return Err(ProbeError::ZeroDirection);
        }
        let point = origin.clone();
        Ok(Self { objective, origin, direction, origin_slope: None, counter: EvalCounter::default(), point })
    }

    /// Supplies `F'(0)` computed elsewhere (the direction gradient on the
    /// same batch). [`DirectionalProbe::slope_at_origin`] then returns it
    /// without an extra evaluation.
    pub fn with_origin_slope(mut self, slope: f64) -> Self {
        self.origin_slope = Some(slope);
        self
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn direction_norm(&self) -> f64 {
        norm(&self.direction)
    }

    pub fn counter(&self) -> EvalCounter {
        self.counter
    }

    fn move_to(&mut self, alpha: f64) -> Result<(), ProbeError> {
        if !alpha.is_finite() {
            return Err(ProbeError::NonFiniteStep(alpha));
        }
        for ((p, x), d) in self.point.iter_mut().zip(&self.origin).zip(&self.direction) {
            *p = x + alpha * d;
        }
        Ok(())
    }

    /// `F(alpha)`; one function evaluation.
    pub fn eval_f(&mut self, alpha: f64) -> Result<f64, ProbeError> {
        self.move_to(alpha)?;
        let f = self.objective.loss(&self.point);
        self.counter.function_evaluations += 1;
        finite(f, alpha)
    }

    /// `F'(alpha)`; one gradient evaluation.
    pub fn eval_fprime(&mut self, alpha: f64) -> Result<f64, ProbeError> {
        self.move_to(alpha)?;
        let g = self.objective.gradient(&self.point);
        self.counter.gradient_evaluations += 1;
        finite(dot(&g, &self.direction), alpha)
    }

    /// `F(alpha)` and `F'(alpha)` on a single data draw; one of each evaluation.
    pub fn eval_both(&mut self, alpha: f64) -> Result<(f64, f64), ProbeError> {
        self.move_to(alpha)?;
        let (f, g) = self.objective.loss_and_gradient(&self.point);
        self.counter.function_evaluations += 1;
        self.counter.gradient_evaluations += 1;
        Ok((finite(f, alpha)?, finite(dot(&g, &self.direction), alpha)?))
    }

    /// `F'(0)`, from the supplied value when present, else evaluated (and counted).
    pub fn slope_at_origin(&mut self) -> Result<f64, ProbeError> {
        match self.origin_slope {
            Some(s) => Ok(s),
            None => self.eval_fprime(0.0),
        }
    }
}

fn finite(v: f64, alpha: f64) -> Result<f64, ProbeError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ProbeError::NonFiniteValue { alpha })
    }
}

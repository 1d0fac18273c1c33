//! Step-size resolvers behind one trait.
//!
//! | name    | kind                        | information used     |
//! |---------|-----------------------------|----------------------|
//! | `gs`    | exact, Golden Section       | function values      |
//! | `arls`  | inexact, Armijo advance/backtrack | values + `F'(0)` |
//! | `bgols` | exact, bisection on `F'` sign | directional derivatives |
//! | `igols` | inexact, doubling/halving on `F'` | directional derivatives |
//! | `fixed:<alpha>` | constant step        | none                 |
//!
//! Resolvers are created by name through [`ResolverRegistry`].

mod armijo;
mod bisection;
mod golden;
mod inexact;
mod registry;

pub use armijo::{armijo, Armijo, ArmijoConfig};
pub use bisection::{bgols, Bgols, BgolsConfig};
pub use golden::{golden_section, GoldenSection, GsConfig};
pub use inexact::{igols, Igols, IgolsConfig};
pub use registry::{FixedStep, RegistryError, ResolverFactory, ResolverRegistry};

use std::fmt;

use crate::probe::{DirectionalProbe, EvalCounter, ProbeError};

/// Golden ratio `(sqrt 5 + 1) / 2`.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Smallest admissible step.
pub const ALPHA_MIN: f64 = 1e-8;

/// Upper cap on the step regardless of gradient size.
pub const ALPHA_MAX_CAP: f64 = 1e7;

/// `min(1 / g_norm, cap)`, or `cap` for a vanishing gradient.
pub fn effective_alpha_max(g_norm: f64, cap: f64) -> f64 {
    if g_norm > 0.0 {
        (1.0 / g_norm).min(cap)
    } else {
        cap
    }
}

/// Admissible step interval for one search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBounds {
    pub min: f64,
    pub max: f64,
}

impl StepBounds {
    pub fn new(min: f64, max: f64) -> Self {
        debug_assert!(min > 0.0 && min <= max, "invalid step bounds [{min}, {max}]");
        Self { min, max }
    }

    /// Bounds for a steepest-descent step from a point with gradient norm `g_norm`.
    pub fn for_gradient_norm(g_norm: f64, limits: StepLimits) -> Self {
        let max = effective_alpha_max(g_norm, limits.alpha_max_cap).max(limits.alpha_min);
        Self::new(limits.alpha_min, max)
    }

    pub fn clamp(&self, alpha: f64) -> f64 {
        alpha.clamp(self.min, self.max)
    }

    pub fn contains(&self, alpha: f64) -> bool {
        (self.min..=self.max).contains(&alpha)
    }
}

/// The constants that, with the gradient norm, fix [`StepBounds`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLimits {
    pub alpha_min: f64,
    pub alpha_max_cap: f64,
}

impl Default for StepLimits {
    fn default() -> Self {
        Self { alpha_min: ALPHA_MIN, alpha_max_cap: ALPHA_MAX_CAP }
    }
}

/// Why a search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Interval tolerance reached or acceptance condition met.
    Tolerance,
    /// Step clamped to the lower bound.
    CapMin,
    /// Step clamped to the upper bound.
    CapMax,
    /// Information-call budget exhausted.
    Budget,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tolerance => "tolerance",
            Self::CapMin => "cap_min",
            Self::CapMax => "cap_max",
            Self::Budget => "budget",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub evaluations: EvalCounter,
    pub termination: Termination,
    /// Bracket length after each refinement step (exact searches only),
    /// starting with the bracket entering refinement.
    pub intervals: Vec<f64>,
}

impl LineSearchOutcome {
    fn new(alpha: f64, probe: &DirectionalProbe<'_>, start: EvalCounter, termination: Termination) -> Self {
        Self { alpha, evaluations: probe.counter() - start, termination, intervals: Vec::new() }
    }

    fn with_intervals(mut self, intervals: Vec<f64>) -> Self {
        self.intervals = intervals;
        self
    }

    pub fn function_evaluations(&self) -> u64 {
        self.evaluations.function_evaluations
    }

    pub fn gradient_evaluations(&self) -> u64 {
        self.evaluations.gradient_evaluations
    }
}

/// A step-size resolution strategy.
///
/// Inexact strategies carry the previously accepted step as their next
/// initial guess; [`StepResolver::reset`] forgets it.
pub trait StepResolver: Send {
    fn name(&self) -> String;

    fn resolve(&mut self, probe: &mut DirectionalProbe<'_>, bounds: StepBounds) -> Result<LineSearchOutcome, ProbeError>;

    fn reset(&mut self) {}

    /// Whether accepted steps are confined to the search bounds.
    fn respects_bounds(&self) -> bool {
        true
    }
}

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Armijo, Bgols, GoldenSection, Igols, LineSearchOutcome, StepBounds, StepResolver, Termination};
use crate::probe::{DirectionalProbe, ProbeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("unknown resolver '{name}' (known: {known})")]
    Unknown { name: String, known: String },
    #[error("resolver '{name}': {message}")]
    BadArgument { name: String, message: String },
    #[error("resolver '{0}' is already registered")]
    Duplicate(String),
}

/// Builds a resolver from the text after `name:` (empty when absent).
pub type ResolverFactory = fn(&str) -> Result<Box<dyn StepResolver>, RegistryError>;

struct Entry {
    description: &'static str,
    factory: ResolverFactory,
}

/// Name-keyed constructors for [`StepResolver`]s.
///
/// Specs have the form `name` or `name:argument`, e.g. `igols` or `fixed:0.01`.
pub struct ResolverRegistry {
    entries: BTreeMap<String, Entry>,
}

impl ResolverRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// `gs`, `arls`, `bgols`, `igols` and `fixed:<alpha>` with default settings.
    pub fn with_builtins() -> Self {
        let builtins: [(&str, &'static str, ResolverFactory); 5] = [
            ("gs", "exact Golden Section function-value search", |arg| {
                no_argument("gs", arg)?;
                Ok(Box::new(GoldenSection::default()))
            }),
            ("arls", "inexact Armijo rule, advance or backtrack by 2", |arg| {
                no_argument("arls", arg)?;
                Ok(Box::new(Armijo::default()))
            }),
            ("bgols", "exact bisection gradient-only search", |arg| {
                no_argument("bgols", arg)?;
                Ok(Box::new(Bgols::default()))
            }),
            ("igols", "inexact gradient-only search", |arg| {
                no_argument("igols", arg)?;
                Ok(Box::new(Igols::default()))
            }),
            ("fixed", "constant step, fixed:<alpha>", fixed_factory),
        ];
        let mut r = Self::empty();
        for (name, description, factory) in builtins {
            r.register(name, description, factory).expect("builtin names are distinct");
        }
        r
    }

    pub fn register(
        &mut self,
        name: &str,
        description: &'static str,
        factory: ResolverFactory,
    ) -> Result<&mut Self, RegistryError> {
        if self.entries.contains_key(name) {
            return Err(RegistryError::Duplicate(name.to_string()));
        }
        self.entries.insert(name.to_string(), Entry { description, factory });
        Ok(self)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn describe(&self) -> impl Iterator<Item = (&str, &'static str)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.description))
    }

    pub fn create(&self, spec: &str) -> Result<Box<dyn StepResolver>, RegistryError> {
        let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
        let entry = self.entries.get(name).ok_or_else(|| RegistryError::Unknown {
            name: name.to_string(),
            known: self.names().collect::<Vec<_>>().join(", "),
        })?;
        (entry.factory)(arg)
    }
}

impl Default for ResolverRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

fn fixed_factory(arg: &str) -> Result<Box<dyn StepResolver>, RegistryError> {
    let bad = |message: String| RegistryError::BadArgument { name: "fixed".into(), message };
    let alpha: f64 = arg.parse().map_err(|_| bad(format!("'{arg}' is not a step size")))?;
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(bad(format!("step {alpha} must be finite and non-negative")));
    }
    Ok(Box::new(FixedStep { alpha }))
}

fn no_argument(name: &str, arg: &str) -> Result<(), RegistryError> {
    if arg.is_empty() {
        Ok(())
    } else {
        Err(RegistryError::BadArgument { name: name.into(), message: format!("takes no argument, got '{arg}'") })
    }
}

/// Plain SGD with a constant learning rate; performs no evaluations and
/// ignores the search bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedStep {
    pub alpha: f64,
}

impl StepResolver for FixedStep {
    fn name(&self) -> String {
        format!("fixed:{}", self.alpha)
    }

    fn resolve(&mut self, probe: &mut DirectionalProbe<'_>, _bounds: StepBounds) -> Result<LineSearchOutcome, ProbeError> {
        Ok(LineSearchOutcome::new(self.alpha, probe, probe.counter(), Termination::Tolerance))
    }

    fn respects_bounds(&self) -> bool {
        false
    }
}

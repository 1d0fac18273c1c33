use super::{LineSearchOutcome, StepBounds, StepResolver, Termination};
use crate::probe::{DirectionalProbe, ProbeError};

/// Inexact gradient-only line search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgolsConfig {
    /// Growth / reduction factor, `> 1`.
    pub eta: f64,
    /// Relaxation `r` in `[0, 1]`; the accept threshold is `|(1 - r) F'(0)|`.
    pub relaxation: f64,
    /// Directional-derivative evaluation budget; the doubling/halving loop has
    /// no natural bound when a sampled `F'` keeps crossing the threshold.
    pub max_calls: u64,
}

impl Default for IgolsConfig {
    fn default() -> Self {
        Self { eta: 2.0, relaxation: 0.0, max_calls: 1000 }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Decrease,
    Increase,
}

/// Accepts a step whose directional derivative is below `|(1 - r) F'(0)|`.
///
/// From `alpha_init`: if `F'` is above the threshold, divide by `eta` until it
/// drops below; if below, multiply by `eta` until it rises above and return
/// the last step before that. A derivative exactly on the threshold accepts
/// the current step. Leaving `[alpha_min, alpha_max]` returns the bound.
pub fn igols(
    probe: &mut DirectionalProbe<'_>,
    cfg: &IgolsConfig,
    alpha_init: f64,
    bounds: StepBounds,
) -> Result<LineSearchOutcome, ProbeError> {
    let start = probe.counter();
    let calls = |p: &DirectionalProbe<'_>| (p.counter() - start).information_calls();

    let mut alpha = bounds.clamp(alpha_init);
    let slope0 = probe.slope_at_origin()?;
    let slope = probe.eval_fprime(alpha)?;
    let threshold = ((1.0 - cfg.relaxation) * slope0).abs();

    let direction = if slope > threshold {
        Direction::Decrease
    } else if slope < threshold {
        Direction::Increase
    } else {
        return Ok(LineSearchOutcome::new(alpha, probe, start, Termination::Tolerance));
    };

    loop {
        if calls(probe) >= cfg.max_calls {
            return Ok(LineSearchOutcome::new(bounds.clamp(alpha), probe, start, Termination::Budget));
        }
        let mut done = false;
        match direction {
            Direction::Decrease => {
                alpha /= cfg.eta;
                if probe.eval_fprime(alpha)? < threshold {
                    done = true;
                }
            }
            Direction::Increase => {
                alpha *= cfg.eta;
                if probe.eval_fprime(alpha)? > threshold {
                    alpha /= cfg.eta;
                    done = true;
                }
            }
        }
        if alpha < bounds.min {
            return Ok(LineSearchOutcome::new(bounds.min, probe, start, Termination::CapMin));
        }
        if alpha > bounds.max {
            return Ok(LineSearchOutcome::new(bounds.max, probe, start, Termination::CapMax));
        }
        if done {
            return Ok(LineSearchOutcome::new(alpha, probe, start, Termination::Tolerance));
        }
    }
}

/// Registry adapter for [`igols`]; starts from `alpha_min`, then from the
/// previously accepted step.
#[derive(Debug, Clone, Default)]
pub struct Igols {
    pub config: IgolsConfig,
    previous: Option<f64>,
}

impl Igols {
    pub fn new(config: IgolsConfig) -> Self {
        Self { config, previous: None }
    }
}

impl StepResolver for Igols {
    fn name(&self) -> String {
        "igols".into()
    }

    fn resolve(&mut self, probe: &mut DirectionalProbe<'_>, bounds: StepBounds) -> Result<LineSearchOutcome, ProbeError> {
        let init = self.previous.unwrap_or(bounds.min);
        let out = igols(probe, &self.config, init, bounds)?;
        self.previous = Some(out.alpha);
        Ok(out)
    }

    fn reset(&mut self) {
        self.previous = None;
    }
}

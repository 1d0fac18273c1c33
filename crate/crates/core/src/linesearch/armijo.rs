use super::{LineSearchOutcome, StepBounds, StepResolver, Termination};
use crate::probe::{DirectionalProbe, ProbeError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoConfig {
    /// Sufficient-decrease fraction `p` in `[0, 1]`.
    pub fraction: f64,
    /// Advance / backtrack factor.
    pub factor: f64,
    pub max_calls: u64,
}

impl Default for ArmijoConfig {
    fn default() -> Self {
        Self { fraction: 0.2, factor: 2.0, max_calls: 1000 }
    }
}

/// Armijo rule returning the largest feasible step along the doubling /
/// halving sequence through `alpha_init`.
///
/// A step is feasible when `F(alpha) < F(0) + alpha * p * F'(0)`. A feasible
/// initial step is advanced until the next one fails; an infeasible one is
/// backtracked until the first feasible step.
pub fn armijo(
    probe: &mut DirectionalProbe<'_>,
    cfg: &ArmijoConfig,
    alpha_init: f64,
    bounds: StepBounds,
) -> Result<LineSearchOutcome, ProbeError> {
    let start = probe.counter();
    let f0 = probe.eval_f(0.0)?;
    let slope = probe.slope_at_origin()?;
    let calls = |p: &DirectionalProbe<'_>| (p.counter() - start).information_calls();
    let feasible = |p: &mut DirectionalProbe<'_>, alpha: f64| -> Result<bool, ProbeError> {
        Ok(p.eval_f(alpha)? < f0 + alpha * cfg.fraction * slope)
    };

    let mut alpha = bounds.clamp(alpha_init);
    if feasible(probe, alpha)? {
        loop {
            if alpha >= bounds.max {
                return Ok(LineSearchOutcome::new(bounds.max, probe, start, Termination::CapMax));
            }
            if calls(probe) >= cfg.max_calls {
                return Ok(LineSearchOutcome::new(alpha, probe, start, Termination::Budget));
            }
            let next = (alpha * cfg.factor).min(bounds.max);
            if !feasible(probe, next)? {
                return Ok(LineSearchOutcome::new(alpha, probe, start, Termination::Tolerance));
            }
            alpha = next;
        }
    }
    loop {
        if calls(probe) >= cfg.max_calls {
            return Ok(LineSearchOutcome::new(bounds.min, probe, start, Termination::Budget));
        }
        alpha /= cfg.factor;
        if alpha < bounds.min {
            return Ok(LineSearchOutcome::new(bounds.min, probe, start, Termination::CapMin));
        }
        if feasible(probe, alpha)? {
            return Ok(LineSearchOutcome::new(alpha, probe, start, Termination::Tolerance));
        }
    }
}

/// Registry adapter for [`armijo`]; starts from `alpha_min`, then from the
/// previously accepted step.
#[derive(Debug, Clone, Default)]
pub struct Armijo {
    pub config: ArmijoConfig,
    previous: Option<f64>,
}

impl Armijo {
    pub fn new(config: ArmijoConfig) -> Self {
        Self { config, previous: None }
    }
}

impl StepResolver for Armijo {
    fn name(&self) -> String {
        "arls".into()
    }

    fn resolve(&mut self, probe: &mut DirectionalProbe<'_>, bounds: StepBounds) -> Result<LineSearchOutcome, ProbeError> {
        let init = self.previous.unwrap_or(bounds.min);
        let out = armijo(probe, &self.config, init, bounds)?;
        self.previous = Some(out.alpha);
        Ok(out)
    }

    fn reset(&mut self) {
        self.previous = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::Univariate;

    fn run(f: impl FnMut(f64) -> f64, df: impl FnMut(f64) -> f64, init: f64, bounds: StepBounds) -> LineSearchOutcome {
        let mut obj = Univariate::new(f, df);
        let mut probe = DirectionalProbe::new(&mut obj, vec![0.0], vec![1.0]).unwrap();
        armijo(&mut probe, &ArmijoConfig::default(), init, bounds).unwrap()
    }

    const WIDE: StepBounds = StepBounds { min: 1e-8, max: 1e7 };

    #[test]
    fn quadratic_hand_trace() {
        // 0.25 -> 0.5 -> 1.0 pass; 2.0 gives F = 1, not below 1 - 0.4.
        let out = run(|a| (1.0 - a).powi(2), |a| 2.0 * (a - 1.0), 0.25, WIDE);
        assert_eq!(out.alpha, 1.0);
        assert_eq!(out.termination, Termination::Tolerance);
        assert_eq!(out.gradient_evaluations(), 1);
        // F(0), then 0.25, 0.5, 1.0, 2.0
        assert_eq!(out.function_evaluations(), 5);
    }

    #[test]
    fn accept_rule_is_the_armijo_bound() {
        // F(0) = 1, F'(0) = -1: feasible iff F(alpha) < 1 - 0.2 alpha.
        let f = |a: f64| if a < 3.0 { 1.0 - 0.3 * a } else { 1.0 };
        let out = run(f, |_| -1.0, 1.0, WIDE);
        assert_eq!(out.alpha, 2.0);
    }

    #[test]
    fn largest_feasible_is_initial_when_double_fails() {
        let f = |a: f64| if a <= 0.75 { 1.0 - a } else { 2.0 };
        let out = run(f, |_| -1.0, 0.5, WIDE);
        assert_eq!(out.alpha, 0.5);
    }

    #[test]
    fn backtracks_to_first_pass() {
        let out = run(|a| (1.0 - a).powi(2), |a| 2.0 * (a - 1.0), 8.0, WIDE);
        assert_eq!(out.alpha, 1.0);
    }

    #[test]
    fn no_feasible_step_returns_alpha_min() {
        let out = run(|a| a, |_| 1.0, 1.0, WIDE);
        assert_eq!(out.alpha, 1e-8);
        assert_eq!(out.termination, Termination::CapMin);
    }

    #[test]
    fn advance_stops_at_cap() {
        let out = run(|a| -a, |_| -1.0, 1.0, StepBounds::new(1e-8, 10.0));
        assert_eq!(out.alpha, 10.0);
        assert_eq!(out.termination, Termination::CapMax);
    }
}

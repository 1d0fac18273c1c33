use super::{LineSearchOutcome, StepBounds, StepResolver, Termination, GOLDEN_RATIO};
use crate::probe::{DirectionalProbe, ProbeError};

/// Bisection gradient-only line search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgolsConfig {
    pub delta: f64,
    pub ratio: f64,
    pub tolerance: f64,
    /// Directional-derivative evaluation budget.
    pub max_calls: u64,
}

impl Default for BgolsConfig {
    fn default() -> Self {
        Self { delta: 5.0, ratio: GOLDEN_RATIO, tolerance: 1e-12, max_calls: 1000 }
    }
}

/// Locates a negative-to-positive sign change of `F'` by bracketing and
/// bisection. Uses directional derivatives only; a zero derivative counts as
/// non-negative.
///
/// Points start at `l = 0`, `m = delta`, `u = m + ratio * delta`. If `u`
/// exceeds the upper bound it is clamped and `m` re-centred. While
/// `F'(u) < 0` the bracket advances (`m = u`, `u = m + ratio^k * delta`, with
/// `k` counting bracketing steps from 1); leaving the upper bound during this
/// phase returns the bound. Refinement then keeps the half holding the sign
/// change until the bracket is below tolerance, `u <= alpha_min`, or the
/// budget runs out, and returns the bracket midpoint.
pub fn bgols(
    probe: &mut DirectionalProbe<'_>,
    cfg: &BgolsConfig,
    bounds: StepBounds,
) -> Result<LineSearchOutcome, ProbeError> {
    let start = probe.counter();
    let calls = |p: &DirectionalProbe<'_>| (p.counter() - start).information_calls();

    let mut lower = 0.0;
    let mut mid = cfg.delta;
    let mut upper = mid + cfg.ratio * cfg.delta;
    let mut mid_slope = probe.eval_fprime(mid)?;
    let mut upper_slope = probe.eval_fprime(upper)?;
    if upper > bounds.max {
        upper = bounds.max;
        mid = lower + 0.5 * (upper - lower);
        mid_slope = probe.eval_fprime(mid)?;
        upper_slope = probe.eval_fprime(upper)?;
    }

    let mut growth = 1;
    while upper_slope < 0.0 && calls(probe) < cfg.max_calls {
        mid = upper;
        mid_slope = upper_slope;
        upper = mid + cfg.ratio.powi(growth) * cfg.delta;
        growth += 1;
        upper_slope = probe.eval_fprime(upper)?;
        if upper > bounds.max {
            return Ok(LineSearchOutcome::new(bounds.max, probe, start, Termination::CapMax));
        }
    }

    let mut interval = upper - lower;
    let mut intervals = vec![interval];
    while interval > cfg.tolerance && upper > bounds.min && calls(probe) < cfg.max_calls {
        if mid_slope < 0.0 && upper_slope >= 0.0 {
            lower = mid;
            interval = upper - lower;
        } else if mid_slope >= 0.0 {
            upper = mid;
            upper_slope = mid_slope;
            interval = upper - lower;
        }
        intervals.push(interval);
        mid = lower + 0.5 * interval;
        mid_slope = probe.eval_fprime(mid)?;
    }

    let termination = if interval <= cfg.tolerance {
        Termination::Tolerance
    } else if upper <= bounds.min {
        Termination::CapMin
    } else {
        Termination::Budget
    };
    let alpha = 0.5 * (upper + lower);
    let (alpha, termination) = if alpha < bounds.min {
        (bounds.min, Termination::CapMin)
    } else if alpha > bounds.max {
        (bounds.max, Termination::CapMax)
    } else {
        (alpha, termination)
    };
    Ok(LineSearchOutcome::new(alpha, probe, start, termination).with_intervals(intervals))
}

/// Registry adapter for [`bgols`].
#[derive(Debug, Clone, Default)]
pub struct Bgols {
    pub config: BgolsConfig,
}

impl StepResolver for Bgols {
    fn name(&self) -> String {
        "bgols".into()
    }

    fn resolve(&mut self, probe: &mut DirectionalProbe<'_>, bounds: StepBounds) -> Result<LineSearchOutcome, ProbeError> {
        bgols(probe, &self.config, bounds)
    }
}

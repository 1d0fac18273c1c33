use super::{LineSearchOutcome, StepBounds, StepResolver, Termination, GOLDEN_RATIO};
use crate::probe::{DirectionalProbe, ProbeError};

/// Golden Section search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsConfig {
    /// First bracketing step.
    pub delta: f64,
    /// Bracket growth ratio.
    pub ratio: f64,
    pub tolerance: f64,
    /// Information-call budget per search.
    pub max_calls: u64,
}

impl Default for GsConfig {
    fn default() -> Self {
        Self { delta: 5.0, ratio: GOLDEN_RATIO, tolerance: 1e-12, max_calls: 1000 }
    }
}

/// Function-value minimiser: exponential bracketing then Golden Section
/// refinement with four points and three intervals.
///
/// `F(0)` is evaluated once and counted. The bracket starts as
/// `0 < delta < delta + ratio * delta` and advances by `ratio^k * delta` while
/// the far point keeps decreasing; if it is still decreasing at the upper
/// bound, `[mid, bound]` is refined instead. Each refinement keeps the sub-interval
/// holding the lower interior point, shrinking the bracket by `1 / ratio`.
pub fn golden_section(
    probe: &mut DirectionalProbe<'_>,
    cfg: &GsConfig,
    bounds: StepBounds,
) -> Result<LineSearchOutcome, ProbeError> {
    let start = probe.counter();
    let calls = |p: &DirectionalProbe<'_>| (p.counter() - start).information_calls();

    let mut f_lo = probe.eval_f(0.0)?;
    let mut lo = 0.0;
    let mut mid = cfg.delta;
    let mut hi = mid + cfg.ratio * cfg.delta;
    if hi > bounds.max {
        hi = bounds.max;
        mid = lo + 0.5 * (hi - lo);
    }
    let mut f_mid = probe.eval_f(mid)?;
    let mut f_hi = probe.eval_f(hi)?;

    let mut growth = 1;
    let mut at_cap = false;
    loop {
        if f_mid >= f_lo {
            hi = mid;
            break;
        }
        if f_hi >= f_mid {
            break;
        }
        if hi >= bounds.max {
            // Still descending at the cap: the constrained minimiser is in [mid, cap].
            lo = mid;
            at_cap = true;
            break;
        }
        if calls(probe) >= cfg.max_calls {
            return Ok(LineSearchOutcome::new(bounds.clamp(hi), probe, start, Termination::Budget));
        }
        lo = mid;
        f_lo = f_mid;
        mid = hi;
        f_mid = f_hi;
        hi = (mid + cfg.ratio.powi(growth) * cfg.delta).min(bounds.max);
        growth += 1;
        f_hi = probe.eval_f(hi)?;
    }

    let shrink = 1.0 / cfg.ratio;
    let mut x1 = hi - shrink * (hi - lo);
    let mut x2 = lo + shrink * (hi - lo);
    let mut f1 = probe.eval_f(x1)?;
    let mut f2 = probe.eval_f(x2)?;
    let mut intervals = vec![hi - lo];
    let mut termination = Termination::Tolerance;
    while hi - lo > cfg.tolerance {
        if calls(probe) >= cfg.max_calls {
            termination = Termination::Budget;
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - shrink * (hi - lo);
            f1 = probe.eval_f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + shrink * (hi - lo);
            f2 = probe.eval_f(x2)?;
        }
        intervals.push(hi - lo);
    }

    let alpha = 0.5 * (lo + hi);
    let (alpha, termination) = if at_cap && bounds.max - alpha <= cfg.tolerance {
        (bounds.max, Termination::CapMax)
    } else if alpha < bounds.min {
        (bounds.min, Termination::CapMin)
    } else if alpha > bounds.max {
        (bounds.max, Termination::CapMax)
    } else {
        (alpha, termination)
    };
    Ok(LineSearchOutcome::new(alpha, probe, start, termination).with_intervals(intervals))
}

/// Registry adapter for [`golden_section`].
#[derive(Debug, Clone, Default)]
pub struct GoldenSection {
    pub config: GsConfig,
}

impl StepResolver for GoldenSection {
    fn name(&self) -> String {
        "gs".into()
    }

    fn resolve(&mut self, probe: &mut DirectionalProbe<'_>, bounds: StepBounds) -> Result<LineSearchOutcome, ProbeError> {
        golden_section(probe, &self.config, bounds)
    }
}

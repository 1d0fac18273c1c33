//! Line scans along a frozen descent direction: sampled `F` and `F'` on a
//! uniform step grid, local-minimum and sign-change (SNN-GPP) detection, and
//! the spread of sign changes over repeated scans.
//!
//! Detection rules on the grid:
//! - node `i` is a local minimum iff `F[i-1] > F[i] < F[i+1]` (strict);
//! - a sign change lies between nodes `i` and `i+1` iff `F'[i] < 0` and
//!   `F'[i+1] >= 0`; its location is the interval midpoint.

use thiserror::Error;

use crate::linesearch::{bgols, BgolsConfig, StepBounds};
use crate::net::dot;
use crate::probe::{DirectionalProbe, Objective, ProbeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("scan grid needs step > 0 and at least one step, got step {step}, steps {steps}")]
    Grid { step: f64, steps: usize },
    #[error("no scan detected a sign change")]
    NoDetections,
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

/// `steps + 1` nodes `start + i * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub start: f64,
    pub step: f64,
    pub steps: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self { start: 0.0, step: 0.1, steps: 100 }
    }
}

impl ScanGrid {
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn validate(&self) -> Result<(), AnalysisError> {
        if self.step > 0.0 && self.step.is_finite() && self.steps >= 1 {
            Ok(())
        } else {
            Err(AnalysisError::Grid { step: self.step, steps: self.steps })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub alphas: Vec<f64>,
    pub f: Vec<f64>,
    pub fprime: Vec<f64>,
    pub minima: Vec<f64>,
    pub snngpp: Vec<f64>,
    pub batch_size: usize,
}

impl ScanResult {
    pub fn from_samples(alphas: Vec<f64>, f: Vec<f64>, fprime: Vec<f64>, batch_size: usize) -> Self {
        let minima = local_minima(&alphas, &f);
        let snngpp = sign_changes(&alphas, &fprime);
        Self { alphas, f, fprime, minima, snngpp, batch_size }
    }
}

/// Samples `F` and `F'` at every grid node, one draw per node.
pub fn scan_line(probe: &mut DirectionalProbe<'_>, grid: ScanGrid, batch_size: usize) -> Result<ScanResult, AnalysisError> {
    grid.validate()?;
    let alphas = grid.nodes();
    let mut f = Vec::with_capacity(alphas.len());
    let mut fprime = Vec::with_capacity(alphas.len());
    for &a in &alphas {
        let (v, s) = probe.eval_both(a)?;
        f.push(v);
        fprime.push(s);
    }
    Ok(ScanResult::from_samples(alphas, f, fprime, batch_size))
}

/// Locations of strict interior local minima.
pub fn local_minima(alphas: &[f64], f: &[f64]) -> Vec<f64> {
    f.windows(3)
        .enumerate()
        .filter(|(_, w)| w[0] > w[1] && w[2] > w[1])
        .map(|(i, _)| alphas[i + 1])
        .collect()
}

/// Midpoints of intervals where `F'` goes from negative to non-negative.
pub fn sign_changes(alphas: &[f64], fprime: &[f64]) -> Vec<f64> {
    fprime
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < 0.0 && w[1] >= 0.0)
        .map(|(i, _)| 0.5 * (alphas[i] + alphas[i + 1]))
        .collect()
}

pub fn count_local_minima(scan: &ScanResult) -> usize {
    scan.minima.len()
}

pub fn count_snngpp(scan: &ScanResult) -> usize {
    scan.snngpp.len()
}

/// Smallest interval around the mean detection that holds every detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallEstimate {
    pub center: f64,
    pub epsilon: f64,
    /// Scans contributing at least one detection.
    pub scans_used: usize,
    pub scans_excluded: usize,
}

/// `None` for an empty slice.
pub fn ball_from_locations(locations: &[f64]) -> Option<(f64, f64)> {
    if locations.is_empty() {
        return None;
    }
    let center = locations.iter().sum::<f64>() / locations.len() as f64;
    let epsilon = locations.iter().map(|a| (a - center).abs()).fold(0.0, f64::max);
    Some((center, epsilon))
}

/// Ball over the sign changes of all scans. Scans without a detection are
/// skipped with a warning.
pub fn estimate_ball(scans: &[ScanResult]) -> Result<BallEstimate, AnalysisError> {
    let excluded = scans.iter().filter(|s| s.snngpp.is_empty()).count();
    if excluded > 0 {
        log::warn!("{excluded} of {} scans have no sign change and are left out of the ball", scans.len());
    }
    let locations: Vec<f64> = scans.iter().flat_map(|s| s.snngpp.iter().copied()).collect();
    let (center, epsilon) = ball_from_locations(&locations).ok_or(AnalysisError::NoDetections)?;
    Ok(BallEstimate { center, epsilon, scans_used: scans.len() - excluded, scans_excluded: excluded })
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-batch-size statistics over repeated scans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountSummary {
    pub batch_size: usize,
    pub repeats: usize,
    pub minima_mean: f64,
    pub minima_std: f64,
    pub snngpp_mean: f64,
    pub snngpp_std: f64,
    /// `None` when no scan detected a sign change.
    pub ball: Option<BallEstimate>,
}

impl CountSummary {
    pub fn minima_se(&self) -> f64 {
        self.minima_std / (self.repeats as f64).sqrt()
    }

    pub fn snngpp_se(&self) -> f64 {
        self.snngpp_std / (self.repeats as f64).sqrt()
    }
}

pub fn summarize(scans: &[ScanResult]) -> CountSummary {
    let minima: Vec<f64> = scans.iter().map(|s| count_local_minima(s) as f64).collect();
    let snngpp: Vec<f64> = scans.iter().map(|s| count_snngpp(s) as f64).collect();
    let (minima_mean, minima_std) = mean_std(&minima);
    let (snngpp_mean, snngpp_std) = mean_std(&snngpp);
    CountSummary {
        batch_size: scans.first().map_or(0, |s| s.batch_size),
        repeats: scans.len(),
        minima_mean,
        minima_std,
        snngpp_mean,
        snngpp_std,
        ball: estimate_ball(scans).ok(),
    }
}

/// Scans the same line `repeats` times, each on a fresh objective built from
/// `make(repeat_index)`; only sampling differs between repeats.
pub fn repeat_scans<O: Objective>(
    mut make: impl FnMut(usize) -> O,
    origin: &[f64],
    direction: &[f64],
    grid: ScanGrid,
    repeats: usize,
) -> Result<Vec<ScanResult>, AnalysisError> {
    (0..repeats)
        .map(|r| {
            let mut objective = make(r);
            let batch_size = objective.batch_size();
            let mut probe = DirectionalProbe::new(&mut objective, origin.to_vec(), direction.to_vec())?;
            scan_line(&mut probe, grid, batch_size)
        })
        .collect()
}

/// Steepest-descent direction at `x` on `objective`, rescaled so that the
/// first sign change of `F'` sits at `alpha = target`.
///
/// With a full-batch objective this reproduces a scan whose single
/// minimiser lies at a known grid position.
pub fn descent_direction_with_root_at(
    objective: &mut dyn Objective,
    x: &[f64],
    target: f64,
) -> Result<Vec<f64>, AnalysisError> {
    let g = objective.gradient(x);
    let d: Vec<f64> = g.iter().map(|v| -v).collect();
    let slope = -dot(&g, &g);
    let root = {
        let mut probe = DirectionalProbe::new(objective, x.to_vec(), d.clone())?.with_origin_slope(slope);
        bgols(&mut probe, &BgolsConfig::default(), StepBounds::new(1e-12, 1e12))?.alpha
    };
    Ok(d.iter().map(|v| v * root / target).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::{SamplingPolicy, SyntheticQuadratic, Univariate};

    fn scan_closures(f: impl FnMut(f64) -> f64, df: impl FnMut(f64) -> f64) -> ScanResult {
        let mut obj = Univariate::new(f, df);
        let mut probe = DirectionalProbe::new(&mut obj, vec![0.0], vec![1.0]).unwrap();
        scan_line(&mut probe, ScanGrid::default(), 1).unwrap()
    }

    #[test]
    fn default_grid_covers_zero_to_ten() {
        let nodes = ScanGrid::default().nodes();
        assert_eq!(nodes.len(), 101);
        assert_eq!(nodes[0], 0.0);
        assert_eq!(nodes[100], 10.0);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn scan_counts_one_draw_per_node() {
        let mut obj = Univariate::new(|a| a, |_| 1.0);
        let mut probe = DirectionalProbe::new(&mut obj, vec![0.0], vec![1.0]).unwrap();
        scan_line(&mut probe, ScanGrid::default(), 1).unwrap();
        assert_eq!(probe.counter().function_evaluations, 101);
        assert_eq!(probe.counter().gradient_evaluations, 101);
    }

    #[test]
    fn bad_grid_rejected() {
        let mut obj = Univariate::new(|a| a, |_| 1.0);
        let mut probe = DirectionalProbe::new(&mut obj, vec![0.0], vec![1.0]).unwrap();
        let grid = ScanGrid { step: 0.0, ..Default::default() };
        assert!(matches!(scan_line(&mut probe, grid, 1), Err(AnalysisError::Grid { .. })));
    }

    #[test]
    fn quadratic_minimum_on_nearest_node() {
        let s = scan_closures(|a| (a - 2.5).powi(2), |a| 2.0 * (a - 2.5));
        let argmin = s.f.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((s.alphas[argmin] - 2.5).abs() < 1e-12);
        assert_eq!(s.minima.len(), 1);
        assert!((s.minima[0] - 2.5).abs() < 1e-12);
        assert_eq!(s.snngpp.len(), 1);
        assert!((s.snngpp[0] - s.minima[0]).abs() <= 0.1);
    }

    #[test]
    fn minima_rules() {
        let a = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(local_minima(&a, &[3.0, 1.0, 2.0, 0.0, 4.0]), [1.0, 3.0]);
        assert!(local_minima(&a, &[5.0, 4.0, 3.0, 2.0, 1.0]).is_empty());
        // Plateaus are not strict minima.
        assert!(local_minima(&a, &[2.0, 1.0, 1.0, 2.0, 3.0]).is_empty());
    }

    #[test]
    fn sign_change_rules() {
        let a = [0.0, 1.0, 2.0, 3.0];
        assert!(sign_changes(&a, &[-3.0, -2.0, -1.0, -0.5]).is_empty());
        assert_eq!(sign_changes(&a, &[-1.0, 0.0, 1.0, 2.0]), [0.5]);
        assert!(sign_changes(&a, &[1.0, -1.0, -1.0, -1.0]).is_empty());
    }

    #[test]
    fn linear_derivative_root() {
        let s = scan_closures(|_| 0.0, |a| a - 2.5);
        assert_eq!(count_snngpp(&s), 1);
        assert!((s.snngpp[0] - 2.5).abs() <= 0.05 + 1e-12);
    }

    #[test]
    fn deterministic_scans_repeat_exactly() {
        let a = scan_closures(|a| a.sin(), |a| a.cos());
        let b = scan_closures(|a| a.sin(), |a| a.cos());
        assert_eq!(a, b);
    }

    #[test]
    fn ball_arithmetic() {
        let (c, e) = ball_from_locations(&[2.3, 2.5, 2.7]).unwrap();
        assert!((c - 2.5).abs() < 1e-12);
        assert!((e - 0.2).abs() < 1e-12);
        assert_eq!(ball_from_locations(&[2.5, 2.5, 2.5]), Some((2.5, 0.0)));
        assert_eq!(ball_from_locations(&[]), None);
    }

    #[test]
    fn ball_skips_empty_scans() {
        let with = |snngpp: Vec<f64>| ScanResult {
            alphas: vec![],
            f: vec![],
            fprime: vec![],
            minima: vec![],
            snngpp,
            batch_size: 1,
        };
        let ball = estimate_ball(&[with(vec![2.0]), with(vec![]), with(vec![3.0])]).unwrap();
        assert_eq!(ball.center, 2.5);
        assert_eq!(ball.epsilon, 0.5);
        assert_eq!((ball.scans_used, ball.scans_excluded), (2, 1));
        assert_eq!(estimate_ball(&[with(vec![])]), Err(AnalysisError::NoDetections));
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(mean_std(&[1.0, 2.0, 3.0]), (2.0, 1.0));
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }

    fn noisy_scans(batch_size: usize) -> Vec<ScanResult> {
        let center = vec![1.0, -0.5];
        let origin = vec![0.0, 0.0];
        let direction = descent_direction_with_root_at(&mut SyntheticQuadratic::exact(center.clone()), &origin, 2.5).unwrap();
        repeat_scans(
            |r| SyntheticQuadratic::noisy(center.clone(), 1.0, batch_size, SamplingPolicy::Resample, 100 + r as u64),
            &origin,
            &direction,
            ScanGrid::default(),
            100,
        )
        .unwrap()
    }

    #[test]
    fn direction_is_rescaled_to_target_root() {
        let mut q = SyntheticQuadratic::exact(vec![1.0, -0.5]);
        let origin = vec![0.0, 0.0];
        let d = descent_direction_with_root_at(&mut q, &origin, 2.5).unwrap();
        let mut probe = DirectionalProbe::new(&mut q, origin, d).unwrap();
        let s = scan_line(&mut probe, ScanGrid::default(), 1).unwrap();
        assert_eq!(s.minima, [2.5]);
        assert_eq!(s.snngpp.len(), 1);
        assert!((s.snngpp[0] - 2.5).abs() <= 0.05 + 1e-12);
    }

    #[test]
    fn larger_batches_shrink_the_ball() {
        let small = summarize(&noisy_scans(2));
        let large = summarize(&noisy_scans(50));
        let (es, el) = (small.ball.unwrap().epsilon, large.ball.unwrap().epsilon);
        assert!(es >= el && el >= 0.0, "{es} vs {el}");
        assert!(small.snngpp_mean >= large.snngpp_mean);
    }
}

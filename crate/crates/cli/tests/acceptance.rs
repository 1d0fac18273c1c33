//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Run alone with `cargo test -p gols-cli --test acceptance`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gols_cli::{cmd_compare, cmd_scan, cmd_train, cost_table, run_scan, run_train, Cell, ExperimentSpec, ScanBatch};
use gols_core::linesearch::{bgols, effective_alpha_max, golden_section, igols, BgolsConfig, GsConfig, IgolsConfig, StepBounds};
use gols_core::net::{dot, Architecture, LabeledBatch};
use gols_core::probe::{DirectionalProbe, Objective, SyntheticQuadratic};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// 1. Backprop against a fourth-order central difference stencil.
fn gradient_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-3;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let input = rng.gen_range(1..=6);
        let output = rng.gen_range(1..=4);
        let hidden: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(1..=6)).collect();
        let arch = Architecture::new(input, &hidden, output).unwrap();
        let mut w: Vec<f64> = (0..arch.weight_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rows = rng.gen_range(1..=16);
        let x = (0..rows * input).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let labels: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..output)).collect();
        let batch = LabeledBatch::from_labels(x, &labels, input, output).unwrap();
        let g = arch.gradient(&w, &batch).unwrap().into_inner();
        for i in 0..w.len() {
            let keep = w[i];
            let mut at = |o: f64| {
                w[i] = keep + o;
                arch.loss(&w, &batch).unwrap()
            };
            let fd = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
            w[i] = keep;
            let scale = g[i].abs().max(fd.abs());
            let rel = if scale == 0.0 { 0.0 } else { (g[i] - fd).abs() / scale };
            worst = worst.max(rel);
        }
    }
    verdict(worst < 1e-6, format!("max relative error {worst:.2e} over 20 instances (< 1e-6)"))
}

/// `F(alpha) = 0.5 (1 - alpha)^2 |x0 - c|^2` along `-g` with `|x0 - c| = 0.5`,
/// so `alpha* = 1` and `alpha_max = 1 / |g| = 2`.
fn unit_quadratic() -> (SyntheticQuadratic, Vec<f64>, Vec<f64>, StepBounds) {
    let center = vec![0.3, -0.4, 0.0];
    let x0 = vec![0.0, 0.0, 0.0];
    let mut q = SyntheticQuadratic::exact(center);
    let g = q.gradient(&x0);
    let bounds = StepBounds::new(1e-8, effective_alpha_max(dot(&g, &g).sqrt(), 1e7));
    let d = g.iter().map(|v| -v).collect();
    (q, x0, d, bounds)
}

// 2. Exact searches find alpha* = 1; I-GOLS reproduces the hand trace.
fn oracle_equivalence() -> Verdict {
    let (mut q, x0, d, bounds) = unit_quadratic();
    let mut probe = DirectionalProbe::new(&mut q, x0.clone(), d.clone()).unwrap();
    let gs = golden_section(&mut probe, &GsConfig::default(), bounds).unwrap().alpha;
    let mut probe = DirectionalProbe::new(&mut q, x0.clone(), d.clone()).unwrap();
    let bg = bgols(&mut probe, &BgolsConfig::default(), bounds).unwrap().alpha;
    let mut probe = DirectionalProbe::new(&mut q, x0, d).unwrap();
    let ig = igols(&mut probe, &IgolsConfig::default(), 1e-8, bounds).unwrap().alpha;
    let pass = (gs - 1.0).abs() <= 1e-6 && (bg - 1.0).abs() <= 1e-11 && ig == 1.34217728;
    verdict(
        pass,
        format!("gs |a-1| {:.1e} (<= 1e-6), bgols |a-1| {:.1e} (<= 1e-11), igols {ig} (== 1.34217728)", (gs - 1.0).abs(), (bg - 1.0).abs()),
    )
}

// 3. Per-step interval shrink factors.
fn interval_rates() -> Verdict {
    // |g| = 0.125 gives alpha_max = 8: a dyadic initial bracket for bisection.
    let center = vec![0.075, 0.1];
    let x0 = vec![0.0, 0.0];
    let mut q = SyntheticQuadratic::exact(center);
    let g = q.gradient(&x0);
    let bounds = StepBounds::new(1e-8, effective_alpha_max(dot(&g, &g).sqrt(), 1e7));
    let d: Vec<f64> = g.iter().map(|v| -v).collect();

    let ratios = |intervals: &[f64]| -> Vec<f64> { intervals.windows(2).map(|w| w[1] / w[0]).collect() };
    let mut probe = DirectionalProbe::new(&mut q, x0.clone(), d.clone()).unwrap();
    let b = ratios(&bgols(&mut probe, &BgolsConfig::default(), bounds).unwrap().intervals);
    let mut probe = DirectionalProbe::new(&mut q, x0, d).unwrap();
    let s = ratios(&golden_section(&mut probe, &GsConfig::default(), bounds).unwrap().intervals);

    let worst = |r: &[f64], target: f64| r.iter().map(|v| (v - target).abs()).fold(0.0, f64::max);
    let (wb, ws) = (worst(&b, 0.5), worst(&s, 0.618));
    verdict(
        !b.is_empty() && !s.is_empty() && wb <= 1e-9 && ws <= 1e-3,
        format!("bgols {} steps, max |r-0.5| {wb:.1e} (<= 1e-9); gs {} steps, max |r-0.618| {ws:.1e} (<= 1e-3)", b.len(), s.len()),
    )
}

fn within_one_se(prev: (f64, f64), next: (f64, f64)) -> bool {
    next.0 <= prev.0 + (prev.1 * prev.1 + next.1 * next.1).sqrt()
}

// 4. Minima vs sign-change counts on iris.
fn scan_counts() -> Verdict {
    let spec = ExperimentSpec {
        scan: gols_cli::ScanSpec {
            batch_sizes: vec![ScanBatch::Rows(1), ScanBatch::Rows(10), ScanBatch::Rows(30), ScanBatch::Full],
            repeats: 100,
            ..Default::default()
        },
        ..Default::default()
    };
    let groups = run_scan(&spec).unwrap();
    let s: Vec<_> = groups.iter().map(|g| g.summary).collect();
    let single = s[0].snngpp_mean <= s[0].minima_mean;
    let full = s[3].minima_mean == 1.0 && s[3].snngpp_mean == 1.0;
    let monotone = s.windows(2).all(|w| {
        within_one_se((w[0].minima_mean, w[0].minima_se()), (w[1].minima_mean, w[1].minima_se()))
            && within_one_se((w[0].snngpp_mean, w[0].snngpp_se()), (w[1].snngpp_mean, w[1].snngpp_se()))
    });
    let table: Vec<String> = groups
        .iter()
        .map(|g| format!("{}: {:.2}/{:.2}", g.batch, g.summary.minima_mean, g.summary.snngpp_mean))
        .collect();
    verdict(
        single && full && monotone,
        format!(
            "minima/snngpp means {} | batch1 snngpp<=minima {single}, full==1 {full}, non-increasing within 1 SE {monotone}",
            table.join(", ")
        ),
    )
}

// 5. Sign-change spread shrinks with batch size.
fn ball_shrinkage() -> Verdict {
    let spec = ExperimentSpec {
        scan: gols_cli::ScanSpec { batch_sizes: vec![ScanBatch::Rows(10), ScanBatch::Rows(50)], repeats: 100, ..Default::default() },
        ..Default::default()
    };
    let groups = run_scan(&spec).unwrap();
    let eps: Vec<Option<f64>> = groups.iter().map(|g| g.summary.ball.map(|b| b.epsilon)).collect();
    match (eps[0], eps[1]) {
        (Some(e10), Some(e50)) => {
            verdict(e10 >= e50 && e50 >= 0.0, format!("epsilon batch 10 = {e10:.3} >= batch 50 = {e50:.3} >= 0"))
        }
        _ => verdict(false, "a batch size produced no sign changes"),
    }
}

fn sweep_spec() -> ExperimentSpec {
    ExperimentSpec::default()
}

// 6. Information calls per iteration over the 3000-iteration sweep.
fn cost_ordering(cells: &[Cell]) -> Verdict {
    let table = cost_table(&sweep_spec(), cells);
    let info = |name: &str| table.iter().find(|r| r.resolver == name).unwrap().infocalls_per_iter;
    let (gs, arls, bgols, igols) = (info("gs"), info("arls"), info("bgols"), info("igols"));
    let pass = igols < bgols && arls < gs && bgols >= 3.0 * igols && gs >= 3.0 * arls;
    verdict(
        pass,
        format!(
            "info calls/iter gs {gs:.1}, arls {arls:.1}, bgols {bgols:.1}, igols {igols:.1}; exact/inexact {:.1}x (gs/arls), {:.1}x (bgols/igols), need >= 3x",
            gs / arls,
            bgols / igols
        ),
    )
}

// 7. Final training loss at equal cost, per shared-seed repeat.
fn quality_ordering(cells: &[Cell]) -> Verdict {
    let trace = |name: &str, r: usize| &cells.iter().find(|c| c.resolver == name && c.repeat == r).unwrap().run.trace;
    let wins = |a: &str, b: &str| {
        (0..sweep_spec().repeats)
            .filter(|&r| {
                let (ta, tb) = (trace(a, r), trace(b, r));
                let budget = ta.last().cost().min(tb.last().cost());
                ta.at_cost(budget).losses.train <= tb.at_cost(budget).losses.train
            })
            .count()
    };
    let (ia, bg) = (wins("igols", "arls"), wins("bgols", "gs"));
    verdict(ia >= 8 && bg >= 8, format!("igols <= arls in {ia}/10, bgols <= gs in {bg}/10 (need >= 8 each)"))
}

// 8. Every accepted step lies inside its bounds.
fn step_caps(cells: &[Cell]) -> Verdict {
    let mut checked = 0usize;
    let mut zero_gradient = 0usize;
    let mut bad = Vec::new();
    for c in cells {
        for r in &c.run.trace.records[1..] {
            let alpha = r.alpha.unwrap();
            let upper = effective_alpha_max(r.gradient_norm, 1e7).max(1e-8);
            checked += 1;
            // A zero direction gradient leaves x unchanged; the trainer records alpha = 0.
            if r.gradient_norm == 0.0 {
                zero_gradient += 1;
                continue;
            }
            if !(1e-8..=upper).contains(&alpha) {
                bad.push(format!("{} rep {} it {}: {alpha} not in [1e-8, {upper}]", c.resolver, c.repeat, r.iteration));
            }
        }
    }
    let detail = match bad.first() {
        None => format!("{checked} steps checked, all within [1e-8, min(1/|g|, 1e7)]; {zero_gradient} zero-gradient iterations"),
        Some(first) => format!("{} of {checked} steps outside bounds, e.g. {first}", bad.len()),
    };
    verdict(bad.is_empty(), detail)
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    files
}

// 9. Same spec twice, byte-identical outputs.
fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec { repeats: 3, iterations: 300, out: dir.path().to_path_buf(), ..Default::default() };
    let run = || {
        cmd_train(&spec).unwrap();
        cmd_scan(&spec).unwrap();
        cmd_compare(&spec).unwrap();
        snapshot(dir.path())
    };
    let first = run();
    let second = run();
    let bytes: usize = first.values().map(Vec::len).sum();
    verdict(first == second, format!("{} files, {bytes} bytes, identical across two runs: {}", first.len(), first == second))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, limit: Option<Duration>, check: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = check();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took <= l);
        let pass = v.pass && in_time;
        if !pass {
            failures += 1;
        }
        let time = match limit {
            Some(l) => format!("{took:.2?}, limit {l:?}"),
            None => format!("{took:.2?}"),
        };
        println!("{} [{n}] {name}: {} ({time})", if pass { "PASS" } else { "FAIL" }, v.detail);
    };

    report(1, "gradient correctness", Some(Duration::from_secs(10)), &mut gradient_correctness);
    report(2, "line-search oracle equivalence", Some(Duration::from_secs(1)), &mut oracle_equivalence);
    report(3, "interval reduction rates", None, &mut interval_rates);
    report(4, "scan counts vs batch size", Some(Duration::from_secs(120)), &mut scan_counts);
    report(5, "ball shrinkage", None, &mut ball_shrinkage);

    let start = Instant::now();
    let cells = run_train(&sweep_spec()).unwrap();
    let sweep_time = start.elapsed();
    report(6, "cost ordering", Some(Duration::from_secs(600)), &mut || {
        let v = cost_ordering(&cells);
        verdict(v.pass && sweep_time <= Duration::from_secs(600), format!("{}; sweep {sweep_time:.2?}", v.detail))
    });
    report(7, "training-quality ordering", None, &mut || quality_ordering(&cells));
    report(8, "step caps", None, &mut || step_caps(&cells));
    report(9, "determinism", None, &mut determinism);

    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

//! Throughput measurement on a seeded sample of prefixes, and a sweep over
//! lookahead windows.

use std::ops::RangeInclusive;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::engine::Engine;
use crate::montecarlo::sample_path;
use crate::error::{Error, Result};
use crate::plan::{place_lookahead, without_lookahead, FillPlan};

/// Reference rate for the throughput warning, squares per second.
pub const SOFT_RATE_FLOOR: f64 = 1.0e6;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    /// Depth at which the search is split into prefixes.
    pub depth: usize,
    /// Prefixes drawn from that depth.
    pub prefixes: usize,
    pub seed: u64,
    /// Stop drawing new prefixes once this much time has passed.
    pub budget: Duration,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub order: usize,
    pub constraints: String,
    pub window: Option<(usize, usize)>,
    pub prefixes: usize,
    pub squares: u128,
    pub nodes: u64,
    pub seconds: f64,
    pub rate: f64,
}

impl BenchReport {
    pub fn below_floor(&self) -> bool {
        self.rate < SOFT_RATE_FLOOR
    }
}

/// Completions per prefix aimed at by [`default_bench_depth`].
pub const DEFAULT_PREFIX_SQUARES: f64 = 1.0e5;

/// Seeded random root paths of `depth` steps that pass every check. Paths
/// that die are redrawn. A seed gives the same prefixes for every plan
/// sharing those steps and checks.
pub fn sample_prefixes(plan: &FillPlan, depth: usize, count: usize, seed: u64) -> Result<Vec<Vec<u8>>> {
    if depth == 0 || depth > plan.len() {
        return Err(Error::InvalidDepth {
            depth,
            reason: format!("must lie in 1..={}", plan.len()),
        });
    }
    let mut e = Engine::new(plan);
    let mut out = Vec::with_capacity(count);
    let tries = (count as u64).saturating_mul(1000).max(10_000);
    let mut index = 0;
    while out.len() < count && index < tries {
        let p = sample_path(&mut e, depth, seed, index);
        index += 1;
        if p.weight > 0 {
            out.push(p.prefix);
        }
    }
    if out.is_empty() && count > 0 {
        return Err(Error::InvalidDepth {
            depth,
            reason: format!("no valid prefix found in {tries} draws"),
        });
    }
    Ok(out)
}

/// Shallowest depth, moving up one step at a time from the last, at which
/// none of 32 sampled prefixes has more than `per_prefix` completions.
/// Completion counts are heavy-tailed, so the maximum is used, not the mean.
pub fn default_bench_depth(plan: &FillPlan, per_prefix: f64) -> usize {
    let mut best = plan.len().max(1);
    let mut e = Engine::new(plan);
    for d in (1..=plan.len()).rev() {
        let Ok(prefixes) = sample_prefixes(plan, d, 32, 0) else {
            break;
        };
        let mut worst = 0u128;
        for p in &prefixes {
            e.apply_prefix(p).expect("sampled prefixes are valid");
            worst = worst.max(e.count_from_here().0);
            if worst as f64 > per_prefix {
                break;
            }
        }
        if worst as f64 > per_prefix {
            break;
        }
        best = d;
    }
    best
}

/// Counts completions of `prefixes` under `plan` until the budget runs out.
pub fn run_bench(plan: &FillPlan, prefixes: &[Vec<u8>], budget: Duration) -> Result<BenchReport> {
    let start = Instant::now();
    let mut e = Engine::new(plan);
    let (mut squares, mut nodes, mut done) = (0u128, 0u64, 0usize);
    for p in prefixes {
        if done > 0 && start.elapsed() >= budget {
            break;
        }
        e.apply_prefix(p)?;
        let (c, n) = e.count_from_here();
        squares += c;
        nodes += n;
        done += 1;
    }
    let seconds = start.elapsed().as_secs_f64();
    Ok(BenchReport {
        order: plan.n(),
        constraints: plan.constraints().code().to_string(),
        window: plan.lookahead_window(),
        prefixes: done,
        squares,
        nodes,
        seconds,
        rate: if seconds > 0.0 { squares as f64 / seconds } else { 0.0 },
    })
}

pub fn bench(plan: &FillPlan, cfg: &BenchConfig) -> Result<BenchReport> {
    let prefixes = sample_prefixes(plan, cfg.depth, cfg.prefixes, cfg.seed)?;
    run_bench(plan, &prefixes, cfg.budget)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub runs: Vec<BenchReport>,
    /// Window of the fastest run; `None` when no window beat running
    /// without lookahead.
    pub recommended: Option<(usize, usize)>,
}

/// Candidate windows `a..=b` with both ends on a grid of `stride` steps
/// after `depth`.
pub fn window_grid(plan: &FillPlan, depth: usize, stride: usize) -> Vec<RangeInclusive<usize>> {
    let stride = stride.max(1);
    let first = depth + 1;
    let mut out = Vec::new();
    let mut a = first;
    while a <= plan.len() {
        let mut b = a + stride - 1;
        while b <= plan.len() {
            out.push(a..=b);
            b += stride;
        }
        a += stride;
    }
    out
}

/// Times the same prefixes without lookahead and with each window. Every
/// run processes every prefix, so squares must agree across runs.
pub fn sweep_lookahead(
    plan: &FillPlan,
    windows: &[RangeInclusive<usize>],
    cfg: &BenchConfig,
) -> Result<SweepReport> {
    let base = without_lookahead(plan);
    let prefixes = sample_prefixes(&base, cfg.depth, cfg.prefixes, cfg.seed)?;
    let unlimited = Duration::MAX;
    let mut runs = vec![run_bench(&base, &prefixes, unlimited)?];
    for w in windows {
        if *w.start() <= cfg.depth {
            return Err(Error::WindowOutOfRange {
                start: *w.start(),
                end: *w.end(),
                len: plan.len(),
            });
        }
        let p = place_lookahead(&base, w.clone())?;
        let r = run_bench(&p, &prefixes, unlimited)?;
        if r.squares != runs[0].squares {
            return Err(Error::Unsupported(format!(
                "window {}..={} changed the count from {} to {}",
                w.start(),
                w.end(),
                runs[0].squares,
                r.squares
            )));
        }
        runs.push(r);
    }
    let best = runs
        .iter()
        .min_by(|a, b| a.seconds.total_cmp(&b.seconds))
        .and_then(|r| r.window);
    Ok(SweepReport {
        runs,
        recommended: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{compute_plan, FixedPrefix};
    use crate::square::{ConstraintSet, Order};

    #[test]
    fn sweep_keeps_counts() {
        let plan = compute_plan(Order::new(6).unwrap(), ConstraintSet::DLS, FixedPrefix::FirstRow).unwrap();
        let cfg = BenchConfig {
            depth: 2,
            prefixes: 50,
            seed: 1,
            budget: Duration::from_secs(5),
        };
        let windows = window_grid(&plan, 2, 6);
        let r = sweep_lookahead(&plan, &windows, &cfg).unwrap();
        assert_eq!(r.runs.len(), windows.len() + 1);
        assert!(r.runs.iter().all(|x| x.squares == r.runs[0].squares));
    }

    #[test]
    fn default_depth_bounds_the_work() {
        let plan = compute_plan(Order::new(7).unwrap(), ConstraintSet::DLS, FixedPrefix::FirstRow).unwrap();
        let d = default_bench_depth(&plan, 100.0);
        assert!(d > 1 && d < plan.len());
        assert_eq!(default_bench_depth(&plan, 1e12), 1);
    }

    #[test]
    fn sample_is_seeded() {
        let plan = compute_plan(Order::new(7).unwrap(), ConstraintSet::DLS, FixedPrefix::FirstRow).unwrap();
        let a = sample_prefixes(&plan, 3, 10, 9).unwrap();
        assert_eq!(a, sample_prefixes(&plan, 3, 10, 9).unwrap());
        assert_eq!(a.len(), 10);
        let mut e = Engine::new(&plan);
        for p in &a {
            e.apply_prefix(p).unwrap();
        }
    }
}

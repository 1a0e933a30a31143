//! Estimating square counts from row-major prefixes and sampled completion
//! counts.
//!
//! Two estimators: an importance sampler that walks random root paths and
//! weights each by the product of its branch factors, and a uniform-prefix
//! sampler that draws prefixes by reservoir sampling over a full prefix walk.

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{count_partial, total_multiplier, Engine};
use crate::error::{Error, Result};
use crate::plan::{row_major_prefix_plan, FillPlan};
use crate::square::{ConstraintSet, Order};

/// Identifier of the random source, recorded in every report.
pub const GENERATOR_ID: &str = "chacha8-seed_from_u64-stream_per_sample";

/// Memo entries kept per worker before new prefixes stop being cached.
const MEMO_CAP: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Importance,
    UniformPrefix,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "importance" => Ok(Method::Importance),
            "uniform-prefix" | "uniform" => Ok(Method::UniformPrefix),
            _ => Err(Error::Parse(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    pub order: Order,
    pub constraints: ConstraintSet,
    /// Cells in the prefix, counted in row-major order with the first row.
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
    pub method: Method,
    /// Worker threads; 0 means all available.
    pub threads: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub order: usize,
    pub constraints: String,
    pub depth: usize,
    pub method: Method,
    pub seed: u64,
    pub generator: &'static str,
    /// Exact number of depth-k prefixes; computed by the uniform method only.
    #[serde(serialize_with = "ser_opt_u128")]
    pub prefix_count: Option<u128>,
    /// Importance estimate of the prefix count (mean path weight).
    pub prefix_count_estimate: f64,
    pub mean_completions: f64,
    /// Estimated number of squares with the first row fixed.
    pub estimate: f64,
    pub std_error: f64,
    /// `estimate` scaled to all squares.
    pub total_estimate: f64,
    pub total_std_error: f64,
    pub samples_used: usize,
    pub zero_weight_samples: usize,
    pub distinct_prefixes: usize,
    pub nodes: u64,
    #[serde(serialize_with = "ser_secs")]
    pub elapsed: Duration,
}

fn ser_opt_u128<S: serde::Serializer>(v: &Option<u128>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) if *x < (1u128 << 53) => s.serialize_u64(*x as u64),
        Some(x) => s.serialize_str(&x.to_string()),
        None => s.serialize_str("not computed"),
    }
}

fn ser_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// Prefix count for `k` row-major cells; same contract as `count_partial`.
pub fn prefix_count(order: Order, cs: ConstraintSet, k: usize) -> Result<u128> {
    count_partial(order, cs, k)
}

/// Plan whose first `k - n` steps are the row-major prefix cells.
pub fn sampling_plan(order: Order, cs: ConstraintSet, k: usize) -> Result<FillPlan> {
    row_major_prefix_plan(order, cs, k)
}

/// One random root path of the importance sampler.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSample {
    /// Symbols chosen so far; shorter than the head when the path died.
    pub prefix: Vec<u8>,
    /// Product of branch factors, or 0 when the path died.
    pub weight: u128,
}

/// Draws the path for sample `index` of a run seeded with `seed`.
pub fn sample_path(engine: &mut Engine, head: usize, seed: u64, index: u64) -> PathSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    engine.reset();
    let mut weight = 1u128;
    let mut prefix = Vec::with_capacity(head);
    for d in 0..head {
        let c = engine.candidates(d);
        let k = c.count();
        if k == 0 {
            return PathSample { prefix, weight: 0 };
        }
        let pick = rng.gen_range(0..k) as usize;
        let v = c.iter().nth(pick).expect("pick below popcount");
        weight *= k as u128;
        prefix.push(v);
        if engine.assign(v).is_err() {
            return PathSample { prefix, weight: 0 };
        }
    }
    PathSample { prefix, weight }
}

/// Product of branch factors along `prefix`, 0 if it is not a valid path.
pub fn path_weight(plan: &FillPlan, prefix: &[u8]) -> u128 {
    let mut e = Engine::new(plan);
    let mut w = 1u128;
    for (d, &v) in prefix.iter().enumerate() {
        w *= e.candidates(d).count() as u128;
        if e.assign(v).is_err() {
            return 0;
        }
    }
    w
}

struct Worker {
    engine: Engine,
    counter: Engine,
    memo: HashMap<Vec<u8>, u128>,
    nodes: u64,
}

impl Worker {
    fn new(plan: &FillPlan) -> Self {
        Worker {
            engine: Engine::new(plan),
            counter: Engine::new(plan),
            memo: HashMap::new(),
            nodes: 0,
        }
    }

    fn completions(&mut self, prefix: &[u8]) -> u128 {
        if let Some(&c) = self.memo.get(prefix) {
            return c;
        }
        self.counter
            .apply_prefix(prefix)
            .expect("sampled prefixes are valid");
        let (c, nodes) = self.counter.count_from_here();
        self.nodes += nodes;
        if self.memo.len() < MEMO_CAP {
            self.memo.insert(prefix.to_vec(), c);
        }
        c
    }
}

fn thread_count(requested: usize, work: usize) -> usize {
    let t = if requested == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        requested
    };
    t.clamp(1, work.max(1))
}

/// Runs `f(worker, i)` for `i in 0..count` on a pool; results come back in
/// index order.
fn parallel_map<T: Send + Default + Clone>(
    plan: &FillPlan,
    count: usize,
    threads: usize,
    f: impl Fn(&mut Worker, usize) -> T + Sync,
) -> (Vec<T>, u64, usize) {
    let next = AtomicUsize::new(0);
    let out = Mutex::new(vec![T::default(); count]);
    let stats = Mutex::new((0u64, 0usize));
    std::thread::scope(|scope| {
        for _ in 0..thread_count(threads, count) {
            scope.spawn(|| {
                let mut w = Worker::new(plan);
                let mut local = Vec::new();
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= count {
                        break;
                    }
                    local.push((i, f(&mut w, i)));
                }
                let mut o = out.lock().unwrap();
                for (i, v) in local {
                    o[i] = v;
                }
                let mut s = stats.lock().unwrap();
                s.0 += w.nodes;
                s.1 += w.memo.len();
            });
        }
    });
    let (nodes, distinct) = stats.into_inner().unwrap();
    (out.into_inner().unwrap(), nodes, distinct)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn validate(cfg: &EstimatorConfig) -> Result<FillPlan> {
    let n = cfg.order.get();
    if cfg.samples == 0 {
        return Err(Error::InvalidDepth {
            depth: cfg.depth,
            reason: "at least one sample is needed".into(),
        });
    }
    if cfg.depth < n {
        return Err(Error::InvalidDepth {
            depth: cfg.depth,
            reason: format!("the prefix must cover the first row ({n} cells)"),
        });
    }
    sampling_plan(cfg.order, cfg.constraints, cfg.depth)
}

pub fn estimate(cfg: &EstimatorConfig) -> Result<EstimateReport> {
    let start = Instant::now();
    let plan = validate(cfg)?;
    let head = cfg.depth - cfg.order.get();
    let mult = total_multiplier(&plan) as f64;
    let mut report = EstimateReport {
        order: cfg.order.get(),
        constraints: cfg.constraints.code().to_string(),
        depth: cfg.depth,
        method: cfg.method,
        seed: cfg.seed,
        generator: GENERATOR_ID,
        prefix_count: None,
        prefix_count_estimate: 0.0,
        mean_completions: 0.0,
        estimate: 0.0,
        std_error: 0.0,
        total_estimate: 0.0,
        total_std_error: 0.0,
        samples_used: 0,
        zero_weight_samples: 0,
        distinct_prefixes: 0,
        nodes: 0,
        elapsed: Duration::ZERO,
    };
    match cfg.method {
        Method::Importance => {
            let seed = cfg.seed;
            let (rows, nodes, distinct) =
                parallel_map(&plan, cfg.samples, cfg.threads, |w, i| {
                    let p = sample_path(&mut w.engine, head, seed, i as u64);
                    if p.weight == 0 {
                        return (0.0, 0.0);
                    }
                    let c = w.completions(&p.prefix);
                    (p.weight as f64, p.weight as f64 * c as f64)
                });
            let weights: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let (est, se) = mean_and_se(&values);
            let (wmean, _) = mean_and_se(&weights);
            report.prefix_count_estimate = wmean;
            report.mean_completions = if wmean > 0.0 { est / wmean } else { 0.0 };
            report.estimate = est;
            report.std_error = se;
            report.samples_used = cfg.samples;
            report.zero_weight_samples = weights.iter().filter(|&&w| w == 0.0).count();
            report.nodes = nodes;
            report.distinct_prefixes = distinct;
        }
        Method::UniformPrefix => {
            let (population, chosen) = reservoir(&plan, head, cfg.samples, cfg.seed);
            let (counts, nodes, distinct) =
                parallel_map(&plan, chosen.len(), cfg.threads, |w, i| {
                    w.completions(&chosen[i]) as f64
                });
            let (mean, se) = mean_and_se(&counts);
            let n_pop = population as f64;
            let m = chosen.len() as f64;
            let fpc = if population > 1 {
                ((n_pop - m) / (n_pop - 1.0)).max(0.0).sqrt()
            } else {
                0.0
            };
            report.prefix_count = Some(population);
            report.prefix_count_estimate = n_pop;
            report.mean_completions = mean;
            report.estimate = n_pop * mean;
            report.std_error = n_pop * se * fpc;
            report.samples_used = chosen.len();
            report.nodes = nodes;
            report.distinct_prefixes = distinct;
        }
    }
    report.total_estimate = report.estimate * mult;
    report.total_std_error = report.std_error * mult;
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Algorithm R over every valid head prefix. Returns the population size
/// and up to `m` prefixes in reservoir order.
fn reservoir(plan: &FillPlan, head: usize, m: usize, seed: u64) -> (u128, Vec<Vec<u8>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<Vec<u8>> = Vec::with_capacity(m.min(1 << 20));
    let mut seen = 0u128;
    let mut e = Engine::new(plan);
    let mut take = |e: &Engine| {
        let prefix: Vec<u8> = (0..head).map(|d| e.symbol_at(d)).collect();
        if pool.len() < m {
            pool.push(prefix);
        } else {
            let j = rng.gen_range(0..=seen);
            if j < m as u128 {
                pool[j as usize] = prefix;
            }
        }
        seen += 1;
    };
    if head == 0 {
        take(&e);
    } else {
        e.walk(head, |e| {
            take(e);
            true
        });
    }
    (seen, pool)
}

//! Enumeration with symmetry breaking on hourglass designs.
//!
//! The plan fills the hourglass first. Each complete hourglass is checked
//! against its class under the hourglass group; only the smallest member is
//! completed, and its completion count is weighted by the class size.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::engine::{pool, resolve_threads, split_prefixes, Engine};
use crate::error::{Error, Result};
use crate::plan::{compute_hourglass_plan, FillPlan, PlanLayout};
use crate::square::{ConstraintSet, Order};
use crate::transform::{Canonizer, HourglassGroup};

/// How a complete hourglass contributes to the total.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymMode {
    /// Only canonical designs are completed, weighted by class size.
    Canonical,
    /// Every design contributes the completion count of its canonical
    /// form. Gives the same subtotal as the plain engine for any prefix,
    /// which makes it a per-prefix check of the weighting argument.
    Representative,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SymEnumReport {
    pub total: u128,
    pub hourglass_seen: u64,
    pub canonical: u64,
    pub multiplicity_sum: u64,
    pub nodes: u64,
    #[serde(serialize_with = "ser_secs")]
    pub elapsed: Duration,
}

fn ser_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl SymEnumReport {
    pub fn merge(&mut self, other: &SymEnumReport) {
        self.total += other.total;
        self.hourglass_seen += other.hourglass_seen;
        self.canonical += other.canonical;
        self.multiplicity_sum += other.multiplicity_sum;
        self.nodes += other.nodes;
        self.elapsed += other.elapsed;
    }
}

/// Plan filling diagonals, then the last row, then everything else.
pub fn hourglass_plan(order: Order, cs: ConstraintSet) -> Result<FillPlan> {
    compute_hourglass_plan(order, cs)
}

#[derive(Clone, Copy, Debug)]
enum Source {
    Fixed(u8),
    Step { step: usize, mirrored: bool },
}

/// Reusable symmetry-broken counter for one order and constraint set.
#[derive(Clone)]
pub struct SymEnumerator {
    plan: FillPlan,
    boundary: usize,
    canonizer: Canonizer,
    sources: Vec<Source>,
    step_pos: Vec<usize>,
    n: u8,
}

impl SymEnumerator {
    pub fn new(order: Order, cs: ConstraintSet) -> Result<Self> {
        Self::with_plan(hourglass_plan(order, cs)?)
    }

    /// `plan` must come from [`hourglass_plan`], possibly with a lookahead
    /// window added.
    pub fn with_plan(plan: FillPlan) -> Result<Self> {
        let boundary = plan.hourglass_boundary().ok_or_else(|| {
            Error::Unsupported("plan does not fill the hourglass first".into())
        })?;
        debug_assert_eq!(plan.layout(), PlanLayout::Hourglass);
        let order = plan.order();
        let cs = plan.constraints();
        let n = order.get();
        let group = HourglassGroup::new(order, cs)?;
        let steps = plan.step_of_cells();
        let mut sources = Vec::with_capacity(group.cells().len());
        let mut pos_of = vec![usize::MAX; n * n];
        for (p, &cell) in group.cells().iter().enumerate() {
            pos_of[cell.index(n)] = p;
            let src = if cell.row == 0 {
                Source::Fixed(cell.col as u8)
            } else if let Some(step) = steps[cell.index(n)] {
                Source::Step {
                    step,
                    mirrored: false,
                }
            } else {
                let m = cell.mirrored(n);
                let step = steps[m.index(n)].ok_or_else(|| {
                    Error::Shape(format!("hourglass cell {cell} has no step"))
                })?;
                Source::Step {
                    step,
                    mirrored: true,
                }
            };
            if let Source::Step { step, .. } = src {
                if step >= boundary {
                    return Err(Error::Shape(format!(
                        "hourglass cell {cell} is filled after the boundary"
                    )));
                }
            }
            sources.push(src);
        }
        let step_pos = plan.steps()[..boundary]
            .iter()
            .map(|s| pos_of[s.cell.index(n)])
            .collect();
        Ok(SymEnumerator {
            canonizer: Canonizer::new(&group),
            plan,
            boundary,
            sources,
            step_pos,
            n: n as u8,
        })
    }

    pub fn plan(&self) -> &FillPlan {
        &self.plan
    }

    pub fn boundary(&self) -> usize {
        self.boundary
    }

    pub fn group_len(&self) -> usize {
        self.canonizer.group_len()
    }

    fn read_hourglass(&self, e: &Engine, out: &mut [u8]) {
        for (slot, src) in out.iter_mut().zip(&self.sources) {
            *slot = match *src {
                Source::Fixed(v) => v,
                Source::Step { step, mirrored } => {
                    let v = e.symbol_at(step);
                    if mirrored {
                        self.n - 1 - v
                    } else {
                        v
                    }
                }
            };
        }
    }

    /// Runs from scratch.
    pub fn run(&self, mode: SymMode) -> SymEnumReport {
        self.run_prefix(&[], mode).expect("empty prefix is always valid")
    }

    /// Counts the completions of a prefix of at most `boundary` steps.
    pub fn run_prefix(&self, prefix: &[u8], mode: SymMode) -> Result<SymEnumReport> {
        let start = Instant::now();
        if prefix.len() > self.boundary {
            return Err(Error::InvalidPrefix {
                step: self.boundary,
                reason: format!(
                    "symmetry breaking needs prefixes of at most {} steps",
                    self.boundary
                ),
            });
        }
        let mut e = Engine::new(&self.plan);
        e.apply_prefix(prefix)?;
        let mut rep = match mode {
            SymMode::Representative => Some(Engine::new(&self.plan)),
            SymMode::Canonical => None,
        };
        let mut report = SymEnumReport::default();
        let len = self.sources.len();
        let mut h = vec![0u8; len];
        let mut min = vec![0u8; len];
        let mut rep_prefix = vec![0u8; self.boundary];
        let mut canonizer = self.canonizer.clone();

        let walk_nodes = e.walk(self.boundary, |e| {
            report.hourglass_seen += 1;
            self.read_hourglass(e, &mut h);
            match rep.as_mut() {
                None => {
                    let mult = canonizer.check(&h);
                    if mult > 0 {
                        report.canonical += 1;
                        report.multiplicity_sum += mult;
                        let (c, nodes) = e.count_from_here();
                        report.total += c * mult as u128;
                        report.nodes += nodes;
                    }
                }
                Some(r) => {
                    let class = canonizer.minimize(&h, &mut min);
                    if min == h {
                        report.canonical += 1;
                        report.multiplicity_sum += class;
                    }
                    for (d, v) in rep_prefix.iter_mut().enumerate() {
                        *v = min[self.step_pos[d]];
                    }
                    r.apply_prefix(&rep_prefix)
                        .expect("images of a valid hourglass are valid");
                    let (c, nodes) = r.count_from_here();
                    report.total += c;
                    report.nodes += nodes;
                }
            }
            true
        });
        report.nodes += walk_nodes;
        report.elapsed = start.elapsed();
        Ok(report)
    }
}

impl SymEnumerator {
    /// [`run`](Self::run) split over `threads` workers (0 = all cores).
    pub fn run_threads(&self, mode: SymMode, threads: usize) -> SymEnumReport {
        let threads = resolve_threads(threads);
        if threads <= 1 || self.boundary == 0 {
            return self.run(mode);
        }
        let start = Instant::now();
        let (prefixes, nodes) = split_prefixes(&self.plan, self.boundary, 64 * threads);
        let mut report = SymEnumReport {
            nodes,
            ..Default::default()
        };
        pool(
            &prefixes,
            threads,
            || (),
            |_, p| {
                self.run_prefix(p, mode)
                    .expect("walked prefixes fit the boundary")
            },
            |r| report.merge(&r),
        );
        report.elapsed = start.elapsed();
        report
    }
}

/// Symmetry-broken count of every square with the first row fixed.
pub fn enumerate_sym(order: Order, cs: ConstraintSet) -> Result<SymEnumReport> {
    Ok(SymEnumerator::new(order, cs)?.run(SymMode::Canonical))
}

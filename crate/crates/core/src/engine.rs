//! Bitmask backtracking over a [`FillPlan`].
//!
//! Every row, column and constrained diagonal keeps a mask of the symbols it
//! already holds. The candidates of a cell are the complement of the union of
//! its unit masks; candidates are tried lowest bit first using `x & -x` and
//! dropped with `x & (x - 1)`. Under vertical symmetry only the left half is
//! planned and each assignment also places `n - 1 - v` in the mirror cell.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::plan::{row_major_prefix_plan, FillPlan, FixedPrefix, StepKind};
use crate::square::{Cell, ConstraintSet, Order, SquareGrid, SymbolMask, Unit, EMPTY, MAX_ORDER};

const UNITS: usize = 2 * MAX_ORDER + 3;
const COL0: usize = MAX_ORDER;
const MD: usize = 2 * MAX_ORDER;
const AD: usize = 2 * MAX_ORDER + 1;
/// Always-empty slot: branch steps point their forcing unit here.
const FREE: usize = 2 * MAX_ORDER + 2;

fn unit_slot(u: Unit) -> usize {
    match u {
        Unit::Row(r) => r,
        Unit::Column(c) => COL0 + c,
        Unit::MainDiagonal => MD,
        Unit::AntiDiagonal => AD,
    }
}

#[inline(always)]
fn mirror_bits(x: u32, n: u32) -> u32 {
    x.reverse_bits() >> (32 - n)
}

/// Symbol of the cell that completes a unit holding `n - 1` symbols.
pub fn forced_value(unit_mask: SymbolMask, n: usize) -> Result<u8> {
    let missing = SymbolMask::all(n) ^ (unit_mask & SymbolMask::all(n));
    if missing.count() != 1 {
        return Err(Error::NotForced {
            found: (unit_mask & SymbolMask::all(n)).count(),
            expected: n as u32 - 1,
        });
    }
    Ok(missing.lowest().unwrap())
}

/// Unit selectors of one planned cell and, under symmetry, of its mirror.
#[derive(Clone, Copy, Debug, Default)]
struct Probe {
    row: u8,
    col: u8,
    md: u32,
    ad: u32,
    mcol: u8,
    mmd: u32,
    mad: u32,
    idx: u16,
    midx: u16,
}

impl Probe {
    fn new(cell: Cell, n: usize, cs: ConstraintSet) -> Self {
        let sel = |b: bool| if b { u32::MAX } else { 0 };
        let m = cell.mirrored(n);
        Probe {
            row: cell.row as u8,
            col: (COL0 + cell.col) as u8,
            md: sel(cs.main_diagonal && cell.on_main_diagonal()),
            ad: sel(cs.anti_diagonal && cell.on_anti_diagonal(n)),
            mcol: (COL0 + m.col) as u8,
            mmd: sel(cs.main_diagonal && m.on_main_diagonal()),
            mad: sel(cs.anti_diagonal && m.on_anti_diagonal(n)),
            idx: cell.index(n) as u16,
            midx: m.index(n) as u16,
        }
    }

    #[inline(always)]
    fn constraints<const SYM: bool>(&self, u: &[u32; UNITS], n: u32) -> u32 {
        // SAFETY: `row`, `col` and `mcol` are built from cells of an order
        // at most MAX_ORDER, so they index inside `UNITS`.
        unsafe {
            let mut cr = *u.get_unchecked(self.row as usize)
                | *u.get_unchecked(self.col as usize)
                | (*u.get_unchecked(MD) & self.md)
                | (*u.get_unchecked(AD) & self.ad);
            if SYM {
                let m = *u.get_unchecked(self.mcol as usize)
                    | (*u.get_unchecked(MD) & self.mmd)
                    | (*u.get_unchecked(AD) & self.mad);
                cr |= mirror_bits(m, n);
            }
            cr
        }
    }

    /// Toggles symbol bit `b` in every unit of the cell (and `n-1-v` in the
    /// mirror's units). Applying it twice restores the masks.
    #[inline(always)]
    fn toggle<const SYM: bool>(&self, u: &mut [u32; UNITS], b: u32, n: u32) {
        // SAFETY: see `constraints`.
        unsafe {
            *u.get_unchecked_mut(self.row as usize) ^= b;
            *u.get_unchecked_mut(self.col as usize) ^= b;
            u[MD] ^= b & self.md;
            u[AD] ^= b & self.ad;
            if SYM {
                let mb = mirror_bits(b, n);
                *u.get_unchecked_mut(self.row as usize) ^= mb;
                *u.get_unchecked_mut(self.mcol as usize) ^= mb;
                u[MD] ^= mb & self.mmd;
                u[AD] ^= mb & self.mad;
            }
        }
    }
}

#[derive(Clone, Debug)]
struct CompiledStep {
    probe: Probe,
    forced: bool,
    /// Forcing unit, or `FREE` for branch steps.
    slot: usize,
    watch: Option<(usize, usize)>,
}

impl CompiledStep {
    #[inline(always)]
    fn candidates<const SYM: bool>(&self, u: &[u32; UNITS], n: u32, all: u32) -> u32 {
        // SAFETY: `slot` is a unit slot or FREE.
        let need = all ^ unsafe { *u.get_unchecked(self.slot) };
        need & !self.probe.constraints::<SYM>(u, n)
    }
}

/// Enumeration outcome.
#[derive(Clone, Debug, Serialize)]
pub struct EnumerationReport {
    /// Completions of the fixed prefix.
    pub count: u128,
    /// One root plus every cell assignment made.
    pub nodes: u64,
    #[serde(serialize_with = "ser_secs")]
    pub elapsed: Duration,
}

fn ser_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl EnumerationReport {
    pub fn squares_per_second(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if secs > 0.0 {
            self.count as f64 / secs
        } else {
            0.0
        }
    }
}

/// Search state for one plan. Cheap to clone; each thread owns its own.
#[derive(Clone)]
pub struct Engine {
    plan: FillPlan,
    n: u32,
    all: u32,
    sym: bool,
    steps: Vec<CompiledStep>,
    watched: Vec<Probe>,
    base: [u32; UNITS],
    units: [u32; UNITS],
    cand: Vec<u32>,
    chosen: Vec<u32>,
    depth: usize,
    dead: bool,
}

impl Engine {
    pub fn new(plan: &FillPlan) -> Self {
        let n = plan.n();
        let cs = plan.constraints();
        let mut watched = Vec::new();
        let steps: Vec<CompiledStep> = plan
            .steps()
            .iter()
            .map(|s| {
                let watch = s.lookahead.as_ref().map(|cells| {
                    let start = watched.len();
                    watched.extend(cells.iter().map(|&c| Probe::new(c, n, cs)));
                    (start, watched.len())
                });
                CompiledStep {
                    probe: Probe::new(s.cell, n, cs),
                    forced: s.is_forced(),
                    slot: match s.kind {
                        StepKind::Forced(u) => unit_slot(u),
                        StepKind::Branch => FREE,
                    },
                    watch,
                }
            })
            .collect();

        let mut base = [0u32; UNITS];
        let mut dead = false;
        let fixed = plan.fixed();
        let mut mark = |slot: usize, b: u32| {
            dead |= base[slot] & b != 0;
            base[slot] |= b;
        };
        for cell in fixed.fixed_cells(plan.order()) {
            let b = 1u32 << fixed.value(cell);
            mark(cell.row, b);
            mark(COL0 + cell.col, b);
            if cs.main_diagonal && cell.on_main_diagonal() {
                mark(MD, b);
            }
            if cs.anti_diagonal && cell.on_anti_diagonal(n) {
                mark(AD, b);
            }
        }
        if dead {
            // The fixed cells already clash, e.g. both ends of the
            // antidiagonal under a fixed first row and column: no step has a
            // candidate.
            base = [SymbolMask::all(n).bits(); UNITS];
        }

        let len = steps.len();
        Engine {
            plan: plan.clone(),
            n: n as u32,
            all: SymbolMask::all(n).bits(),
            sym: cs.vertical_symmetry,
            steps,
            watched,
            base,
            units: base,
            dead,
            cand: vec![0; len + 1],
            chosen: vec![0; len + 1],
            depth: 0,
        }
    }

    pub fn plan(&self) -> &FillPlan {
        &self.plan
    }

    /// Number of steps currently assigned.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Clears every assignment, keeping the fixed cells.
    pub fn reset(&mut self) {
        self.units = self.base;
        self.depth = 0;
    }

    /// Symbols currently assigned, one per step.
    pub fn prefix(&self) -> Vec<u8> {
        self.chosen[..self.depth]
            .iter()
            .map(|b| b.trailing_zeros() as u8)
            .collect()
    }

    /// Symbol assigned at step `d < depth`.
    #[inline]
    pub fn symbol_at(&self, d: usize) -> u8 {
        debug_assert!(d < self.depth);
        self.chosen[d].trailing_zeros() as u8
    }

    /// Candidate symbols for step `d`, given steps `0..d` assigned.
    pub fn candidates(&self, d: usize) -> SymbolMask {
        SymbolMask::from_bits(self.raw_candidates(d))
    }

    #[inline(always)]
    fn raw_candidates(&self, d: usize) -> u32 {
        let s = &self.steps[d];
        if self.sym {
            s.candidates::<true>(&self.units, self.n, self.all)
        } else {
            s.candidates::<false>(&self.units, self.n, self.all)
        }
    }

    /// False when some watched cell of step `d` has no candidate left.
    pub fn lookahead_feasible(&self, d: usize) -> bool {
        if self.sym {
            self.lookahead_ok::<true>(d)
        } else {
            self.lookahead_ok::<false>(d)
        }
    }

    #[inline(always)]
    fn lookahead_ok<const SYM: bool>(&self, d: usize) -> bool {
        match self.steps[d].watch {
            None => true,
            Some((a, b)) => self.watched[a..b]
                .iter()
                .all(|p| p.constraints::<SYM>(&self.units, self.n) != self.all),
        }
    }

    fn push(&mut self, symbol: u8) {
        let d = self.depth;
        let b = 1u32 << symbol;
        let p = self.steps[d].probe;
        if self.sym {
            p.toggle::<true>(&mut self.units, b, self.n);
        } else {
            p.toggle::<false>(&mut self.units, b, self.n);
        }
        self.chosen[d] = b;
        self.depth += 1;
    }

    /// Assigns `symbol` at the next step, checking candidates and lookahead.
    /// On error nothing changes.
    pub fn assign(&mut self, symbol: u8) -> Result<()> {
        let d = self.depth;
        if d >= self.steps.len() {
            return Err(Error::InvalidPrefix {
                step: d,
                reason: "every step is already assigned".into(),
            });
        }
        if symbol as u32 >= self.n || self.raw_candidates(d) & (1 << symbol) == 0 {
            return Err(Error::InvalidPrefix {
                step: d,
                reason: format!("symbol {symbol} is not a candidate"),
            });
        }
        self.push(symbol);
        if !self.lookahead_feasible(d) {
            self.pop();
            return Err(Error::InvalidPrefix {
                step: d,
                reason: "a watched cell has no candidate left".into(),
            });
        }
        Ok(())
    }

    /// Removes the last assignment.
    pub fn pop(&mut self) {
        assert!(self.depth > 0, "pop on an empty engine");
        self.depth -= 1;
        let d = self.depth;
        let p = self.steps[d].probe;
        let b = self.chosen[d];
        if self.sym {
            p.toggle::<true>(&mut self.units, b, self.n);
        } else {
            p.toggle::<false>(&mut self.units, b, self.n);
        }
    }

    /// Resets, then assigns `prefix[d]` at step `d` for each entry, checking
    /// candidates and lookahead like the search would.
    pub fn apply_prefix(&mut self, prefix: &[u8]) -> Result<()> {
        self.reset();
        if prefix.len() > self.steps.len() {
            return Err(Error::InvalidPrefix {
                step: self.steps.len(),
                reason: format!("prefix has {} entries, plan has {} steps", prefix.len(), self.steps.len()),
            });
        }
        for (d, &v) in prefix.iter().enumerate() {
            if v as u32 >= self.n {
                self.reset();
                return Err(Error::InvalidPrefix {
                    step: d,
                    reason: format!("symbol {v} out of range"),
                });
            }
            if self.raw_candidates(d) & (1 << v) == 0 {
                self.reset();
                return Err(Error::InvalidPrefix {
                    step: d,
                    reason: format!("symbol {v} conflicts with its units"),
                });
            }
            self.push(v);
            if !self.lookahead_feasible(d) {
                self.reset();
                return Err(Error::InvalidPrefix {
                    step: d,
                    reason: "a watched cell has no candidate left".into(),
                });
            }
        }
        Ok(())
    }

    /// Counts completions of the current prefix. The engine is back at the
    /// same depth afterwards.
    pub fn count_from_here(&mut self) -> (u128, u64) {
        if self.sym {
            self.count_impl::<true>()
        } else {
            self.count_impl::<false>()
        }
    }

    fn count_impl<const SYM: bool>(&mut self) -> (u128, u64) {
        let from = self.depth;
        let len = self.steps.len();
        if from == len {
            return (u128::from(!self.dead), 1);
        }
        let n = self.n;
        let all = self.all;
        let steps = &self.steps[..];
        let watched = &self.watched[..];
        let units = &mut self.units;
        let chosen = &mut self.chosen[..];
        let last = len - 1;
        let popcount_last = steps[last].watch.is_none();

        if from == last && popcount_last {
            let c = steps[last].candidates::<SYM>(units, n, all);
            return (c.count_ones() as u128, 1 + c.count_ones() as u64);
        }

        // One level per branch decision. After a choice, the run of forced
        // steps that follows is applied straight away; `end[k]` is the first
        // step after that run.
        let levels = len - from + 1;
        let mut lvl: Vec<usize> = vec![0; levels];
        let mut end: Vec<usize> = vec![0; levels];
        let mut cand: Vec<u32> = vec![0; levels];
        let mut count: u128 = 0;
        let mut nodes: u64 = 1;

        // SAFETY: `k < levels` because each level holds a distinct step
        // index in `from..len`; every step index used is below `len`, and
        // `chosen` has `len + 1` entries.
        unsafe {
            let step = |d: usize| steps.get_unchecked(d);
            let dead = |units: &[u32; UNITS], d: usize| -> bool {
                match step(d).watch {
                    None => false,
                    Some((a, z)) => watched
                        .get_unchecked(a..z)
                        .iter()
                        .any(|p| p.constraints::<SYM>(units, n) == all),
                }
            };

            let mut k = 0usize;
            *lvl.get_unchecked_mut(0) = from;
            *cand.get_unchecked_mut(0) = step(from).candidates::<SYM>(units, n, all);
            loop {
                let c = *cand.get_unchecked(k);
                let d = *lvl.get_unchecked(k);
                if c == 0 {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    let d = *lvl.get_unchecked(k);
                    let mut e = *end.get_unchecked(k);
                    while e > d + 1 {
                        e -= 1;
                        step(e).probe.toggle::<SYM>(units, *chosen.get_unchecked(e), n);
                    }
                    step(d).probe.toggle::<SYM>(units, *chosen.get_unchecked(d), n);
                    continue;
                }
                let b = c & c.wrapping_neg();
                *cand.get_unchecked_mut(k) = c & (c - 1);
                step(d).probe.toggle::<SYM>(units, b, n);
                *chosen.get_unchecked_mut(d) = b;
                nodes += 1;
                if dead(units, d) {
                    step(d).probe.toggle::<SYM>(units, b, n);
                    continue;
                }

                let mut e = d + 1;
                let mut ok = true;
                while e < last && step(e).forced {
                    let f = step(e).candidates::<SYM>(units, n, all);
                    if f == 0 {
                        ok = false;
                        break;
                    }
                    step(e).probe.toggle::<SYM>(units, f, n);
                    *chosen.get_unchecked_mut(e) = f;
                    nodes += 1;
                    if dead(units, e) {
                        step(e).probe.toggle::<SYM>(units, f, n);
                        ok = false;
                        break;
                    }
                    e += 1;
                }

                if ok && e >= last {
                    if e == last && popcount_last {
                        let f = step(last).candidates::<SYM>(units, n, all);
                        count += f.count_ones() as u128;
                        nodes += f.count_ones() as u64;
                        ok = false;
                    } else if e == len {
                        count += 1;
                        ok = false;
                    }
                }
                if ok {
                    *end.get_unchecked_mut(k) = e;
                    k += 1;
                    *lvl.get_unchecked_mut(k) = e;
                    *cand.get_unchecked_mut(k) = step(e).candidates::<SYM>(units, n, all);
                    continue;
                }
                while e > d + 1 {
                    e -= 1;
                    step(e).probe.toggle::<SYM>(units, *chosen.get_unchecked(e), n);
                }
                step(d).probe.toggle::<SYM>(units, b, n);
            }
        }
        (count, nodes)
    }

    /// Visits every feasible assignment of steps `depth..to`, calling `visit`
    /// with the engine positioned at depth `to`. Returning `false` from
    /// `visit` stops the walk. The engine ends at its starting depth.
    pub fn walk<F: FnMut(&mut Engine) -> bool>(&mut self, to: usize, mut visit: F) -> u64 {
        assert!(to <= self.steps.len() && to >= self.depth);
        let from = self.depth;
        let mut nodes = 0u64;
        if from == to {
            if !self.dead {
                visit(self);
            }
            return nodes;
        }
        self.cand[from] = self.raw_candidates(from);
        loop {
            let d = self.depth;
            let c = self.cand[d];
            if c == 0 {
                if d == from {
                    break;
                }
                self.pop();
                continue;
            }
            let b = c & c.wrapping_neg();
            self.cand[d] = c & (c - 1);
            self.push(b.trailing_zeros() as u8);
            nodes += 1;
            if !self.lookahead_feasible(d) {
                self.pop();
                continue;
            }
            if self.depth == to {
                let go_on = visit(self);
                self.pop();
                if !go_on {
                    while self.depth > from {
                        self.pop();
                    }
                    break;
                }
                continue;
            }
            let nd = self.depth;
            self.cand[nd] = self.raw_candidates(nd);
        }
        nodes
    }

    /// Grid holding the fixed cells and the current assignments.
    pub fn grid(&self) -> SquareGrid {
        let n = self.n as usize;
        let mut g = SquareGrid::empty(self.plan.order());
        let fixed = self.plan.fixed();
        for cell in fixed.fixed_cells(self.plan.order()) {
            g.set(cell.row, cell.col, fixed.value(cell));
        }
        for d in 0..self.depth {
            let v = self.chosen[d].trailing_zeros() as u8;
            let p = &self.steps[d].probe;
            let c = Cell::from_index(p.idx as usize, n);
            g.set(c.row, c.col, v);
            if self.sym {
                let m = Cell::from_index(p.midx as usize, n);
                g.set(m.row, m.col, n as u8 - 1 - v);
            }
        }
        g
    }

    /// Checks the unit masks against a recomputation from the grid.
    pub fn check_coherence(&self) -> bool {
        let g = self.grid();
        let n = self.n as usize;
        let cs = self.plan.constraints();
        let mut u = [0u32; UNITS];
        for r in 0..n {
            for c in 0..n {
                let v = g.get(r, c);
                if v == EMPTY {
                    continue;
                }
                let b = 1u32 << v;
                u[r] |= b;
                u[COL0 + c] |= b;
                if cs.main_diagonal && r == c {
                    u[MD] |= b;
                }
                if cs.anti_diagonal && r + c == n - 1 {
                    u[AD] |= b;
                }
            }
        }
        u == self.units
    }
}

/// Counts every completion of the plan's fixed prefix.
pub fn enumerate(plan: &FillPlan) -> EnumerationReport {
    let start = Instant::now();
    let mut e = Engine::new(plan);
    let (count, nodes) = e.count_from_here();
    EnumerationReport {
        count,
        nodes,
        elapsed: start.elapsed(),
    }
}

/// Resolves a requested worker count; 0 means every available core.
pub fn resolve_threads(requested: usize) -> usize {
    if requested == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        requested
    }
}

/// Prefixes of the shallowest depth up to `max_depth` that gives at least
/// `target` of them, with the nodes spent finding them.
pub(crate) fn split_prefixes(plan: &FillPlan, max_depth: usize, target: usize) -> (Vec<Vec<u8>>, u64) {
    let mut e = Engine::new(plan);
    let mut out = Vec::new();
    let mut nodes = 0;
    for d in 1..=max_depth.min(plan.len()) {
        out.clear();
        nodes = e.walk(d, |e| {
            out.push(e.prefix());
            true
        });
        if out.len() >= target {
            break;
        }
    }
    (out, nodes)
}

/// Runs `f` over `items` on `threads` workers, each with its own state
/// from `init`; results are summed by `merge` in completion order.
pub(crate) fn pool<I: Sync, S, R: Send>(
    items: &[I],
    threads: usize,
    init: impl Fn() -> S + Sync,
    f: impl Fn(&mut S, &I) -> R + Sync,
    mut merge: impl FnMut(R),
) {
    let next = AtomicUsize::new(0);
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, items.len().max(1)) {
            let tx = tx.clone();
            let (next, init, f) = (&next, &init, &f);
            scope.spawn(move || {
                let mut state = init();
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(item) = items.get(i) else { break };
                    if tx.send(f(&mut state, item)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        for r in rx {
            merge(r);
        }
    });
}

/// Like [`enumerate`], split over `threads` workers (0 = all cores).
/// The count does not depend on the thread count.
pub fn enumerate_threads(plan: &FillPlan, threads: usize) -> EnumerationReport {
    let threads = resolve_threads(threads);
    if threads <= 1 || plan.is_empty() {
        return enumerate(plan);
    }
    let start = Instant::now();
    let (prefixes, mut nodes) = split_prefixes(plan, plan.len(), 64 * threads);
    let mut count = 0u128;
    pool(
        &prefixes,
        threads,
        || Engine::new(plan),
        |e, p| {
            e.apply_prefix(p).expect("walked prefixes are valid");
            e.count_from_here()
        },
        |(c, n)| {
            count += c;
            nodes += n;
        },
    );
    EnumerationReport {
        count,
        nodes,
        elapsed: start.elapsed(),
    }
}

/// Completions of a partial assignment of the plan's first `prefix.len()`
/// steps, with the node count.
pub fn count_completions(plan: &FillPlan, prefix: &[u8]) -> Result<(u128, u64)> {
    let mut e = Engine::new(plan);
    e.apply_prefix(prefix)?;
    Ok(e.count_from_here())
}

/// Number of valid assignments of the first `k` cells in row-major order,
/// the first row being fixed and counted as one choice.
pub fn count_partial(order: Order, cs: ConstraintSet, k: usize) -> Result<u128> {
    let n = order.get();
    if k > n * n {
        return Err(Error::InvalidDepth {
            depth: k,
            reason: format!("an order-{n} square has {} cells", n * n),
        });
    }
    if k <= n {
        return Ok(1);
    }
    let plan = row_major_prefix_plan(order, cs, k)?.truncated(k - n);
    Ok(Engine::new(&plan).count_from_here().0)
}

/// Multiplier from the fixed-prefix count to the count of all squares.
pub fn total_multiplier(plan: &FillPlan) -> u128 {
    let n = plan.n() as u128;
    let fact = |k: u128| (1..=k).product::<u128>();
    if plan.constraints().vertical_symmetry {
        // Relabellings compatible with the symmetry: permute the n/2 mirror
        // pairs and swap inside each pair.
        let h = n / 2;
        return fact(h) << h;
    }
    match plan.fixed() {
        FixedPrefix::FirstRow => fact(n),
        FixedPrefix::FirstRowAndColumn => fact(n) * fact(n.saturating_sub(1).max(1)),
    }
}

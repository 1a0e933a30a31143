//! Cell ordering for the enumerator.
//!
//! The planner repeatedly picks the unassigned cell with the most assigned
//! neighbours across its units (row + column + each constrained diagonal it
//! lies on), ties broken lexicographically. Whenever a unit is one cell short
//! of full, the missing cell is emitted next as a forced step whose value the
//! engine derives from the unit mask.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write as _};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::square::{Cell, ConstraintSet, Order, Unit};

/// Cells fixed before enumeration starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPrefix {
    /// First row `0, 1, ..., n-1`.
    FirstRow,
    /// First row and first column both ascending.
    FirstRowAndColumn,
}

impl FixedPrefix {
    pub fn is_fixed(self, cell: Cell) -> bool {
        match self {
            FixedPrefix::FirstRow => cell.row == 0,
            FixedPrefix::FirstRowAndColumn => cell.row == 0 || cell.col == 0,
        }
    }

    /// Value of a fixed cell.
    pub fn value(self, cell: Cell) -> u8 {
        if cell.row == 0 {
            cell.col as u8
        } else {
            cell.row as u8
        }
    }

    pub fn fixed_cells(self, order: Order) -> Vec<Cell> {
        order.cells().filter(|&c| self.is_fixed(c)).collect()
    }

    pub fn code(self) -> &'static str {
        match self {
            FixedPrefix::FirstRow => "first-row",
            FixedPrefix::FirstRowAndColumn => "first-row-and-column",
        }
    }

    /// Default used by the CLI: plain Latin squares fix the first row and
    /// column, diagonal variants fix only the first row.
    pub fn default_for(cs: ConstraintSet) -> Self {
        if cs.main_diagonal || cs.anti_diagonal {
            FixedPrefix::FirstRow
        } else {
            FixedPrefix::FirstRowAndColumn
        }
    }
}

impl std::str::FromStr for FixedPrefix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-row" | "row" => Ok(FixedPrefix::FirstRow),
            "first-row-and-column" | "row-and-column" => Ok(FixedPrefix::FirstRowAndColumn),
            other => Err(Error::Parse(format!("unknown fixed prefix '{other}'"))),
        }
    }
}

/// Cell order requested by a caller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutChoice {
    Heuristic,
    Hourglass,
    RowMajor,
}

impl std::str::FromStr for LayoutChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heuristic" => Ok(LayoutChoice::Heuristic),
            "hourglass" => Ok(LayoutChoice::Hourglass),
            "row-major" => Ok(LayoutChoice::RowMajor),
            other => Err(Error::Parse(format!("unknown layout '{other}'"))),
        }
    }
}

/// Lookahead placement requested by a caller. Windows are 1-based and
/// inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LookaheadChoice {
    Default,
    Off,
    Window(usize, usize),
}

impl std::str::FromStr for LookaheadChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => return Ok(LookaheadChoice::Default),
            "off" | "none" => return Ok(LookaheadChoice::Off),
            _ => {}
        }
        let (a, b) = s
            .split_once("..=")
            .or_else(|| s.split_once(".."))
            .or_else(|| s.split_once('-'))
            .ok_or_else(|| Error::Parse(format!("bad lookahead window '{s}', expected A..B")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad lookahead window '{s}'")))
        };
        Ok(LookaheadChoice::Window(num(a)?, num(b)?))
    }
}

/// Builds a plan from caller choices. `fixed` defaults per constraint set;
/// hourglass plans always fix the first row only.
pub fn build_plan(
    order: Order,
    cs: ConstraintSet,
    fixed: Option<FixedPrefix>,
    layout: LayoutChoice,
    lookahead: LookaheadChoice,
) -> Result<FillPlan> {
    cs.check_order(order)?;
    let fixed = fixed.unwrap_or_else(|| FixedPrefix::default_for(cs));
    let plan = match layout {
        LayoutChoice::Heuristic => compute_plan(order, cs, fixed)?,
        LayoutChoice::RowMajor => row_major_plan(order, cs, fixed)?,
        LayoutChoice::Hourglass => {
            if fixed != FixedPrefix::FirstRow {
                return Err(Error::Unsupported(
                    "hourglass plans fix the first row only".into(),
                ));
            }
            compute_hourglass_plan(order, cs)?
        }
    };
    match lookahead {
        LookaheadChoice::Default => match default_lookahead(&plan) {
            Some(w) => place_lookahead(&plan, w),
            None => Ok(plan),
        },
        LookaheadChoice::Off => Ok(plan),
        LookaheadChoice::Window(a, b) => place_lookahead(&plan, a..=b),
    }
}

/// Constraint score of a candidate cell at planning step `step`:
/// `v = r + c + md_part + ad_part`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellScore {
    pub v: usize,
    pub r: usize,
    pub c: usize,
    pub md_part: usize,
    pub ad_part: usize,
    pub step: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    /// Try every feasible symbol.
    Branch,
    /// The unit is one cell short of full; its missing symbol is the only
    /// candidate.
    Forced(Unit),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanStep {
    pub kind: StepKind,
    pub cell: Cell,
    /// When set, the engine checks these not-yet-assigned cells for an empty
    /// candidate set right after assigning this step.
    pub lookahead: Option<Vec<Cell>>,
}

impl PlanStep {
    pub fn is_forced(&self) -> bool {
        matches!(self.kind, StepKind::Forced(_))
    }

    pub fn lookahead_after(&self) -> bool {
        self.lookahead.is_some()
    }
}

/// How a plan's steps were laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanLayout {
    Heuristic,
    /// Diagonals, then the last row, then the remaining cells.
    Hourglass,
    /// Row-major for the first `k` cells of the square (fixed row included),
    /// heuristic afterwards.
    RowMajorPrefix(usize),
    RowMajor,
    Custom,
}

/// A group of cells planned together.
#[derive(Clone, Debug)]
pub enum Phase {
    /// Most-constrained-first among these cells.
    Heuristic(Vec<Cell>),
    /// These cells, in this exact order.
    Sequence(Vec<Cell>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FillPlan {
    order: Order,
    constraints: ConstraintSet,
    fixed: FixedPrefix,
    layout: PlanLayout,
    steps: Vec<PlanStep>,
    hourglass_boundary: Option<usize>,
    lookahead_window: Option<(usize, usize)>,
}

impl FillPlan {
    pub fn order(&self) -> Order {
        self.order
    }

    pub fn n(&self) -> usize {
        self.order.get()
    }

    pub fn constraints(&self) -> ConstraintSet {
        self.constraints
    }

    pub fn fixed(&self) -> FixedPrefix {
        self.fixed
    }

    pub fn layout(&self) -> PlanLayout {
        self.layout
    }

    pub fn steps(&self) -> &[PlanStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Number of leading steps that cover the hourglass cells, when the plan
    /// was laid out for symmetry breaking.
    pub fn hourglass_boundary(&self) -> Option<usize> {
        self.hourglass_boundary
    }

    /// 1-based inclusive window of steps carrying a lookahead check.
    pub fn lookahead_window(&self) -> Option<(usize, usize)> {
        self.lookahead_window
    }

    pub fn branch_count(&self) -> usize {
        self.steps.iter().filter(|s| !s.is_forced()).count()
    }

    /// The first `len` steps as a plan of their own, for counting partial
    /// assignments.
    pub fn truncated(&self, len: usize) -> FillPlan {
        let len = len.min(self.steps.len());
        let mut out = self.clone();
        out.steps.truncate(len);
        if out.hourglass_boundary.is_some_and(|b| b > len) {
            out.hourglass_boundary = None;
        }
        if let Some((a, b)) = out.lookahead_window {
            if b > len {
                out.lookahead_window = (a <= len).then_some((a, len));
            }
        }
        for s in &mut out.steps {
            if let Some(w) = s.lookahead.as_mut() {
                w.retain(|c| self.steps[..len].iter().any(|t| t.cell == *c));
            }
        }
        out.layout = PlanLayout::Custom;
        out
    }

    /// True when both plans assign the same cells the same way in their
    /// first `k` steps.
    pub fn shares_prefix(&self, other: &FillPlan, k: usize) -> bool {
        self.order == other.order
            && self.constraints == other.constraints
            && self.fixed == other.fixed
            && k <= self.len()
            && k <= other.len()
            && self.steps[..k]
                .iter()
                .zip(&other.steps[..k])
                .all(|(a, b)| a.cell == b.cell && a.kind == b.kind)
    }

    /// Step index of every planned cell, `None` for fixed or mirrored cells.
    pub fn step_of_cells(&self) -> Vec<Option<usize>> {
        let n = self.n();
        let mut out = vec![None; n * n];
        for (k, s) in self.steps.iter().enumerate() {
            out[s.cell.index(n)] = Some(k);
        }
        out
    }

    /// Short hex digest over everything that affects enumeration results.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(
            format!(
                "n={} cs={} fixed={} boundary={:?} window={:?}\n",
                self.n(),
                self.constraints.code(),
                self.fixed.code(),
                self.hourglass_boundary,
                self.lookahead_window
            )
            .as_bytes(),
        );
        for s in &self.steps {
            let kind = match s.kind {
                StepKind::Branch => "b".to_string(),
                StepKind::Forced(u) => format!("f:{u}"),
            };
            h.update(
                format!(
                    "{} {} {} {}\n",
                    kind,
                    s.cell.row,
                    s.cell.col,
                    u8::from(s.lookahead_after())
                )
                .as_bytes(),
            );
        }
        let digest = h.finalize();
        digest[..8].iter().fold(String::new(), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
    }

    /// One line per step: `<index> <kind> <i> <j> [unit] [LA]`, 1-based.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, s) in self.steps.iter().enumerate() {
            let _ = write!(out, "{} ", k + 1);
            match s.kind {
                StepKind::Branch => {
                    let _ = write!(out, "branch {} {}", s.cell.row, s.cell.col);
                }
                StepKind::Forced(u) => {
                    let _ = write!(out, "forced {} {} {u}", s.cell.row, s.cell.col);
                }
            }
            if s.lookahead_after() {
                out.push_str(" LA");
            }
            out.push('\n');
        }
        out
    }

    /// Grid of 1-based step numbers; `-` marks fixed cells and `~` cells
    /// derived from their mirror.
    pub fn render_grid(&self) -> String {
        let n = self.n();
        let steps = self.step_of_cells();
        let width = self.len().to_string().len();
        let mut out = String::new();
        for r in 0..n {
            let row: Vec<String> = (0..n)
                .map(|c| {
                    let cell = Cell::new(r, c);
                    let tok = match steps[cell.index(n)] {
                        Some(k) => (k + 1).to_string(),
                        None if self.fixed.is_fixed(cell) => "-".into(),
                        None => "~".into(),
                    };
                    format!("{tok:>width$}")
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for FillPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Bookkeeping of assigned cells during planning.
struct Tracker {
    n: usize,
    cs: ConstraintSet,
    assigned: Vec<bool>,
    planned: Vec<bool>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    md: usize,
    ad: usize,
}

impl Tracker {
    fn new(order: Order, cs: ConstraintSet, fixed: FixedPrefix) -> Self {
        let n = order.get();
        let mut t = Tracker {
            n,
            cs,
            assigned: vec![false; n * n],
            planned: vec![false; n * n],
            rows: vec![0; n],
            cols: vec![0; n],
            md: 0,
            ad: 0,
        };
        for cell in order.cells() {
            t.planned[cell.index(n)] =
                !fixed.is_fixed(cell) && !(cs.vertical_symmetry && cell.col >= n / 2);
        }
        for cell in fixed.fixed_cells(order) {
            t.mark(cell);
        }
        t
    }

    fn is_assigned(&self, cell: Cell) -> bool {
        self.assigned[cell.index(self.n)]
    }

    fn is_planned(&self, cell: Cell) -> bool {
        self.planned[cell.index(self.n)]
    }

    fn mark_one(&mut self, cell: Cell) {
        let idx = cell.index(self.n);
        if self.assigned[idx] {
            return;
        }
        self.assigned[idx] = true;
        self.rows[cell.row] += 1;
        self.cols[cell.col] += 1;
        if cell.on_main_diagonal() {
            self.md += 1;
        }
        if cell.on_anti_diagonal(self.n) {
            self.ad += 1;
        }
    }

    fn mark(&mut self, cell: Cell) {
        self.mark_one(cell);
        if self.cs.vertical_symmetry {
            self.mark_one(cell.mirrored(self.n));
        }
    }

    fn count(&self, unit: Unit) -> usize {
        match unit {
            Unit::Row(r) => self.rows[r],
            Unit::Column(c) => self.cols[c],
            Unit::MainDiagonal => self.md,
            Unit::AntiDiagonal => self.ad,
        }
    }

    /// The single unassigned cell of a unit that is one short of full.
    fn missing(&self, unit: Unit) -> Option<Cell> {
        if self.count(unit) + 1 != self.n {
            return None;
        }
        unit.cells(self.n).into_iter().find(|&c| !self.is_assigned(c))
    }

    fn score(&self, cell: Cell, step: usize) -> CellScore {
        let r = self.rows[cell.row];
        let c = self.cols[cell.col];
        let md_part = if self.cs.main_diagonal && cell.on_main_diagonal() {
            self.md
        } else {
            0
        };
        let ad_part = if self.cs.anti_diagonal && cell.on_anti_diagonal(self.n) {
            self.ad
        } else {
            0
        };
        CellScore {
            v: r + c + md_part + ad_part,
            r,
            c,
            md_part,
            ad_part,
            step,
        }
    }

    /// Units touched by assigning `cell` (and its mirror under vertical
    /// symmetry), in row, column, main diagonal, antidiagonal order.
    fn touched_units(&self, cell: Cell) -> Vec<Unit> {
        let mut units: Vec<Unit> = self.cs.units_of(cell, self.n).collect();
        if self.cs.vertical_symmetry {
            for u in self.cs.units_of(cell.mirrored(self.n), self.n) {
                if !units.contains(&u) {
                    units.push(u);
                }
            }
        }
        units
    }

    /// Pushes the missing cell of every touched unit that became one short.
    /// Cells that are not planned (mirrors) are reached through their
    /// partner's unit instead.
    fn push_forced(&self, cell: Cell, queue: &mut VecDeque<(Cell, Unit)>) {
        for u in self.touched_units(cell) {
            if let Some(m) = self.missing(u) {
                if self.is_planned(m) {
                    queue.push_back((m, u));
                }
            }
        }
    }

    fn all_units(&self) -> Vec<Unit> {
        let mut units: Vec<Unit> = (0..self.n).map(Unit::Row).collect();
        units.extend((0..self.n).map(Unit::Column));
        if self.cs.main_diagonal {
            units.push(Unit::MainDiagonal);
        }
        if self.cs.anti_diagonal {
            units.push(Unit::AntiDiagonal);
        }
        units
    }
}

/// Builds a plan from an ordered list of phases. Forced steps are emitted
/// only for cells belonging to the current or an earlier phase; a forced
/// cell from a later phase waits until that phase starts.
pub fn compute_phased_plan(
    order: Order,
    cs: ConstraintSet,
    fixed: FixedPrefix,
    phases: &[Phase],
) -> Result<FillPlan> {
    cs.check_order(order)?;
    if cs.vertical_symmetry && fixed == FixedPrefix::FirstRowAndColumn {
        return Err(Error::Unsupported(
            "vertical symmetry is enumerated with the first row fixed only".into(),
        ));
    }
    let n = order.get();
    let mut t = Tracker::new(order, cs, fixed);
    let mut allowed = vec![false; n * n];
    let mut steps: Vec<PlanStep> = Vec::new();
    let mut queue: VecDeque<(Cell, Unit)> = VecDeque::new();

    for phase in phases {
        let cells = match phase {
            Phase::Heuristic(c) | Phase::Sequence(c) => c,
        };
        for &c in cells {
            if c.row >= n || c.col >= n {
                return Err(Error::Unsupported(format!("cell {c} outside order {n}")));
            }
            if t.is_planned(c) {
                allowed[c.index(n)] = true;
            }
        }

        match phase {
            Phase::Sequence(cells) => {
                for &c in cells {
                    if !t.is_planned(c) || t.is_assigned(c) {
                        continue;
                    }
                    let forced_by = t
                        .touched_units(c)
                        .into_iter()
                        .find(|&u| t.missing(u) == Some(c));
                    steps.push(PlanStep {
                        kind: forced_by.map_or(StepKind::Branch, StepKind::Forced),
                        cell: c,
                        lookahead: None,
                    });
                    t.mark(c);
                }
            }
            Phase::Heuristic(cells) => {
                let mut pool: Vec<Cell> = cells.iter().copied().filter(|&c| t.is_planned(c)).collect();
                pool.sort();
                pool.dedup();

                queue.clear();
                for u in t.all_units() {
                    if let Some(m) = t.missing(u) {
                        if t.is_planned(m) {
                            queue.push_back((m, u));
                        }
                    }
                }
                drain_forced(&mut t, &allowed, &mut queue, &mut steps);

                loop {
                    let step_no = steps.len();
                    let mut best: Option<(Cell, usize)> = None;
                    for &c in &pool {
                        if t.is_assigned(c) {
                            continue;
                        }
                        let v = t.score(c, step_no).v;
                        if best.is_none_or(|(_, bv)| v > bv) {
                            best = Some((c, v));
                        }
                    }
                    let Some((cell, _)) = best else { break };
                    steps.push(PlanStep {
                        kind: StepKind::Branch,
                        cell,
                        lookahead: None,
                    });
                    t.mark(cell);
                    t.push_forced(cell, &mut queue);
                    drain_forced(&mut t, &allowed, &mut queue, &mut steps);
                }
            }
        }
    }

    let unplanned: Vec<Cell> = order
        .cells()
        .filter(|&c| t.is_planned(c) && !t.is_assigned(c))
        .collect();
    if !unplanned.is_empty() {
        return Err(Error::Unsupported(format!(
            "phases leave {} cells unplanned, first {}",
            unplanned.len(),
            unplanned[0]
        )));
    }

    Ok(FillPlan {
        order,
        constraints: cs,
        fixed,
        layout: PlanLayout::Custom,
        steps,
        hourglass_boundary: None,
        lookahead_window: None,
    })
}

fn drain_forced(
    t: &mut Tracker,
    allowed: &[bool],
    queue: &mut VecDeque<(Cell, Unit)>,
    steps: &mut Vec<PlanStep>,
) {
    while let Some((cell, unit)) = queue.pop_front() {
        if t.is_assigned(cell) || !allowed[cell.index(t.n)] {
            continue;
        }
        steps.push(PlanStep {
            kind: StepKind::Forced(unit),
            cell,
            lookahead: None,
        });
        t.mark(cell);
        t.push_forced(cell, queue);
    }
}

/// All cells the planner is responsible for: not fixed, and in the left half
/// under vertical symmetry.
pub fn plannable_cells(order: Order, cs: ConstraintSet, fixed: FixedPrefix) -> Vec<Cell> {
    let n = order.get();
    order
        .cells()
        .filter(|&c| !fixed.is_fixed(c) && !(cs.vertical_symmetry && c.col >= n / 2))
        .collect()
}

/// Most-constrained-first plan over every non-fixed cell.
pub fn compute_plan(order: Order, cs: ConstraintSet, fixed: FixedPrefix) -> Result<FillPlan> {
    let cells = plannable_cells(order, cs, fixed);
    let mut plan = compute_phased_plan(order, cs, fixed, &[Phase::Heuristic(cells)])?;
    plan.layout = PlanLayout::Heuristic;
    Ok(plan)
}

/// Trivial plan: every non-fixed cell in row-major order.
pub fn row_major_plan(order: Order, cs: ConstraintSet, fixed: FixedPrefix) -> Result<FillPlan> {
    let cells = plannable_cells(order, cs, fixed);
    let mut plan = compute_phased_plan(order, cs, fixed, &[Phase::Sequence(cells)])?;
    plan.layout = PlanLayout::RowMajor;
    Ok(plan)
}

/// Plan whose first `depth - n` steps are the row-major cells `n..depth` of
/// the square (the first row being fixed), followed by a heuristic order for
/// the rest.
pub fn row_major_prefix_plan(order: Order, cs: ConstraintSet, depth: usize) -> Result<FillPlan> {
    let n = order.get();
    if cs.vertical_symmetry {
        return Err(Error::Unsupported(
            "row-major prefixes are not defined for half-square plans".into(),
        ));
    }
    if depth < n || depth > n * n {
        return Err(Error::InvalidDepth {
            depth,
            reason: format!("must lie in {n}..={}", n * n),
        });
    }
    let head: Vec<Cell> = (n..depth).map(|i| Cell::from_index(i, n)).collect();
    let tail: Vec<Cell> = (depth..n * n).map(|i| Cell::from_index(i, n)).collect();
    let mut plan = compute_phased_plan(
        order,
        cs,
        FixedPrefix::FirstRow,
        &[Phase::Sequence(head), Phase::Heuristic(tail)],
    )?;
    plan.layout = PlanLayout::RowMajorPrefix(depth);
    Ok(plan)
}

/// Hourglass cells not covered by the first row: both diagonals, then the
/// last row. Under vertical symmetry only the left half is returned.
pub(crate) fn hourglass_phases(order: Order, cs: ConstraintSet) -> (Vec<Cell>, Vec<Cell>) {
    let n = order.get();
    let keep = |c: &Cell| c.row != 0 && !(cs.vertical_symmetry && c.col >= n / 2);
    let diag: Vec<Cell> = order
        .cells()
        .filter(|c| c.on_main_diagonal() || c.on_anti_diagonal(n))
        .filter(keep)
        .collect();
    let last: Vec<Cell> = (0..n)
        .map(|c| Cell::new(n - 1, c))
        .filter(keep)
        .filter(|c| !diag.contains(c))
        .collect();
    (diag, last)
}

/// Plan that assigns the hourglass cells first (diagonals, then the last
/// row), recording the step index where the hourglass is complete.
pub fn compute_hourglass_plan(order: Order, cs: ConstraintSet) -> Result<FillPlan> {
    if !cs.has_diagonals() {
        return Err(Error::InvalidConstraints(
            "hourglass plans need both diagonal constraints".into(),
        ));
    }
    let (diag, last) = hourglass_phases(order, cs);
    let rest: Vec<Cell> = plannable_cells(order, cs, FixedPrefix::FirstRow)
        .into_iter()
        .filter(|c| !diag.contains(c) && !last.contains(c))
        .collect();
    let mut plan = compute_phased_plan(
        order,
        cs,
        FixedPrefix::FirstRow,
        &[
            Phase::Heuristic(diag.clone()),
            Phase::Heuristic(last.clone()),
            Phase::Heuristic(rest),
        ],
    )?;
    let boundary = diag.len() + last.len();
    debug_assert!(plan.steps[..boundary]
        .iter()
        .all(|s| diag.contains(&s.cell) || last.contains(&s.cell)));
    plan.layout = PlanLayout::Hourglass;
    plan.hourglass_boundary = Some(boundary);
    Ok(plan)
}

/// Lookahead window used when none is requested: steps 51..=60 for order-9
/// diagonal squares with the heuristic plan, off elsewhere.
pub fn default_lookahead(plan: &FillPlan) -> Option<RangeInclusive<usize>> {
    let dls9 = plan.n() == 9
        && plan.constraints() == ConstraintSet::DLS
        && plan.fixed() == FixedPrefix::FirstRow
        && plan.layout() == PlanLayout::Heuristic;
    dls9.then_some(51..=60)
}

/// Flags every step whose 1-based index lies in `window` for a lookahead
/// check, recording the later cells that share a unit with it (through
/// mirrors as well under vertical symmetry). An empty window returns the plan
/// with all flags cleared.
/// Copy of `plan` with no lookahead checks.
pub fn without_lookahead(plan: &FillPlan) -> FillPlan {
    let mut out = plan.clone();
    for s in &mut out.steps {
        s.lookahead = None;
    }
    out.lookahead_window = None;
    out
}

pub fn place_lookahead(plan: &FillPlan, window: RangeInclusive<usize>) -> Result<FillPlan> {
    let mut out = without_lookahead(plan);
    if window.is_empty() {
        return Ok(out);
    }
    let (start, end) = (*window.start(), *window.end());
    if start == 0 || end > plan.len() {
        return Err(Error::WindowOutOfRange {
            start,
            end,
            len: plan.len(),
        });
    }
    let n = plan.n();
    let cs = plan.constraints();
    let units_with_mirror = |c: Cell| -> BTreeSet<Unit> {
        let mut u: BTreeSet<Unit> = cs.units_of(c, n).collect();
        if cs.vertical_symmetry {
            u.extend(cs.units_of(c.mirrored(n), n));
        }
        u
    };
    for k in (start - 1)..end {
        let here = units_with_mirror(plan.steps[k].cell);
        let watched: Vec<Cell> = plan.steps[k + 1..]
            .iter()
            .map(|s| s.cell)
            .filter(|&c| !units_with_mirror(c).is_disjoint(&here))
            .collect();
        out.steps[k].lookahead = Some(watched);
    }
    out.lookahead_window = Some((start, end));
    Ok(out)
}

//! Grids, symbol masks, constraint sets, validation and normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported order; every unit mask fits in the low 16 bits of a word.
pub const MAX_ORDER: usize = 16;

/// Cell value for an unassigned cell.
pub const EMPTY: u8 = u8::MAX;

/// Order of a square, `1..=16`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Order(u8);

impl Order {
    pub fn new(n: usize) -> Result<Self> {
        if (1..=MAX_ORDER).contains(&n) {
            Ok(Order(n as u8))
        } else {
            Err(Error::InvalidOrder(n))
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0 as usize
    }

    /// Number of symmetric row/column pairs, `floor(n / 2)`.
    #[inline]
    pub fn half(self) -> usize {
        self.get() / 2
    }

    /// Mask with exactly the low `n` bits set.
    #[inline]
    pub fn all_symbols(self) -> SymbolMask {
        SymbolMask::all(self.get())
    }

    /// Column mirrored across the vertical midline.
    pub fn mirror_column(self, col: usize) -> usize {
        debug_assert!(col < self.get());
        self.get() - 1 - col
    }

    pub fn cells(self) -> impl Iterator<Item = Cell> {
        let n = self.get();
        (0..n).flat_map(move |row| (0..n).map(move |col| Cell::new(row, col)))
    }
}

impl TryFrom<usize> for Order {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        Order::new(n)
    }
}

impl From<Order> for usize {
    fn from(o: Order) -> usize {
        o.get()
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Returns `n - 1 - col`, the column mirrored across the vertical midline.
pub fn mirror_cell_of(order: Order, col: usize) -> usize {
    order.mirror_column(col)
}

/// A cell position, 0-based, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    #[inline]
    pub fn index(self, n: usize) -> usize {
        self.row * n + self.col
    }

    pub fn from_index(idx: usize, n: usize) -> Self {
        Cell::new(idx / n, idx % n)
    }

    pub fn on_main_diagonal(self) -> bool {
        self.row == self.col
    }

    pub fn on_anti_diagonal(self, n: usize) -> bool {
        self.row + self.col == n - 1
    }

    pub fn mirrored(self, n: usize) -> Self {
        Cell::new(self.row, n - 1 - self.col)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// One bit per symbol. Bit `b` set means symbol `b` is occupied (or, for a
/// candidate list, available).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SymbolMask(u32);

impl SymbolMask {
    pub const EMPTY: SymbolMask = SymbolMask(0);

    #[inline]
    pub const fn from_bits(bits: u32) -> Self {
        SymbolMask(bits)
    }

    #[inline]
    pub const fn all(n: usize) -> Self {
        SymbolMask(((1u64 << n) - 1) as u32)
    }

    #[inline]
    pub const fn single(symbol: u8) -> Self {
        SymbolMask(1 << symbol)
    }

    #[inline]
    pub const fn bits(self) -> u32 {
        self.0
    }

    #[inline]
    pub const fn contains(self, symbol: u8) -> bool {
        self.0 & (1 << symbol) != 0
    }

    #[inline]
    pub fn insert(&mut self, symbol: u8) {
        self.0 |= 1 << symbol;
    }

    #[inline]
    pub fn remove(&mut self, symbol: u8) {
        self.0 &= !(1 << symbol);
    }

    #[inline]
    pub const fn count(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Lowest symbol in the mask.
    #[inline]
    pub fn lowest(self) -> Option<u8> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as u8)
    }

    /// Maps every symbol `b` to `n - 1 - b`.
    #[inline]
    pub fn mirrored(self, n: usize) -> Self {
        SymbolMask(self.0.reverse_bits() >> (32 - n))
    }

    /// Symbols in increasing order, consumed rightmost bit first.
    pub fn iter(self) -> SymbolIter {
        SymbolIter(self.0)
    }
}

impl std::ops::BitOr for SymbolMask {
    type Output = SymbolMask;
    fn bitor(self, rhs: Self) -> Self {
        SymbolMask(self.0 | rhs.0)
    }
}

impl std::ops::BitAnd for SymbolMask {
    type Output = SymbolMask;
    fn bitand(self, rhs: Self) -> Self {
        SymbolMask(self.0 & rhs.0)
    }
}

impl std::ops::BitXor for SymbolMask {
    type Output = SymbolMask;
    fn bitxor(self, rhs: Self) -> Self {
        SymbolMask(self.0 ^ rhs.0)
    }
}

impl FromIterator<u8> for SymbolMask {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        let mut m = SymbolMask::EMPTY;
        for s in iter {
            m.insert(s);
        }
        m
    }
}

pub struct SymbolIter(u32);

impl Iterator for SymbolIter {
    type Item = u8;

    #[inline]
    fn next(&mut self) -> Option<u8> {
        if self.0 == 0 {
            return None;
        }
        let low = self.0 & self.0.wrapping_neg();
        self.0 &= self.0 - 1;
        Some(low.trailing_zeros() as u8)
    }
}

/// A uniqueness unit of the square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Unit {
    Row(usize),
    Column(usize),
    MainDiagonal,
    AntiDiagonal,
}

impl Unit {
    pub fn cells(self, n: usize) -> Vec<Cell> {
        match self {
            Unit::Row(r) => (0..n).map(|c| Cell::new(r, c)).collect(),
            Unit::Column(c) => (0..n).map(|r| Cell::new(r, c)).collect(),
            Unit::MainDiagonal => (0..n).map(|i| Cell::new(i, i)).collect(),
            Unit::AntiDiagonal => (0..n).map(|i| Cell::new(i, n - 1 - i)).collect(),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unit::Row(r) => write!(f, "row{r}"),
            Unit::Column(c) => write!(f, "col{c}"),
            Unit::MainDiagonal => f.write_str("md"),
            Unit::AntiDiagonal => f.write_str("ad"),
        }
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown unit '{s}'"));
        match s {
            "md" => Ok(Unit::MainDiagonal),
            "ad" => Ok(Unit::AntiDiagonal),
            _ if s.starts_with("row") => s[3..].parse().map(Unit::Row).map_err(|_| bad()),
            _ if s.starts_with("col") => s[3..].parse().map(Unit::Column).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// Which uniqueness and symmetry constraints apply. Rows and columns are
/// always constrained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub main_diagonal: bool,
    pub anti_diagonal: bool,
    pub vertical_symmetry: bool,
}

impl ConstraintSet {
    pub const LS: ConstraintSet = ConstraintSet {
        main_diagonal: false,
        anti_diagonal: false,
        vertical_symmetry: false,
    };
    pub const DLS: ConstraintSet = ConstraintSet {
        main_diagonal: true,
        anti_diagonal: true,
        vertical_symmetry: false,
    };
    pub const VSDLS: ConstraintSet = ConstraintSet {
        main_diagonal: true,
        anti_diagonal: true,
        vertical_symmetry: true,
    };

    pub fn new(main_diagonal: bool, anti_diagonal: bool, vertical_symmetry: bool) -> Result<Self> {
        if vertical_symmetry && !(main_diagonal && anti_diagonal) {
            return Err(Error::InvalidConstraints(
                "vertical symmetry requires both diagonal constraints".into(),
            ));
        }
        Ok(ConstraintSet {
            main_diagonal,
            anti_diagonal,
            vertical_symmetry,
        })
    }

    /// Checks the set against an order. Vertical symmetry is impossible for
    /// odd orders: the middle column would hold `(n - 1) / 2` in every row.
    pub fn check_order(self, order: Order) -> Result<()> {
        if self.vertical_symmetry && !(self.main_diagonal && self.anti_diagonal) {
            return Err(Error::InvalidConstraints(
                "vertical symmetry requires both diagonal constraints".into(),
            ));
        }
        if self.vertical_symmetry && order.get() % 2 == 1 {
            return Err(Error::InvalidConstraints(format!(
                "vertical symmetry needs an even order, got {order}"
            )));
        }
        Ok(())
    }

    pub fn has_diagonals(self) -> bool {
        self.main_diagonal && self.anti_diagonal
    }

    pub fn code(self) -> &'static str {
        match (self.main_diagonal, self.anti_diagonal, self.vertical_symmetry) {
            (false, false, false) => "ls",
            (true, true, false) => "dls",
            (true, true, true) => "vsdls",
            (true, false, _) => "ls+md",
            (false, true, _) => "ls+ad",
            (false, false, true) => "invalid",
        }
    }

    /// Units containing `cell`, in the order row, column, main diagonal,
    /// antidiagonal. Diagonals appear only when constrained.
    pub fn units_of(self, cell: Cell, n: usize) -> impl Iterator<Item = Unit> {
        let md = (self.main_diagonal && cell.on_main_diagonal()).then_some(Unit::MainDiagonal);
        let ad = (self.anti_diagonal && cell.on_anti_diagonal(n)).then_some(Unit::AntiDiagonal);
        [Some(Unit::Row(cell.row)), Some(Unit::Column(cell.col)), md, ad]
            .into_iter()
            .flatten()
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ConstraintSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ls" => Ok(ConstraintSet::LS),
            "dls" => Ok(ConstraintSet::DLS),
            "vsdls" => Ok(ConstraintSet::VSDLS),
            "ls+md" => ConstraintSet::new(true, false, false),
            "ls+ad" => ConstraintSet::new(false, true, false),
            other => Err(Error::InvalidConstraints(format!(
                "unknown constraint code '{other}' (expected ls, dls or vsdls)"
            ))),
        }
    }
}

/// An `n x n` grid over symbols `0..n` with [`EMPTY`] for unassigned cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SquareGrid {
    order: Order,
    cells: Vec<u8>,
}

impl SquareGrid {
    pub fn empty(order: Order) -> Self {
        SquareGrid {
            order,
            cells: vec![EMPTY; order.get() * order.get()],
        }
    }

    pub fn from_cells(order: Order, cells: Vec<u8>) -> Result<Self> {
        let n = order.get();
        if cells.len() != n * n {
            return Err(Error::Parse(format!(
                "expected {} cells, got {}",
                n * n,
                cells.len()
            )));
        }
        Ok(SquareGrid { order, cells })
    }

    /// Builds a grid from row vectors; `None` is an empty cell.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let order = Order::new(rows.len())?;
        let n = order.get();
        let mut cells = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "row {i} has {} cells, expected {n}",
                    row.len()
                )));
            }
            cells.extend_from_slice(row);
        }
        Ok(SquareGrid { order, cells })
    }

    /// Fills the first row with `0..n`.
    pub fn with_identity_first_row(order: Order) -> Self {
        let mut g = SquareGrid::empty(order);
        for j in 0..order.get() {
            g.cells[j] = j as u8;
        }
        g
    }

    #[inline]
    pub fn order(&self) -> Order {
        self.order
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.order.get()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.n() + col]
    }

    #[inline]
    pub fn at(&self, cell: Cell) -> u8 {
        self.get(cell.row, cell.col)
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        let n = self.n();
        self.cells[row * n + col] = value;
    }

    pub fn is_assigned(&self, row: usize, col: usize) -> bool {
        self.get(row, col) != EMPTY
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(|&v| v != EMPTY)
    }

    pub fn assigned_count(&self) -> usize {
        self.cells.iter().filter(|&&v| v != EMPTY).count()
    }

    pub fn row(&self, row: usize) -> &[u8] {
        let n = self.n();
        &self.cells[row * n..(row + 1) * n]
    }

    /// Renames symbols so the first row reads `0, 1, ..., n-1`. Only assigned
    /// cells are renamed. Fails when the first row has an empty cell or a
    /// repeated symbol.
    pub fn normalize(&self) -> Result<SquareGrid> {
        let n = self.n();
        let mut rename = [EMPTY; MAX_ORDER];
        for (j, &v) in self.row(0).iter().enumerate() {
            if v == EMPTY {
                return Err(Error::NotNormalizable(format!("cell (0,{j}) is empty")));
            }
            if v as usize >= n {
                return Err(Error::NotNormalizable(format!(
                    "cell (0,{j}) holds {v}, outside 0..{n}"
                )));
            }
            if rename[v as usize] != EMPTY {
                return Err(Error::NotNormalizable(format!(
                    "symbol {v} repeats in the first row"
                )));
            }
            rename[v as usize] = j as u8;
        }
        let mut out = self.clone();
        for v in out.cells.iter_mut() {
            if *v != EMPTY {
                *v = rename[*v as usize];
            }
        }
        Ok(out)
    }

    /// Parses `n` lines of `n` whitespace-separated tokens, each a decimal
    /// symbol or `_`. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<Vec<u8>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|line| {
                line.split_whitespace()
                    .map(|tok| {
                        if tok == "_" {
                            Ok(EMPTY)
                        } else {
                            tok.parse::<u8>()
                                .ok()
                                .filter(|&v| v != EMPTY)
                                .ok_or_else(|| Error::Parse(format!("bad cell token '{tok}'")))
                        }
                    })
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<_>>()?;
        if rows.is_empty() {
            return Err(Error::Parse("empty grid".into()));
        }
        SquareGrid::from_rows(&rows)
    }
}

impl fmt::Display for SquareGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n();
        for r in 0..n {
            for c in 0..n {
                if c > 0 {
                    f.write_str(" ")?;
                }
                match self.get(r, c) {
                    EMPTY => f.write_str("_")?,
                    v => write!(f, "{v}")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for SquareGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SquareGrid::parse(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Row,
    Column,
    MainDiagonal,
    AntiDiagonal,
    VerticalSymmetry,
    SymbolRange,
    /// An empty cell in a grid checked as complete.
    Incomplete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub cell: Cell,
}

/// Checks `grid` against `cs` and returns every violation found.
///
/// Duplicates are reported at the cell holding the repeated occurrence.
/// With `allow_partial`, empty cells are skipped; otherwise each empty cell
/// is reported as [`ViolationKind::Incomplete`]. Out-of-range symbols are
/// reported once and excluded from the other checks.
pub fn validate(grid: &SquareGrid, cs: ConstraintSet, allow_partial: bool) -> Vec<Violation> {
    let n = grid.n();
    let mut out = Vec::new();
    let valid = |v: u8| v != EMPTY && (v as usize) < n;

    for cell in grid.order().cells() {
        let v = grid.at(cell);
        if v == EMPTY {
            if !allow_partial {
                out.push(Violation {
                    kind: ViolationKind::Incomplete,
                    cell,
                });
            }
        } else if v as usize >= n {
            out.push(Violation {
                kind: ViolationKind::SymbolRange,
                cell,
            });
        }
    }

    let mut check_unit = |unit: Unit, kind: ViolationKind| {
        let mut seen = SymbolMask::EMPTY;
        for cell in unit.cells(n) {
            let v = grid.at(cell);
            if !valid(v) {
                continue;
            }
            if seen.contains(v) {
                out.push(Violation { kind, cell });
            }
            seen.insert(v);
        }
    };
    for i in 0..n {
        check_unit(Unit::Row(i), ViolationKind::Row);
    }
    for j in 0..n {
        check_unit(Unit::Column(j), ViolationKind::Column);
    }
    if cs.main_diagonal {
        check_unit(Unit::MainDiagonal, ViolationKind::MainDiagonal);
    }
    if cs.anti_diagonal {
        check_unit(Unit::AntiDiagonal, ViolationKind::AntiDiagonal);
    }

    if cs.vertical_symmetry {
        for i in 0..n {
            for j in 0..n.div_ceil(2) {
                let (a, b) = (grid.get(i, j), grid.get(i, n - 1 - j));
                if valid(a) && valid(b) && a as usize + b as usize != n - 1 {
                    out.push(Violation {
                        kind: ViolationKind::VerticalSymmetry,
                        cell: Cell::new(i, j),
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> SquareGrid {
        SquareGrid::parse(&rows.join("\n")).unwrap()
    }

    #[test]
    fn dls4_is_valid() {
        let g = grid(&["0 1 2 3", "3 2 1 0", "1 0 3 2", "2 3 0 1"]);
        assert!(validate(&g, ConstraintSet::DLS, false).is_empty());
    }

    #[test]
    fn single_cell_is_valid() {
        let g = grid(&["0"]);
        assert!(validate(&g, ConstraintSet::DLS, false).is_empty());
        assert!(validate(&g, ConstraintSet::LS, false).is_empty());
    }

    #[test]
    fn cyclic_square_fails_both_diagonals() {
        let g = grid(&["0 1 2 3", "1 2 3 0", "2 3 0 1", "3 0 1 2"]);
        let v = validate(&g, ConstraintSet::DLS, false);
        let md = v.iter().filter(|x| x.kind == ViolationKind::MainDiagonal).count();
        let ad = v.iter().filter(|x| x.kind == ViolationKind::AntiDiagonal).count();
        assert_eq!((md, ad, v.len()), (2, 3, 5));
        assert!(validate(&g, ConstraintSet::LS, false).is_empty());
    }

    #[test]
    fn partial_and_range_checks() {
        let g = grid(&["0 1 2 3", "_ _ _ _", "_ _ _ _", "_ _ _ _"]);
        assert!(validate(&g, ConstraintSet::DLS, true).is_empty());
        let v = validate(&g, ConstraintSet::DLS, false);
        assert_eq!(v.len(), 12);
        assert!(v.iter().all(|x| x.kind == ViolationKind::Incomplete));

        let g = grid(&["0 1 2 7", "_ _ _ _", "_ _ _ _", "_ _ _ _"]);
        let v = validate(&g, ConstraintSet::LS, true);
        assert_eq!(
            v,
            vec![Violation {
                kind: ViolationKind::SymbolRange,
                cell: Cell::new(0, 3)
            }]
        );
    }

    #[test]
    fn vertical_symmetry_sum() {
        let g = grid(&["0 1 2 3", "3 2 1 0", "1 0 3 2", "2 3 0 1"]);
        assert!(validate(&g, ConstraintSet::VSDLS, false).is_empty());
        let g = grid(&["0 1 2 3", "2 _ _ 0", "_ _ _ _", "_ _ _ _"]);
        let v = validate(&g, ConstraintSet::VSDLS, true);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::VerticalSymmetry);
    }

    #[test]
    fn normalize_examples() {
        let dls4 = grid(&["0 1 2 3", "3 2 1 0", "1 0 3 2", "2 3 0 1"]);
        assert_eq!(dls4.normalize().unwrap(), dls4);

        let g = grid(&["1 0", "0 1"]);
        assert_eq!(g.normalize().unwrap(), grid(&["0 1", "1 0"]));

        let bad = grid(&["0 0", "1 1"]);
        assert!(bad.normalize().is_err());
        let bad = grid(&["0 _", "1 0"]);
        assert!(bad.normalize().is_err());
    }

    #[test]
    fn normalize_keeps_empty_cells() {
        let g = grid(&["2 0 1", "_ 2 _", "_ _ _"]);
        let n = g.normalize().unwrap();
        assert_eq!(n, grid(&["0 1 2", "_ 0 _", "_ _ _"]));
        assert_eq!(n.normalize().unwrap(), n);
    }

    #[test]
    fn mirror_column() {
        let ten = Order::new(10).unwrap();
        assert_eq!(mirror_cell_of(ten, 0), 9);
        assert_eq!(mirror_cell_of(ten, 4), 5);
        assert_eq!(mirror_cell_of(Order::new(9).unwrap(), 4), 4);
    }

    #[test]
    fn order_bounds() {
        assert!(Order::new(0).is_err());
        assert!(Order::new(17).is_err());
        assert_eq!(Order::new(16).unwrap().all_symbols().bits(), 0xFFFF);
    }

    #[test]
    fn constraint_set_rules() {
        assert!(ConstraintSet::new(true, false, true).is_err());
        assert!(ConstraintSet::VSDLS.check_order(Order::new(9).unwrap()).is_err());
        assert!(ConstraintSet::VSDLS.check_order(Order::new(10).unwrap()).is_ok());
        assert_eq!("dls".parse::<ConstraintSet>().unwrap(), ConstraintSet::DLS);
        assert!("xyz".parse::<ConstraintSet>().is_err());
    }

    #[test]
    fn mask_iteration_is_increasing() {
        let m: SymbolMask = [5u8, 1, 9, 3].into_iter().collect();
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![1, 3, 5, 9]);
        assert_eq!(m.mirrored(10).iter().collect::<Vec<_>>(), vec![0, 4, 6, 8]);
    }

    #[test]
    fn text_roundtrip() {
        let g = grid(&["0 1 2", "_ 2 _", "2 _ 1"]);
        assert_eq!(g.to_string().parse::<SquareGrid>().unwrap(), g);
        assert!("0 1\n2".parse::<SquareGrid>().is_err());
        assert!("0 x\n1 0".parse::<SquareGrid>().is_err());
    }
}

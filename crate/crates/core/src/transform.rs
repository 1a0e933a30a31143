//! M-transformations and canonical hourglass designs.
//!
//! A transform moves cells: a mirror first, then swaps inside symmetric
//! row/column pairs `{x, n-1-x}`, then a permutation of those pairs, applied
//! to rows and columns alike. Every such map keeps both diagonals on the
//! diagonals, so it maps diagonal Latin squares to diagonal Latin squares.
//! Images are renamed so their first row ascends.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::square::{validate, Cell, ConstraintSet, Order, SquareGrid, EMPTY, MAX_ORDER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mirror {
    None,
    /// Rows reversed.
    Horizontal,
    /// Columns reversed.
    Vertical,
    /// Transpose.
    MainDiagonal,
    /// Reflection in the antidiagonal.
    AntiDiagonal,
}

impl Mirror {
    pub const ALL: [Mirror; 5] = [
        Mirror::None,
        Mirror::Horizontal,
        Mirror::Vertical,
        Mirror::MainDiagonal,
        Mirror::AntiDiagonal,
    ];

    fn code(self) -> &'static str {
        match self {
            Mirror::None => "none",
            Mirror::Horizontal => "h",
            Mirror::Vertical => "v",
            Mirror::MainDiagonal => "md",
            Mirror::AntiDiagonal => "ad",
        }
    }

    fn map(self, cell: Cell, n: usize) -> Cell {
        let (i, j) = (cell.row, cell.col);
        match self {
            Mirror::None => cell,
            Mirror::Horizontal => Cell::new(n - 1 - i, j),
            Mirror::Vertical => Cell::new(i, n - 1 - j),
            Mirror::MainDiagonal => Cell::new(j, i),
            Mirror::AntiDiagonal => Cell::new(n - 1 - j, n - 1 - i),
        }
    }
}

/// One M-transformation for a fixed order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MTransform {
    pub mirror: Mirror,
    /// Bit `p` set: rows and columns `p` and `n-1-p` trade places.
    pub pair_swaps: u32,
    /// Pair `p` moves to position `half_perm[p]`.
    pub half_perm: Vec<u8>,
}

impl MTransform {
    pub fn identity(order: Order) -> Self {
        MTransform {
            mirror: Mirror::None,
            pair_swaps: 0,
            half_perm: (0..order.half() as u8).collect(),
        }
    }

    pub fn check(&self, order: Order) -> Result<()> {
        let h = order.half();
        if h < 32 && self.pair_swaps >> h != 0 {
            return Err(Error::InvalidTransform(format!(
                "pair swap mask {:#x} names pairs outside 0..{h}",
                self.pair_swaps
            )));
        }
        if self.half_perm.len() != h {
            return Err(Error::InvalidTransform(format!(
                "pair permutation has {} entries, order {} has {h} pairs",
                self.half_perm.len(),
                order
            )));
        }
        let mut seen = [false; MAX_ORDER];
        for &p in &self.half_perm {
            if p as usize >= h || seen[p as usize] {
                return Err(Error::InvalidTransform(format!(
                    "{:?} is not a permutation of 0..{h}",
                    self.half_perm
                )));
            }
            seen[p as usize] = true;
        }
        Ok(())
    }

    /// Row/column index map of the swap and permutation parts.
    fn line_map(&self, x: usize, n: usize) -> usize {
        let h = n / 2;
        let (pair, outer) = if x < h {
            (x, false)
        } else if x >= n - h {
            (n - 1 - x, true)
        } else {
            return x;
        };
        let outer = outer ^ (self.pair_swaps >> pair & 1 == 1);
        let to = self.half_perm[pair] as usize;
        if outer {
            n - 1 - to
        } else {
            to
        }
    }

    /// Where `cell` lands.
    pub fn map_cell(&self, cell: Cell, n: usize) -> Cell {
        let c = self.mirror.map(cell, n);
        Cell::new(self.line_map(c.row, n), self.line_map(c.col, n))
    }

    /// Moves every cell, empty ones included, without renaming symbols.
    pub fn apply_raw(&self, grid: &SquareGrid) -> Result<SquareGrid> {
        self.check(grid.order())?;
        let n = grid.n();
        let mut out = SquareGrid::empty(grid.order());
        for cell in grid.order().cells() {
            let to = self.map_cell(cell, n);
            out.set(to.row, to.col, grid.at(cell));
        }
        Ok(out)
    }

    /// Moves cells, then renames symbols so the first row ascends.
    pub fn apply(&self, grid: &SquareGrid) -> Result<SquareGrid> {
        self.apply_raw(grid)?.normalize()
    }
}

impl fmt::Display for MTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let perm: Vec<String> = self.half_perm.iter().map(u8::to_string).collect();
        write!(
            f,
            "m:{} s:{:x} p:{}",
            self.mirror.code(),
            self.pair_swaps,
            perm.join(",")
        )
    }
}

impl FromStr for MTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidTransform(format!("cannot parse '{s}'"));
        let mut mirror = None;
        let mut swaps = None;
        let mut perm = None;
        for tok in s.split_whitespace() {
            let (key, val) = tok.split_once(':').ok_or_else(bad)?;
            match key {
                "m" => {
                    mirror = Some(
                        *Mirror::ALL
                            .iter()
                            .find(|m| m.code() == val)
                            .ok_or_else(bad)?,
                    )
                }
                "s" => swaps = Some(u32::from_str_radix(val, 16).map_err(|_| bad())?),
                "p" => {
                    perm = Some(if val.is_empty() {
                        Vec::new()
                    } else {
                        val.split(',')
                            .map(|x| x.parse::<u8>().map_err(|_| bad()))
                            .collect::<Result<Vec<u8>>>()?
                    })
                }
                _ => return Err(bad()),
            }
        }
        Ok(MTransform {
            mirror: mirror.ok_or_else(bad)?,
            pair_swaps: swaps.ok_or_else(bad)?,
            half_perm: perm.ok_or_else(bad)?,
        })
    }
}

/// Upper bound on the number of normalized squares equivalent to one
/// diagonal Latin square under all M-transformations.
pub fn full_class_size_bound(order: Order) -> u128 {
    let h = order.half() as u128;
    4 * (1u128 << h) * (1..=h).product::<u128>()
}

/// True for cells of the first row, last row or either diagonal.
pub fn is_hourglass_cell(cell: Cell, n: usize) -> bool {
    cell.row == 0 || cell.row == n - 1 || cell.on_main_diagonal() || cell.on_anti_diagonal(n)
}

/// Hourglass cells in row-major order; the first `n` form row 0.
pub fn hourglass_cells(order: Order) -> Vec<Cell> {
    let n = order.get();
    order.cells().filter(|&c| is_hourglass_cell(c, n)).collect()
}

/// A partial square whose assigned cells are exactly the hourglass cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HourglassDesign {
    grid: SquareGrid,
}

impl HourglassDesign {
    /// Checks the shape and that no unit repeats a symbol.
    pub fn new(grid: SquareGrid, cs: ConstraintSet) -> Result<Self> {
        let n = grid.n();
        for cell in grid.order().cells() {
            let assigned = grid.at(cell) != EMPTY;
            if assigned != is_hourglass_cell(cell, n) {
                return Err(Error::Shape(format!(
                    "cell {cell} is {}",
                    if assigned { "assigned outside the hourglass" } else { "empty" }
                )));
            }
        }
        let v = validate(&grid, cs, true);
        if let Some(first) = v.first() {
            return Err(Error::Shape(format!(
                "{:?} violation at {}",
                first.kind, first.cell
            )));
        }
        Ok(HourglassDesign { grid })
    }

    pub fn grid(&self) -> &SquareGrid {
        &self.grid
    }

    pub fn into_grid(self) -> SquareGrid {
        self.grid
    }

    pub fn order(&self) -> Order {
        self.grid.order()
    }

    /// Values of the hourglass cells in row-major order.
    pub fn values(&self) -> Vec<u8> {
        hourglass_cells(self.order())
            .into_iter()
            .map(|c| self.grid.at(c))
            .collect()
    }

    /// Builds a design from row-major hourglass values.
    pub fn from_values(order: Order, values: &[u8], cs: ConstraintSet) -> Result<Self> {
        let cells = hourglass_cells(order);
        if cells.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} values for {} hourglass cells",
                values.len(),
                cells.len()
            )));
        }
        let mut g = SquareGrid::empty(order);
        for (c, &v) in cells.iter().zip(values) {
            g.set(c.row, c.col, v);
        }
        HourglassDesign::new(g, cs)
    }

    pub fn apply(&self, t: &MTransform) -> Result<HourglassDesign> {
        Ok(HourglassDesign {
            grid: t.apply(&self.grid)?,
        })
    }

    /// Row-major comparison over the assigned cells.
    pub fn lex_cmp(&self, other: &HourglassDesign) -> Ordering {
        self.values().cmp(&other.values())
    }
}

impl fmt::Display for HourglassDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.grid.fmt(f)
    }
}

/// Copies the hourglass cells of `grid`; everything else is left empty.
pub fn extract_hourglass(grid: &SquareGrid) -> Result<SquareGrid> {
    let n = grid.n();
    let mut out = SquareGrid::empty(grid.order());
    for cell in grid.order().cells() {
        if is_hourglass_cell(cell, n) {
            let v = grid.at(cell);
            if v == EMPTY {
                return Err(Error::Shape(format!("hourglass cell {cell} is empty")));
            }
            out.set(cell.row, cell.col, v);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CanonizationResult {
    pub is_canonical: bool,
    /// Number of distinct designs in the class; 0 when not canonical.
    pub multiplicity: u64,
}

fn permutations(k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur: Vec<u8> = (0..k as u8).collect();
    // Heap's algorithm.
    fn heap(m: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if m <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..m {
            heap(m - 1, cur, out);
            let j = if m.is_multiple_of(2) { i } else { 0 };
            if i + 1 < m {
                cur.swap(j, m - 1);
            }
        }
    }
    heap(k, &mut cur, &mut out);
    out.sort();
    out
}

/// The transforms that keep the hourglass shape: the first row may only
/// trade places with the last row, and no diagonal reflection is used.
#[derive(Clone, Debug)]
pub struct HourglassGroup {
    order: Order,
    cs: ConstraintSet,
    transforms: Vec<MTransform>,
    cells: Vec<Cell>,
    /// `src[t][p]`: hourglass index whose value lands on hourglass index `p`
    /// under transform `t`.
    src: Vec<Vec<u8>>,
}

impl HourglassGroup {
    /// Under vertical symmetry the column reversal only relabels symbols, so
    /// it is dropped from the group.
    pub fn new(order: Order, cs: ConstraintSet) -> Result<Self> {
        if !cs.has_diagonals() {
            return Err(Error::InvalidConstraints(
                "hourglass symmetry needs both diagonal constraints".into(),
            ));
        }
        cs.check_order(order)?;
        let n = order.get();
        let h = order.half();
        let mirrors: &[Mirror] = if cs.vertical_symmetry {
            &[Mirror::None]
        } else {
            &[Mirror::None, Mirror::Vertical]
        };
        let inner = permutations(h.saturating_sub(1));
        let mut transforms = Vec::new();
        for &mirror in mirrors {
            for swaps in 0..(1u32 << h) {
                for p in &inner {
                    let mut half_perm = Vec::with_capacity(h);
                    if h > 0 {
                        half_perm.push(0);
                        half_perm.extend(p.iter().map(|&x| x + 1));
                    }
                    transforms.push(MTransform {
                        mirror,
                        pair_swaps: swaps,
                        half_perm,
                    });
                }
            }
        }

        let cells = hourglass_cells(order);
        let mut pos = vec![usize::MAX; n * n];
        for (k, c) in cells.iter().enumerate() {
            pos[c.index(n)] = k;
        }
        let src = transforms
            .iter()
            .map(|t| {
                let mut s = vec![0u8; cells.len()];
                for (k, &c) in cells.iter().enumerate() {
                    let to = pos[t.map_cell(c, n).index(n)];
                    debug_assert!(to != usize::MAX);
                    s[to] = k as u8;
                }
                s
            })
            .collect();

        Ok(HourglassGroup {
            order,
            cs,
            transforms,
            cells,
            src,
        })
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn constraints(&self) -> ConstraintSet {
        self.cs
    }

    pub fn transforms(&self) -> &[MTransform] {
        &self.transforms
    }

    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }

    /// Hourglass cells in the order used by [`Canonizer`].
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    fn check_shape(&self, h: &HourglassDesign) -> Result<()> {
        if h.order() != self.order {
            return Err(Error::Shape(format!(
                "design of order {} against a group of order {}",
                h.order(),
                self.order
            )));
        }
        Ok(())
    }

    /// Applies every transform, collects the distinct normalized images and
    /// compares them with `h`.
    pub fn canonize(&self, h: &HourglassDesign) -> Result<CanonizationResult> {
        self.check_shape(h)?;
        let mut images: HashSet<HourglassDesign> = HashSet::new();
        for t in &self.transforms {
            let img = h.apply(t)?;
            if img.lex_cmp(h) == Ordering::Less {
                return Ok(CanonizationResult {
                    is_canonical: false,
                    multiplicity: 0,
                });
            }
            images.insert(img);
        }
        Ok(CanonizationResult {
            is_canonical: true,
            multiplicity: images.len() as u64,
        })
    }

    /// Smallest image of `h` and the size of its class.
    pub fn canonical_form(&self, h: &HourglassDesign) -> Result<(HourglassDesign, u64)> {
        self.check_shape(h)?;
        let mut images: HashSet<HourglassDesign> = HashSet::new();
        for t in &self.transforms {
            images.insert(h.apply(t)?);
        }
        let size = images.len() as u64;
        let min = images
            .into_iter()
            .min_by(|a, b| a.lex_cmp(b))
            .expect("the group holds the identity");
        Ok((min, size))
    }
}

/// Allocation-free canonization over row-major hourglass value arrays.
#[derive(Clone, Debug)]
pub struct Canonizer {
    n: usize,
    len: usize,
    src: Vec<Vec<u8>>,
    image: Vec<u8>,
}

impl Canonizer {
    pub fn new(group: &HourglassGroup) -> Self {
        Canonizer {
            n: group.order.get(),
            len: group.cells.len(),
            src: group.src.clone(),
            image: vec![0; group.cells.len()],
        }
    }

    pub fn group_len(&self) -> usize {
        self.src.len()
    }

    #[inline]
    fn rename(&self, src: &[u8], h: &[u8]) -> [u8; MAX_ORDER] {
        let mut pi = [0u8; MAX_ORDER];
        for (k, &s) in src[..self.n].iter().enumerate() {
            pi[h[s as usize] as usize] = k as u8;
        }
        pi
    }

    /// Multiplicity of `h` when it is the smallest in its class, 0 otherwise.
    /// `h` holds normalized row-major hourglass values.
    pub fn check(&self, h: &[u8]) -> u64 {
        debug_assert_eq!(h.len(), self.len);
        let mut fixed = 0u64;
        for src in &self.src {
            let pi = self.rename(src, h);
            let mut ord = Ordering::Equal;
            for p in self.n..self.len {
                let v = pi[h[src[p] as usize] as usize];
                if v != h[p] {
                    ord = v.cmp(&h[p]);
                    break;
                }
            }
            match ord {
                Ordering::Less => return 0,
                Ordering::Equal => fixed += 1,
                Ordering::Greater => {}
            }
        }
        // Orbit size = group order / stabilizer order.
        self.src.len() as u64 / fixed
    }

    /// Overwrites `out` with the smallest image of `h`; returns the class size.
    pub fn minimize(&mut self, h: &[u8], out: &mut [u8]) -> u64 {
        out.copy_from_slice(h);
        let mut fixed = 0u64;
        for t in 0..self.src.len() {
            let src = &self.src[t];
            let pi = self.rename(src, h);
            for p in 0..self.len {
                self.image[p] = pi[h[src[p] as usize] as usize];
            }
            if self.image[..] == h[..] {
                fixed += 1;
            }
            if self.image[..] < out[..] {
                out.copy_from_slice(&self.image);
            }
        }
        self.src.len() as u64 / fixed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> SquareGrid {
        SquareGrid::parse(&rows.join("\n")).unwrap()
    }

    #[test]
    fn class_bounds() {
        let b = |n| full_class_size_bound(Order::new(n).unwrap());
        assert_eq!(b(9), 1536);
        assert_eq!(b(10), 15360);
        assert_eq!(b(2), 8);
    }

    #[test]
    fn group_sizes() {
        let g = |n, cs| HourglassGroup::new(Order::new(n).unwrap(), cs).unwrap().len();
        assert_eq!(g(8, ConstraintSet::DLS), 192);
        assert_eq!(g(9, ConstraintSet::DLS), 192);
        assert_eq!(g(10, ConstraintSet::VSDLS), 768);
        assert_eq!(g(10, ConstraintSet::DLS), 2 * 32 * 24);
        assert!(HourglassGroup::new(Order::new(8).unwrap(), ConstraintSet::LS).is_err());
    }

    #[test]
    fn identity_normalizes() {
        let g = grid(&["1 0 3 2", "2 3 0 1", "3 2 1 0", "0 1 2 3"]);
        let id = MTransform::identity(g.order());
        assert_eq!(id.apply(&g).unwrap(), g.normalize().unwrap());
    }

    #[test]
    fn hourglass_of_dls4() {
        let g = grid(&["0 1 2 3", "3 2 1 0", "1 0 3 2", "2 3 0 1"]);
        let h = extract_hourglass(&g).unwrap();
        let want = grid(&["0 1 2 3", "_ 2 1 _", "_ 0 3 _", "2 3 0 1"]);
        assert_eq!(h, want);
        assert_eq!(extract_hourglass(&h).unwrap(), h);
    }

    #[test]
    fn descriptor_round_trip() {
        let t = MTransform {
            mirror: Mirror::Vertical,
            pair_swaps: 0b1010,
            half_perm: vec![0, 2, 3, 1],
        };
        let s = t.to_string();
        assert_eq!(s, "m:v s:a p:0,2,3,1");
        assert_eq!(s.parse::<MTransform>().unwrap(), t);
        let bad = MTransform {
            mirror: Mirror::None,
            pair_swaps: 1 << 4,
            half_perm: vec![0, 1, 2, 3],
        };
        assert!(bad.check(Order::new(8).unwrap()).is_err());
        let bad = MTransform {
            mirror: Mirror::None,
            pair_swaps: 0,
            half_perm: vec![0, 1, 1, 3],
        };
        assert!(bad.check(Order::new(8).unwrap()).is_err());
    }

    #[test]
    fn pair_swap_moves_outer_lines() {
        let n = 8;
        let t = MTransform {
            mirror: Mirror::None,
            pair_swaps: 1,
            half_perm: vec![0, 1, 2, 3],
        };
        assert_eq!(t.map_cell(Cell::new(0, 0), n), Cell::new(7, 7));
        assert_eq!(t.map_cell(Cell::new(0, 3), n), Cell::new(7, 3));
        let t = MTransform {
            mirror: Mirror::None,
            pair_swaps: 0,
            half_perm: vec![1, 0, 2, 3],
        };
        assert_eq!(t.map_cell(Cell::new(0, 7), n), Cell::new(1, 6));
    }
}

//! Brute-force reference counters for tests and audits.
//!
//! Nothing here shares code with the engine: squares are built row by row
//! from a list of all permutations, or cell by cell over every assignment.

use crate::error::{Error, Result};
use crate::plan::FixedPrefix;
use crate::square::{ConstraintSet, Order};

/// Largest order the permutation oracle accepts for plain Latin squares.
pub const MAX_LS_ORDER: usize = 7;
/// Largest order the permutation oracle accepts with diagonal constraints.
pub const MAX_DLS_ORDER: usize = 6;
/// Largest order of the all-assignments checker.
pub const MAX_NAIVE_ORDER: usize = 4;

fn permutations(n: usize) -> Vec<Vec<u8>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, (n - 1) as u8);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn square_ok(rows: &[&[u8]], cs: ConstraintSet) -> bool {
    let n = rows.len();
    let distinct = |vals: Vec<u8>| {
        let mut v = vals;
        v.sort_unstable();
        v.dedup();
        v.len() == n
    };
    for c in 0..n {
        if !distinct(rows.iter().map(|r| r[c]).collect()) {
            return false;
        }
    }
    for r in rows {
        if !distinct(r.to_vec()) {
            return false;
        }
    }
    if cs.main_diagonal && !distinct((0..n).map(|i| rows[i][i]).collect()) {
        return false;
    }
    if cs.anti_diagonal && !distinct((0..n).map(|i| rows[i][n - 1 - i]).collect()) {
        return false;
    }
    if cs.vertical_symmetry {
        for r in rows {
            for c in 0..n {
                if r[c] as usize + r[n - 1 - c] as usize != n - 1 {
                    return false;
                }
            }
        }
    }
    true
}

fn limit(order: Order, cs: ConstraintSet, max_ls: usize, max_dls: usize) -> Result<usize> {
    let n = order.get();
    cs.check_order(order)?;
    let max = if cs.has_diagonals() || cs.vertical_symmetry {
        max_dls
    } else {
        max_ls
    };
    if n > max {
        return Err(Error::Unsupported(format!(
            "the oracle handles order at most {max} for {}",
            cs.code()
        )));
    }
    Ok(n)
}

/// Counts squares by stacking permutations under the identity first row,
/// checking columns after each row and everything else at the end.
pub fn oracle_count(order: Order, cs: ConstraintSet, fixed: FixedPrefix) -> Result<u64> {
    let n = limit(order, cs, MAX_LS_ORDER, MAX_DLS_ORDER)?;
    let perms = permutations(n);
    let first: Vec<u8> = (0..n as u8).collect();
    let mut rows: Vec<&[u8]> = vec![&first];
    let mut count = 0u64;
    fn rec<'a>(
        perms: &'a [Vec<u8>],
        rows: &mut Vec<&'a [u8]>,
        n: usize,
        cs: ConstraintSet,
        fixed: FixedPrefix,
        count: &mut u64,
    ) {
        let r = rows.len();
        if r == n {
            if square_ok(rows, cs) {
                *count += 1;
            }
            return;
        }
        for p in perms {
            if fixed == FixedPrefix::FirstRowAndColumn && p[0] as usize != r {
                continue;
            }
            if rows.iter().any(|q| q.iter().zip(p).any(|(a, b)| a == b)) {
                continue;
            }
            rows.push(p);
            rec(perms, rows, n, cs, fixed, count);
            rows.pop();
        }
    }
    rec(&perms, &mut rows, n, cs, fixed, &mut count);
    Ok(count)
}

/// Counts squares by trying every symbol in every free cell.
pub fn naive_count(order: Order, cs: ConstraintSet, fixed: FixedPrefix) -> Result<u64> {
    let n = limit(order, cs, MAX_NAIVE_ORDER, MAX_NAIVE_ORDER)?;
    let mut grid = vec![0u8; n * n];
    let mut free = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if r == 0 {
                grid[c] = c as u8;
            } else if c == 0 && fixed == FixedPrefix::FirstRowAndColumn {
                grid[r * n] = r as u8;
            } else {
                free.push(r * n + c);
            }
        }
    }
    let mut count = 0u64;
    loop {
        let rows: Vec<&[u8]> = grid.chunks(n).collect();
        if square_ok(&rows, cs) {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == free.len() {
                return Ok(count);
            }
            let cell = free[i];
            if (grid[cell] as usize) + 1 < n {
                grid[cell] += 1;
                break;
            }
            grid[cell] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(n: usize) -> Order {
        Order::new(n).unwrap()
    }

    #[test]
    fn documented_values() {
        assert_eq!(oracle_count(o(4), ConstraintSet::DLS, FixedPrefix::FirstRow).unwrap(), 2);
        assert_eq!(oracle_count(o(5), ConstraintSet::LS, FixedPrefix::FirstRowAndColumn).unwrap(), 56);
        assert_eq!(oracle_count(o(3), ConstraintSet::DLS, FixedPrefix::FirstRow).unwrap(), 0);
    }

    #[test]
    fn naive_matches_permutations() {
        for n in 1..=4 {
            for cs in [ConstraintSet::LS, ConstraintSet::DLS] {
                for fixed in [FixedPrefix::FirstRow, FixedPrefix::FirstRowAndColumn] {
                    assert_eq!(
                        naive_count(o(n), cs, fixed).unwrap(),
                        oracle_count(o(n), cs, fixed).unwrap(),
                        "n={n} {} {fixed:?}",
                        cs.code()
                    );
                }
            }
        }
    }

    #[test]
    fn limits() {
        assert!(oracle_count(o(7), ConstraintSet::DLS, FixedPrefix::FirstRow).is_err());
        assert!(naive_count(o(5), ConstraintSet::LS, FixedPrefix::FirstRow).is_err());
    }
}

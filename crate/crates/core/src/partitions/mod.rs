//! Row-constrained partitions of diagram elements.
//!
//! A diagram with rows `(q1, ..., qm)` has `N = q1 + ... + qm` elements; a
//! block may contain at most one element from each row. The five classes
//! are the unrestricted one, no singletons, connected (the induced
//! partition of rows has a single block), connected without singletons,
//! and row covering (every row meets a block of size at least two).

mod enumerate;
mod partition;
mod shape;

use serde::{Deserialize, Serialize};

pub use enumerate::{
    count, count_with_guard, enumerate, enumerate_with_guard, for_each_partition, Guard,
    DEFAULT_GUARD,
};
pub(crate) use enumerate::{binomial, factorial};
pub use partition::{ClassFlags, DiagramPartition, PartitionClass};
pub use shape::DiagramShape;

use crate::error::{Error, Result};

/// Embeds a partition over rows `(j1, ..., jm)` into rows `(q1, ..., qm)`
/// with `jl <= ql`: position `r` of row `l` keeps position `r` in the
/// target row, and the `ql - jl` trailing positions become singletons.
pub fn theta_embed(p: &DiagramPartition, target: &DiagramShape) -> Result<DiagramPartition> {
    let source = p.shape();
    if source.num_rows() != target.num_rows() {
        return Err(Error::IncompatibleShapes(format!(
            "{} rows cannot embed into {} rows",
            source.num_rows(),
            target.num_rows()
        )));
    }
    for (row, (&j, &q)) in source.rows().iter().zip(target.rows()).enumerate() {
        if j > q {
            return Err(Error::IncompatibleShapes(format!(
                "row {} has {j} elements, target row has {q}",
                row + 1
            )));
        }
    }
    let tau = |e: usize| {
        let row = source.row_of(e);
        target.row_range(row).start + (e - source.row_range(row).start)
    };
    let mut blocks: Vec<Vec<usize>> =
        p.blocks().iter().map(|b| b.iter().map(|&e| tau(e)).collect()).collect();
    for (row, &j) in source.rows().iter().enumerate() {
        let range = target.row_range(row);
        blocks.extend((range.start + j..range.end).map(|e| vec![e]));
    }
    DiagramPartition::from_blocks(target.clone(), blocks)
}

/// Outcome of checking `|Π^m(q)| <= q^(qm) (m!)^q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub q: usize,
    pub m: usize,
    pub count: u128,
    pub bound: u128,
    pub holds: bool,
}

pub fn verify_upper_bound(q: usize, m: usize, guard: Guard) -> Result<BoundReport> {
    if q == 0 || m == 0 {
        return Err(Error::InvalidShape("q and m must be positive".into()));
    }
    let shape = DiagramShape::uniform(q, m)?;
    let count = count_with_guard(&shape, PartitionClass::All, guard)?;
    let overflow = || Error::OutOfRange(format!("bound for q={q}, m={m} exceeds 128 bits"));
    let power = (q as u128).checked_pow((q * m) as u32).ok_or_else(overflow)?;
    let fact = factorial(m).checked_pow(q as u32).ok_or_else(overflow)?;
    let bound = power.checked_mul(fact).ok_or_else(overflow)?;
    Ok(BoundReport { q, m, count, bound, holds: count <= bound })
}

/// Explicit members of `Π̃≥2` on `uk` rows of length `q`, together with the
/// number the construction is guaranteed to produce.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundFamily {
    pub shape: DiagramShape,
    pub partitions: Vec<DiagramPartition>,
    pub certificate: u128,
}

/// Builds the family used to show that `|Π̃≥2^{uk}(q)|` grows like
/// `((uk)!)^q` up to exponential factors.
///
/// With rows numbered `0..uk`:
/// 1. the first column is cut into `u` blocks of `k` rows, in every way;
/// 2. in the second column the first row of group `l` is paired with the
///    last row of group `l + 1` (cyclically), which chains the groups
///    together, and the `u(k-2)` remaining rows are cut into blocks of
///    size `k - 2` in every way (nothing is left when `k = 2`);
/// 3. every further column is cut into blocks of `k` rows, in every way.
pub fn lower_bound_family(q: usize, u: usize, k: usize, guard: Guard) -> Result<LowerBoundFamily> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::KNotEven(k));
    }
    if q < 2 || u == 0 {
        return Err(Error::InvalidShape(format!("need q >= 2 and u >= 1, got q={q}, u={u}")));
    }
    let rows = u * k;
    guard.check(rows * q)?;
    let shape = DiagramShape::uniform(q, rows)?;
    let all_rows: Vec<usize> = (0..rows).collect();
    let full_groupings = groupings(&all_rows, k);

    let mut partitions = Vec::new();
    for first in &full_groupings {
        let mut linked = Vec::with_capacity(u);
        let mut interior = Vec::with_capacity(u * (k - 2));
        for l in 0..u {
            linked.push(vec![first[l][0], first[(l + 1) % u][k - 1]]);
            interior.extend_from_slice(&first[l][1..k - 1]);
        }
        interior.sort_unstable();
        let interior_groupings =
            if k == 2 { vec![Vec::new()] } else { groupings(&interior, k - 2) };

        let mut prefix: Vec<Vec<usize>> = column_blocks(first, 0, q);
        prefix.extend(column_blocks(&linked, 1, q));
        for second in &interior_groupings {
            let mut head = prefix.clone();
            head.extend(column_blocks(second, 1, q));
            extend_columns(&shape, &full_groupings, head, 2, q, &mut partitions)?;
        }
    }

    let g1 = grouping_count(rows, k, u);
    let g2 = if k == 2 { 1 } else { grouping_count(u * (k - 2), k - 2, u) };
    let certificate = g1 * g2 * g1.pow((q - 2) as u32);
    Ok(LowerBoundFamily { shape, partitions, certificate })
}

fn extend_columns(
    shape: &DiagramShape,
    options: &[Vec<Vec<usize>>],
    head: Vec<Vec<usize>>,
    column: usize,
    q: usize,
    out: &mut Vec<DiagramPartition>,
) -> Result<()> {
    if column == q {
        out.push(DiagramPartition::from_blocks(shape.clone(), head)?);
        return Ok(());
    }
    for grouping in options {
        let mut next = head.clone();
        next.extend(column_blocks(grouping, column, q));
        extend_columns(shape, options, next, column + 1, q, out)?;
    }
    Ok(())
}

/// Turns groups of rows into element blocks in the given column.
fn column_blocks(groups: &[Vec<usize>], column: usize, q: usize) -> Vec<Vec<usize>> {
    groups.iter().map(|g| g.iter().map(|&row| row * q + column).collect()).collect()
}

/// All ways to cut a sorted list into unordered blocks of `size`, each
/// block sorted and blocks ordered by their first item.
fn groupings(items: &[usize], size: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(rest: &[usize], size: usize, acc: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        let Some((&head, tail)) = rest.split_first() else {
            out.push(acc.clone());
            return;
        };
        let mut pick = Vec::with_capacity(size - 1);
        choose(head, tail, size - 1, 0, &mut pick, acc, out, size);
    }

    #[allow(clippy::too_many_arguments)]
    fn choose(
        head: usize,
        tail: &[usize],
        need: usize,
        from: usize,
        pick: &mut Vec<usize>,
        acc: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
        size: usize,
    ) {
        if need == 0 {
            let mut block = vec![head];
            block.extend(pick.iter().map(|&i| tail[i]));
            let rest: Vec<usize> =
                (0..tail.len()).filter(|i| !pick.contains(i)).map(|i| tail[i]).collect();
            acc.push(block);
            rec(&rest, size, acc, out);
            acc.pop();
            return;
        }
        for i in from..tail.len() {
            pick.push(i);
            choose(head, tail, need - 1, i + 1, pick, acc, out, size);
            pick.pop();
        }
    }

    assert!(size > 0 && items.len().is_multiple_of(size));
    let mut out = Vec::new();
    rec(items, size, &mut Vec::new(), &mut out);
    out
}

/// `(us)! / (u! (s!)^u)`.
fn grouping_count(n: usize, s: usize, u: usize) -> u128 {
    factorial(n) / (factorial(u) * factorial(s).pow(u as u32))
}

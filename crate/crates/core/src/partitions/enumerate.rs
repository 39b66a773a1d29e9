//! Row-constrained partition enumeration.
//!
//! Partitions are generated block by block: each new block starts at the
//! smallest unassigned element and is extended with larger elements from
//! strictly later rows. Trying "close the block" before any extension, and
//! extensions in increasing order, yields the partitions in lexicographic
//! order of their canonical block lists. Row compatibility and, where the
//! class asks for it, the no-singleton rule are enforced while building;
//! connectivity and row covering are whole-partition properties checked at
//! the leaves.

use super::partition::ClassFlags;
use super::{DiagramPartition, DiagramShape, PartitionClass};
use crate::error::{Error, Result};

/// Default bound on the number of diagram elements.
pub const DEFAULT_GUARD: usize = 20;

/// Hard ceiling imposed by the bitmask representation.
const MAX_ELEMENTS: usize = 64;

/// Size limit for enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guard {
    pub max_elements: usize,
}

impl Default for Guard {
    fn default() -> Self {
        Self { max_elements: DEFAULT_GUARD }
    }
}

impl Guard {
    pub fn new(max_elements: usize) -> Self {
        Self { max_elements }
    }

    pub fn check(&self, elements: usize) -> Result<()> {
        let limit = self.max_elements.min(MAX_ELEMENTS);
        if elements > limit {
            return Err(Error::ShapeTooLarge { elements, guard: limit });
        }
        Ok(())
    }
}

struct Walker<'a, F> {
    shape: &'a DiagramShape,
    class: PartitionClass,
    row_of: Vec<usize>,
    assigned: u64,
    full: u64,
    blocks: Vec<Vec<usize>>,
    visit: F,
}

impl<F: FnMut(&[Vec<usize>])> Walker<'_, F> {
    fn open_block(&mut self) {
        if self.assigned == self.full {
            self.leaf();
            return;
        }
        let e = (!self.assigned).trailing_zeros() as usize;
        self.assigned |= 1 << e;
        self.blocks.push(vec![e]);
        self.extend();
        self.blocks.pop();
        self.assigned &= !(1 << e);
    }

    fn extend(&mut self) {
        let block = self.blocks.last().expect("an open block");
        let (last, len) = (*block.last().expect("blocks are nonempty"), block.len());
        if !(self.class.forbids_singletons() && len == 1) {
            self.open_block();
        }
        let next_row = self.row_of[last] + 1;
        if next_row >= self.shape.num_rows() {
            return;
        }
        let start = self.shape.row_range(next_row).start;
        for f in start..self.row_of.len() {
            if self.assigned & (1 << f) != 0 {
                continue;
            }
            self.assigned |= 1 << f;
            self.blocks.last_mut().unwrap().push(f);
            self.extend();
            self.blocks.last_mut().unwrap().pop();
            self.assigned &= !(1 << f);
        }
    }

    fn leaf(&mut self) {
        let keep = match self.class {
            PartitionClass::All | PartitionClass::NoSingletons => true,
            _ => self.class.contains(ClassFlags::of_blocks(self.shape, &self.blocks)),
        };
        if keep {
            (self.visit)(&self.blocks);
        }
    }
}

/// Calls `visit` with the canonical blocks of every partition in `class`,
/// in lexicographic order.
pub fn for_each_partition<F>(
    shape: &DiagramShape,
    class: PartitionClass,
    guard: Guard,
    visit: F,
) -> Result<()>
where
    F: FnMut(&[Vec<usize>]),
{
    let n = shape.total();
    guard.check(n)?;
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut walker = Walker {
        shape,
        class,
        row_of: (0..n).map(|e| shape.row_of(e)).collect(),
        assigned: 0,
        full,
        blocks: Vec::with_capacity(n),
        visit,
    };
    walker.open_block();
    Ok(())
}

pub fn enumerate(shape: &DiagramShape, class: PartitionClass) -> Result<Vec<DiagramPartition>> {
    enumerate_with_guard(shape, class, Guard::default())
}

pub fn enumerate_with_guard(
    shape: &DiagramShape,
    class: PartitionClass,
    guard: Guard,
) -> Result<Vec<DiagramPartition>> {
    let mut out = Vec::new();
    for_each_partition(shape, class, guard, |blocks| {
        out.push(DiagramPartition::from_canonical(shape.clone(), blocks.to_vec()));
    })?;
    Ok(out)
}

pub fn count(shape: &DiagramShape, class: PartitionClass) -> Result<u128> {
    count_with_guard(shape, class, Guard::default())
}

/// Number of partitions in `class`. The unrestricted class is counted by a
/// row-by-row recursion on the number of open blocks; the others walk the
/// enumeration tree without materializing partitions.
pub fn count_with_guard(shape: &DiagramShape, class: PartitionClass, guard: Guard) -> Result<u128> {
    guard.check(shape.total())?;
    if class == PartitionClass::All {
        return count_all(shape)
            .ok_or_else(|| Error::OutOfRange(format!("partition count of {shape} exceeds 128 bits")));
    }
    let mut total = 0u128;
    for_each_partition(shape, class, guard, |_| total += 1)?;
    Ok(total)
}

/// `|Π(q1..qm)|`: when row `q` is added to a partition with `b` blocks,
/// choosing `j` of its elements to join `j` distinct existing blocks can be
/// done in `C(q, j) * b (b-1) ... (b-j+1)` ways and leaves `b + q - j` blocks.
fn count_all(shape: &DiagramShape) -> Option<u128> {
    let mut ways = vec![1u128];
    for &q in shape.rows() {
        let mut next = vec![0u128; ways.len() + q];
        for (b, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let mut falling = 1u128;
            for j in 0..=q.min(b) {
                if j > 0 {
                    falling = falling.checked_mul((b - j + 1) as u128)?;
                }
                let add = w.checked_mul(binomial(q, j))?.checked_mul(falling)?;
                next[b + q - j] = next[b + q - j].checked_add(add)?;
            }
        }
        ways = next;
    }
    ways.iter().try_fold(0u128, |acc, &w| acc.checked_add(w))
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub(crate) fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

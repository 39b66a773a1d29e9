use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Row profile `(q1, ..., qm)` of a diagram.
///
/// Elements are numbered `0..N` internally, row by row; the text forms used
/// by the CLI and fixtures are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiagramShape {
    rows: Vec<usize>,
    starts: Vec<usize>,
}

impl DiagramShape {
    pub fn new(rows: Vec<usize>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidShape("a shape needs at least one row".into()));
        }
        if let Some(pos) = rows.iter().position(|&q| q == 0) {
            return Err(Error::InvalidShape(format!("row {} has size 0", pos + 1)));
        }
        let mut starts = Vec::with_capacity(rows.len() + 1);
        let mut acc = 0;
        starts.push(0);
        for &q in &rows {
            acc += q;
            starts.push(acc);
        }
        Ok(Self { rows, starts })
    }

    /// `m` rows of equal size `q`.
    pub fn uniform(q: usize, m: usize) -> Result<Self> {
        Self::new(vec![q; m])
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Total number of elements `N`.
    pub fn total(&self) -> usize {
        self.starts[self.rows.len()]
    }

    /// Element range of row `row` (0-based).
    pub fn row_range(&self, row: usize) -> Range<usize> {
        self.starts[row]..self.starts[row + 1]
    }

    /// Row containing element `e` (both 0-based).
    pub fn row_of(&self, e: usize) -> usize {
        debug_assert!(e < self.total());
        // starts is sorted; the row is the last start <= e
        self.starts.partition_point(|&s| s <= e) - 1
    }
}

impl fmt::Display for DiagramShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.rows.iter().map(|q| q.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for DiagramShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut column = 1;
        for token in s.split(',') {
            let trimmed = token.trim();
            let q = trimmed.parse::<usize>().map_err(|_| {
                Error::InvalidShape(format!("bad row size {trimmed:?} at column {column}"))
            })?;
            rows.push(q);
            column += token.len() + 1;
        }
        Self::new(rows)
    }
}

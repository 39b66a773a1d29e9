use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DiagramShape;
use crate::error::{Error, Result};

/// A set partition of the `N` diagram elements.
///
/// Blocks are kept in canonical form: each block sorted ascending, blocks
/// ordered by their minimum element. Two equal partitions therefore have
/// identical block lists and identical text forms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagramPartition {
    blocks: Vec<Vec<usize>>,
    shape: DiagramShape,
}

impl PartialOrd for DiagramShape {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DiagramShape {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rows().cmp(other.rows())
    }
}

impl DiagramPartition {
    /// Builds a partition from 0-based blocks, validating that they cover
    /// `0..N` exactly once. Row compatibility is *not* required here; use
    /// [`classify`](Self::classify) to check it.
    pub fn from_blocks(shape: DiagramShape, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n = shape.total();
        let mut seen = vec![false; n];
        let mut canonical = Vec::with_capacity(blocks.len());
        for mut block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &e in &block {
                if e >= n {
                    return Err(Error::InvalidPartition(format!(
                        "element {} outside 1..={n}",
                        e + 1
                    )));
                }
                if std::mem::replace(&mut seen[e], true) {
                    return Err(Error::InvalidPartition(format!("element {} repeated", e + 1)));
                }
            }
            block.sort_unstable();
            canonical.push(block);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("element {} not covered", missing + 1)));
        }
        canonical.sort_unstable_by_key(|b| b[0]);
        Ok(Self { blocks: canonical, shape })
    }

    /// Trusted constructor for blocks already in canonical form.
    pub(crate) fn from_canonical(shape: DiagramShape, blocks: Vec<Vec<usize>>) -> Self {
        debug_assert!(blocks.windows(2).all(|w| w[0][0] < w[1][0]));
        Self { blocks, shape }
    }

    /// Parses the compact text form, e.g. `"1,3|2,4"` (1-based).
    pub fn parse(shape: &DiagramShape, text: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for part in text.split('|') {
            let mut block = Vec::new();
            for tok in part.split(',') {
                let tok = tok.trim();
                let e: usize = tok
                    .parse()
                    .map_err(|_| Error::InvalidPartition(format!("bad element {tok:?}")))?;
                if e == 0 {
                    return Err(Error::InvalidPartition("elements are 1-based".into()));
                }
                block.push(e - 1);
            }
            blocks.push(block);
        }
        Self::from_blocks(shape.clone(), blocks)
    }

    /// The all-singletons partition.
    pub fn singletons(shape: &DiagramShape) -> Self {
        let blocks = (0..shape.total()).map(|e| vec![e]).collect();
        Self::from_canonical(shape.clone(), blocks)
    }

    pub fn shape(&self) -> &DiagramShape {
        &self.shape
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block index of every element.
    pub fn block_labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.shape.total()];
        for (b, block) in self.blocks.iter().enumerate() {
            for &e in block {
                labels[e] = b;
            }
        }
        labels
    }

    pub fn is_row_compatible(&self) -> bool {
        blocks_row_compatible(&self.shape, &self.blocks)
    }

    pub fn classify(&self) -> ClassFlags {
        ClassFlags::of_blocks(&self.shape, &self.blocks)
    }

    /// The partition of rows induced by blocks that meet several rows.
    pub fn induced_row_partition(&self) -> Result<Vec<Vec<usize>>> {
        if !self.is_row_compatible() {
            return Err(Error::NotRowCompatible);
        }
        Ok(row_components(&self.shape, &self.blocks))
    }

    /// Rows drawn as lines, blocks as letters.
    pub fn render_ascii(&self) -> String {
        const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
        let labels = self.block_labels();
        let mut out = String::new();
        for row in 0..self.shape.num_rows() {
            let cells: Vec<String> = self
                .shape
                .row_range(row)
                .map(|e| {
                    let b = labels[e];
                    if self.blocks[b].len() == 1 {
                        ".".to_string()
                    } else {
                        LETTERS.get(b).map_or("?".to_string(), |&c| (c as char).to_string())
                    }
                })
                .collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for DiagramPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for (j, e) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", e + 1)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn blocks_row_compatible(shape: &DiagramShape, blocks: &[Vec<usize>]) -> bool {
    blocks.iter().all(|block| {
        let mut rows: Vec<usize> = block.iter().map(|&e| shape.row_of(e)).collect();
        rows.sort_unstable();
        rows.windows(2).all(|w| w[0] != w[1])
    })
}

/// Connected components of rows under "some block meets both rows".
pub(crate) fn row_components(shape: &DiagramShape, blocks: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let m = shape.num_rows();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for block in blocks {
        let first = shape.row_of(block[0]);
        for &e in &block[1..] {
            let a = find(&mut parent, first);
            let b = find(&mut parent, shape.row_of(e));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; m];
    for row in 0..m {
        let r = find(&mut parent, row);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(row);
    }
    groups
}

/// Membership flags for the five partition classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassFlags {
    pub row_compatible: bool,
    pub no_singletons: bool,
    pub connected: bool,
    pub row_covering: bool,
}

impl ClassFlags {
    pub(crate) fn of_blocks(shape: &DiagramShape, blocks: &[Vec<usize>]) -> Self {
        let no_singletons = blocks.iter().all(|b| b.len() >= 2);
        let connected = row_components(shape, blocks).len() == 1;
        let mut covered = vec![false; shape.num_rows()];
        for block in blocks.iter().filter(|b| b.len() >= 2) {
            for &e in block {
                covered[shape.row_of(e)] = true;
            }
        }
        Self {
            row_compatible: blocks_row_compatible(shape, blocks),
            no_singletons,
            connected,
            row_covering: covered.iter().all(|&c| c),
        }
    }
}

/// The five row-constrained partition classes.
///
/// | tag | usual symbol |
/// |-----|--------------|
/// | `All` | Π |
/// | `NoSingletons` | Π≥2 |
/// | `Connected` | Π̃ |
/// | `ConnectedNoSingletons` | Π̃≥2 |
/// | `RowCovering` | Π̄ |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionClass {
    All,
    NoSingletons,
    Connected,
    ConnectedNoSingletons,
    RowCovering,
}

impl PartitionClass {
    pub const ALL: [PartitionClass; 5] = [
        PartitionClass::All,
        PartitionClass::NoSingletons,
        PartitionClass::Connected,
        PartitionClass::ConnectedNoSingletons,
        PartitionClass::RowCovering,
    ];

    pub fn contains(self, flags: ClassFlags) -> bool {
        flags.row_compatible
            && match self {
                PartitionClass::All => true,
                PartitionClass::NoSingletons => flags.no_singletons,
                PartitionClass::Connected => flags.connected,
                PartitionClass::ConnectedNoSingletons => flags.connected && flags.no_singletons,
                PartitionClass::RowCovering => flags.row_covering,
            }
    }

    pub fn name(self) -> &'static str {
        match self {
            PartitionClass::All => "all",
            PartitionClass::NoSingletons => "no-singletons",
            PartitionClass::Connected => "connected",
            PartitionClass::ConnectedNoSingletons => "connected-no-singletons",
            PartitionClass::RowCovering => "row-covering",
        }
    }

    pub(crate) fn forbids_singletons(self) -> bool {
        matches!(self, PartitionClass::NoSingletons | PartitionClass::ConnectedNoSingletons)
    }
}

impl fmt::Display for PartitionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PartitionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PartitionClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown partition class {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(rows: &[usize]) -> DiagramShape {
        DiagramShape::new(rows.to_vec()).unwrap()
    }

    #[test]
    fn perfect_matching_has_every_flag() {
        let p = DiagramPartition::parse(&shape(&[2, 2]), "1,3|2,4").unwrap();
        let f = p.classify();
        assert!(f.row_compatible && f.no_singletons && f.connected && f.row_covering);
    }

    #[test]
    fn singletons_are_only_row_compatible() {
        let p = DiagramPartition::singletons(&shape(&[2, 2]));
        assert_eq!(
            p.classify(),
            ClassFlags { row_compatible: true, no_singletons: false, connected: false, row_covering: false }
        );
    }

    #[test]
    fn single_cross_pair_is_connected_and_covering() {
        let p = DiagramPartition::parse(&shape(&[2, 2]), "1,3|2|4").unwrap();
        let f = p.classify();
        assert!(f.connected);
        assert!(!f.no_singletons);
        assert!(f.row_covering);
    }

    #[test]
    fn induced_rows() {
        let s = shape(&[2, 2]);
        let p = DiagramPartition::parse(&s, "1,3|2,4").unwrap();
        assert_eq!(p.induced_row_partition().unwrap(), vec![vec![0, 1]]);
        let p = DiagramPartition::singletons(&s);
        assert_eq!(p.induced_row_partition().unwrap(), vec![vec![0], vec![1]]);
        let s = shape(&[2, 2, 2]);
        let p = DiagramPartition::parse(&s, "1,3|2|4|5|6").unwrap();
        assert_eq!(p.induced_row_partition().unwrap(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn induced_rows_requires_row_compatibility() {
        let p = DiagramPartition::parse(&shape(&[2, 2]), "1,2|3|4").unwrap();
        assert_eq!(p.induced_row_partition(), Err(Error::NotRowCompatible));
    }

    #[test]
    fn canonical_text_round_trip() {
        let s = shape(&[2, 2]);
        let p = DiagramPartition::parse(&s, "4,2|3,1").unwrap();
        assert_eq!(p.to_string(), "1,3|2,4");
    }

    #[test]
    fn rejects_bad_covers() {
        let s = shape(&[2]);
        assert!(DiagramPartition::parse(&s, "1").is_err());
        assert!(DiagramPartition::parse(&s, "1,2|2").is_err());
        assert!(DiagramPartition::parse(&s, "1,3").is_err());
        assert!(DiagramPartition::parse(&s, "0,1").is_err());
    }

    #[test]
    fn ascii_layout() {
        let p = DiagramPartition::parse(&shape(&[2, 2]), "1,3|2|4").unwrap();
        assert_eq!(p.render_ascii(), "a .\na .\n");
    }
}

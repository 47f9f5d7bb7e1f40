use std::fmt;

use thiserror::Error;

use super::{SpeciesId, SpeciesTable};

/// A partition of the species set.
///
/// Kept in canonical form: members of each block ascending, blocks ordered by
/// their smallest member. Two partitions are equal iff they induce the same
/// equivalence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpeciesPartition {
    blocks: Vec<Vec<SpeciesId>>,
    block_of: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("species #{0} appears in more than one block")]
    Duplicate(u32),
    #[error("species #{0} is not covered by any block")]
    Uncovered(u32),
    #[error("species #{0} is out of range")]
    OutOfRange(u32),
    #[error("empty block")]
    EmptyBlock,
}

impl SpeciesPartition {
    /// The one-block partition `{S}`.
    pub fn trivial(num_species: usize) -> Self {
        if num_species == 0 {
            return Self::from_block_labels::<usize>(&[]);
        }
        Self::from_block_labels(&vec![0usize; num_species])
    }

    /// All singletons.
    pub fn discrete(num_species: usize) -> Self {
        Self::from_block_labels(&(0..num_species).collect::<Vec<_>>())
    }

    /// Builds a partition from an arbitrary labelling: species with equal
    /// labels share a block.
    pub fn from_block_labels<L: Ord + Clone>(labels: &[L]) -> Self {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| labels[a].cmp(&labels[b]).then(a.cmp(&b)));
        let mut blocks: Vec<Vec<SpeciesId>> = Vec::new();
        let mut prev: Option<&L> = None;
        for &i in &order {
            if prev != Some(&labels[i]) {
                blocks.push(Vec::new());
                prev = Some(&labels[i]);
            }
            blocks.last_mut().unwrap().push(SpeciesId(i as u32));
        }
        Self::canonical(blocks, labels.len())
    }

    /// Validates an explicit list of blocks that must cover `0..num_species`.
    pub fn from_blocks(num_species: usize, blocks: Vec<Vec<SpeciesId>>) -> Result<Self, PartitionError> {
        let mut seen = vec![false; num_species];
        for block in &blocks {
            if block.is_empty() {
                return Err(PartitionError::EmptyBlock);
            }
            for &x in block {
                let slot = seen.get_mut(x.index()).ok_or(PartitionError::OutOfRange(x.0))?;
                if *slot {
                    return Err(PartitionError::Duplicate(x.0));
                }
                *slot = true;
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(PartitionError::Uncovered(missing as u32));
        }
        Ok(Self::canonical(blocks, num_species))
    }

    fn canonical(mut blocks: Vec<Vec<SpeciesId>>, num_species: usize) -> Self {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        let mut block_of = vec![0; num_species];
        for (i, b) in blocks.iter().enumerate() {
            for &x in b {
                block_of[x.index()] = i;
            }
        }
        SpeciesPartition { blocks, block_of }
    }

    pub fn num_species(&self) -> usize {
        self.block_of.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<SpeciesId>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[SpeciesId] {
        &self.blocks[i]
    }

    pub fn block_of(&self, x: SpeciesId) -> usize {
        self.block_of[x.index()]
    }

    pub fn block_labels(&self) -> &[usize] {
        &self.block_of
    }

    pub fn related(&self, x: SpeciesId, y: SpeciesId) -> bool {
        self.block_of(x) == self.block_of(y)
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.len() == self.block_of.len()
    }

    /// True when every block of `self` lies inside one block of `coarser`.
    pub fn refines(&self, coarser: &SpeciesPartition) -> bool {
        self.num_species() == coarser.num_species()
            && self
                .blocks
                .iter()
                .all(|b| b.iter().all(|&x| coarser.block_of(x) == coarser.block_of(b[0])))
    }

    pub fn display<'a>(&'a self, table: &'a SpeciesTable) -> PartitionDisplay<'a> {
        PartitionDisplay { partition: self, table }
    }
}

/// Renders `{{A},{B},{C,E},{D}}`.
pub struct PartitionDisplay<'a> {
    partition: &'a SpeciesPartition,
    table: &'a SpeciesTable,
}

impl fmt::Display for PartitionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, b) in self.partition.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str("{")?;
            for (j, &x) in b.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                f.write_str(self.table.name(x))?;
            }
            f.write_str("}")?;
        }
        f.write_str("}")
    }
}

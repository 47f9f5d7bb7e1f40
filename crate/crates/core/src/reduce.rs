//! Quotient networks.
//!
//! Given a species partition, the reduced network keeps one representative
//! per block, drops every reaction whose reagents are not all
//! representatives, rewrites products onto representatives and fuses
//! reactions with identical reagents and products by adding their rates.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::crn::{Crn, Multiset, Rate, Reaction, SpeciesId, SpeciesPartition, SpeciesTable};
use crate::smb::{is_smb, SmbCounterexample};

/// Lexicographically smallest species of a non-empty block. Ids follow name
/// order, so this is the smallest id.
pub fn canonical_representative(block: &[SpeciesId]) -> SpeciesId {
    *block.iter().min().expect("blocks are non-empty")
}

/// Correspondence between original species and the reduced network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionMap {
    partition: SpeciesPartition,
    /// Per block, the representative (an original species id).
    representative: Vec<SpeciesId>,
    /// Per original species, the id of its representative in the reduced
    /// network.
    reduced_of: Vec<SpeciesId>,
}

impl ReductionMap {
    pub fn new(h: &SpeciesPartition) -> Self {
        let representative = h.blocks().iter().map(|b| canonical_representative(b)).collect();
        // Blocks are ordered by their smallest member, which is also the
        // representative, so block index equals reduced species id.
        let reduced_of = h.block_labels().iter().map(|&b| SpeciesId(b as u32)).collect();
        ReductionMap { partition: h.clone(), representative, reduced_of }
    }

    pub fn partition(&self) -> &SpeciesPartition {
        &self.partition
    }

    pub fn representative(&self, block: usize) -> SpeciesId {
        self.representative[block]
    }

    /// `X ↦ X^H` in original ids.
    pub fn species_to_rep(&self, x: SpeciesId) -> SpeciesId {
        self.representative[self.partition.block_of(x)]
    }

    pub fn is_representative(&self, x: SpeciesId) -> bool {
        self.species_to_rep(x) == x
    }

    /// Id of `X^H` in the reduced network.
    pub fn reduced_id(&self, x: SpeciesId) -> SpeciesId {
        self.reduced_of[x.index()]
    }

    /// `σ^R` in original ids: every species replaced by its representative.
    pub fn rep_state(&self, sigma: &Multiset) -> Multiset {
        sigma.map_species(|x| self.species_to_rep(x))
    }

    /// `σ^R` expressed in reduced-network ids.
    pub fn reduce_state(&self, sigma: &Multiset) -> Multiset {
        sigma.map_species(|x| self.reduced_id(x))
    }

    /// One line `X -> X^H` per original species.
    pub fn write(&self, table: &SpeciesTable) -> String {
        let mut out = String::new();
        for x in table.ids() {
            let _ = writeln!(out, "{} -> {}", table.name(x), table.name(self.species_to_rep(x)));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub crn: Crn,
    pub map: ReductionMap,
    /// False when the partition was not checked to be a bisimulation.
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReduceError {
    #[error("partition is not an SMB")]
    NotAnSmb(SmbCounterexample),
    #[error("partition is not a forward bisimulation")]
    NotAnFb(crate::fb::FbCounterexample),
}

/// Reduces `crn` by `h` after checking that `h` is an SMB.
pub fn reduce(crn: &Crn, h: &SpeciesPartition) -> Result<Reduction, ReduceError> {
    is_smb(crn, h).map_err(ReduceError::NotAnSmb)?;
    let mut red = reduce_unchecked(crn, h);
    red.verified = true;
    Ok(red)
}

/// The quotient construction without any bisimulation check.
pub fn reduce_unchecked(crn: &Crn, h: &SpeciesPartition) -> Reduction {
    let map = ReductionMap::new(h);
    let names: Vec<&str> = map.representative.iter().map(|&x| crn.species.name(x)).collect();
    let species = SpeciesTable::new(names);

    // (reagents, products) -> (position, fused rate, number fused)
    let mut fused: Vec<(Multiset, Multiset, Rate, usize)> = Vec::new();
    let mut slot: HashMap<(Multiset, Multiset), usize> = HashMap::new();
    for r in &crn.reactions {
        if !r.reagents.iter().all(|(x, _)| map.is_representative(x)) {
            continue;
        }
        let reagents = map.reduce_state(&r.reagents);
        let products = map.reduce_state(&r.products);
        match slot.get(&(reagents.clone(), products.clone())) {
            Some(&i) => {
                fused[i].2 += &r.rate;
                fused[i].3 += 1;
            }
            None => {
                slot.insert((reagents.clone(), products.clone()), fused.len());
                fused.push((reagents, products, r.rate.clone(), 1));
            }
        }
    }
    let reactions = fused
        .into_iter()
        .filter(|(_, _, rate, n)| !(rate.is_zero() && *n > 1))
        .map(|(a, b, rate, _)| Reaction::new(a, b, rate))
        .collect();
    Reduction { crn: Crn { species, reactions }, map, verified: false }
}

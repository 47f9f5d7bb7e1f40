//! Species, multisets, reactions and networks.

mod multiset;
mod partition;
mod rate;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use multiset::{Multiset, MultisetDisplay, UnderflowError};
pub use partition::{PartitionDisplay, PartitionError, SpeciesPartition};
pub use rate::{Rate, RateParseError};

/// Index into a [`SpeciesTable`]. Ids are assigned in lexicographic name
/// order, so comparing ids compares names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpeciesId(pub u32);

impl SpeciesId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interned species names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpeciesTable {
    names: Vec<String>,
    index: HashMap<String, SpeciesId>,
}

impl SpeciesTable {
    /// Sorts and deduplicates `names`.
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), SpeciesId(i as u32))).collect();
        SpeciesTable { names, index }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, x: SpeciesId) -> &str {
        &self.names[x.index()]
    }

    pub fn id(&self, name: &str) -> Option<SpeciesId> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> impl Iterator<Item = SpeciesId> {
        (0..self.names.len() as u32).map(SpeciesId)
    }
}

/// Reagents of an elementary reaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reagents {
    Unary(SpeciesId),
    /// Two reagents with `first <= second`; equal for a homeoreaction.
    Binary(SpeciesId, SpeciesId),
}

/// `reagents --rate--> products`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Reaction {
    pub reagents: Multiset,
    pub products: Multiset,
    pub rate: Rate,
}

impl Reaction {
    pub fn new(reagents: Multiset, products: Multiset, rate: Rate) -> Self {
        Reaction { reagents, products, rate }
    }

    /// `None` unless the reaction has one or two reagent instances.
    pub fn elementary_reagents(&self) -> Option<Reagents> {
        match self.reagents.entries() {
            [(x, 1)] => Some(Reagents::Unary(*x)),
            [(x, 2)] => Some(Reagents::Binary(*x, *x)),
            [(x, 1), (y, 1)] => Some(Reagents::Binary(*x, *y)),
            _ => None,
        }
    }

    pub fn is_homeoreaction(&self) -> bool {
        matches!(self.elementary_reagents(), Some(Reagents::Binary(x, y)) if x == y)
    }

    pub fn display<'a>(&'a self, table: &'a SpeciesTable) -> ReactionDisplay<'a> {
        ReactionDisplay { reaction: self, table }
    }
}

pub struct ReactionDisplay<'a> {
    reaction: &'a Reaction,
    table: &'a SpeciesTable,
}

impl fmt::Display for ReactionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {} @ {}",
            self.reaction.reagents.display(self.table),
            self.reaction.products.display(self.table),
            self.reaction.rate
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrnError {
    #[error("reaction {reaction} is not elementary: it has {reagents} reagent instances")]
    NonElementary { reaction: usize, reagents: u64 },
    #[error("reaction {reaction} has negative rate {rate}")]
    NegativeRate { reaction: usize, rate: Rate },
    #[error("reaction {reaction} mentions undeclared species #{species}")]
    UndeclaredSpecies { reaction: usize, species: u32 },
}

/// A chemical reaction network. Reaction order is the input order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Crn {
    pub species: SpeciesTable,
    pub reactions: Vec<Reaction>,
}

impl Crn {
    /// Checks that every species id is declared; elementarity is checked
    /// separately by [`Crn::validate_elementary`].
    pub fn new(species: SpeciesTable, reactions: Vec<Reaction>) -> Result<Self, CrnError> {
        let n = species.len() as u32;
        for (i, r) in reactions.iter().enumerate() {
            if let Some(&(x, _)) = r.reagents.entries().iter().chain(r.products.entries()).find(|(x, _)| x.0 >= n) {
                return Err(CrnError::UndeclaredSpecies { reaction: i, species: x.0 });
            }
        }
        Ok(Crn { species, reactions })
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    /// Every reaction has one or two reagent instances and a non-negative rate.
    pub fn validate_elementary(&self) -> Result<(), CrnError> {
        for (i, r) in self.reactions.iter().enumerate() {
            let k = r.reagents.size();
            if !(1..=2).contains(&k) {
                return Err(CrnError::NonElementary { reaction: i, reagents: k });
            }
            if r.rate.is_negative() {
                return Err(CrnError::NegativeRate { reaction: i, rate: r.rate.clone() });
            }
        }
        Ok(())
    }

    pub fn has_homeoreactions(&self) -> bool {
        self.reactions.iter().any(Reaction::is_homeoreaction)
    }

    /// Multiplies every rate by `factor`.
    pub fn scale_rates(&self, factor: &Rate) -> Crn {
        Crn {
            species: self.species.clone(),
            reactions: self
                .reactions
                .iter()
                .map(|r| Reaction::new(r.reagents.clone(), r.products.clone(), &r.rate * factor))
                .collect(),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn species_ids_follow_name_order() {
        let t = SpeciesTable::new(["Z", "B", "M", "B"]);
        assert_eq!(t.names(), &["B", "M", "Z"]);
        assert!(t.id("B").unwrap() < t.id("M").unwrap());
        assert_eq!(t.id("Q"), None);
    }

    #[test]
    fn running_example_is_elementary() {
        let crn = running_example();
        assert_eq!(crn.validate_elementary(), Ok(()));
        assert!(crn.has_homeoreactions());
    }

    #[test]
    fn three_reagents_rejected() {
        let t = SpeciesTable::new(["A", "B"]);
        let a = t.id("A").unwrap();
        let b = t.id("B").unwrap();
        let crn = Crn::new(t, vec![Reaction::new(Multiset::from_counts([(a, 3)]), Multiset::singleton(b), 1.into())])
            .unwrap();
        assert_eq!(crn.validate_elementary(), Err(CrnError::NonElementary { reaction: 0, reagents: 3 }));
    }

    #[test]
    fn negative_rate_rejected() {
        let t = SpeciesTable::new(["A", "B"]);
        let a = t.id("A").unwrap();
        let b = t.id("B").unwrap();
        let crn =
            Crn::new(t, vec![Reaction::new(Multiset::singleton(a), Multiset::singleton(b), Rate::from_integer(-1))])
                .unwrap();
        assert!(matches!(crn.validate_elementary(), Err(CrnError::NegativeRate { reaction: 0, .. })));
    }

    #[test]
    fn empty_reagents_rejected() {
        let t = SpeciesTable::new(["A"]);
        let a = t.id("A").unwrap();
        let crn = Crn::new(t, vec![Reaction::new(Multiset::empty(), Multiset::singleton(a), 1.into())]).unwrap();
        assert_eq!(crn.validate_elementary(), Err(CrnError::NonElementary { reaction: 0, reagents: 0 }));
    }

    #[test]
    fn undeclared_species_rejected() {
        let t = SpeciesTable::new(["A"]);
        let r = Reaction::new(Multiset::singleton(SpeciesId(0)), Multiset::singleton(SpeciesId(5)), 1.into());
        assert!(matches!(Crn::new(t, vec![r]), Err(CrnError::UndeclaredSpecies { reaction: 0, species: 5 })));
    }

    #[test]
    fn reagent_shapes() {
        let crn = running_example();
        let d = crn.species.id("D").unwrap();
        assert_eq!(crn.reactions[6].elementary_reagents(), Some(Reagents::Binary(d, d)));
        assert!(crn.reactions[6].is_homeoreaction());
        assert!(!crn.reactions[2].is_homeoreaction());
        assert_eq!(crn.reactions[2].display(&crn.species).to_string(), "C + D -> 2C + D @ 5");
    }
}

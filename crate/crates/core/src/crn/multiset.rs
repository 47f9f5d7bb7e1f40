use std::fmt;

use thiserror::Error;

use super::{SpeciesId, SpeciesTable};

/// A finite multiset of species in canonical form: entries strictly sorted by
/// species id, no zero multiplicities. Reagents, products and CTMC states all
/// use this type.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiset {
    entries: Vec<(SpeciesId, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("multiset difference underflows at species #{species}: {have} < {take}")]
pub struct UnderflowError {
    pub species: u32,
    pub have: u64,
    pub take: u64,
}

impl Multiset {
    pub fn empty() -> Self {
        Multiset { entries: Vec::new() }
    }

    pub fn singleton(x: SpeciesId) -> Self {
        Multiset { entries: vec![(x, 1)] }
    }

    /// Builds a canonical multiset from arbitrary `(species, count)` pairs,
    /// merging repeats and dropping zeros.
    pub fn from_counts<I: IntoIterator<Item = (SpeciesId, u64)>>(counts: I) -> Self {
        let mut entries: Vec<(SpeciesId, u64)> = counts.into_iter().filter(|&(_, k)| k > 0).collect();
        entries.sort_unstable_by_key(|&(x, _)| x);
        entries.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        Multiset { entries }
    }

    /// Builds from a dense count vector indexed by species id.
    pub fn from_dense(counts: &[u64]) -> Self {
        Multiset {
            entries: counts
                .iter()
                .enumerate()
                .filter(|&(_, &k)| k > 0)
                .map(|(i, &k)| (SpeciesId(i as u32), k))
                .collect(),
        }
    }

    pub fn to_dense(&self, num_species: usize) -> Vec<u64> {
        let mut v = vec![0; num_species];
        for &(x, k) in &self.entries {
            v[x.index()] = k;
        }
        v
    }

    pub fn entries(&self) -> &[(SpeciesId, u64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (SpeciesId, u64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total multiplicity.
    pub fn size(&self) -> u64 {
        self.entries.iter().map(|&(_, k)| k).sum()
    }

    pub fn count(&self, x: SpeciesId) -> u64 {
        match self.entries.binary_search_by_key(&x, |&(y, _)| y) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0,
        }
    }

    pub fn contains(&self, x: SpeciesId) -> bool {
        self.count(x) > 0
    }

    pub fn union(&self, other: &Multiset) -> Multiset {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Multiset { entries: out }
    }

    pub fn diff(&self, other: &Multiset) -> Result<Multiset, UnderflowError> {
        let mut out = self.entries.clone();
        for &(x, take) in &other.entries {
            match out.binary_search_by_key(&x, |&(y, _)| y) {
                Ok(pos) if out[pos].1 >= take => out[pos].1 -= take,
                Ok(pos) => {
                    return Err(UnderflowError { species: x.0, have: out[pos].1, take });
                }
                Err(_) => return Err(UnderflowError { species: x.0, have: 0, take }),
            }
        }
        out.retain(|&(_, k)| k > 0);
        Ok(Multiset { entries: out })
    }

    /// Population of a species block, `Σ_{X∈block} σ(X)`.
    pub fn block_population(&self, block: &[SpeciesId]) -> u64 {
        block.iter().map(|&x| self.count(x)).sum()
    }

    /// Applies `f` to every species, merging the images.
    pub fn map_species(&self, mut f: impl FnMut(SpeciesId) -> SpeciesId) -> Multiset {
        Multiset::from_counts(self.entries.iter().map(|&(x, k)| (f(x), k)))
    }

    pub fn display<'a>(&'a self, table: &'a SpeciesTable) -> MultisetDisplay<'a> {
        MultisetDisplay { set: self, table, sep: " + " }
    }

    /// Compact form without spaces, `2A+C+D`; used for CTMC states.
    pub fn display_compact<'a>(&'a self, table: &'a SpeciesTable) -> MultisetDisplay<'a> {
        MultisetDisplay { set: self, table, sep: "+" }
    }
}

/// Renders `2C + D`, or `0` for the empty multiset. Species ids sort like
/// their names, so entry order is already lexicographic.
pub struct MultisetDisplay<'a> {
    set: &'a Multiset,
    table: &'a SpeciesTable,
    sep: &'static str,
}

impl fmt::Display for MultisetDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.set.is_empty() {
            return f.write_str("0");
        }
        for (i, &(x, k)) in self.set.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(self.sep)?;
            }
            if k > 1 {
                write!(f, "{k}")?;
            }
            f.write_str(self.table.name(x))?;
        }
        Ok(())
    }
}

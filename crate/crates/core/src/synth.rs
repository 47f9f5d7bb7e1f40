//! Generators for synthetic networks: random elementary networks for
//! property testing and a symmetric family for scaling experiments.

use rand::Rng;

use crate::crn::{Crn, Multiset, Rate, Reaction, SpeciesId, SpeciesPartition, SpeciesTable};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomCrnParams {
    pub max_species: usize,
    pub max_reactions: usize,
    pub max_rate: i64,
    /// Upper bound on the total multiplicity of a product.
    pub max_product_size: u64,
    /// Probability of adding a clone of a species that only reacts alone,
    /// which guarantees a non-trivial coarsest SMB.
    pub clone_probability: f64,
}

impl Default for RandomCrnParams {
    fn default() -> Self {
        RandomCrnParams { max_species: 6, max_reactions: 10, max_rate: 5, max_product_size: 3, clone_probability: 0.5 }
    }
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("S{i}")).collect()
}

fn random_product(rng: &mut impl Rng, n: usize, max_size: u64) -> Multiset {
    let size = rng.random_range(0..=max_size);
    Multiset::from_counts((0..size).map(|_| (SpeciesId(rng.random_range(0..n) as u32), 1)))
}

/// A random elementary network with species `S0, S1, ...`.
pub fn random_crn(rng: &mut impl Rng, p: &RandomCrnParams) -> Crn {
    let clone = p.max_species >= 2 && p.max_reactions >= 2 && rng.random_bool(p.clone_probability);
    let max_base_species = if clone { p.max_species - 1 } else { p.max_species };
    let n = rng.random_range(1..=max_base_species);
    let max_base_reactions = if clone { p.max_reactions / 2 } else { p.max_reactions };
    let m = rng.random_range(1..=max_base_reactions);
    let mut reactions = Vec::with_capacity(m);
    for _ in 0..m {
        let x = SpeciesId(rng.random_range(0..n) as u32);
        let reagents = if rng.random_bool(0.5) {
            Multiset::singleton(x)
        } else {
            let y = SpeciesId(rng.random_range(0..n) as u32);
            Multiset::from_counts([(x, 1), (y, 1)])
        };
        let products = random_product(rng, n, p.max_product_size);
        reactions.push(Reaction::new(reagents, products, Rate::from_integer(rng.random_range(1..=p.max_rate))));
    }
    let mut crn = Crn::new(SpeciesTable::new(names(n)), reactions).expect("ids in range");
    if clone {
        add_clone(rng, &mut crn);
    }
    crn
}

/// Adds a species `S<n>` that copies the unary reactions of some species
/// never found in a binary reagent. Does nothing if there is none.
fn add_clone(rng: &mut impl Rng, crn: &mut Crn) {
    let n = crn.num_species();
    let candidates: Vec<SpeciesId> = crn
        .species
        .ids()
        .filter(|&x| crn.reactions.iter().all(|r| r.reagents.size() == 1 || !r.reagents.contains(x)))
        .collect();
    if candidates.is_empty() {
        return;
    }
    let x = candidates[rng.random_range(0..candidates.len())];
    let copy = SpeciesId(n as u32);
    let mut reactions = crn.reactions.clone();
    for r in &crn.reactions {
        if r.reagents == Multiset::singleton(x) {
            reactions.push(Reaction::new(Multiset::singleton(copy), r.products.clone(), r.rate.clone()));
        }
    }
    // let the copy also appear as a product somewhere, so it is reachable
    if !reactions.is_empty() && rng.random_bool(0.5) {
        let i = rng.random_range(0..reactions.len());
        let r = &reactions[i];
        reactions[i] = Reaction::new(r.reagents.clone(), r.products.union(&Multiset::singleton(copy)), r.rate.clone());
    }
    *crn = Crn::new(SpeciesTable::new(names(n + 1)), reactions).expect("ids in range");
}

pub fn random_partition(rng: &mut impl Rng, n: usize) -> SpeciesPartition {
    let k = rng.random_range(1..=n.max(1));
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    SpeciesPartition::from_block_labels(&labels)
}

/// All multisets over `n` species with total size at most `max_size`.
pub fn states_up_to(n: usize, max_size: u64) -> Vec<Multiset> {
    let mut out = Vec::new();
    let mut counts = vec![0u64; n];
    fn rec(i: usize, left: u64, counts: &mut Vec<u64>, out: &mut Vec<Multiset>) {
        if i == counts.len() {
            out.push(Multiset::from_dense(counts));
            return;
        }
        for k in 0..=left {
            counts[i] = k;
            rec(i + 1, left - k, counts, out);
        }
        counts[i] = 0;
    }
    rec(0, max_size, &mut counts, &mut out);
    out
}

/// Species `S`, `P` and `k` interchangeable copies `X1..Xk` with
/// `S -> Xi @ 1`, `Xi -> P @ 2`, `Xi + P -> 2P @ 3` and `P -> S @ 1`.
/// The coarsest SMB merges all copies.
pub fn symmetric_family(k: usize) -> Crn {
    let mut names = vec!["P".to_owned(), "S".to_owned()];
    names.extend((1..=k).map(|i| format!("X{i}")));
    let table = SpeciesTable::new(names);
    let id = |n: &str| table.id(n).unwrap();
    let (s, p) = (id("S"), id("P"));
    let one = |x| Multiset::singleton(x);
    let mut reactions = Vec::with_capacity(3 * k + 1);
    for i in 1..=k {
        let x = id(&format!("X{i}"));
        reactions.push(Reaction::new(one(s), one(x), Rate::from_integer(1)));
        reactions.push(Reaction::new(one(x), one(p), Rate::from_integer(2)));
        reactions.push(Reaction::new(Multiset::from_counts([(x, 1), (p, 1)]), Multiset::from_counts([(p, 2)]), Rate::from_integer(3)));
    }
    reactions.push(Reaction::new(one(p), one(s), Rate::from_integer(1)));
    Crn::new(table, reactions).expect("ids in range")
}

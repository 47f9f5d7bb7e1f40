//! Syntactic Markovian bisimulation: labels, product lifting, reaction-rate
//! aggregation, the SMB check and the coarsest-SMB partition refinement.
//!
//! The refinement follows the classic splitter scheme, with one twist:
//! splitters are `(label, lifted product class)` pairs, where the product
//! classes come from lifting the current species partition to multisets. A
//! species block is split by the key `rr[X + label, class]`. Since the lifted
//! classes depend on the species partition, every successful split discards
//! the pending splitters and regenerates them from a fresh lifting.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::crn::{Crn, Multiset, Rate, Reagents, SpeciesId, SpeciesPartition, SpeciesTable};

/// Interaction partner in an rr key: `None` for unary reactions, `Some(Z)`
/// for binary reactions with partner `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub Option<SpeciesId>);

impl Label {
    pub const EMPTY: Label = Label(None);

    pub fn to_multiset(self) -> Multiset {
        match self.0 {
            None => Multiset::empty(),
            Some(z) => Multiset::singleton(z),
        }
    }

    pub fn display(self, table: &SpeciesTable) -> String {
        match self.0 {
            None => "0".to_string(),
            Some(z) => table.name(z).to_string(),
        }
    }
}

/// The labels worth checking: the empty label, then every species that is a
/// reagent of some binary reaction, ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<Label>,
}

impl LabelSet {
    pub fn as_slice(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn labels(crn: &Crn) -> LabelSet {
    let mut partners = vec![false; crn.num_species()];
    for r in &crn.reactions {
        if let Some(Reagents::Binary(x, y)) = r.elementary_reagents() {
            partners[x.index()] = true;
            partners[y.index()] = true;
        }
    }
    let mut labels = vec![Label::EMPTY];
    labels.extend(crn.species.ids().filter(|x| partners[x.index()]).map(|x| Label(Some(x))));
    LabelSet { labels }
}

/// Distinct products of the network, in order of first appearance, each with
/// the list of reactions producing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductIndex {
    products: Vec<Multiset>,
    inc: Vec<Vec<usize>>,
}

impl ProductIndex {
    pub fn new(crn: &Crn) -> Self {
        let mut products: Vec<Multiset> = Vec::new();
        let mut inc: Vec<Vec<usize>> = Vec::new();
        let mut seen: std::collections::HashMap<&Multiset, usize> = std::collections::HashMap::new();
        for (i, r) in crn.reactions.iter().enumerate() {
            let p = *seen.entry(&r.products).or_insert_with(|| {
                products.push(r.products.clone());
                inc.push(Vec::new());
                products.len() - 1
            });
            inc[p].push(i);
        }
        ProductIndex { products, inc }
    }

    pub fn products(&self) -> &[Multiset] {
        &self.products
    }

    pub fn inc(&self, product: usize) -> &[usize] {
        &self.inc[product]
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }
}

/// Per-block population vector of a multiset, sparse and sorted by block.
pub type Signature = Vec<(usize, u64)>;

fn signature_with(block_of: &[usize], m: &Multiset) -> Signature {
    let mut sig: Vec<(usize, u64)> = m.iter().map(|(x, k)| (block_of[x.index()], k)).collect();
    sig.sort_unstable_by_key(|&(b, _)| b);
    sig.dedup_by(|next, kept| {
        if next.0 == kept.0 {
            kept.1 += next.1;
            true
        } else {
            false
        }
    });
    sig
}

pub fn signature(h: &SpeciesPartition, m: &Multiset) -> Signature {
    signature_with(h.block_labels(), m)
}

/// Two multisets are related by the lifting of `h` iff they hold the same
/// number of species of every block.
pub fn lifted_related(h: &SpeciesPartition, a: &Multiset, b: &Multiset) -> bool {
    signature(h, a) == signature(h, b)
}

/// The lifting of a species partition restricted to the network's products.
/// Blocks are ordered by their smallest product index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedPartition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    signatures: Vec<Signature>,
}

impl LiftedPartition {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, product: usize) -> usize {
        self.block_of[product]
    }

    pub fn signature(&self, product: usize) -> &Signature {
        &self.signatures[product]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// The product multisets of block `b`.
    pub fn block_products<'a>(&'a self, pi: &'a ProductIndex, b: usize) -> impl Iterator<Item = &'a Multiset> + 'a {
        self.blocks[b].iter().map(move |&p| &pi.products[p])
    }
}

fn lift_with(block_of: &[usize], pi: &ProductIndex) -> LiftedPartition {
    let signatures: Vec<Signature> = pi.products.iter().map(|p| signature_with(block_of, p)).collect();
    let mut order: Vec<usize> = (0..signatures.len()).collect();
    order.sort_by(|&a, &b| signatures[a].cmp(&signatures[b]).then(a.cmp(&b)));
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (i, &p) in order.iter().enumerate() {
        if i == 0 || signatures[order[i - 1]] != signatures[p] {
            blocks.push(Vec::new());
        }
        blocks.last_mut().unwrap().push(p);
    }
    blocks.sort_unstable_by_key(|b| b[0]);
    let mut lifted_of = vec![0; signatures.len()];
    for (i, b) in blocks.iter().enumerate() {
        for &p in b {
            lifted_of[p] = i;
        }
    }
    LiftedPartition { blocks, block_of: lifted_of, signatures }
}

pub fn lift_partition(h: &SpeciesPartition, pi: &ProductIndex) -> LiftedPartition {
    lift_with(h.block_labels(), pi)
}

/// `rr(ρ, π)`: total rate of the reactions `ρ --α--> π`.
pub fn rr(crn: &Crn, rho: &Multiset, pi: &Multiset) -> Rate {
    crn.reactions.iter().filter(|r| &r.reagents == rho && &r.products == pi).map(|r| &r.rate).sum()
}

/// `rr[ρ, M]` for a set of products `M`.
pub fn rr_block<'a, I>(crn: &Crn, rho: &Multiset, m: I) -> Rate
where
    I: IntoIterator<Item = &'a Multiset>,
{
    m.into_iter().map(|p| rr(crn, rho, p)).sum()
}

/// If reaction `reagents` has the shape `X + label`, returns `X`.
fn partner_of(reagents: Reagents, label: Label) -> Option<SpeciesId> {
    match (reagents, label.0) {
        (Reagents::Unary(x), None) => Some(x),
        (Reagents::Binary(x, y), Some(z)) => {
            if x == z {
                Some(y)
            } else if y == z {
                Some(x)
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Computes `rr[X + label, M]` for every species `X` by walking the
/// reactions producing the members of `M` once. Returns the keys of the
/// touched species only; all other species have key 0.
pub fn splitter_keys<'a, I>(crn: &Crn, pi: &ProductIndex, label: Label, m: I) -> BTreeMap<SpeciesId, Rate>
where
    I: IntoIterator<Item = &'a usize>,
{
    let mut keys: BTreeMap<SpeciesId, Rate> = BTreeMap::new();
    for &p in m {
        for &ri in &pi.inc[p] {
            let r = &crn.reactions[ri];
            let Some(reagents) = r.elementary_reagents() else { continue };
            if let Some(x) = partner_of(reagents, label) {
                *keys.entry(x).or_insert_with(Rate::zero) += &r.rate;
            }
        }
    }
    keys
}

/// Splits the blocks containing keyed species into maximal groups of equal
/// key (missing keys count as 0). Each block is grouped through an ordered
/// map on exact keys; the first group keeps the block's slot.
fn split_blocks(blocks: &mut Vec<Vec<SpeciesId>>, block_of: &mut [usize], keys: &BTreeMap<SpeciesId, Rate>) -> bool {
    let mut touched: Vec<usize> = keys.keys().map(|x| block_of[x.index()]).collect();
    touched.sort_unstable();
    touched.dedup();
    let zero = Rate::zero();
    let mut split_any = false;
    for b in touched {
        let mut tree: BTreeMap<&Rate, Vec<SpeciesId>> = BTreeMap::new();
        for &x in &blocks[b] {
            tree.entry(keys.get(&x).unwrap_or(&zero)).or_default().push(x);
        }
        if tree.len() < 2 {
            continue;
        }
        split_any = true;
        let mut groups = tree.into_values();
        blocks[b] = groups.next().unwrap();
        for group in groups {
            let nb = blocks.len();
            for &x in &group {
                block_of[x.index()] = nb;
            }
            blocks.push(group);
        }
    }
    split_any
}

/// One splitting step outside of a refinement run: splits `h` by the keys
/// `rr[X + label, M]` where `M` is the given set of product indices. `None`
/// when no block splits.
pub fn split_partition(
    crn: &Crn,
    pi: &ProductIndex,
    label: Label,
    m: &[usize],
    h: &SpeciesPartition,
) -> Option<SpeciesPartition> {
    let keys = splitter_keys(crn, pi, label, m);
    let mut blocks = h.blocks().to_vec();
    let mut block_of = h.block_labels().to_vec();
    if split_blocks(&mut blocks, &mut block_of, &keys) {
        Some(SpeciesPartition::from_blocks(block_of.len(), blocks).expect("split keeps a partition"))
    } else {
        None
    }
}

/// A witness that a partition is not an SMB: `x` and `y` share a block but
/// `rr[x + label, M] != rr[y + label, M]` for the lifted product class `M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmbCounterexample {
    pub x: SpeciesId,
    pub y: SpeciesId,
    pub label: Label,
    pub lifted_block: Vec<Multiset>,
    pub rate_x: Rate,
    pub rate_y: Rate,
}

impl SmbCounterexample {
    pub fn display<'a>(&'a self, table: &'a SpeciesTable) -> CounterexampleDisplay<'a> {
        CounterexampleDisplay { cx: self, table }
    }
}

pub struct CounterexampleDisplay<'a> {
    cx: &'a SmbCounterexample,
    table: &'a SpeciesTable,
}

impl fmt::Display for CounterexampleDisplay<'_> {
    /// `(A, B, 0, [D], 6, 0)`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let block: Vec<String> = self.cx.lifted_block.iter().map(|m| m.display(self.table).to_string()).collect();
        write!(
            f,
            "({}, {}, {}, [{}], {}, {})",
            self.table.name(self.cx.x),
            self.table.name(self.cx.y),
            self.cx.label.display(self.table),
            block.join(", "),
            self.cx.rate_x,
            self.cx.rate_y
        )
    }
}

/// Checks whether `h` is an SMB of `crn`.
///
/// Only labels from [`labels`] and lifted classes of the network's products
/// need checking: every other `rr` value is zero for an elementary network.
/// The first violation in (label, lifted block, species block) order is
/// returned as a witness.
pub fn is_smb(crn: &Crn, h: &SpeciesPartition) -> Result<(), SmbCounterexample> {
    let labels = labels(crn);
    let pi = ProductIndex::new(crn);
    let lifted = lift_partition(h, &pi);
    let zero = Rate::zero();
    for &label in labels.as_slice() {
        for (b, members) in lifted.blocks().iter().enumerate() {
            let keys = splitter_keys(crn, &pi, label, members);
            for block in h.blocks() {
                let key = |x: SpeciesId| keys.get(&x).unwrap_or(&zero);
                let first = block[0];
                if let Some(&y) = block[1..].iter().find(|&&y| key(y) != key(first)) {
                    return Err(SmbCounterexample {
                        x: first,
                        y,
                        label,
                        lifted_block: lifted.block_products(&pi, b).cloned().collect(),
                        rate_x: key(first).clone(),
                        rate_y: key(y).clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// How pending splitters are stored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SplitterMode {
    /// One queue entry per lifted block, carrying a cursor into the label
    /// list; the queue never holds more entries than there are products.
    #[default]
    Compressed,
    /// One queue entry per `(label, lifted block)` pair.
    Materialized,
}

#[derive(Clone, Debug, Default)]
pub struct RefineOptions {
    pub mode: SplitterMode,
    /// Shuffles every freshly generated splitter queue. The result must not
    /// depend on it; used to test order independence.
    pub shuffle_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinementResult {
    pub partition: SpeciesPartition,
    /// Number of `split` invocations.
    pub iterations: usize,
    /// Invocations that split at least one block.
    pub splits_performed: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Splitter {
    block: usize,
    cursor: usize,
}

/// Mutable refinement state: the working species partition, its current
/// lifting and the pending splitters.
pub struct Refiner<'a> {
    crn: &'a Crn,
    labels: LabelSet,
    products: ProductIndex,
    blocks: Vec<Vec<SpeciesId>>,
    block_of: Vec<usize>,
    lifted: LiftedPartition,
    spls: VecDeque<Splitter>,
    options: RefineOptions,
    rng: Option<Xoshiro256PlusPlus>,
    iterations: usize,
    splits_performed: usize,
}

impl<'a> Refiner<'a> {
    /// `crn` must have passed [`Crn::validate_elementary`].
    pub fn new(crn: &'a Crn, initial: &SpeciesPartition, options: RefineOptions) -> Self {
        let products = ProductIndex::new(crn);
        let lifted = lift_with(initial.block_labels(), &products);
        let rng = options.shuffle_seed.map(Xoshiro256PlusPlus::seed_from_u64);
        let mut refiner = Refiner {
            crn,
            labels: labels(crn),
            products,
            blocks: initial.blocks().to_vec(),
            block_of: initial.block_labels().to_vec(),
            lifted,
            spls: VecDeque::new(),
            options,
            rng,
            iterations: 0,
            splits_performed: 0,
        };
        refiner.regenerate_splitters();
        refiner
    }

    fn regenerate_splitters(&mut self) {
        self.lifted = lift_with(&self.block_of, &self.products);
        let mut spls: Vec<Splitter> = match self.options.mode {
            SplitterMode::Compressed => (0..self.lifted.len()).map(|block| Splitter { block, cursor: 0 }).collect(),
            SplitterMode::Materialized => (0..self.labels.len())
                .flat_map(|cursor| (0..self.lifted.len()).map(move |block| Splitter { block, cursor }))
                .collect(),
        };
        if let Some(rng) = self.rng.as_mut() {
            spls.shuffle(rng);
        }
        self.spls = spls.into();
    }

    pub fn partition(&self) -> SpeciesPartition {
        SpeciesPartition::from_blocks(self.block_of.len(), self.blocks.clone()).expect("working partition is valid")
    }

    pub fn lifted(&self) -> &LiftedPartition {
        &self.lifted
    }

    pub fn products(&self) -> &ProductIndex {
        &self.products
    }

    pub fn pending_splitters(&self) -> usize {
        self.spls.len()
    }

    /// Splits every block by the key `rr[X + label, M]` where `M` is lifted
    /// block `m_spl`. When some block splits, the splitter queue is rebuilt
    /// from the new lifting. Returns whether anything split.
    pub fn split(&mut self, label: Label, m_spl: usize) -> bool {
        self.iterations += 1;
        let keys = splitter_keys(self.crn, &self.products, label, &self.lifted.blocks[m_spl]);
        let split_any = split_blocks(&mut self.blocks, &mut self.block_of, &keys);
        if split_any {
            self.splits_performed += 1;
            self.spls.clear();
            self.regenerate_splitters();
        }
        split_any
    }

    /// Pops the next pending `(label, lifted block)` splitter.
    fn pop(&mut self) -> Option<(Label, usize)> {
        let s = self.spls.pop_front()?;
        let label = self.labels.as_slice()[s.cursor];
        if self.options.mode == SplitterMode::Compressed && s.cursor + 1 < self.labels.len() {
            self.spls.push_front(Splitter { block: s.block, cursor: s.cursor + 1 });
        }
        Some((label, s.block))
    }

    pub fn run(mut self) -> RefinementResult {
        while let Some((label, m_spl)) = self.pop() {
            self.split(label, m_spl);
        }
        RefinementResult {
            partition: self.partition(),
            iterations: self.iterations,
            splits_performed: self.splits_performed,
        }
    }
}

/// The coarsest SMB refining `initial`. `crn` must be elementary.
pub fn largest_smb(crn: &Crn, initial: &SpeciesPartition) -> RefinementResult {
    largest_smb_with(crn, initial, RefineOptions::default())
}

pub fn largest_smb_with(crn: &Crn, initial: &SpeciesPartition, options: RefineOptions) -> RefinementResult {
    Refiner::new(crn, initial, options).run()
}

//! Population CTMC of a network: transitions, breadth-first enumeration of
//! reachable states, generator rows, and exact ordinary lumpability checks.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::{self, Write as _};

use num_rational::BigRational;
use rayon::prelude::*;
use thiserror::Error;

use crate::crn::{Crn, Multiset, Rate, Reaction, SpeciesPartition, SpeciesTable};
use crate::reduce::{canonical_representative, Reduction};
use crate::smb::{signature, Signature};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub source: Multiset,
    pub target: Multiset,
    pub rate: Rate,
    /// Index of the firing reaction.
    pub reaction: usize,
}

/// Number of distinct reagent matchings of `reagents` in `sigma`, i.e. the
/// product of binomials `C(σ(X), ρ(X))`.
///
/// For a unary reaction this is `σ(X)`, for `X + Y` with `X ≠ Y` it is
/// `σ(X)·σ(Y)` with no 1/2 factor, and for `2X` it is `σ(X)(σ(X)−1)/2`.
/// Some renderings of the rate law put a 1/2 on the distinct binary case
/// too; the worked rates (5 for `C + D` at one copy each) rule that out.
fn matchings(reagents: &Multiset, sigma: &Multiset) -> BigRational {
    let mut acc = BigRational::from_integer(1.into());
    for (x, k) in reagents.iter() {
        let n = sigma.count(x);
        if n < k {
            return BigRational::from_integer(0.into());
        }
        for i in 0..k {
            acc *= BigRational::new((n - i).into(), (i + 1).into());
        }
    }
    acc
}

/// Rate at which `r` fires in state `sigma`; zero when it cannot fire.
pub fn transition_rate(r: &Reaction, sigma: &Multiset) -> Rate {
    Rate::from_big(r.rate.as_big() * matchings(&r.reagents, sigma))
}

/// All transitions leaving `sigma`, one per reaction that can fire with
/// positive rate, in reaction order. Self-loops are kept.
pub fn out_transitions(crn: &Crn, sigma: &Multiset) -> Vec<Transition> {
    let mut out = Vec::new();
    for (i, r) in crn.reactions.iter().enumerate() {
        let rate = transition_rate(r, sigma);
        if rate.is_zero() {
            continue;
        }
        let target = sigma.diff(&r.reagents).expect("positive rate implies reagents present").union(&r.products);
        out.push(Transition { source: sigma.clone(), target, rate, reaction: i });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    /// States with a larger total population are left unexplored.
    pub max_population: Option<u64>,
}

impl Limits {
    pub fn states(max_states: usize) -> Self {
        Limits { max_states, max_population: None }
    }
}

/// An explored region of the reachable state space together with the
/// outgoing transitions of every state in it.
#[derive(Clone, Debug)]
pub struct StateSpace {
    states: Vec<Multiset>,
    index: HashMap<Multiset, usize>,
    out: Vec<Vec<Transition>>,
    frontier: Vec<bool>,
    truncated: bool,
}

impl StateSpace {
    pub fn states(&self) -> &[Multiset] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, sigma: &Multiset) -> Option<usize> {
        self.index.get(sigma).copied()
    }

    /// Outgoing transitions of state `i`, always complete.
    pub fn out(&self, i: usize) -> &[Transition] {
        &self.out[i]
    }

    /// The multiset of all transitions of the explored region.
    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.out.iter().flatten()
    }

    /// True when some successor of state `i` lies outside the region.
    pub fn is_frontier(&self, i: usize) -> bool {
        self.frontier[i]
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }
}

/// Breadth-first closure from `sigma0`, capped at `max_states` states.
pub fn enumerate(crn: &Crn, sigma0: &Multiset, max_states: usize) -> StateSpace {
    enumerate_from(crn, std::slice::from_ref(sigma0), Limits::states(max_states))
}

/// Breadth-first closure from several initial states at once. Initial states
/// are always included. States are returned sorted by their compact text
/// form, so the result does not depend on the order of `seeds`.
pub fn enumerate_from(crn: &Crn, seeds: &[Multiset], limits: Limits) -> StateSpace {
    let mut states: Vec<Multiset> = Vec::new();
    let mut index: HashMap<Multiset, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for s in seeds {
        if !index.contains_key(s) {
            index.insert(s.clone(), states.len());
            queue.push_back(states.len());
            states.push(s.clone());
        }
    }
    let mut out: Vec<Vec<Transition>> = vec![Vec::new(); states.len()];
    let mut frontier = vec![false; states.len()];
    let mut truncated = false;
    let admissible = |m: &Multiset| limits.max_population.is_none_or(|cap| m.size() <= cap);
    while let Some(i) = queue.pop_front() {
        let ts = out_transitions(crn, &states[i]);
        for t in &ts {
            if index.contains_key(&t.target) {
                continue;
            }
            if states.len() >= limits.max_states || !admissible(&t.target) {
                frontier[i] = true;
                truncated = true;
                continue;
            }
            index.insert(t.target.clone(), states.len());
            queue.push_back(states.len());
            states.push(t.target.clone());
            out.push(Vec::new());
            frontier.push(false);
        }
        out[i] = ts;
    }

    let mut order: Vec<usize> = (0..states.len()).collect();
    let keys: Vec<String> = states.iter().map(|s| s.display_compact(&crn.species).to_string()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut out_slots: Vec<Option<Vec<Transition>>> = out.into_iter().map(Some).collect();
    let states: Vec<Multiset> = order.iter().map(|&i| states[i].clone()).collect();
    let out = order.iter().map(|&i| out_slots[i].take().unwrap()).collect();
    let frontier = order.iter().map(|&i| frontier[i]).collect();
    let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    StateSpace { states, index, out, frontier, truncated }
}

/// A generator column: a state of the explored region or a successor
/// outside it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Internal(usize),
    External(Multiset),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorRow {
    pub source: usize,
    /// Fused per target, sorted, self-loops excluded.
    pub off_diagonal: Vec<(Target, Rate)>,
    pub diagonal: Rate,
}

fn fuse_row(source: usize, entries: impl IntoIterator<Item = (Target, Rate)>) -> GeneratorRow {
    let mut fused: BTreeMap<Target, Rate> = BTreeMap::new();
    for (t, r) in entries {
        if t != Target::Internal(source) {
            *fused.entry(t).or_default() += r;
        }
    }
    let off_diagonal: Vec<(Target, Rate)> = fused.into_iter().filter(|(_, r)| !r.is_zero()).collect();
    let diagonal = -off_diagonal.iter().map(|(_, r)| r).sum::<Rate>();
    GeneratorRow { source, off_diagonal, diagonal }
}

/// Generator rows of every explored state, external targets included.
pub fn generator(ss: &StateSpace) -> Vec<GeneratorRow> {
    (0..ss.len())
        .map(|i| {
            let entries = ss.out[i].iter().map(|t| {
                let target = match ss.index_of(&t.target) {
                    Some(j) => Target::Internal(j),
                    None => Target::External(t.target.clone()),
                };
                (target, t.rate.clone())
            });
            fuse_row(i, entries)
        })
        .collect()
}

/// One line `<state>\t<state>\t<rate>` per off-diagonal entry.
pub fn write_generator(ss: &StateSpace, rows: &[GeneratorRow], table: &SpeciesTable) -> String {
    let mut text = String::new();
    for row in rows {
        let from = ss.states[row.source].display_compact(table);
        for (t, r) in &row.off_diagonal {
            let to = match t {
                Target::Internal(j) => &ss.states[*j],
                Target::External(m) => m,
            };
            let _ = writeln!(text, "{from}\t{}\t{r}", to.display_compact(table));
        }
    }
    text
}

/// Explored states grouped by their per-block populations.
#[derive(Clone, Debug)]
pub struct StatePartition {
    species: SpeciesPartition,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    signatures: Vec<Signature>,
}

impl StatePartition {
    pub fn species_partition(&self) -> &SpeciesPartition {
        &self.species
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, state: usize) -> usize {
        self.block_of[state]
    }

    pub fn signature(&self, block: usize) -> &Signature {
        &self.signatures[block]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

pub fn lift_states(h: &SpeciesPartition, ss: &StateSpace) -> StatePartition {
    let mut by_sig: BTreeMap<Signature, Vec<usize>> = BTreeMap::new();
    for (i, s) in ss.states.iter().enumerate() {
        by_sig.entry(signature(h, s)).or_default().push(i);
    }
    let mut block_of = vec![0; ss.len()];
    let mut blocks = Vec::with_capacity(by_sig.len());
    let mut signatures = Vec::with_capacity(by_sig.len());
    for (b, (sig, members)) in by_sig.into_iter().enumerate() {
        for &i in &members {
            block_of[i] = b;
        }
        blocks.push(members);
        signatures.push(sig);
    }
    StatePartition { species: h.clone(), blocks, block_of, signatures }
}

/// The representative state `σ^R` of the macro-state with signature `sig`.
fn representative_state(h: &SpeciesPartition, sig: &Signature) -> Multiset {
    Multiset::from_counts(sig.iter().map(|&(b, k)| (canonical_representative(h.block(b)), k)))
}

/// `q[σ, M]` for every macro-state `M` reachable in one step, keyed by
/// signature. The own block carries the diagonal. Zero entries are dropped.
fn block_rates(ss: &StateSpace, h: &SpeciesPartition, row: &GeneratorRow) -> BTreeMap<Signature, Rate> {
    let mut acc: BTreeMap<Signature, Rate> = BTreeMap::new();
    acc.insert(signature(h, &ss.states[row.source]), row.diagonal.clone());
    for (t, r) in &row.off_diagonal {
        let m = match t {
            Target::Internal(j) => &ss.states[*j],
            Target::External(m) => m,
        };
        *acc.entry(signature(h, m)).or_default() += r;
    }
    acc.retain(|_, r| !r.is_zero());
    acc
}

/// First key on which two rate maps disagree, with both values.
fn first_difference(a: &BTreeMap<Signature, Rate>, b: &BTreeMap<Signature, Rate>) -> Option<(Signature, Rate, Rate)> {
    let zero = Rate::zero();
    a.keys()
        .chain(b.keys())
        .filter_map(|k| {
            let (x, y) = (a.get(k).unwrap_or(&zero), b.get(k).unwrap_or(&zero));
            (x != y).then(|| (k.clone(), x.clone(), y.clone()))
        })
        .min_by(|p, q| p.0.cmp(&q.0))
}

/// Two states of one block with different aggregate rates into `block`
/// (named by its representative state).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LumpabilityCounterexample {
    pub s1: Multiset,
    pub s2: Multiset,
    pub block: Multiset,
    pub q1: Rate,
    pub q2: Rate,
}

impl LumpabilityCounterexample {
    pub fn display<'a>(&'a self, table: &'a SpeciesTable) -> impl fmt::Display + 'a {
        Shown(self, table)
    }
}

struct Shown<'a, T>(&'a T, &'a SpeciesTable);

impl fmt::Display for Shown<'_, LumpabilityCounterexample> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (c, t) = (self.0, self.1);
        write!(
            f,
            "q[{}, [{}]] = {} but q[{}, [{}]] = {}",
            c.s1.display_compact(t),
            c.block.display_compact(t),
            c.q1,
            c.s2.display_compact(t),
            c.block.display_compact(t),
            c.q2
        )
    }
}

/// Exact check that every two states of a block have equal aggregate rates
/// into every block, including blocks of unexplored successors.
pub fn check_ordinary_lumpability(ss: &StateSpace, sp: &StatePartition) -> Result<(), LumpabilityCounterexample> {
    let rows = generator(ss);
    let h = &sp.species;
    let rates: Vec<BTreeMap<Signature, Rate>> = rows.par_iter().map(|r| block_rates(ss, h, r)).collect();
    let found = sp.blocks.par_iter().find_map_first(|members| {
        let first = members[0];
        members[1..].iter().find_map(|&other| {
            first_difference(&rates[first], &rates[other]).map(|(sig, q1, q2)| LumpabilityCounterexample {
                s1: ss.states[first].clone(),
                s2: ss.states[other].clone(),
                block: representative_state(h, &sig),
                q1,
                q2,
            })
        })
    });
    match found {
        Some(c) => Err(c),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("state partition is not ordinarily lumpable")]
pub struct NotLumpableError(pub LumpabilityCounterexample);

/// Generator over macro-states, each named by its representative state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LumpedChain {
    /// Representative states of the explored blocks, in block order.
    pub macro_states: Vec<Multiset>,
    /// Rows indexed like `macro_states`; `External` targets are blocks
    /// containing no explored state.
    pub rows: Vec<GeneratorRow>,
}

impl LumpedChain {
    pub fn write(&self, table: &SpeciesTable) -> String {
        let mut text = String::new();
        for row in &self.rows {
            let from = self.macro_states[row.source].display_compact(table);
            for (t, r) in &row.off_diagonal {
                let to = match t {
                    Target::Internal(j) => &self.macro_states[*j],
                    Target::External(m) => m,
                };
                let _ = writeln!(text, "{from}\t{}\t{r}", to.display_compact(table));
            }
        }
        text
    }
}

pub fn build_lumped_chain(ss: &StateSpace, sp: &StatePartition) -> Result<LumpedChain, NotLumpableError> {
    check_ordinary_lumpability(ss, sp).map_err(NotLumpableError)?;
    let h = &sp.species;
    let rows = generator(ss);
    let block_index: HashMap<&Signature, usize> = sp.signatures.iter().enumerate().map(|(b, s)| (s, b)).collect();
    let macro_states: Vec<Multiset> = sp.signatures.iter().map(|s| representative_state(h, s)).collect();
    let lumped = sp
        .blocks
        .iter()
        .enumerate()
        .map(|(b, members)| {
            let entries = block_rates(ss, h, &rows[members[0]]).into_iter().map(|(sig, r)| {
                let t = match block_index.get(&sig) {
                    Some(&j) => Target::Internal(j),
                    None => Target::External(representative_state(h, &sig)),
                };
                (t, r)
            });
            fuse_row(b, entries)
        })
        .collect();
    Ok(LumpedChain { macro_states, rows: lumped })
}

/// A state whose lumped original row differs from the reduced network's row
/// at its representative state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientMismatch {
    pub state: Multiset,
    /// Target macro-state, as a representative state in original ids.
    pub block: Multiset,
    pub q_orig: Rate,
    pub q_red: Rate,
}

impl QuotientMismatch {
    pub fn display<'a>(&'a self, table: &'a SpeciesTable) -> impl fmt::Display + 'a {
        Shown(self, table)
    }
}

impl fmt::Display for Shown<'_, QuotientMismatch> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (c, t) = (self.0, self.1);
        write!(
            f,
            "at {}: original rate into [{}] is {}, reduced rate is {}",
            c.state.display_compact(t),
            c.block.display_compact(t),
            c.q_orig,
            c.q_red
        )
    }
}

/// Checks `q[σ, M] = q_red(σ^R, M^R)` for every explored state `σ` and every
/// macro-state `M`, computing the reduced rows directly from the reduced
/// network.
pub fn check_quotient_generator(ss: &StateSpace, red: &Reduction) -> Result<(), QuotientMismatch> {
    let h = red.map.partition();
    let rows = generator(ss);
    let found = rows.par_iter().find_map_first(|row| {
        let sigma = &ss.states[row.source];
        let orig = block_rates(ss, h, row);
        let sigma_r = red.map.reduce_state(sigma);
        // reduced species ids coincide with block indices
        let as_sig = |m: &Multiset| -> Signature { m.iter().map(|(x, k)| (x.index(), k)).collect() };
        let mut reduced: BTreeMap<Signature, Rate> = BTreeMap::new();
        let mut exit = Rate::zero();
        for t in out_transitions(&red.crn, &sigma_r) {
            if t.target != sigma_r {
                exit += &t.rate;
                *reduced.entry(as_sig(&t.target)).or_default() += t.rate;
            }
        }
        *reduced.entry(as_sig(&sigma_r)).or_default() += -exit;
        reduced.retain(|_, r| !r.is_zero());
        first_difference(&orig, &reduced).map(|(sig, q_orig, q_red)| QuotientMismatch {
            state: sigma.clone(),
            block: representative_state(h, &sig),
            q_orig,
            q_red,
        })
    });
    match found {
        Some(m) => Err(m),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::fixtures::{partition, running_example, state};
    use crate::parse::parse_crn;
    use crate::reduce::reduce;

    fn two_state(a1: i64, a2: i64) -> Crn {
        parse_crn(&format!("F -> G @ {a1}\nG -> F @ {a2}")).unwrap().crn
    }

    fn show(ts: &[Transition], crn: &Crn) -> Vec<String> {
        ts.iter().map(|t| format!("{} {}", t.target.display_compact(&crn.species), t.rate)).collect()
    }

    #[test]
    fn running_example_rates() {
        let crn = running_example();
        let s0 = state(&crn, &[("A", 2), ("C", 1), ("D", 1)]);
        let ts = out_transitions(&crn, &s0);
        assert_eq!(show(&ts, &crn), ["A+C+2D 12", "A+4C+D 4", "2A+2C+D 5"]);
        assert!(out_transitions(&crn, &Multiset::empty()).is_empty());
        let d2 = out_transitions(&crn, &state(&crn, &[("D", 2)]));
        assert_eq!(show(&d2, &crn), ["C 3"]);
    }

    #[test]
    fn homeoreaction_needs_two_copies() {
        let crn = running_example();
        assert!(out_transitions(&crn, &state(&crn, &[("D", 1)])).is_empty());
        let d3 = out_transitions(&crn, &state(&crn, &[("D", 3)]));
        // (3/2)·3·2
        assert_eq!(show(&d3, &crn), ["C+D 9"]);
    }

    #[test]
    fn parallel_transitions_fuse() {
        let crn = parse_crn("A + B -> B + C @ 1\nA -> C @ 2").unwrap().crn;
        let s = Multiset::from_counts([(crn.species.id("A").unwrap(), 1), (crn.species.id("B").unwrap(), 1)]);
        let ss = enumerate(&crn, &s, 10);
        let rows = generator(&ss);
        let row = &rows[ss.index_of(&s).unwrap()];
        assert_eq!(row.off_diagonal.len(), 1);
        assert_eq!(row.off_diagonal[0].1, Rate::from_integer(3));
        assert_eq!(row.diagonal, Rate::from_integer(-3));
    }

    #[test]
    fn diagonal_of_running_example() {
        let crn = running_example();
        let s0 = state(&crn, &[("A", 2), ("C", 1), ("D", 1)]);
        let ss = enumerate(&crn, &s0, 1);
        assert!(ss.truncated() && ss.is_frontier(0));
        let rows = generator(&ss);
        assert_eq!(rows[0].diagonal, Rate::from_integer(-21));
        assert!(rows[0].off_diagonal.iter().all(|(t, _)| matches!(t, Target::External(_))));
    }

    #[test]
    fn self_loops_stay_out_of_the_generator() {
        let crn = parse_crn("A -> A @ 4\nA -> B @ 1").unwrap().crn;
        let a = Multiset::singleton(crn.species.id("A").unwrap());
        assert_eq!(out_transitions(&crn, &a).len(), 2);
        let ss = enumerate(&crn, &a, 10);
        let rows = generator(&ss);
        assert_eq!(rows[0].diagonal, Rate::from_integer(-1));
        assert_eq!(rows[1].diagonal, Rate::zero());
    }

    #[test]
    fn two_state_chain() {
        let crn = two_state(1, 2);
        let f = Multiset::singleton(crn.species.id("F").unwrap());
        let ss = enumerate(&crn, &f, 10);
        assert!(!ss.truncated());
        assert_eq!(ss.len(), 2);
        assert_eq!(ss.transitions().count(), 2);
        let sp = lift_states(&SpeciesPartition::trivial(2), &ss);
        assert_eq!(sp.len(), 1);
        assert_eq!(check_ordinary_lumpability(&ss, &sp), Ok(()));
        assert!(crate::smb::is_smb(&crn, &SpeciesPartition::trivial(2)).is_err());
        let chain = build_lumped_chain(&ss, &sp).unwrap();
        assert_eq!(chain.rows[0].off_diagonal, vec![]);
        assert_eq!(chain.rows[0].diagonal, Rate::zero());
        assert_eq!(chain.macro_states, vec![f]);
    }

    #[test]
    fn empty_network_has_one_state() {
        let crn = parse_crn("species A B").unwrap().crn;
        let s = Multiset::from_counts([(crn.species.id("A").unwrap(), 3)]);
        let ss = enumerate(&crn, &s, 5);
        assert_eq!(ss.states(), &[s]);
        assert_eq!(generator(&ss)[0].diagonal, Rate::zero());
    }

    #[test]
    fn running_example_is_infinite() {
        let crn = running_example();
        let s0 = state(&crn, &[("A", 2), ("C", 1), ("D", 1)]);
        let ss = enumerate(&crn, &s0, 10);
        assert!(ss.truncated());
        assert_eq!(ss.len(), 10);
    }

    #[test]
    fn states_are_sorted_by_text() {
        let crn = running_example();
        let s0 = state(&crn, &[("A", 2), ("C", 1), ("D", 1)]);
        let ss = enumerate(&crn, &s0, 40);
        let keys: Vec<String> = ss.states().iter().map(|s| s.display_compact(&crn.species).to_string()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn lifting_groups_by_block_population() {
        let crn = running_example();
        let hm = partition(&crn, &[&["C", "E"]]);
        let seeds = [state(&crn, &[("A", 1), ("C", 1), ("D", 1)]), state(&crn, &[("A", 1), ("E", 1), ("D", 1)])];
        let ss = enumerate_from(&crn, &seeds, Limits::states(2));
        let sp = lift_states(&hm, &ss);
        assert_eq!(sp.len(), 1);
        let trivial = lift_states(&SpeciesPartition::trivial(5), &ss);
        assert_eq!(trivial.len(), 1);
        let discrete = lift_states(&SpeciesPartition::discrete(5), &ss);
        assert_eq!(discrete.len(), 2);
    }

    #[test]
    fn running_example_lumpable_under_smb() {
        let crn = running_example();
        let hm = partition(&crn, &[&["C", "E"]]);
        let s0 = state(&crn, &[("A", 2), ("C", 1), ("D", 1)]);
        let ss = enumerate_from(&crn, std::slice::from_ref(&s0), Limits { max_states: 5000, max_population: Some(6) });
        assert!(ss.truncated());
        // E is never produced, so the lift only merges states once E is seeded
        assert_eq!(lift_states(&hm, &ss).len(), ss.len());
        assert_eq!(check_ordinary_lumpability(&ss, &lift_states(&hm, &ss)), Ok(()));
        let seeds = [s0, state(&crn, &[("A", 1), ("E", 2), ("D", 1)])];
        let ss = enumerate_from(&crn, &seeds, Limits { max_states: 5000, max_population: Some(6) });
        let sp = lift_states(&hm, &ss);
        assert!(sp.len() < ss.len());
        assert_eq!(check_ordinary_lumpability(&ss, &sp), Ok(()));

        let red = reduce(&crn, &hm).unwrap();
        assert_eq!(check_quotient_generator(&ss, &red), Ok(()));
    }

    #[test]
    fn non_smb_lift_is_caught() {
        let crn = running_example();
        let h = partition(&crn, &[&["A", "B"], &["C", "E"]]);
        let seeds = [state(&crn, &[("A", 1), ("D", 1)]), state(&crn, &[("B", 1), ("D", 1)])];
        let ss = enumerate_from(&crn, &seeds, Limits { max_states: 5000, max_population: Some(5) });
        let c = check_ordinary_lumpability(&ss, &lift_states(&h, &ss)).unwrap_err();
        assert_ne!(c.q1, c.q2);
        let forced = crate::reduce::reduce_unchecked(&crn, &h);
        assert!(check_quotient_generator(&ss, &forced).is_err());
    }

    #[test]
    fn lumped_chain_matches_reduced_generator() {
        let crn = running_example();
        let hm = partition(&crn, &[&["C", "E"]]);
        let s0 = state(&crn, &[("A", 2), ("C", 1), ("D", 1)]);
        let ss = enumerate_from(&crn, std::slice::from_ref(&s0), Limits { max_states: 5000, max_population: Some(6) });
        let chain = build_lumped_chain(&ss, &lift_states(&hm, &ss)).unwrap();

        let red = reduce(&crn, &hm).unwrap();
        // Rows of the reduced network at the same representative states,
        // written with original species names.
        for (b, row) in chain.rows.iter().enumerate() {
            let sigma_r = red.map.reduce_state(&chain.macro_states[b]);
            let red_ts = out_transitions(&red.crn, &sigma_r);
            let mut want: BTreeMap<String, Rate> = BTreeMap::new();
            for t in red_ts.iter().filter(|t| t.target != sigma_r) {
                *want.entry(t.target.display_compact(&red.crn.species).to_string()).or_default() += &t.rate;
            }
            let got: BTreeMap<String, Rate> = row
                .off_diagonal
                .iter()
                .map(|(t, r)| {
                    let m = match t {
                        Target::Internal(j) => &chain.macro_states[*j],
                        Target::External(m) => m,
                    };
                    (m.display_compact(&crn.species).to_string(), r.clone())
                })
                .collect();
            assert_eq!(got, want);
        }
        let text = chain.write(&crn.species);
        assert!(text.contains("2A+C+D\tA+C+2D\t12\n"));
    }

    #[test]
    fn discrete_lumping_is_the_generator() {
        let crn = running_example();
        let s0 = state(&crn, &[("B", 1), ("D", 2)]);
        let ss = enumerate_from(&crn, &[s0], Limits { max_states: 300, max_population: Some(5) });
        let chain = build_lumped_chain(&ss, &lift_states(&SpeciesPartition::discrete(5), &ss)).unwrap();
        let lines = |t: String| {
            let mut v: Vec<String> = t.lines().map(str::to_owned).collect();
            v.sort();
            v
        };
        assert_eq!(lines(chain.write(&crn.species)), lines(write_generator(&ss, &generator(&ss), &crn.species)));
    }

    #[test]
    fn generator_export() {
        let crn = two_state(1, 2);
        let f = Multiset::singleton(crn.species.id("F").unwrap());
        let ss = enumerate(&crn, &f, 10);
        assert_eq!(write_generator(&ss, &generator(&ss), &crn.species), "F\tG\t1\nG\tF\t2\n");
    }
}

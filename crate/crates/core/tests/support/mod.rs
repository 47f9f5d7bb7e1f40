//! Independent reference implementations used as test oracles. They follow
//! the definitions literally and share no code with the library beyond the
//! basic data types.

#![allow(dead_code)]

use std::collections::BTreeMap;

use crnlump::parse::parse_crn;
use crnlump::{Crn, Multiset, Rate, SpeciesId, SpeciesPartition};
use num_rational::BigRational;
use proptest::prelude::*;

pub const RUNNING_EXAMPLE: &str =
    "A -> D @ 6\nA -> 3C @ 2\nC + D -> 2C + D @ 5\nB -> C @ 6\nB -> 3D @ 2\nE + D -> 2C + D @ 5\n2D -> C @ 3\n";

pub fn running_example() -> Crn {
    parse_crn(RUNNING_EXAMPLE).unwrap().crn
}

pub fn crn(text: &str) -> Crn {
    parse_crn(text).unwrap().crn
}

pub fn state(crn: &Crn, v: &[(&str, u64)]) -> Multiset {
    Multiset::from_counts(v.iter().map(|&(n, k)| (crn.species.id(n).unwrap(), k)))
}

/// Partition with the listed blocks; unlisted species are singletons.
pub fn partition(crn: &Crn, blocks: &[&[&str]]) -> SpeciesPartition {
    let mut label: Vec<usize> = (0..crn.num_species()).map(|i| blocks.len() + i).collect();
    for (b, names) in blocks.iter().enumerate() {
        for n in *names {
            label[crn.species.id(n).unwrap().index()] = b;
        }
    }
    SpeciesPartition::from_block_labels(&label)
}

/// Per-block populations as a dense vector.
fn block_counts(h: &SpeciesPartition, m: &Multiset) -> Vec<u64> {
    let mut v = vec![0; h.num_blocks()];
    for (x, k) in m.iter() {
        v[h.block_of(x)] += k;
    }
    v
}

/// The SMB conditions checked pair by pair, over the empty label and every
/// species as label, and over every class of reaction products.
pub fn smb_oracle(crn: &Crn, h: &SpeciesPartition) -> bool {
    let n = crn.num_species();
    let mut classes: BTreeMap<Vec<u64>, ()> = BTreeMap::new();
    for r in &crn.reactions {
        classes.insert(block_counts(h, &r.products), ());
    }
    let mut labels = vec![Multiset::empty()];
    labels.extend((0..n).map(|z| Multiset::singleton(SpeciesId(z as u32))));
    let rr = |x: usize, rho: &Multiset, class: &Vec<u64>| -> Rate {
        let reagents = rho.union(&Multiset::singleton(SpeciesId(x as u32)));
        crn.reactions
            .iter()
            .filter(|r| r.reagents == reagents && &block_counts(h, &r.products) == class)
            .map(|r| r.rate.clone())
            .sum()
    };
    for x in 0..n {
        for y in x + 1..n {
            if h.block_of(SpeciesId(x as u32)) != h.block_of(SpeciesId(y as u32)) {
                continue;
            }
            for rho in &labels {
                for class in classes.keys() {
                    if rr(x, rho, class) != rr(y, rho, class) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// The forward bisimulation conditions, written out with an explicit
/// `(ρ(X)+1)` factor, over every species as label.
pub fn fb_oracle(crn: &Crn, h: &SpeciesPartition) -> bool {
    let n = crn.num_species();
    let mut labels = vec![Multiset::empty()];
    labels.extend((0..n).map(|z| Multiset::singleton(SpeciesId(z as u32))));
    let stats = |x: usize, rho: &Multiset| -> (Rate, Vec<Rate>) {
        let xs = SpeciesId(x as u32);
        let reagents = rho.union(&Multiset::singleton(xs));
        let factor = rho.count(xs) + 1;
        let mut ccr = Rate::zero();
        let mut pr = vec![Rate::zero(); h.num_blocks()];
        for r in crn.reactions.iter().filter(|r| r.reagents == reagents) {
            ccr += r.rate.mul_int(factor);
            for (b, k) in block_counts(h, &r.products).into_iter().enumerate() {
                pr[b] += r.rate.mul_int(factor * k);
            }
        }
        (ccr, pr)
    };
    for x in 0..n {
        for y in x + 1..n {
            if h.block_of(SpeciesId(x as u32)) == h.block_of(SpeciesId(y as u32))
                && labels.iter().any(|rho| stats(x, rho) != stats(y, rho))
            {
                return false;
            }
        }
    }
    true
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<SpeciesPartition> {
    fn rec(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<SpeciesPartition>) {
        if i == cur.len() {
            out.push(SpeciesPartition::from_block_labels(cur));
            return;
        }
        for b in 0..=max {
            cur[i] = b;
            rec(i + 1, if b == max { max + 1 } else { max }, cur, out);
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(SpeciesPartition::trivial(0));
        return out;
    }
    let mut cur = vec![0; n];
    rec(1, 1, &mut cur, &mut out);
    out
}

/// `a` is coarser than `b` and different from it.
pub fn strictly_coarser(a: &SpeciesPartition, b: &SpeciesPartition) -> bool {
    b.refines(a) && a != b
}

/// Transitive closure of the union of two equivalences.
pub fn join(a: &SpeciesPartition, b: &SpeciesPartition) -> SpeciesPartition {
    let n = a.num_species();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for p in [a, b] {
        for block in p.blocks() {
            for w in block.windows(2) {
                let (r1, r2) = (find(&mut parent, w[0].index()), find(&mut parent, w[1].index()));
                parent[r1] = r2;
            }
        }
    }
    let labels: Vec<usize> = (0..n).map(|x| find(&mut parent, x)).collect();
    SpeciesPartition::from_block_labels(&labels)
}

/// Out-rates of `sigma` by target, from the three rate-law cases spelled
/// out separately. Self-loops included.
pub fn naive_rates(crn: &Crn, sigma: &Multiset) -> BTreeMap<Multiset, Rate> {
    let mut out: BTreeMap<Multiset, Rate> = BTreeMap::new();
    for r in &crn.reactions {
        let entries = r.reagents.entries();
        let alpha = r.rate.as_big().clone();
        let factor: BigRational = match entries {
            [(x, 1)] => BigRational::from_integer(sigma.count(*x).into()),
            [(x, 1), (y, 1)] => BigRational::from_integer((sigma.count(*x) * sigma.count(*y)).into()),
            [(x, 2)] => {
                let n = sigma.count(*x);
                BigRational::new((n * n.saturating_sub(1)).into(), 2.into())
            }
            _ => panic!("not elementary"),
        };
        let rate = Rate::from_big(alpha * factor);
        if rate.is_zero() {
            continue;
        }
        let mut dense = sigma.to_dense(crn.num_species());
        for (x, k) in r.reagents.iter() {
            dense[x.index()] -= k;
        }
        for (x, k) in r.products.iter() {
            dense[x.index()] += k;
        }
        *out.entry(Multiset::from_dense(&dense)).or_insert_with(Rate::zero) += rate;
    }
    out
}

/// Mass-action vector field, one species and one reaction at a time.
pub fn naive_vector_field(crn: &Crn, v: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for x in crn.species.ids() {
        let mut dx = 0.0;
        for r in &crn.reactions {
            let stoich = r.products.count(x) as f64 - r.reagents.count(x) as f64;
            let mut flux = r.rate.to_f64();
            for y in crn.species.ids() {
                flux *= v[y.index()].powf(r.reagents.count(y) as f64);
            }
            dx += stoich * flux;
        }
        out.push(dx);
    }
    out
}

/// SplitMix64 seeding followed by xoshiro256++, from the published
/// reference algorithms.
pub struct RefXoshiro {
    s: [u64; 4],
}

impl RefXoshiro {
    pub fn new(seed: u64) -> Self {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = x;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        };
        RefXoshiro { s: [next(), next(), next(), next()] }
    }

    pub fn next(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }
}

/// Elementary networks over species `S0..S{n-1}` with small integer rates.
pub fn arb_crn(max_species: usize, max_reactions: usize, max_product: u64) -> impl Strategy<Value = Crn> {
    (1..=max_species).prop_flat_map(move |n| {
        let reaction = (
            0..n,
            proptest::option::of(0..n),
            proptest::collection::vec((0..n, 1..=max_product.max(1)), 0..=max_product as usize),
            1i64..=5,
        );
        proptest::collection::vec(reaction, 0..=max_reactions).prop_map(move |rs| {
            let mut text = format!("species {}\n", (0..n).map(|i| format!("S{i}")).collect::<Vec<_>>().join(" "));
            for (x, y, prods, k) in rs {
                let lhs = match y {
                    None => format!("S{x}"),
                    Some(y) => format!("S{x} + S{y}"),
                };
                // cap the total product size
                let mut left = max_product;
                let mut terms = Vec::new();
                for (p, c) in prods {
                    let c = c.min(left);
                    if c > 0 {
                        terms.push(format!("{c}S{p}"));
                        left -= c;
                    }
                }
                let rhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
                text.push_str(&format!("{lhs} -> {rhs} @ {k}\n"));
            }
            parse_crn(&text).unwrap().crn
        })
    })
}

pub fn arb_partition(n: usize) -> impl Strategy<Value = SpeciesPartition> {
    proptest::collection::vec(0..n.max(1), n).prop_map(|labels| SpeciesPartition::from_block_labels(&labels))
}

pub fn arb_crn_and_partition(
    max_species: usize,
    max_reactions: usize,
    max_product: u64,
) -> impl Strategy<Value = (Crn, SpeciesPartition)> {
    arb_crn(max_species, max_reactions, max_product).prop_flat_map(|c| {
        let n = c.num_species();
        (Just(c), arb_partition(n))
    })
}

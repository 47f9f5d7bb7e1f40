//! Seeded stochastic simulation (Gillespie direct method) and statistical
//! comparison of block observables between a network and its reduction.
//!
//! Random numbers come from xoshiro256++ seeded through SplitMix64, so a run
//! is fully determined by its seed. Each step draws two 64-bit outputs `x`
//! and maps each to `u = ((x >> 12) + 0.5) · 2^-52`, a uniform in (0, 1)
//! that never hits either end. The first gives the waiting time
//! `−ln(u) / a0`, the second selects the reaction by a linear scan of the
//! cumulative propensities against `u · a0`.
//!
//! For reference, with wrapping arithmetic:
//!
//! ```text
//! splitmix64:  x += 0x9e3779b97f4a7c15; z = x;
//!              z = (z ^ z >> 30) * 0xbf58476d1ce4e5b9;
//!              z = (z ^ z >> 27) * 0x94d049bb133111eb;
//!              return z ^ z >> 31            (four calls fill s[0..4])
//! xoshiro256++: out = rotl(s0 + s3, 23) + s0; t = s1 << 17;
//!              s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t;
//!              s3 = rotl(s3, 45)
//! ```

use std::fmt::Write as _;

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::crn::{Crn, Multiset, SpeciesPartition, SpeciesTable};
use crate::reduce::Reduction;

/// Uniform in the open interval (0, 1).
pub fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

pub fn rng_for_seed(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Reactions compiled for fast propensity evaluation on dense states.
///
/// Reactions that leave the state unchanged are dropped: they never alter
/// the trajectory, and without them the total propensity equals the exit
/// rate of the chain.
#[derive(Clone, Debug)]
pub struct Simulator {
    num_species: usize,
    reagents: Vec<Vec<(usize, u64)>>,
    /// Rate constant, already halved for `2X` reagents.
    coeff: Vec<f64>,
    change: Vec<Vec<(usize, i64)>>,
}

impl Simulator {
    pub fn new(crn: &Crn) -> Self {
        let mut sim = Simulator { num_species: crn.num_species(), reagents: vec![], coeff: vec![], change: vec![] };
        for r in &crn.reactions {
            let mut change = Vec::new();
            for x in crn.species.ids() {
                let d = r.products.count(x) as i64 - r.reagents.count(x) as i64;
                if d != 0 {
                    change.push((x.index(), d));
                }
            }
            if change.is_empty() || r.rate.is_zero() {
                continue;
            }
            let coeff = if r.is_homeoreaction() { r.rate.halve() } else { r.rate.clone() };
            sim.reagents.push(r.reagents.iter().map(|(x, k)| (x.index(), k)).collect());
            sim.coeff.push(coeff.to_f64());
            sim.change.push(change);
        }
        sim
    }

    pub fn num_species(&self) -> usize {
        self.num_species
    }

    /// Fills `out` with the propensity of each compiled reaction and returns
    /// their sum.
    pub fn propensities(&self, state: &[u64], out: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (i, rho) in self.reagents.iter().enumerate() {
            let mut a = self.coeff[i];
            for &(x, k) in rho {
                let n = state[x];
                a *= match k {
                    1 => n as f64,
                    2 => (n * n.saturating_sub(1)) as f64,
                    _ => (0..k).map(|j| n.saturating_sub(j) as f64).product::<f64>(),
                };
            }
            out[i] = a;
            total += a;
        }
        total
    }

    /// Simulates from `state` until `t_end`, calling `on_event(t, state)`
    /// after each reaction. Returns the number of events.
    pub fn run(&self, state: &mut [u64], t_end: f64, seed: u64, mut on_event: impl FnMut(f64, &[u64])) -> u64 {
        let mut rng = rng_for_seed(seed);
        let mut props = vec![0.0; self.reagents.len()];
        let mut t = 0.0f64;
        let mut events = 0;
        loop {
            let a0 = self.propensities(state, &mut props);
            if a0 <= 0.0 {
                break;
            }
            let tau = -open_unit(&mut rng).ln() / a0;
            let mut next = t + tau;
            if next > t_end {
                break;
            }
            if next <= t {
                next = f64::from_bits(t.to_bits() + 1);
            }
            t = next;
            let target = open_unit(&mut rng) * a0;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &a) in props.iter().enumerate() {
                if a > 0.0 {
                    acc += a;
                    chosen = Some(i);
                    if target < acc {
                        break;
                    }
                }
            }
            let i = chosen.expect("a0 > 0");
            for &(x, d) in &self.change[i] {
                state[x] = state[x].checked_add_signed(d).expect("population stays non-negative");
            }
            events += 1;
            on_event(t, state);
        }
        events
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SsaTrajectory {
    /// `(t, state)` pairs, starting with `(0, σ0)`.
    pub events: Vec<(f64, Multiset)>,
    pub seed: u64,
    pub t_end: f64,
}

impl SsaTrajectory {
    /// State holding at time `t`.
    pub fn state_at(&self, t: f64) -> &Multiset {
        let i = self.events.partition_point(|(s, _)| *s <= t);
        &self.events[i.saturating_sub(1)].1
    }

    /// One line `t<TAB>state` per event.
    pub fn write(&self, table: &SpeciesTable) -> String {
        let mut text = String::new();
        for (t, s) in &self.events {
            let _ = writeln!(text, "{t}\t{}", s.display_compact(table));
        }
        text
    }
}

pub fn ssa_run(crn: &Crn, sigma0: &Multiset, t_end: f64, seed: u64) -> SsaTrajectory {
    let sim = Simulator::new(crn);
    let mut state = sigma0.to_dense(crn.num_species());
    let mut events = vec![(0.0, sigma0.clone())];
    sim.run(&mut state, t_end, seed, |t, s| events.push((t, Multiset::from_dense(s))));
    SsaTrajectory { events, seed, t_end }
}

/// Evenly spaced grid `t_i = i · t_end / (n − 1)` for `i < n`.
pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| if i + 1 == n { t_end } else { i as f64 * t_end / (n - 1) as f64 }).collect(),
    }
}

/// Block populations on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSeries {
    pub grid: Vec<f64>,
    /// `values[i][b]`: population of block `b` at grid point `i`.
    pub values: Vec<Vec<u64>>,
}

impl ObservableSeries {
    /// CSV with header `t,<block representatives...>`.
    pub fn to_csv(&self, h: &SpeciesPartition, table: &SpeciesTable) -> String {
        let mut text = String::from("t");
        for b in h.blocks() {
            let _ = write!(text, ",{}", table.name(b[0]));
        }
        text.push('\n');
        for (t, row) in self.grid.iter().zip(&self.values) {
            let _ = write!(text, "{t}");
            for v in row {
                let _ = write!(text, ",{v}");
            }
            text.push('\n');
        }
        text
    }
}

pub fn sample_observables(traj: &SsaTrajectory, h: &SpeciesPartition, grid: &[f64]) -> ObservableSeries {
    let values = grid
        .iter()
        .map(|&t| {
            let s = traj.state_at(t);
            h.blocks().iter().map(|b| s.block_population(b)).collect()
        })
        .collect();
    ObservableSeries { grid: grid.to_vec(), values }
}

/// Runs one simulation and records dense block sums at each grid time.
fn sampled_run(sim: &Simulator, sigma0: &[u64], block_of: &[usize], blocks: usize, grid: &[f64], t_end: f64, seed: u64) -> Vec<Vec<u64>> {
    let sums = |s: &[u64]| {
        let mut v = vec![0; blocks];
        for (x, &n) in s.iter().enumerate() {
            v[block_of[x]] += n;
        }
        v
    };
    let mut out = Vec::with_capacity(grid.len());
    let mut state = sigma0.to_vec();
    let mut current = sums(&state);
    let mut next = 0;
    sim.run(&mut state, t_end, seed, |t, s| {
        while next < grid.len() && grid[next] < t {
            out.push(current.clone());
            next += 1;
        }
        current = sums(s);
    });
    while out.len() < grid.len() {
        out.push(current.clone());
    }
    out
}

/// Per-grid-point, per-block means and standard errors over `runs` seeded
/// simulations (`seed_base`, `seed_base + 1`, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub mean: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
}

pub fn ensemble(
    crn: &Crn,
    sigma0: &Multiset,
    h: &SpeciesPartition,
    t_end: f64,
    runs: u64,
    grid: &[f64],
    seed_base: u64,
) -> Ensemble {
    let sim = Simulator::new(crn);
    let dense = sigma0.to_dense(crn.num_species());
    let k = h.num_blocks();
    let samples: Vec<Vec<Vec<u64>>> = (0..runs)
        .into_par_iter()
        .map(|r| sampled_run(&sim, &dense, h.block_labels(), k, grid, t_end, seed_base.wrapping_add(r)))
        .collect();
    let mut sum = vec![vec![0.0; k]; grid.len()];
    let mut sq = vec![vec![0.0; k]; grid.len()];
    for run in &samples {
        for (i, row) in run.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                sum[i][b] += v as f64;
                sq[i][b] += (v as f64) * (v as f64);
            }
        }
    }
    let n = runs as f64;
    let mut mean = sum.clone();
    let mut se = sum;
    for i in 0..grid.len() {
        for b in 0..k {
            let m = mean[i][b] / n;
            let var = if runs > 1 { ((sq[i][b] - n * m * m) / (n - 1.0)).max(0.0) } else { 0.0 };
            mean[i][b] = m;
            se[i][b] = (var / n).sqrt();
        }
    }
    Ensemble { mean, se }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    pub block: usize,
    pub mean_orig: f64,
    pub mean_red: f64,
    pub se_orig: f64,
    pub se_red: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    /// Block names (representatives), indexed like `ComparisonRow::block`.
    pub blocks: Vec<String>,
    pub runs: u64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }

    pub fn passed(&self) -> bool {
        self.flagged() == 0
    }

    pub fn to_csv(&self) -> String {
        let mut text = String::from("t,block,mean_orig,mean_red,se_orig,se_red,flagged\n");
        for r in &self.rows {
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{}",
                r.t, self.blocks[r.block], r.mean_orig, r.mean_red, r.se_orig, r.se_red, r.flagged
            );
        }
        text
    }

    pub fn to_table(&self) -> String {
        let mut text = format!(
            "{:>10}  {:<8} {:>12} {:>12} {:>10} {:>10}  flag\n",
            "t", "block", "mean_orig", "mean_red", "se_orig", "se_red"
        );
        for r in &self.rows {
            let _ = writeln!(
                text,
                "{:>10.4}  {:<8} {:>12.5} {:>12.5} {:>10.5} {:>10.5}  {}",
                r.t,
                self.blocks[r.block],
                r.mean_orig,
                r.mean_red,
                r.se_orig,
                r.se_red,
                if r.flagged { "*" } else { "" }
            );
        }
        let _ = writeln!(text, "{} runs, {} of {} points flagged", self.runs, self.flagged(), self.rows.len());
        text
    }
}

/// Compares block-sum means of `orig` against its reduction. A point is
/// flagged when `|mean_orig − mean_red| > 3·(se_orig + se_red)`.
pub fn compare_lumped_means(
    orig: &Crn,
    red: &Reduction,
    sigma0: &Multiset,
    t_end: f64,
    runs: u64,
    grid: &[f64],
    seed_base: u64,
) -> ComparisonReport {
    let h = red.map.partition();
    let blocks: Vec<String> = h.blocks().iter().map(|b| orig.species.name(b[0]).to_owned()).collect();
    if runs == 0 {
        return ComparisonReport { blocks, runs, rows: vec![] };
    }
    let a = ensemble(orig, sigma0, h, t_end, runs, grid, seed_base);
    let b = ensemble(&red.crn, &red.map.reduce_state(sigma0), &SpeciesPartition::discrete(red.crn.num_species()), t_end, runs, grid, seed_base);
    let mut rows = Vec::new();
    for (i, &t) in grid.iter().enumerate() {
        for blk in 0..h.num_blocks() {
            let (mo, mr, so, sr) = (a.mean[i][blk], b.mean[i][blk], a.se[i][blk], b.se[i][blk]);
            rows.push(ComparisonRow {
                t,
                block: blk,
                mean_orig: mo,
                mean_red: mr,
                se_orig: so,
                se_red: sr,
                flagged: (mo - mr).abs() > 3.0 * (so + sr),
            });
        }
    }
    ComparisonReport { blocks, runs, rows }
}

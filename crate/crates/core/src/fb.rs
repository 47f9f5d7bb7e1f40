//! Forward bisimulation and the deterministic mass-action semantics.
//!
//! Exact rational arithmetic is used for the bisimulation conditions; only
//! the ODE vector field and its integration use floating point.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::crn::{Crn, Multiset, Rate, Reaction, SpeciesId, SpeciesPartition, SpeciesTable};
use crate::reduce::{reduce_unchecked, ReduceError, Reduction};
use crate::smb::{labels, Label};

/// Species concentrations indexed by species id.
pub type Concentrations = Vec<f64>;

/// Reactions grouped by reagent multiset.
struct ByReagents<'a> {
    crn: &'a Crn,
    index: HashMap<&'a Multiset, Vec<usize>>,
}

impl<'a> ByReagents<'a> {
    fn new(crn: &'a Crn) -> Self {
        let mut index: HashMap<&Multiset, Vec<usize>> = HashMap::new();
        for (i, r) in crn.reactions.iter().enumerate() {
            index.entry(&r.reagents).or_default().push(i);
        }
        ByReagents { crn, index }
    }

    fn with_reagents(&self, x: SpeciesId, rho: &Multiset) -> impl Iterator<Item = &'a Reaction> + '_ {
        let reagents = rho.union(&Multiset::singleton(x));
        self.index.get(&reagents).into_iter().flatten().map(|&i| &self.crn.reactions[i])
    }

    fn ccr(&self, x: SpeciesId, rho: &Multiset) -> Rate {
        let total: Rate = self.with_reagents(x, rho).map(|r| &r.rate).sum();
        total.mul_int(rho.count(x) + 1)
    }

    fn pr(&self, x: SpeciesId, rho: &Multiset, block: &[SpeciesId]) -> Rate {
        let total: Rate = self.with_reagents(x, rho).map(|r| r.rate.mul_int(r.products.block_population(block))).sum();
        total.mul_int(rho.count(x) + 1)
    }
}

/// Consumption rate of `x` in the presence of partner `rho`:
/// `(ρ(X)+1)·Σ α` over reactions with reagents `X + ρ`.
pub fn ccr(crn: &Crn, x: SpeciesId, rho: &Multiset) -> Rate {
    ByReagents::new(crn).ccr(x, rho)
}

/// Production of `block` species by `x` with partner `rho`:
/// `(ρ(X)+1)·Σ α·π(block)` over reactions with reagents `X + ρ`.
pub fn pr(crn: &Crn, x: SpeciesId, rho: &Multiset, block: &[SpeciesId]) -> Rate {
    ByReagents::new(crn).pr(x, rho, block)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FbCounterexample {
    pub x: SpeciesId,
    pub y: SpeciesId,
    pub label: Label,
    /// `None` when the consumption rates differ, otherwise the block whose
    /// production rates differ.
    pub block: Option<Vec<SpeciesId>>,
    pub rate_x: Rate,
    pub rate_y: Rate,
}

impl FbCounterexample {
    pub fn display<'a>(&'a self, table: &'a SpeciesTable) -> impl fmt::Display + 'a {
        FbDisplay(self, table)
    }
}

struct FbDisplay<'a>(&'a FbCounterexample, &'a SpeciesTable);

impl fmt::Display for FbDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (c, t) = (self.0, self.1);
        let label = c.label.display(t);
        match &c.block {
            None => write!(f, "ccr[{}, {label}] = {} but ccr[{}, {label}] = {}", t.name(c.x), c.rate_x, t.name(c.y), c.rate_y),
            Some(b) => {
                let names: Vec<&str> = b.iter().map(|&s| t.name(s)).collect();
                let b = names.join(",");
                write!(
                    f,
                    "pr[{}, {label}, {{{b}}}] = {} but pr[{}, {label}, {{{b}}}] = {}",
                    t.name(c.x),
                    c.rate_x,
                    t.name(c.y),
                    c.rate_y
                )
            }
        }
    }
}

/// Checks that related species have equal consumption rates and equal
/// production rates into every block, for every label.
pub fn is_fb(crn: &Crn, h: &SpeciesPartition) -> Result<(), FbCounterexample> {
    let idx = ByReagents::new(crn);
    let labels = labels(crn);
    for block in h.blocks() {
        let x = block[0];
        for &y in &block[1..] {
            for &label in labels.as_slice() {
                let rho = label.to_multiset();
                let (cx, cy) = (idx.ccr(x, &rho), idx.ccr(y, &rho));
                if cx != cy {
                    return Err(FbCounterexample { x, y, label, block: None, rate_x: cx, rate_y: cy });
                }
                for target in h.blocks() {
                    let (px, py) = (idx.pr(x, &rho, target), idx.pr(y, &rho, target));
                    if px != py {
                        return Err(FbCounterexample {
                            x,
                            y,
                            label,
                            block: Some(target.clone()),
                            rate_x: px,
                            rate_y: py,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Reduces `crn` by `h` after checking that `h` is a forward bisimulation.
/// The quotient construction is the same as for SMB.
pub fn reduce_fb(crn: &Crn, h: &SpeciesPartition) -> Result<Reduction, ReduceError> {
    is_fb(crn, h).map_err(ReduceError::NotAnFb)?;
    let mut red = reduce_unchecked(crn, h);
    red.verified = true;
    Ok(red)
}

/// Same network with every `2X` reaction at half its rate.
pub fn halve_homeoreactions(crn: &Crn) -> Crn {
    let reactions = crn
        .reactions
        .iter()
        .map(|r| {
            let rate = if r.is_homeoreaction() { r.rate.halve() } else { r.rate.clone() };
            Reaction::new(r.reagents.clone(), r.products.clone(), rate)
        })
        .collect();
    Crn { species: crn.species.clone(), reactions }
}

/// Reaction data in floating point, laid out for repeated evaluation.
struct Compiled {
    reagents: Vec<Vec<(usize, i32)>>,
    net: Vec<Vec<(usize, f64)>>,
    rates: Vec<f64>,
}

impl Compiled {
    fn new(crn: &Crn) -> Self {
        let mut reagents = Vec::new();
        let mut net = Vec::new();
        let mut rates = Vec::new();
        for r in &crn.reactions {
            reagents.push(r.reagents.iter().map(|(x, k)| (x.index(), k as i32)).collect());
            let mut change: Vec<(usize, f64)> = Vec::new();
            for x in crn.species.ids() {
                let d = r.products.count(x) as f64 - r.reagents.count(x) as f64;
                if d != 0.0 {
                    change.push((x.index(), d));
                }
            }
            net.push(change);
            rates.push(r.rate.to_f64());
        }
        Compiled { reagents, net, rates }
    }

    fn eval(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, rho) in self.reagents.iter().enumerate() {
            let flux = rho.iter().fold(self.rates[i], |acc, &(x, k)| acc * v[x].powi(k));
            for &(x, d) in &self.net[i] {
                out[x] += d * flux;
            }
        }
    }
}

/// Mass-action vector field `F_X(V) = Σ (π(X) − ρ(X))·α·Π V^ρ`.
pub fn ode_vector_field(crn: &Crn, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; crn.num_species()];
    Compiled::new(crn).eval(v, &mut out);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<Concentrations>,
    /// Set when some component dropped below zero during integration.
    pub went_negative: bool,
}

impl OdeTrajectory {
    /// Sums of the listed species at every recorded time.
    pub fn block_sums(&self, h: &SpeciesPartition) -> Vec<Vec<f64>> {
        self.values
            .iter()
            .map(|v| h.blocks().iter().map(|b| b.iter().map(|x| v[x.index()]).sum()).collect())
            .collect()
    }

    /// CSV with a header `t,<names...>`.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut text = String::from("t");
        for n in names {
            text.push(',');
            text.push_str(n);
        }
        text.push('\n');
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = write!(text, "{t}");
            for x in v {
                let _ = write!(text, ",{x}");
            }
            text.push('\n');
        }
        text
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("non-finite value for species #{species} at t = {time}")]
pub struct NonFiniteError {
    pub time: f64,
    pub species: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("step size must be positive, got {0}")]
    BadStep(f64),
    #[error("end time must be non-negative, got {0}")]
    BadEnd(f64),
    #[error("expected {expected} initial values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    NonFinite(#[from] NonFiniteError),
}

/// Classical fixed-step RK4 from `t = 0` to `t_end`, recording every step.
/// The last step is shortened to land on `t_end` exactly.
pub fn integrate_ode(crn: &Crn, v0: &[f64], t_end: f64, dt: f64) -> Result<OdeTrajectory, IntegrateError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(IntegrateError::BadStep(dt));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(IntegrateError::BadEnd(t_end));
    }
    let n = crn.num_species();
    if v0.len() != n {
        return Err(IntegrateError::Dimension { expected: n, got: v0.len() });
    }
    let f = Compiled::new(crn);
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let mut went_negative = v0.iter().any(|&x| x < 0.0);
    times.push(0.0);
    values.push(v0.to_vec());

    let mut v = v0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for s in 1..=steps {
        let t0 = (s - 1) as f64 * dt;
        let t1 = if s == steps { t_end } else { s as f64 * dt };
        let h = t1 - t0;
        f.eval(&v, &mut k1);
        for i in 0..n {
            tmp[i] = v[i] + 0.5 * h * k1[i];
        }
        f.eval(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = v[i] + 0.5 * h * k2[i];
        }
        f.eval(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = v[i] + h * k3[i];
        }
        f.eval(&tmp, &mut k4);
        for i in 0..n {
            v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if let Some(species) = v.iter().position(|x| !x.is_finite()) {
            return Err(NonFiniteError { time: t1, species }.into());
        }
        went_negative |= v.iter().any(|&x| x < 0.0);
        times.push(t1);
        values.push(v.clone());
    }
    Ok(OdeTrajectory { times, values, went_negative })
}

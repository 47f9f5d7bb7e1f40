use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crnlump::ctmc::{self, Limits};
use crnlump::fb::{self, integrate_ode, is_fb};
use crnlump::parse::{import_bngl_net, parse_crn, parse_partition, parse_state, write_crn};
use crnlump::reduce::{reduce, reduce_unchecked};
use crnlump::smb::{is_smb, largest_smb};
use crnlump::ssa::{compare_lumped_means, ensemble, ssa_run, uniform_grid};
use crnlump::{Crn, Multiset, SpeciesPartition};

/// Exit codes: 0 the property holds, 1 it is violated, 2 usage or input
/// error, 3 a resource cap was hit.
#[derive(Parser)]
#[command(name = "crnlump", version, about = "Lump chemical reaction networks by syntactic Markovian bisimulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the coarsest SMB and print the reduced network.
    Reduce(ReduceArgs),
    /// Check whether a partition is an SMB.
    CheckSmb(CheckArgs),
    /// Check whether a partition is a forward bisimulation.
    CheckFb {
        #[command(flatten)]
        check: CheckArgs,
        /// Halve the rate of every `2X` reaction first.
        #[arg(long)]
        halve_homeo: bool,
    },
    /// Enumerate the reachable states of the population CTMC.
    Enumerate {
        file: PathBuf,
        #[command(flatten)]
        space: SpaceArgs,
        /// Print every state.
        #[arg(long)]
        states: bool,
        /// Print the generator, one off-diagonal entry per line.
        #[arg(long)]
        generator: bool,
    },
    /// Check ordinary lumpability of the lifted state partition.
    CheckLumpable {
        file: PathBuf,
        /// Species partition to lift (default: one block).
        #[arg(long)]
        partition: Option<PathBuf>,
        #[command(flatten)]
        space: SpaceArgs,
        /// Accept a truncated state space instead of exiting with 3.
        #[arg(long)]
        allow_truncation: bool,
        /// Print the lumped generator.
        #[arg(long)]
        lumped: bool,
    },
    /// Stochastic simulation.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        init: String,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of grid points; prints block means instead of events.
        #[arg(long)]
        grid: Option<usize>,
        /// Blocks to observe on the grid (default: every species).
        #[arg(long)]
        partition: Option<PathBuf>,
    },
    /// Integrate the mass-action ODE with fixed-step RK4.
    Ode {
        file: PathBuf,
        /// `A=1,B=0.5` (unlisted species start at 0) or one number for all.
        #[arg(long)]
        init_conc: String,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Print every n-th step only.
        #[arg(long, default_value_t = 1)]
        every: usize,
    },
    /// Refine, reduce, check the quotient generator on the explored states
    /// and compare simulated block means.
    Compare {
        file: PathBuf,
        #[arg(long)]
        init: String,
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        grid: usize,
        #[arg(long, default_value_t = 5000)]
        max_states: usize,
        #[arg(long)]
        max_population: Option<u64>,
        /// Write the comparison as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ReduceArgs {
    file: PathBuf,
    /// Initial partition (default: one block).
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Write the reduced network here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the species map `X -> representative` here.
    #[arg(long)]
    map_out: Option<PathBuf>,
    /// Reduce by the given partition as is instead of refining it.
    #[arg(long)]
    no_refine: bool,
    /// With --no-refine, reduce even if the partition is not an SMB.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long)]
    partition: PathBuf,
}

#[derive(Args)]
struct SpaceArgs {
    #[arg(long)]
    init: String,
    #[arg(long, default_value_t = 10_000)]
    max_states: usize,
    /// Leave states above this total population unexplored.
    #[arg(long)]
    max_population: Option<u64>,
}

enum Outcome {
    Holds,
    Violated,
    CapExceeded,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_crn(path: &Path) -> Result<Crn> {
    let text = read(path)?;
    let doc = if path.extension().is_some_and(|e| e == "net") { import_bngl_net(&text) } else { parse_crn(&text) };
    Ok(doc.with_context(|| path.display().to_string())?.crn)
}

fn load_partition(path: Option<&Path>, crn: &Crn) -> Result<SpeciesPartition> {
    match path {
        None => Ok(SpeciesPartition::trivial(crn.num_species())),
        Some(p) => Ok(parse_partition(&read(p)?, crn).with_context(|| p.display().to_string())?),
    }
}

fn load_state(text: &str, crn: &Crn) -> Result<Multiset> {
    parse_state(text, crn).with_context(|| format!("initial state `{text}`"))
}

fn parse_concentrations(text: &str, crn: &Crn) -> Result<Vec<f64>> {
    if let Ok(all) = text.trim().parse::<f64>() {
        return Ok(vec![all; crn.num_species()]);
    }
    let mut v = vec![0.0; crn.num_species()];
    for item in text.split([',', ' ']).filter(|s| !s.is_empty()) {
        let (name, value) = item.split_once('=').ok_or_else(|| anyhow!("expected NAME=VALUE, got `{item}`"))?;
        let x = crn.species.id(name.trim()).ok_or_else(|| anyhow!("unknown species `{name}`"))?;
        v[x.index()] = value.trim().parse().with_context(|| format!("bad concentration `{value}`"))?;
    }
    Ok(v)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_reduce(a: ReduceArgs) -> Result<Outcome> {
    let crn = load_crn(&a.file)?;
    let initial = load_partition(a.partition.as_deref(), &crn)?;
    let red = if a.no_refine {
        if a.force {
            reduce_unchecked(&crn, &initial)
        } else {
            match reduce(&crn, &initial) {
                Ok(r) => r,
                Err(e) => {
                    if let crnlump::reduce::ReduceError::NotAnSmb(c) = &e {
                        println!("not an SMB: {}", c.display(&crn.species));
                    }
                    return Ok(Outcome::Violated);
                }
            }
        }
    } else {
        let h = largest_smb(&crn, &initial).partition;
        reduce(&crn, &h).expect("refinement yields an SMB")
    };
    let h = red.map.partition();
    println!("# partition {}", h.display(&crn.species));
    let identity = h.is_discrete() && red.crn.reactions.len() == crn.reactions.len();
    println!(
        "# {} -> {} species, {} -> {} reactions{}",
        crn.num_species(),
        red.crn.num_species(),
        crn.reactions.len(),
        red.crn.reactions.len(),
        if identity { " (identity)" } else { "" }
    );
    if !red.verified {
        println!("# warning: partition not verified");
    }
    if let Some(p) = &a.map_out {
        fs::write(p, red.map.write(&crn.species)).with_context(|| format!("cannot write {}", p.display()))?;
    }
    write_or_print(a.out.as_deref(), &write_crn(&red.crn))?;
    Ok(Outcome::Holds)
}

fn cmd_check_smb(a: CheckArgs) -> Result<Outcome> {
    let crn = load_crn(&a.file)?;
    let h = load_partition(Some(&a.partition), &crn)?;
    match is_smb(&crn, &h) {
        Ok(()) => {
            println!("SMB: {}", h.display(&crn.species));
            Ok(Outcome::Holds)
        }
        Err(c) => {
            println!("not an SMB: {}", c.display(&crn.species));
            Ok(Outcome::Violated)
        }
    }
}

fn cmd_check_fb(a: CheckArgs, halve: bool) -> Result<Outcome> {
    let mut crn = load_crn(&a.file)?;
    if halve {
        crn = fb::halve_homeoreactions(&crn);
    }
    let h = load_partition(Some(&a.partition), &crn)?;
    match is_fb(&crn, &h) {
        Ok(()) => {
            println!("FB: {}", h.display(&crn.species));
            Ok(Outcome::Holds)
        }
        Err(c) => {
            println!("not an FB: {}", c.display(&crn.species));
            Ok(Outcome::Violated)
        }
    }
}

fn explore(crn: &Crn, s: &SpaceArgs) -> Result<ctmc::StateSpace> {
    if s.max_states == 0 {
        bail!("--max-states must be positive");
    }
    let init = load_state(&s.init, crn)?;
    Ok(ctmc::enumerate_from(crn, &[init], Limits { max_states: s.max_states, max_population: s.max_population }))
}

fn cmd_enumerate(file: &Path, space: &SpaceArgs, states: bool, gen: bool) -> Result<Outcome> {
    let crn = load_crn(file)?;
    let ss = explore(&crn, space)?;
    println!("states: {}", ss.len());
    println!("transitions: {}", ss.transitions().count());
    println!("truncated: {}", ss.truncated());
    if states {
        for s in ss.states() {
            println!("{}", s.display_compact(&crn.species));
        }
    }
    if gen {
        print!("{}", ctmc::write_generator(&ss, &ctmc::generator(&ss), &crn.species));
    }
    Ok(if ss.truncated() { Outcome::CapExceeded } else { Outcome::Holds })
}

fn cmd_check_lumpable(file: &Path, partition: Option<&Path>, space: &SpaceArgs, allow: bool, lumped: bool) -> Result<Outcome> {
    let crn = load_crn(file)?;
    let h = load_partition(partition, &crn)?;
    let ss = explore(&crn, space)?;
    let sp = ctmc::lift_states(&h, &ss);
    println!("states: {}, blocks: {}, truncated: {}", ss.len(), sp.len(), ss.truncated());
    if let Err(c) = ctmc::check_ordinary_lumpability(&ss, &sp) {
        println!("not lumpable: {}", c.display(&crn.species));
        return Ok(Outcome::Violated);
    }
    println!("lumpable");
    if lumped {
        let chain = ctmc::build_lumped_chain(&ss, &sp).expect("checked above");
        print!("{}", chain.write(&crn.species));
    }
    if ss.truncated() && !allow {
        eprintln!("state space truncated at {} states; pass --allow-truncation to accept", ss.len());
        return Ok(Outcome::CapExceeded);
    }
    Ok(Outcome::Holds)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    file: &Path,
    init: &str,
    t_end: f64,
    runs: u64,
    seed: u64,
    grid: Option<usize>,
    partition: Option<&Path>,
) -> Result<Outcome> {
    let crn = load_crn(file)?;
    let s0 = load_state(init, &crn)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        bail!("--t-end must be a non-negative number");
    }
    match grid {
        None => {
            if runs != 1 {
                bail!("--runs needs --grid");
            }
            print!("{}", ssa_run(&crn, &s0, t_end, seed).write(&crn.species));
        }
        Some(n) => {
            let h = match partition {
                Some(_) => load_partition(partition, &crn)?,
                None => SpeciesPartition::discrete(crn.num_species()),
            };
            let g = uniform_grid(t_end, n);
            let e = ensemble(&crn, &s0, &h, t_end, runs, &g, seed);
            let names: Vec<&str> = h.blocks().iter().map(|b| crn.species.name(b[0])).collect();
            println!("t,{}", names.join(","));
            for (t, row) in g.iter().zip(&e.mean) {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                println!("{t},{}", cells.join(","));
            }
        }
    }
    Ok(Outcome::Holds)
}

fn cmd_ode(file: &Path, init: &str, t_end: f64, dt: f64, every: usize) -> Result<Outcome> {
    let crn = load_crn(file)?;
    let v0 = parse_concentrations(init, &crn)?;
    let traj = integrate_ode(&crn, &v0, t_end, dt)?;
    let every = every.max(1);
    let last = traj.times.len() - 1;
    let keep: Vec<usize> = (0..=last).filter(|i| i % every == 0 || *i == last).collect();
    let thinned = fb::OdeTrajectory {
        times: keep.iter().map(|&i| traj.times[i]).collect(),
        values: keep.iter().map(|&i| traj.values[i].clone()).collect(),
        went_negative: traj.went_negative,
    };
    print!("{}", thinned.to_csv(crn.species.names()));
    if traj.went_negative {
        eprintln!("warning: some concentration became negative");
    }
    Ok(Outcome::Holds)
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    file: &Path,
    init: &str,
    partition: Option<&Path>,
    t_end: f64,
    runs: u64,
    seed: u64,
    grid: usize,
    limits: Limits,
    csv: Option<&Path>,
) -> Result<Outcome> {
    let crn = load_crn(file)?;
    let s0 = load_state(init, &crn)?;
    let initial = load_partition(partition, &crn)?;
    let h = largest_smb(&crn, &initial).partition;
    let red = reduce(&crn, &h).expect("refinement yields an SMB");
    println!("partition: {}", h.display(&crn.species));
    println!(
        "reduced: {} -> {} species, {} -> {} reactions",
        crn.num_species(),
        red.crn.num_species(),
        crn.reactions.len(),
        red.crn.reactions.len()
    );

    let ss = ctmc::enumerate_from(&crn, std::slice::from_ref(&s0), limits);
    let sp = ctmc::lift_states(&h, &ss);
    let lumpable = ctmc::check_ordinary_lumpability(&ss, &sp);
    let quotient = ctmc::check_quotient_generator(&ss, &red);
    println!("explored: {} states, {} blocks, truncated: {}", ss.len(), sp.len(), ss.truncated());
    match &lumpable {
        Ok(()) => println!("lumpability: ok"),
        Err(c) => println!("lumpability: FAILED {}", c.display(&crn.species)),
    }
    match &quotient {
        Ok(()) => println!("quotient generator: ok"),
        Err(m) => println!("quotient generator: FAILED {}", m.display(&crn.species)),
    }

    let g = uniform_grid(t_end, grid);
    let report = compare_lumped_means(&crn, &red, &s0, t_end, runs, &g, seed);
    print!("{}", report.to_table());
    if let Some(p) = csv {
        fs::write(p, report.to_csv()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    let pass = lumpable.is_ok() && quotient.is_ok() && report.passed();
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { Outcome::Holds } else { Outcome::Violated })
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Reduce(a) => cmd_reduce(a),
        Command::CheckSmb(a) => cmd_check_smb(a),
        Command::CheckFb { check, halve_homeo } => cmd_check_fb(check, halve_homeo),
        Command::Enumerate { file, space, states, generator } => cmd_enumerate(&file, &space, states, generator),
        Command::CheckLumpable { file, partition, space, allow_truncation, lumped } => {
            cmd_check_lumpable(&file, partition.as_deref(), &space, allow_truncation, lumped)
        }
        Command::Simulate { file, init, t_end, runs, seed, grid, partition } => {
            cmd_simulate(&file, &init, t_end, runs, seed, grid, partition.as_deref())
        }
        Command::Ode { file, init_conc, t_end, dt, every } => cmd_ode(&file, &init_conc, t_end, dt, every),
        Command::Compare { file, init, partition, t_end, runs, seed, grid, max_states, max_population, csv } => cmd_compare(
            &file,
            &init,
            partition.as_deref(),
            t_end,
            runs,
            seed,
            grid,
            Limits { max_states, max_population },
            csv.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Holds) => ExitCode::SUCCESS,
        Ok(Outcome::Violated) => ExitCode::from(1),
        Ok(Outcome::CapExceeded) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

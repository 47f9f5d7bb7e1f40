//! Minimization of elementary mass-action chemical reaction networks by
//! syntactic Markovian bisimulation (SMB).
//!
//! The pipeline is: parse a network ([`parse`]), compute the coarsest SMB
//! refining an initial species partition ([`smb`]), build the quotient
//! network ([`reduce`]), then validate the reduction against the semantics:
//! exact CTMC lumpability on an enumerated state space ([`ctmc`]), the
//! mass-action ODE and forward bisimulation ([`fb`]), and seeded stochastic
//! simulation of block observables ([`ssa`]).

pub mod crn;
pub mod ctmc;
pub mod fb;
pub mod parse;
pub mod reduce;
pub mod smb;
pub mod ssa;
pub mod synth;

pub use crn::{Crn, Multiset, Rate, Reaction, SpeciesId, SpeciesPartition, SpeciesTable};
